#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "slp/cluster/features.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/rng.hpp"

namespace slp::cluster {

struct ClusterAssignment {
    int k = 0;
    std::vector<std::string> image_ids;       // input order
    std::vector<int> labels;                  // parallel to image_ids
    std::vector<std::vector<double>> centroids;
    std::vector<double> inertia_history;      // objective after each Lloyd iteration
    int iterations = 0;

    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }

    int cluster_of(const std::string& image_id) const {
        for (std::size_t i = 0; i < image_ids.size(); ++i)
            if (image_ids[i] == image_id) return labels[i];
        return -1;
    }

    std::vector<int> cluster_sizes() const {
        std::vector<int> sizes(k, 0);
        for (int l : labels) ++sizes[l];
        return sizes;
    }
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Ties go to the lowest cluster
// index; an emptied cluster is repaired by stealing the point farthest from
// its centroid, so the returned assignment never has empty clusters.
inline ClusterAssignment kmeans_cluster(const std::vector<FeatureVector>& features, int k,
                                        std::uint64_t seed, int max_iterations = 300) {
    const int n = int(features.size());
    if (k < 1) throw InvalidInput("kmeans: k must be >= 1");
    if (n < k)
        throw InvalidInput("kmeans: " + std::to_string(n) + " points but k=" +
                           std::to_string(k));
    const std::size_t dim = features[0].values.size();
    for (const auto& f : features)
        if (f.values.size() != dim) throw InvalidInput("kmeans: mixed feature dimensions");

    ClusterAssignment out;
    out.k = k;
    out.image_ids.reserve(n);
    for (const auto& f : features) out.image_ids.push_back(f.source_id);

    Rng rng(seed);
    // k-means++ init: first centroid uniform, rest D^2-weighted.
    std::vector<std::vector<double>> c;
    c.push_back(features[rng.uniform_int(std::uint64_t(n))].values);
    std::vector<double> d2(n);
    while (int(c.size()) < k) {
        double total = 0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& cc : c) best = std::min(best, detail::sq_dist(features[i].values, cc));
            d2[i] = best;
            total += best;
        }
        int pick = 0;
        if (total > 0) {
            double r = rng.uniform() * total, acc = 0;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = int(rng.uniform_int(std::uint64_t(n)));  // all points identical
        }
        c.push_back(features[pick].values);
    }

    std::vector<int> labels(n, -1);
    for (int iter = 1; iter <= max_iterations; ++iter) {
        bool changed = false;
        double inertia = 0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = detail::sq_dist(features[i].values, c[0]);
            for (int j = 1; j < k; ++j) {
                double d = detail::sq_dist(features[i].values, c[j]);
                if (d < bd) {
                    bd = d;
                    best = j;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
            inertia += bd;
        }

        // Repair empty clusters before the update step.
        std::vector<int> sizes(k, 0);
        for (int l : labels) ++sizes[l];
        for (int j = 0; j < k; ++j) {
            if (sizes[j] > 0) continue;
            int far_i = -1;
            double far_d = -1;
            for (int i = 0; i < n; ++i) {
                if (sizes[labels[i]] <= 1) continue;  // don't empty another cluster
                double d = detail::sq_dist(features[i].values, c[labels[i]]);
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            if (far_i < 0) throw Error("kmeans: cannot repair empty cluster");
            --sizes[labels[far_i]];
            labels[far_i] = j;
            ++sizes[j];
            c[j] = features[far_i].values;
            changed = true;
        }

        out.inertia_history.push_back(inertia);
        out.iterations = iter;
        if (!changed) break;

        for (int j = 0; j < k; ++j) std::fill(c[j].begin(), c[j].end(), 0.0);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            ++counts[labels[i]];
            for (std::size_t d = 0; d < dim; ++d) c[labels[i]][d] += features[i].values[d];
        }
        for (int j = 0; j < k; ++j)
            for (std::size_t d = 0; d < dim; ++d) c[j][d] /= counts[j];
    }

    out.labels = std::move(labels);
    out.centroids = std::move(c);
    return out;
}

// Splits a domain into one DomainSet per cluster. Every image must appear in
// the assignment.
inline std::vector<DomainSet> partition_dataset(const DomainSet& latents,
                                                const ClusterAssignment& assignment) {
    std::unordered_map<std::string, int> lookup;
    lookup.reserve(assignment.image_ids.size());
    for (std::size_t i = 0; i < assignment.image_ids.size(); ++i)
        lookup[assignment.image_ids[i]] = assignment.labels[i];
    std::vector<DomainSet> out(assignment.k);
    for (int j = 0; j < assignment.k; ++j) {
        out[j].name = latents.name + ".cluster" + std::to_string(j);
        out[j].domain = latents.domain;
    }
    for (const auto& img : latents.images) {
        auto it = lookup.find(img.id);
        if (it == lookup.end())
            throw InvalidInput("partition_dataset: image " + img.id +
                               " missing from cluster assignment");
        out[it->second].images.push_back(img);
    }
    return out;
}

inline void write_assignment_csv(const ClusterAssignment& a, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "image_id,cluster_index\n";
    for (std::size_t i = 0; i < a.image_ids.size(); ++i)
        os << a.image_ids[i] << "," << a.labels[i] << "\n";
    if (!os) throw IoError("failed writing " + path);
}

// Centroid array dump: magic, k, dim, then k*dim little-endian doubles,
// row-major (one row per centroid).
inline void write_centroids(const ClusterAssignment& a, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    const char magic[4] = {'S', 'L', 'P', 'C'};
    os.write(magic, 4);
    std::uint32_t k = std::uint32_t(a.k);
    std::uint32_t dim = a.centroids.empty() ? 0 : std::uint32_t(a.centroids[0].size());
    os.write(reinterpret_cast<const char*>(&k), 4);
    os.write(reinterpret_cast<const char*>(&dim), 4);
    for (const auto& c : a.centroids)
        os.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * 8));
    if (!os) throw IoError("failed writing " + path);
}

inline std::vector<std::vector<double>> read_centroids(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || magic[0] != 'S' || magic[1] != 'L' || magic[2] != 'P' || magic[3] != 'C')
        throw IoError(path + ": not a centroid file");
    std::uint32_t k = 0, dim = 0;
    is.read(reinterpret_cast<char*>(&k), 4);
    is.read(reinterpret_cast<char*>(&dim), 4);
    std::vector<std::vector<double>> out(k, std::vector<double>(dim));
    for (auto& c : out) is.read(reinterpret_cast<char*>(c.data()), std::streamsize(dim * 8));
    if (!is) throw IoError(path + ": truncated centroid file");
    return out;
}

}  // namespace slp::cluster
