#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/imgproc.hpp"
#include "slp/match/embedder.hpp"

namespace slp::eval {

// threshold = smallest observed score at which the impostor pass fraction is
// at most `far` (step interpolation over the empirical distribution); TDR is
// the genuine pass fraction at that threshold. 0 when no threshold qualifies.
inline double roc_tdr_at_far(const std::vector<double>& genuine,
                             const std::vector<double>& impostor, double far) {
    if (genuine.empty() || impostor.empty())
        throw InvalidInput("roc_tdr_at_far: empty score list");
    if (!(far > 0.0 && far < 1.0)) throw InvalidInput("roc_tdr_at_far: far must be in (0,1)");
    std::vector<double> candidates = genuine;
    candidates.insert(candidates.end(), impostor.begin(), impostor.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<double> imp_sorted = impostor;
    std::sort(imp_sorted.begin(), imp_sorted.end());
    const double n_imp = double(imp_sorted.size());
    for (double t : candidates) {
        auto it = std::lower_bound(imp_sorted.begin(), imp_sorted.end(), t);
        double frac = double(imp_sorted.end() - it) / n_imp;
        if (frac <= far) {
            std::size_t pass = 0;
            for (double g : genuine)
                if (g >= t) ++pass;
            return double(pass) / double(genuine.size());
        }
    }
    return 0.0;
}

// Closed-set score matrix: every probe has exactly one true mate in the
// gallery.
struct ScoreMatrix {
    std::vector<std::string> probes;
    std::vector<std::string> gallery;
    std::vector<std::vector<double>> scores;          // probes x gallery
    std::map<std::string, std::string> mate_map;      // probe id -> gallery id

    void validate() const {
        if (scores.size() != probes.size())
            throw InvalidInput("score matrix: row count != probe count");
        for (const auto& row : scores) {
            if (row.size() != gallery.size())
                throw InvalidInput("score matrix: column count != gallery size");
            for (double v : row)
                if (!std::isfinite(v)) throw InvalidInput("score matrix: non-finite score");
        }
        std::set<std::string> gal(gallery.begin(), gallery.end());
        for (const auto& p : probes) {
            auto it = mate_map.find(p);
            if (it == mate_map.end())
                throw InvalidInput("score matrix: probe " + p + " has no mate (open-set input "
                                   "is unsupported)");
            if (!gal.count(it->second))
                throw InvalidInput("score matrix: mate " + it->second + " of probe " + p +
                                   " is not in the gallery");
        }
    }

    // Pessimistic rank: every non-mate scoring >= the mate counts ahead of it.
    int rank_of(std::size_t probe_idx) const {
        const auto& row = scores[probe_idx];
        const std::string& mate = mate_map.at(probes[probe_idx]);
        double mate_score = 0;
        bool found = false;
        for (std::size_t j = 0; j < gallery.size(); ++j)
            if (gallery[j] == mate) {
                mate_score = row[j];
                found = true;
                break;
            }
        if (!found) throw InvalidInput("score matrix: mate column missing");
        int ahead = 0;
        for (std::size_t j = 0; j < gallery.size(); ++j)
            if (gallery[j] != mate && row[j] >= mate_score) ++ahead;
        return 1 + ahead;
    }
};

// CMC[r-1] = fraction of probes whose mate ranks within the top r.
inline std::vector<double> cmc_ranks(const ScoreMatrix& m, int max_rank) {
    m.validate();
    if (m.probes.empty()) throw InvalidInput("cmc_ranks: no probes");
    if (max_rank < 1) throw InvalidInput("cmc_ranks: max_rank must be >= 1");
    max_rank = std::min(max_rank, int(m.gallery.size()));
    std::vector<int> counts(max_rank, 0);
    for (std::size_t i = 0; i < m.probes.size(); ++i) {
        int r = m.rank_of(i);
        if (r <= max_rank) ++counts[r - 1];
    }
    std::vector<double> cmc(max_rank);
    int acc = 0;
    for (int r = 0; r < max_rank; ++r) {
        acc += counts[r];
        cmc[r] = double(acc) / double(m.probes.size());
    }
    return cmc;
}

// Builds the closed-set matrix for probe latents against mates + background
// rolled prints. Probe identities resolve through the mate records that
// contain each probe image.
template <typename T>
ScoreMatrix identify_1toN(const std::vector<FingerprintImage>& probes,
                          const std::vector<FingerRecord>& mates,
                          const std::vector<FingerRecord>& background,
                          match::Embedder<T>& matcher) {
    std::map<std::string, std::string> probe_identity;  // image id -> identity
    for (const auto& r : mates)
        for (const auto& imp : r.impressions) probe_identity[imp.image.id] = r.identity;

    std::map<std::string, std::string> gallery_of_identity;
    std::vector<std::pair<std::string, FingerprintImage>> gallery;  // (id, image)
    std::set<std::string> seen_ids, mate_identities;
    auto add_gallery = [&](const FingerRecord& r, bool is_mate) {
        const FingerprintImage* rolled = r.first_of(ImpressionKind::Rolled);
        if (!rolled)
            throw InvalidInput("identify_1toN: record " + r.identity +
                               " has no rolled impression for the gallery");
        if (is_mate) {
            mate_identities.insert(r.identity);
            gallery_of_identity[r.identity] = rolled->id;
        } else if (mate_identities.count(r.identity)) {
            throw InvalidInput("identify_1toN: identity " + r.identity +
                               " appears in both mates and background");
        }
        if (seen_ids.insert(rolled->id).second) gallery.emplace_back(rolled->id, *rolled);
    };
    for (const auto& r : mates) add_gallery(r, true);
    for (const auto& r : background) add_gallery(r, false);

    ScoreMatrix m;
    for (const auto& [id, img] : gallery) m.gallery.push_back(id);

    const int S = matcher.spec.input_size;
    auto prep = [&](const FingerprintImage& img) {
        return (img.width == S && img.height == S) ? img : resize_bilinear(img, S, S);
    };
    std::vector<match::EmbeddingVector> gal_emb;
    gal_emb.reserve(gallery.size());
    for (const auto& [id, img] : gallery) gal_emb.push_back(matcher.embed(prep(img)));

    for (const auto& p : probes) {
        auto idit = probe_identity.find(p.id);
        if (idit == probe_identity.end())
            throw InvalidInput("identify_1toN: probe " + p.id +
                               " does not appear in any mate record");
        auto mit = gallery_of_identity.find(idit->second);
        if (mit == gallery_of_identity.end())
            throw InvalidInput("identify_1toN: probe " + p.id + " has no gallery mate");
        m.probes.push_back(p.id);
        m.mate_map[p.id] = mit->second;
        match::EmbeddingVector pe = matcher.embed(prep(p));
        std::vector<double> row;
        row.reserve(gal_emb.size());
        for (const auto& ge : gal_emb) row.push_back(match::match_score(pe, ge).value);
        m.scores.push_back(std::move(row));
    }
    m.validate();
    return m;
}

}  // namespace slp::eval
