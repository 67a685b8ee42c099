#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slp/error.hpp"

namespace slp {

enum class QualityTier { Good, Bad, Ugly };

inline const char* to_string(QualityTier t) {
    switch (t) {
        case QualityTier::Good: return "good";
        case QualityTier::Bad: return "bad";
        case QualityTier::Ugly: return "ugly";
    }
    return "?";
}

inline QualityTier tier_from_string(const std::string& s) {
    if (s == "good") return QualityTier::Good;
    if (s == "bad") return QualityTier::Bad;
    if (s == "ugly") return QualityTier::Ugly;
    throw ParseError("unknown tier '" + s + "'");
}

// Augmentation parameters applied when an image was produced.
struct AugParams {
    double dx = 0.0;
    double dy = 0.0;
    double theta_deg = 0.0;

    bool operator==(const AugParams&) const = default;
};

// Provenance of one synthetic latent: which rolled print, which model,
// which seed. cluster_index -1 means the coarse model.
struct ManifestEntry {
    std::string synthetic_id;
    std::string source_rolled_id;
    std::string model_id;
    int cluster_index = -1;
    std::optional<QualityTier> tier;  // unassigned until tiering ran
    std::uint64_t seed = 0;
    AugParams aug;

    bool operator==(const ManifestEntry&) const = default;
};

struct SynthesisManifest {
    std::vector<ManifestEntry> entries;

    bool operator==(const SynthesisManifest&) const = default;

    // Empty result means the manifest satisfies its invariants.
    std::vector<std::string> violations() const {
        std::vector<std::string> out;
        std::set<std::string> ids;
        for (const auto& e : entries) {
            if (e.synthetic_id.empty()) out.push_back("entry with empty synthetic_id");
            if (e.source_rolled_id.empty())
                out.push_back("entry '" + e.synthetic_id + "' missing source_rolled_id");
            if (!ids.insert(e.synthetic_id).second)
                out.push_back("duplicate synthetic_id '" + e.synthetic_id + "'");
        }
        return out;
    }
};

namespace detail {

inline nlohmann::ordered_json entry_to_json(const ManifestEntry& e) {
    nlohmann::ordered_json j;
    j["synthetic_id"] = e.synthetic_id;
    j["source_rolled_id"] = e.source_rolled_id;
    j["model_id"] = e.model_id;
    j["cluster_index"] = e.cluster_index;
    j["tier"] = e.tier ? std::string(to_string(*e.tier)) : std::string("unassigned");
    j["seed"] = e.seed;
    nlohmann::ordered_json aug;
    aug["dx"] = e.aug.dx;
    aug["dy"] = e.aug.dy;
    aug["theta_deg"] = e.aug.theta_deg;
    j["aug"] = aug;
    return j;
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.synthetic_id = j.at("synthetic_id").get<std::string>();
    e.source_rolled_id = j.at("source_rolled_id").get<std::string>();
    e.model_id = j.at("model_id").get<std::string>();
    e.cluster_index = j.at("cluster_index").get<int>();
    std::string tier = j.at("tier").get<std::string>();
    if (tier != "unassigned") e.tier = tier_from_string(tier);
    e.seed = j.at("seed").get<std::uint64_t>();
    const auto& aug = j.at("aug");
    e.aug.dx = aug.at("dx").get<double>();
    e.aug.dy = aug.at("dy").get<double>();
    e.aug.theta_deg = aug.at("theta_deg").get<double>();
    return e;
}

}  // namespace detail

// Line-delimited JSON with fixed key order, so equal manifests serialize to
// identical bytes and long synthesis runs can append safely.
inline std::string manifest_to_jsonl(const SynthesisManifest& m) {
    auto bad = m.violations();
    if (!bad.empty()) throw InvalidInput("refusing to write invalid manifest: " + bad.front());
    std::ostringstream out;
    for (const auto& e : m.entries) out << detail::entry_to_json(e).dump() << '\n';
    return out.str();
}

inline void write_manifest(const SynthesisManifest& m, const std::string& path) {
    std::string text = manifest_to_jsonl(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open manifest '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing manifest '" + path + "'");
}

inline SynthesisManifest manifest_from_jsonl(std::istream& in, const std::string& origin) {
    SynthesisManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            m.entries.push_back(detail::entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    auto bad = m.violations();
    if (!bad.empty())
        throw ParseError(origin + ": manifest invalid after parse: " + bad.front());
    return m;
}

inline SynthesisManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    return manifest_from_jsonl(in, path);
}

}  // namespace slp
