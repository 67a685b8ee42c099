#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/image.hpp"
#include "slp/png_io.hpp"

namespace slp {

enum class ImpressionKind { Rolled, Latent, SyntheticLatent };

inline const char* to_string(ImpressionKind k) {
    switch (k) {
        case ImpressionKind::Rolled: return "rolled";
        case ImpressionKind::Latent: return "latent";
        case ImpressionKind::SyntheticLatent: return "synthetic-latent";
    }
    return "?";
}

struct Impression {
    FingerprintImage image;
    ImpressionKind kind = ImpressionKind::Rolled;
};

// All impressions of one finger, keyed by the identity label.
struct FingerRecord {
    std::string identity;
    std::vector<Impression> impressions;

    const FingerprintImage* first_of(ImpressionKind k) const {
        for (const auto& imp : impressions)
            if (imp.kind == k) return &imp.image;
        return nullptr;
    }
};

// One side of the unpaired training data.
struct DomainSet {
    std::string name;
    ImpressionKind domain = ImpressionKind::Rolled;
    std::vector<FingerprintImage> images;
};

// Identity-linked rolled/latent pair; the latent side may be synthetic.
struct MatedPair {
    std::string identity;
    FingerprintImage rolled;
    FingerprintImage latent;
};

struct MatedPairSet {
    std::string name;
    std::vector<MatedPair> pairs;
};

// How filenames map to (identity, kind). The default pattern takes the text
// after the last underscore of the stem as the kind tag.
struct DatasetLayout {
    std::string pattern = "<identity>_<kind>.<ext>";
    std::string rolled_tag = "roll";
    std::string latent_tag = "lat";
    std::string synthetic_tag = "synth";
    int default_ppi = kCanonicalPpi;

    static DatasetLayout from_config(const Config& cfg) {
        DatasetLayout l;
        l.pattern = cfg.get_str("layout.pattern", l.pattern);
        l.rolled_tag = cfg.get_str("layout.rolled_tag", l.rolled_tag);
        l.latent_tag = cfg.get_str("layout.latent_tag", l.latent_tag);
        l.synthetic_tag = cfg.get_str("layout.synthetic_tag", l.synthetic_tag);
        l.default_ppi = int(cfg.get_int("data.default_ppi", l.default_ppi));
        return l;
    }
};

namespace detail {

// Splits a filename stem per the layout pattern. Only the
// `<identity>{sep}<kind>` family is supported; `sep` is whatever literal
// character the pattern places between the two tokens.
inline bool split_stem(const DatasetLayout& layout, const std::string& stem,
                       std::string& identity, std::string& kind) {
    const std::string& p = layout.pattern;
    auto id_pos = p.find("<identity>");
    auto kind_pos = p.find("<kind>");
    char sep = '_';
    if (id_pos != std::string::npos && kind_pos != std::string::npos &&
        kind_pos > id_pos + 10)
        sep = p[id_pos + 10];
    auto cut = stem.rfind(sep);
    if (cut == std::string::npos || cut == 0 || cut + 1 >= stem.size()) return false;
    identity = stem.substr(0, cut);
    kind = stem.substr(cut + 1);
    return true;
}

}  // namespace detail

// Scans a directory of PNG files and groups them into FingerRecords by
// identity. Deterministic: records sorted by identity, impressions by id.
inline std::vector<FingerRecord> load_dataset(const std::string& root,
                                              const DatasetLayout& layout = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError("dataset root '" + root + "' is not a directory");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::map<std::string, FingerRecord> by_id;
    for (const auto& f : files) {
        std::string identity, kind_tag;
        if (!detail::split_stem(layout, f.stem().string(), identity, kind_tag))
            throw IoError("file '" + f.string() + "' does not match layout pattern '" +
                          layout.pattern + "'");
        ImpressionKind kind;
        if (kind_tag == layout.rolled_tag)
            kind = ImpressionKind::Rolled;
        else if (kind_tag == layout.latent_tag)
            kind = ImpressionKind::Latent;
        else if (kind_tag == layout.synthetic_tag)
            kind = ImpressionKind::SyntheticLatent;
        else
            throw IoError("file '" + f.string() + "': unknown kind tag '" + kind_tag + "'");

        FingerprintImage img;
        try {
            img = read_png(f.string(), f.stem().string(), layout.default_ppi);
        } catch (const Error& e) {
            throw IoError("file '" + f.string() + "': " + e.what());
        }
        auto& rec = by_id[identity];
        rec.identity = identity;
        rec.impressions.push_back({std::move(img), kind});
    }
    if (by_id.empty()) throw DatasetEmpty("no fingerprint records under '" + root + "'");

    std::vector<FingerRecord> out;
    out.reserve(by_id.size());
    for (auto& [id, rec] : by_id) {
        std::sort(rec.impressions.begin(), rec.impressions.end(),
                  [](const Impression& a, const Impression& b) { return a.image.id < b.image.id; });
        out.push_back(std::move(rec));
    }
    return out;
}

// Returns every invariant violation as a human-readable string; empty list
// means the record is valid. Never mutates the input.
inline std::vector<std::string> validate_record(const FingerRecord& r,
                                                bool require_canonical_ppi = false) {
    std::vector<std::string> out;
    if (r.identity.empty()) out.push_back("identity is empty");
    std::set<std::string> seen;
    for (const auto& imp : r.impressions) {
        const auto& img = imp.image;
        if (!seen.insert(img.id).second) out.push_back("duplicate impression id '" + img.id + "'");
        if (img.width <= 0 || img.height <= 0)
            out.push_back("impression '" + img.id + "': degenerate size");
        else if (img.pixels.size() != std::size_t(img.width) * img.height)
            out.push_back("impression '" + img.id + "': pixel buffer size mismatch");
        if (require_canonical_ppi && img.resolution_ppi != kCanonicalPpi)
            out.push_back("impression '" + img.id + "': resolution != 500");
    }
    return out;
}

// Collects all impressions of one kind into a training domain.
inline DomainSet to_domain_set(const std::vector<FingerRecord>& records, ImpressionKind kind,
                               std::string name) {
    DomainSet d;
    d.name = std::move(name);
    d.domain = kind;
    for (const auto& rec : records)
        for (const auto& imp : rec.impressions)
            if (imp.kind == kind) d.images.push_back(imp.image);
    return d;
}

// Identity join: every rolled impression paired with every (synthetic-)latent
// impression of the same record.
inline MatedPairSet make_mated_pairs(const std::vector<FingerRecord>& records, std::string name,
                                     bool include_synthetic = true) {
    MatedPairSet set;
    set.name = std::move(name);
    for (const auto& rec : records) {
        if (rec.identity.empty()) throw InvalidInput("mated pairs: record with empty identity");
        for (const auto& a : rec.impressions) {
            if (a.kind != ImpressionKind::Rolled) continue;
            for (const auto& b : rec.impressions) {
                bool is_latent = b.kind == ImpressionKind::Latent ||
                                 (include_synthetic && b.kind == ImpressionKind::SyntheticLatent);
                if (is_latent) set.pairs.push_back({rec.identity, a.image, b.image});
            }
        }
    }
    return set;
}

}  // namespace slp
