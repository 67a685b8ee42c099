#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "slp/error.hpp"

namespace slp::match {

enum class ScoreLabel { Genuine, Impostor, Unknown };

inline const char* to_string(ScoreLabel l) {
    switch (l) {
        case ScoreLabel::Genuine: return "genuine";
        case ScoreLabel::Impostor: return "impostor";
        default: return "unknown";
    }
}

inline ScoreLabel score_label_from_string(const std::string& s) {
    if (s == "genuine") return ScoreLabel::Genuine;
    if (s == "impostor") return ScoreLabel::Impostor;
    if (s == "unknown") return ScoreLabel::Unknown;
    throw ParseError("unknown score label: " + s);
}

struct SimilarityScore {
    double value = 0;
    std::string probe_id;
    std::string gallery_id;
    ScoreLabel label = ScoreLabel::Unknown;
};

struct NormalizeResult {
    std::vector<SimilarityScore> scores;
    bool degenerate = false;  // all inputs equal; everything mapped to 0
};

// (s - min) / (max - min) over one evaluation run's full score list.
// Order-preserving; a zero range collapses every score to 0 and sets the
// degenerate flag instead of dividing by zero.
inline NormalizeResult minmax_normalize(const std::vector<SimilarityScore>& scores) {
    if (scores.empty()) throw InvalidInput("minmax_normalize: empty score list");
    double lo = scores[0].value, hi = scores[0].value;
    for (const auto& s : scores) {
        lo = std::min(lo, s.value);
        hi = std::max(hi, s.value);
    }
    NormalizeResult out;
    out.scores = scores;
    if (hi <= lo) {
        out.degenerate = true;
        for (auto& s : out.scores) s.value = 0;
        return out;
    }
    double inv = 1.0 / (hi - lo);
    for (auto& s : out.scores) s.value = (s.value - lo) * inv;
    return out;
}

// Arithmetic mean of two models' normalized scores for the same comparison.
inline SimilarityScore fuse_scores(const SimilarityScore& ns2, const SimilarityScore& ns3) {
    if (ns2.probe_id != ns3.probe_id || ns2.gallery_id != ns3.gallery_id)
        throw InvalidInput("fuse_scores: mismatched pair (" + ns2.probe_id + "," +
                           ns2.gallery_id + ") vs (" + ns3.probe_id + "," + ns3.gallery_id +
                           ")");
    SimilarityScore out = ns2;
    out.value = (ns2.value + ns3.value) / 2.0;
    if (ns2.label == ScoreLabel::Unknown)
        out.label = ns3.label;
    else if (ns3.label != ScoreLabel::Unknown && ns3.label != ns2.label)
        throw InvalidInput("fuse_scores: conflicting genuine/impostor labels for (" +
                           ns2.probe_id + "," + ns2.gallery_id + ")");
    return out;
}

// One line of the score export; raw and normalized values side by side.
struct ScoreRow {
    std::string probe_id;
    std::string gallery_id;
    std::string model_id;
    double raw_score = 0;
    double norm_score = 0;
    ScoreLabel label = ScoreLabel::Unknown;
};

inline std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
    std::string out = "probe_id,gallery_id,model_id,raw_score,norm_score,label\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,", r.raw_score, r.norm_score);
        out += r.probe_id + "," + r.gallery_id + "," + r.model_id + buf + to_string(r.label) +
               "\n";
    }
    return out;
}

inline void write_scores_csv(const std::vector<ScoreRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << scores_to_csv(rows);
    if (!os) throw IoError("failed writing " + path);
}

}  // namespace slp::match
