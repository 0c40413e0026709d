#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "executor.hpp"

namespace tabqa {

struct MissingScore : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Gate 1: execution. A query that fails to execute is noise; empty answers
// are optionally dropped too since they teach a model nothing about table
// content.

struct ExecGateStats {
    size_t total = 0;
    size_t kept = 0;
    size_t dropped_error = 0;
    size_t dropped_empty = 0;
    std::map<std::string, size_t> by_error;  // "unknown_column", ...

    bool reconciles() const { return kept + dropped_error + dropped_empty == total; }
};

inline const char* exec_error_name(ExecErrorKind k) {
    switch (k) {
        case ExecErrorKind::unknown_column: return "unknown_column";
        case ExecErrorKind::type_error: return "type_error";
        case ExecErrorKind::division_context: return "division_context";
    }
    return "unknown";
}

// Returns a keep mask parallel to results.
inline std::vector<bool> gate_execution(const std::vector<ExecResult>& results,
                                        bool drop_empty_answers, ExecGateStats& stats) {
    std::vector<bool> keep(results.size(), false);
    stats.total += results.size();
    for (size_t i = 0; i < results.size(); ++i) {
        const ExecResult& r = results[i];
        if (!r.ok()) {
            ++stats.dropped_error;
            ++stats.by_error[exec_error_name(r.error->kind)];
            continue;
        }
        if (drop_empty_answers && r.answer->rows.empty()) {
            ++stats.dropped_empty;
            continue;
        }
        keep[i] = true;
        ++stats.kept;
    }
    return keep;
}

// ---------------------------------------------------------------------------
// Gate 2: semantic similarity. Scores come from an external cross-lingual
// sentence encoder; this side only thresholds them. A record at exactly the
// threshold survives.

inline constexpr double kDefaultSimilarityThreshold = 0.74;

struct SimGateStats {
    size_t total = 0;
    size_t kept = 0;
    size_t dropped = 0;

    bool reconciles() const { return kept + dropped == total; }
};

// Scores are keyed by record id: "<id>\t<score>" per line, '#' comments.
inline std::unordered_map<std::string, double> load_scores(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open score file " + path.string());
    std::unordered_map<std::string, double> scores;
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const size_t tab = sv.find('\t');
        if (tab == std::string_view::npos)
            throw MissingScore(path.string() + ":" + std::to_string(n) +
                               ": expected <id>\\t<score>");
        const std::string id(trim(sv.substr(0, tab)));
        try {
            scores[id] = std::stod(std::string(sv.substr(tab + 1)));
        } catch (const std::exception&) {
            throw MissingScore(path.string() + ":" + std::to_string(n) + ": bad score");
        }
    }
    return scores;
}

inline bool gate_similarity_one(double score, double threshold) {
    return score >= threshold;
}

// Every id must have a score; silence is an error, not a pass.
inline std::vector<bool> gate_similarity(const std::vector<std::string>& ids,
                                         const std::unordered_map<std::string, double>& scores,
                                         double threshold, SimGateStats& stats) {
    std::vector<bool> keep(ids.size(), false);
    stats.total += ids.size();
    for (size_t i = 0; i < ids.size(); ++i) {
        const auto it = scores.find(ids[i]);
        if (it == scores.end()) throw MissingScore("no similarity score for id " + ids[i]);
        if (gate_similarity_one(it->second, threshold)) {
            keep[i] = true;
            ++stats.kept;
        } else {
            ++stats.dropped;
        }
    }
    return keep;
}

// ---------------------------------------------------------------------------
// Threshold suggestion: the valley between the two dominant modes of the
// score histogram. Scores live in [0, 1]; out-of-range values clamp into the
// edge bins.

struct ThresholdSuggestion {
    bool found = false;  // false means NoValley: distribution not bimodal
    double threshold = 0.0;
    std::vector<size_t> histogram;
    std::vector<double> smoothed;
};

inline ThresholdSuggestion suggest_threshold(const std::vector<double>& scores,
                                             size_t bins = 40) {
    ThresholdSuggestion s;
    if (bins < 3 || scores.empty()) return s;
    s.histogram.assign(bins, 0);
    for (const double x : scores) {
        const double clamped = std::min(1.0, std::max(0.0, x));
        size_t b = static_cast<size_t>(clamped * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        ++s.histogram[b];
    }
    // Moving average, window 3, shrinking at the edges.
    s.smoothed.assign(bins, 0.0);
    for (size_t i = 0; i < bins; ++i) {
        const size_t lo = i == 0 ? 0 : i - 1;
        const size_t hi = i + 1 < bins ? i + 1 : bins - 1;
        double sum = 0.0;
        for (size_t k = lo; k <= hi; ++k) sum += static_cast<double>(s.histogram[k]);
        s.smoothed[i] = sum / static_cast<double>(hi - lo + 1);
    }
    // Local maxima, ties to the lower index; need two to have a valley.
    std::vector<size_t> peaks;
    for (size_t i = 0; i < bins; ++i) {
        const double left = i == 0 ? -1.0 : s.smoothed[i - 1];
        const double right = i + 1 < bins ? s.smoothed[i + 1] : -1.0;
        if (s.smoothed[i] > left && s.smoothed[i] >= right && s.smoothed[i] > 0.0)
            peaks.push_back(i);
    }
    if (peaks.size() < 2) return s;
    std::sort(peaks.begin(), peaks.end(), [&](size_t a, size_t b) {
        if (s.smoothed[a] != s.smoothed[b]) return s.smoothed[a] > s.smoothed[b];
        return a < b;
    });
    size_t p1 = peaks[0], p2 = peaks[1];
    if (p1 > p2) std::swap(p1, p2);
    if (p2 - p1 < 2) return s;
    // A flat valley (ties at the minimum) resolves to its center bin.
    size_t first = p1 + 1, last = p1 + 1;
    for (size_t i = p1 + 1; i < p2; ++i) {
        if (s.smoothed[i] < s.smoothed[first]) first = last = i;
        else if (s.smoothed[i] == s.smoothed[first]) last = i;
    }
    const size_t valley = first + (last - first) / 2;
    if (s.smoothed[first] >= s.smoothed[p1] || s.smoothed[first] >= s.smoothed[p2]) return s;
    s.found = true;
    s.threshold = (static_cast<double>(valley) + 0.5) / static_cast<double>(bins);
    return s;
}

}  // namespace tabqa
