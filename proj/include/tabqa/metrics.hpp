#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <vector>

#include "linearizer.hpp"
#include "table.hpp"

namespace tabqa {

struct IdMismatch : Error {
    using Error::Error;
};

// All four answer-table metrics work on whitespace-normalized cell strings.
// Table EM is order-strict; rows, columns and cells match as multisets, so
// a row ranked wrongly still earns row credit unless the task ordered it.
//   row identity:    the full tuple of normalized cells
//   column identity: normalized header plus the ordered cell sequence
//   cell identity:   (normalized column header, normalized value)
struct PairCounts {
    bool table_exact = false;
    unsigned long long row_match = 0, row_pred = 0, row_gold = 0;
    unsigned long long col_match = 0, col_pred = 0, col_gold = 0;
    unsigned long long cell_match = 0, cell_pred = 0, cell_gold = 0;
};

struct ScoreTriple {
    double precision = 0, recall = 0, f1 = 0;
};

namespace metrics_detail {

inline void frame(std::string& key, std::string_view part) {
    key += std::to_string(part.size());
    key.push_back(':');
    key.append(part);
}

inline std::string row_key(const Row& row) {
    std::string key;
    for (const Cell& c : row) frame(key, collapse_ws(c.raw));
    return key;
}

inline std::string col_key(const Table& t, size_t c) {
    std::string key;
    frame(key, collapse_ws(t.headers[c]));
    for (const Row& r : t.rows) frame(key, collapse_ws(r[c].raw));
    return key;
}

using Multiset = std::unordered_map<std::string, long long>;

inline unsigned long long intersect_count(const Multiset& a, const Multiset& b) {
    unsigned long long n = 0;
    for (const auto& [key, ca] : a) {
        const auto it = b.find(key);
        if (it != b.end()) n += static_cast<unsigned long long>(std::min(ca, it->second));
    }
    return n;
}

inline double ratio(unsigned long long match, unsigned long long total,
                    unsigned long long other_total) {
    if (total == 0) return other_total == 0 ? 100.0 : 0.0;
    return 100.0 * static_cast<double>(match) / static_cast<double>(total);
}

}  // namespace metrics_detail

inline ScoreTriple make_triple(unsigned long long match, unsigned long long pred,
                               unsigned long long gold) {
    ScoreTriple t;
    t.precision = metrics_detail::ratio(match, pred, gold);
    t.recall = metrics_detail::ratio(match, gold, pred);
    t.f1 = (t.precision + t.recall) == 0.0
               ? 0.0
               : 2.0 * t.precision * t.recall / (t.precision + t.recall);
    return t;
}

// Scores one decoded prediction against a gold table. Dropped rows and cells
// from a malformed decode inflate only the prediction denominators.
inline PairCounts compare_tables(const DecodeResult& pred, const Table& gold) {
    using namespace metrics_detail;
    PairCounts pc;
    const Table& p = pred.table;

    auto norm_headers = [](const Table& t) {
        std::vector<std::string> h;
        h.reserve(t.headers.size());
        for (const auto& x : t.headers) h.push_back(collapse_ws(x));
        return h;
    };
    if (!pred.malformed && norm_headers(p) == norm_headers(gold) &&
        p.rows.size() == gold.rows.size()) {
        bool same = true;
        for (size_t r = 0; same && r < p.rows.size(); ++r)
            same = row_key(p.rows[r]) == row_key(gold.rows[r]);
        pc.table_exact = same;
    }

    Multiset pr, gr;
    for (const Row& r : p.rows) ++pr[row_key(r)];
    for (const Row& r : gold.rows) ++gr[row_key(r)];
    pc.row_match = intersect_count(pr, gr);
    pc.row_pred = p.rows.size() + pred.dropped_rows;
    pc.row_gold = gold.rows.size();

    Multiset pcm, gcm;
    for (size_t c = 0; c < p.headers.size(); ++c) ++pcm[col_key(p, c)];
    for (size_t c = 0; c < gold.headers.size(); ++c) ++gcm[col_key(gold, c)];
    pc.col_match = intersect_count(pcm, gcm);
    pc.col_pred = p.headers.size();
    pc.col_gold = gold.headers.size();

    Multiset pce, gce;
    for (const Row& r : p.rows)
        for (size_t c = 0; c < r.size(); ++c) {
            std::string key;
            frame(key, collapse_ws(p.headers[c]));
            frame(key, collapse_ws(r[c].raw));
            ++pce[key];
        }
    for (const Row& r : gold.rows)
        for (size_t c = 0; c < r.size(); ++c) {
            std::string key;
            frame(key, collapse_ws(gold.headers[c]));
            frame(key, collapse_ws(r[c].raw));
            ++gce[key];
        }
    pc.cell_match = intersect_count(pce, gce);
    pc.cell_pred = p.rows.size() * p.headers.size() + pred.dropped_cells;
    pc.cell_gold = gold.rows.size() * gold.headers.size();
    return pc;
}

// Micro-aggregation: counts add up across records, percentages derive from
// the sums at the end.
struct MetricReport {
    unsigned long long records = 0;
    unsigned long long malformed = 0;
    unsigned long long table_match = 0;
    unsigned long long row_match = 0, row_pred = 0, row_gold = 0;
    unsigned long long col_match = 0, col_pred = 0, col_gold = 0;
    unsigned long long cell_match = 0, cell_pred = 0, cell_gold = 0;

    void add(const PairCounts& pc, bool was_malformed) {
        ++records;
        if (was_malformed) ++malformed;
        if (pc.table_exact) ++table_match;
        row_match += pc.row_match;
        row_pred += pc.row_pred;
        row_gold += pc.row_gold;
        col_match += pc.col_match;
        col_pred += pc.col_pred;
        col_gold += pc.col_gold;
        cell_match += pc.cell_match;
        cell_pred += pc.cell_pred;
        cell_gold += pc.cell_gold;
    }

    double table_em() const {
        return records == 0 ? 0.0
                            : 100.0 * static_cast<double>(table_match) /
                                  static_cast<double>(records);
    }
    ScoreTriple rows() const { return make_triple(row_match, row_pred, row_gold); }
    ScoreTriple cols() const { return make_triple(col_match, col_pred, col_gold); }
    ScoreTriple cells() const { return make_triple(cell_match, cell_pred, cell_gold); }
};

struct EvalReport {
    MetricReport overall;
    std::map<std::string, MetricReport> by_class;
};

struct EvalOptions {
    // Applied to each prediction's answer text before decoding, e.g. the
    // cross-lingual remap stages.
    std::function<std::string(const std::string&)> transform;
    bool by_class = true;
};

// Predictions and gold are JSONL with at least {id, answer}; gold rows may
// carry operator_classes for the per-class breakdown. The two id sets must
// match exactly.
inline EvalReport evaluate_file(const std::filesystem::path& pred_path,
                                const std::filesystem::path& gold_path,
                                const KeywordLexicon& lex, const EvalOptions& opts = {}) {
    using nlohmann::json;
    auto read_jsonl = [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open " + path.string());
        std::vector<json> rows;
        std::string line;
        size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (trim(line).empty()) continue;
            try {
                rows.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
            }
        }
        return rows;
    };

    std::unordered_map<std::string, std::string> preds;
    for (const auto& j : read_jsonl(pred_path)) {
        const std::string id = j.at("id").get<std::string>();
        if (!preds.emplace(id, j.at("answer").get<std::string>()).second)
            throw IdMismatch("duplicate prediction id " + id);
    }

    EvalReport report;
    size_t gold_count = 0;
    for (const auto& j : read_jsonl(gold_path)) {
        ++gold_count;
        const std::string id = j.at("id").get<std::string>();
        const auto it = preds.find(id);
        if (it == preds.end()) throw IdMismatch("no prediction for gold id " + id);

        const DecodeResult gold = decode_table(j.at("answer").get<std::string>(), lex);
        if (gold.malformed)
            throw Error("gold answer for " + id + " does not decode: " + gold.note);

        std::string answer = it->second;
        if (opts.transform) answer = opts.transform(answer);
        const DecodeResult pred = decode_table(answer, lex);
        const PairCounts pc = compare_tables(pred, gold.table);

        report.overall.add(pc, pred.malformed);
        if (opts.by_class && j.contains("operator_classes"))
            for (const auto& cls : j.at("operator_classes"))
                report.by_class[cls.get<std::string>()].add(pc, pred.malformed);
    }
    if (gold_count != preds.size())
        throw IdMismatch("prediction ids not covered by gold: " +
                         std::to_string(preds.size()) + " vs " + std::to_string(gold_count));
    return report;
}

}  // namespace tabqa
