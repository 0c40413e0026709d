#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "analytics.hpp"
#include "executor.hpp"
#include "lexicon.hpp"
#include "linearizer.hpp"
#include "postprocess.hpp"
#include "quality_gate.hpp"
#include "sql/keywords.hpp"
#include "sql/parser.hpp"
#include "table_store.hpp"
#include "template_engine.hpp"

namespace tabqa {

inline constexpr std::string_view kToolkitVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Dataset records

struct GateMetadata {
    bool exec_ok = true;
    std::optional<double> similarity;
    bool retained = true;
};

struct DatasetRecord {
    std::string id;
    std::string language;
    std::string question;  // monolingual query by default, external NQ if supplied
    std::string query_code_mixed;
    std::string query_monolingual;
    std::string input_table_id;
    std::string answer;  // linearized answer table
    std::vector<std::string> operator_classes;
    size_t keyword_count = 0;
    GateMetadata gate;
};

inline std::string record_id(std::string_view table_id, std::string_view query) {
    uint64_t h = fnv1a_u64(table_id.size());
    h = fnv1a(table_id, h);
    h = fnv1a(query, h);
    return "r" + hex64(h);
}

inline nlohmann::json record_to_json(const DatasetRecord& r) {
    nlohmann::json gate;
    gate["exec_ok"] = r.gate.exec_ok;
    gate["similarity"] = r.gate.similarity ? nlohmann::json(*r.gate.similarity)
                                           : nlohmann::json(nullptr);
    gate["retained"] = r.gate.retained;
    nlohmann::json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["question"] = r.question;
    j["query_code_mixed"] = r.query_code_mixed;
    j["query_monolingual"] = r.query_monolingual;
    j["input_table_id"] = r.input_table_id;
    j["answer"] = r.answer;
    j["operator_classes"] = r.operator_classes;
    j["keyword_count"] = r.keyword_count;
    j["gate_metadata"] = gate;
    return j;
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
    DatasetRecord r;
    r.id = j.at("id").get<std::string>();
    r.language = j.value("language", std::string("und"));
    r.question = j.value("question", std::string());
    r.query_code_mixed = j.value("query_code_mixed", std::string());
    r.query_monolingual = j.value("query_monolingual", std::string());
    r.input_table_id = j.value("input_table_id", std::string());
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("operator_classes"))
        r.operator_classes = j.at("operator_classes").get<std::vector<std::string>>();
    r.keyword_count = j.value("keyword_count", size_t{0});
    if (j.contains("gate_metadata")) {
        const auto& g = j.at("gate_metadata");
        r.gate.exec_ok = g.value("exec_ok", true);
        if (g.contains("similarity") && !g.at("similarity").is_null())
            r.gate.similarity = g.at("similarity").get<double>();
        r.gate.retained = g.value("retained", true);
    }
    return r;
}

inline void write_records(const std::filesystem::path& path,
                          const std::vector<DatasetRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
    if (!out) throw Error("short write to " + path.string());
}

inline std::vector<DatasetRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<DatasetRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(path.string() + ":" + std::to_string(lineno) + ": bad json");
        out.push_back(record_from_json(j));
    }
    return out;
}

// A dataset is one JSONL file or a directory of shards read in name order.
inline std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) return read_records(path);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<DatasetRecord> out;
    for (const auto& f : files) {
        auto part = read_records(f);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hashing and splits

inline std::string file_checksum(const std::filesystem::path& path) {
    return hex64(fnv1a(detail::read_file(path)));
}

// Directories hash as name-framed member hashes so renames change the value
// but the walk order cannot.
inline std::string input_checksum(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) return file_checksum(path);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    uint64_t h = kFnvOffset;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        h = fnv1a_u64(name.size(), h);
        h = fnv1a(name, h);
        h = fnv1a(detail::read_file(f), h);
    }
    return hex64(h);
}

// Stable table-level split: a table's records all land in one split, and
// adding tables never moves existing ones.
inline std::string split_of(std::string_view table_id, unsigned validation_permille) {
    const uint64_t h = fnv1a(std::string(table_id) + "#split");
    return h % 1000 < validation_permille ? "validation" : "train";
}

// ---------------------------------------------------------------------------
// Manifest

struct ShardInfo {
    std::string file;
    std::string checksum;
    size_t records = 0;
};

struct Manifest {
    std::string version{kToolkitVersion};
    uint64_t seed = 0;
    size_t quota = 0;
    std::string language;
    std::string templates_checksum;
    std::string lexicon_checksum;
    std::string tables_checksum;
    double threshold = kDefaultSimilarityThreshold;
    bool similarity_gated = false;
    bool drop_empty_answers = false;
    unsigned validation_permille = 10;
    std::map<std::string, size_t> counts;  // split -> records
    std::map<std::string, std::vector<ShardInfo>> shards;
};

inline nlohmann::json manifest_to_json(const Manifest& m) {
    nlohmann::json j;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["quota"] = m.quota;
    j["language"] = m.language;
    j["templates_checksum"] = m.templates_checksum;
    j["lexicon_checksum"] = m.lexicon_checksum;
    j["tables_checksum"] = m.tables_checksum;
    j["threshold"] = m.threshold;
    j["similarity_gated"] = m.similarity_gated;
    j["drop_empty_answers"] = m.drop_empty_answers;
    j["validation_permille"] = m.validation_permille;
    j["counts"] = m.counts;
    nlohmann::json shards = nlohmann::json::object();
    for (const auto& [split, infos] : m.shards) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : infos)
            arr.push_back({{"file", s.file}, {"checksum", s.checksum}, {"records", s.records}});
        shards[split] = arr;
    }
    j["shards"] = shards;
    return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    m.version = j.value("version", std::string());
    m.seed = j.value("seed", uint64_t{0});
    m.quota = j.value("quota", size_t{0});
    m.language = j.value("language", std::string());
    m.templates_checksum = j.value("templates_checksum", std::string());
    m.lexicon_checksum = j.value("lexicon_checksum", std::string());
    m.tables_checksum = j.value("tables_checksum", std::string());
    m.threshold = j.value("threshold", kDefaultSimilarityThreshold);
    m.similarity_gated = j.value("similarity_gated", false);
    m.drop_empty_answers = j.value("drop_empty_answers", false);
    m.validation_permille = j.value("validation_permille", 10u);
    if (j.contains("counts")) m.counts = j.at("counts").get<std::map<std::string, size_t>>();
    if (j.contains("shards"))
        for (const auto& [split, arr] : j.at("shards").items())
            for (const auto& e : arr)
                m.shards[split].push_back(ShardInfo{e.at("file").get<std::string>(),
                                                    e.at("checksum").get<std::string>(),
                                                    e.at("records").get<size_t>()});
    return m;
}

// ---------------------------------------------------------------------------
// Table loading that accepts both the binary store and loose files

inline std::vector<Table> load_any_tables(const std::filesystem::path& path,
                                          const std::string& language) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(path)) {
        std::ifstream probe(path, std::ios::binary);
        char magic[8] = {};
        probe.read(magic, 8);
        if (probe.gcount() == 8 && std::string_view(magic, 8) == std::string_view(kStoreMagic, 8))
            return open_store(path).tables;
    }
    return load_tables(path, TableFormat::autodetect, language);
}

// ---------------------------------------------------------------------------
// Generation

struct GenerateConfig {
    std::filesystem::path tables;
    std::filesystem::path templates;
    std::filesystem::path lexicon;
    std::filesystem::path out_dir;
    size_t quota = 1000;
    uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware_concurrency
    bool drop_empty_answers = false;
    std::optional<std::filesystem::path> scores;  // id<TAB>score, enables gate 2
    double threshold = kDefaultSimilarityThreshold;
    std::optional<std::filesystem::path> questions;  // id<TAB>question sidecar
    size_t shard_size = 100000;
    unsigned validation_permille = 10;
};

struct GenerateReport {
    Manifest manifest;
    ExecGateStats exec_stats;
    SimGateStats sim_stats;
    size_t generated = 0;
    size_t written = 0;
};

namespace pipe_detail {

inline std::map<std::string, std::string> load_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw Error(path.string() + ":" + std::to_string(lineno) + ": want id<TAB>text");
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

}  // namespace pipe_detail

inline GenerateReport cmd_generate(const GenerateConfig& cfg) {
    namespace fs = std::filesystem;
    const KeywordLexicon lex = load_lexicon(cfg.lexicon);
    const std::vector<TemplateSpec> templates = load_templates(cfg.templates);
    const std::vector<Table> tables = load_any_tables(cfg.tables, lex.language);
    if (tables.empty()) throw Error("no input tables");
    if (templates.empty()) throw Error("no templates");

    std::map<std::string, const Table*> by_id;
    for (const auto& t : tables) by_id[t.id] = &t;

    BatchOptions batch;
    batch.quota = cfg.quota;
    batch.seed = cfg.seed;
    batch.threads = cfg.threads;
    std::vector<Instantiation> gen = generate_batch(templates, tables, batch);

    std::vector<QueryAst> asts(gen.size());
    std::vector<std::pair<const QueryAst*, const Table*>> jobs(gen.size());
    for (size_t i = 0; i < gen.size(); ++i) {
        asts[i] = parse_sql(gen[i].query_text);
        jobs[i] = {&asts[i], by_id.at(gen[i].table_id)};
    }
    const std::vector<ExecResult> results = execute_batch(jobs, lex, cfg.threads);

    GenerateReport rep;
    rep.generated = gen.size();
    std::vector<bool> keep = gate_execution(results, cfg.drop_empty_answers, rep.exec_stats);

    std::optional<std::unordered_map<std::string, double>> scores;
    if (cfg.scores) scores = load_scores(*cfg.scores);

    std::map<std::string, std::string> questions;
    if (cfg.questions) questions = pipe_detail::load_sidecar(*cfg.questions);

    const std::map<std::string, const TemplateSpec*> tpl_by_id = [&] {
        std::map<std::string, const TemplateSpec*> m;
        for (const auto& t : templates) m[t.id] = &t;
        return m;
    }();

    std::map<std::string, std::vector<DatasetRecord>> splits;
    for (size_t i = 0; i < gen.size(); ++i) {
        if (!keep[i]) continue;
        DatasetRecord r;
        r.id = record_id(gen[i].table_id, gen[i].query_text);
        r.language = lex.language;
        r.query_code_mixed = gen[i].query_text;
        r.query_monolingual = monolingualize(asts[i], lex);
        r.input_table_id = gen[i].table_id;
        r.answer = encode_table(*results[i].answer, lex);
        r.operator_classes = classify(asts[i]);
        r.keyword_count = tpl_by_id.at(gen[i].template_id)->keyword_count;
        r.question = r.query_monolingual;
        if (const auto q = questions.find(r.id); q != questions.end() && !q->second.empty())
            r.question = q->second;
        if (scores) {
            const auto s = scores->find(r.id);
            if (s == scores->end())
                throw MissingScore("no similarity score for record " + r.id);
            r.gate.similarity = s->second;
            ++rep.sim_stats.total;
            if (!gate_similarity_one(s->second, cfg.threshold)) {
                ++rep.sim_stats.dropped;
                continue;
            }
            ++rep.sim_stats.kept;
        }
        splits[split_of(r.input_table_id, cfg.validation_permille)].push_back(std::move(r));
    }

    fs::create_directories(cfg.out_dir);
    Manifest& m = rep.manifest;
    m.seed = cfg.seed;
    m.quota = cfg.quota;
    m.language = lex.language;
    m.templates_checksum = input_checksum(cfg.templates);
    m.lexicon_checksum = input_checksum(cfg.lexicon);
    m.tables_checksum = input_checksum(cfg.tables);
    m.threshold = cfg.threshold;
    m.similarity_gated = scores.has_value();
    m.drop_empty_answers = cfg.drop_empty_answers;
    m.validation_permille = cfg.validation_permille;

    for (const auto& [split, records] : splits) {
        m.counts[split] = records.size();
        rep.written += records.size();
        for (size_t start = 0, shard = 0; start < records.size(); start += cfg.shard_size, ++shard) {
            const size_t end = std::min(records.size(), start + cfg.shard_size);
            char name[64];
            std::snprintf(name, sizeof name, "%s-%05zu.jsonl", split.c_str(), shard);
            const fs::path file = cfg.out_dir / name;
            std::vector<DatasetRecord> chunk(records.begin() + static_cast<ptrdiff_t>(start),
                                             records.begin() + static_cast<ptrdiff_t>(end));
            write_records(file, chunk);
            m.shards[split].push_back(ShardInfo{name, file_checksum(file), chunk.size()});
        }
        m.shards.try_emplace(split);
    }

    std::ofstream mout(cfg.out_dir / "manifest.json", std::ios::trunc);
    if (!mout) throw Error("cannot write manifest");
    mout << manifest_to_json(m).dump(2) << "\n";
    return rep;
}

// A retained record must re-execute: running its stored query against its
// table and linearizing reproduces the answer text byte for byte.
inline bool verify_record(const DatasetRecord& r, const Table& table, const KeywordLexicon& lex) {
    const ExecResult res = execute(r.query_code_mixed, table, lex);
    if (!res.ok()) return false;
    return encode_table(*res.answer, lex) == r.answer;
}

// ---------------------------------------------------------------------------
// Dataset-level operations reused by the CLI

inline DatasetStats dataset_stats(const std::vector<DatasetRecord>& records) {
    DatasetStats s;
    for (const auto& r : records)
        s.add(r.operator_classes, r.keyword_count, r.input_table_id, r.language);
    return s;
}

struct GateFileReport {
    SimGateStats stats;
    size_t written = 0;
};

// Applies the similarity gate to an existing dataset file. Records keep the
// score that justified them.
inline GateFileReport gate_dataset(const std::filesystem::path& in_path,
                                   const std::filesystem::path& out_path,
                                   const std::filesystem::path& scores_path, double threshold) {
    std::vector<DatasetRecord> records = read_dataset(in_path);
    const auto scores = load_scores(scores_path);
    GateFileReport rep;
    std::vector<DatasetRecord> kept;
    for (auto& r : records) {
        const auto it = scores.find(r.id);
        if (it == scores.end())
            throw MissingScore("no similarity score for record " + r.id);
        ++rep.stats.total;
        r.gate.similarity = it->second;
        if (gate_similarity_one(it->second, threshold)) {
            ++rep.stats.kept;
            kept.push_back(std::move(r));
        } else {
            ++rep.stats.dropped;
        }
    }
    write_records(out_path, kept);
    rep.written = kept.size();
    return rep;
}

// ---------------------------------------------------------------------------
// Annotation sheets: export queries for human question writing, import the
// filled column back.

inline void export_annotation_sheet(const std::vector<DatasetRecord>& records,
                                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << "id\tlanguage\tquery_monolingual\tquestion\n";
    for (const auto& r : records) {
        if (r.id.find('\t') != std::string::npos ||
            r.query_monolingual.find('\t') != std::string::npos)
            throw Error("tab inside record " + r.id);
        out << r.id << "\t" << r.language << "\t" << r.query_monolingual << "\t" << r.question
            << "\n";
    }
    if (!out) throw Error("short write to " + path.string());
}

// Returns the number of records whose question changed.
inline size_t import_annotation_sheet(std::vector<DatasetRecord>& records,
                                      const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::map<std::string, std::string> by_id;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 || line.empty()) continue;  // header row
        std::vector<std::string> cols;
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i)
            if (i == line.size() || line[i] == '\t') {
                cols.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        if (cols.size() != 4)
            throw Error(path.string() + ":" + std::to_string(lineno) + ": want 4 columns");
        if (!cols[3].empty()) by_id[cols[0]] = cols[3];
    }
    size_t changed = 0;
    for (auto& r : records) {
        const auto it = by_id.find(r.id);
        if (it != by_id.end() && r.question != it->second) {
            r.question = it->second;
            ++changed;
        }
    }
    return changed;
}

// ---------------------------------------------------------------------------
// Prediction postprocessing over {id, answer} JSONL

struct PostprocessFileReport {
    PostprocessReport cells;
    size_t records = 0;
    size_t malformed = 0;
};

inline PostprocessFileReport postprocess_predictions(const std::filesystem::path& in_path,
                                                     const std::filesystem::path& out_path,
                                                     const KeywordLexicon& from,
                                                     const KeywordLexicon& to,
                                                     const TranslatorHook& hook = {}) {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw Error("cannot read " + in_path.string());
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + out_path.string());
    PostprocessFileReport rep;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(in_path.string() + ":" + std::to_string(lineno) + ": bad json");
        std::string answer = j.at("answer").get<std::string>();
        answer = postprocess_linearized(answer, from, to);
        if (hook) {
            const DecodeResult dec = decode_table(answer, to);
            if (dec.malformed) {
                ++rep.malformed;
            } else {
                PostprocessReport cell_rep;
                const Table fixed = postprocess(dec.table, from, to, hook, &cell_rep);
                rep.cells.cells += cell_rep.cells;
                rep.cells.digit_remapped += cell_rep.digit_remapped;
                rep.cells.keyword_remapped += cell_rep.keyword_remapped;
                rep.cells.translated += cell_rep.translated;
                rep.cells.untranslated += cell_rep.untranslated;
                answer = encode_table(fixed, to, dec.question);
            }
        }
        j["answer"] = answer;
        out << j.dump() << "\n";
        ++rep.records;
    }
    if (!out) throw Error("short write to " + out_path.string());
    return rep;
}

}  // namespace tabqa
