#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <tabqa/tabqa.hpp>

#include "support/synth.hpp"

using namespace tabqa;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("tabqa_pipe_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, std::string_view text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const KeywordLexicon& bn() {
    static KeywordLexicon lex = load_lexicon(fs::path(TABQA_DATA_DIR) / "lexicon_bn.tsv");
    return lex;
}

const KeywordLexicon& hi() {
    static KeywordLexicon lex = load_lexicon(fs::path(TABQA_DATA_DIR) / "lexicon_hi.tsv");
    return lex;
}

DatasetRecord sample_record(const std::string& id) {
    DatasetRecord r;
    r.id = id;
    r.language = "bn";
    r.question = "প্রশ্ন " + id;
    r.query_code_mixed = "select `a` from w";
    r.query_monolingual = "mono " + id;
    r.input_table_id = "t" + id;
    r.answer = "<কলাম> a <রো ১> 1";
    r.operator_classes = {"filtering"};
    r.keyword_count = 4;
    return r;
}

GenerateConfig base_config(const fs::path& work, const fs::path& out) {
    GenerateConfig cfg;
    cfg.tables = work / "tables.store";
    cfg.templates = fs::path(TABQA_DATA_DIR) / "templates.txt";
    cfg.lexicon = fs::path(TABQA_DATA_DIR) / "lexicon_bn.tsv";
    cfg.out_dir = out;
    cfg.quota = 80;
    cfg.seed = 42;
    cfg.threads = 2;
    cfg.shard_size = 16;
    cfg.validation_permille = 500;
    return cfg;
}

}  // namespace

TEST_CASE("record ids are framed, hex shaped and deterministic") {
    const std::string a = record_id("ab", "c");
    CHECK(a == record_id("ab", "c"));
    CHECK(a != record_id("a", "bc"));
    REQUIRE(a.size() == 17);
    CHECK(a[0] == 'r');
    for (size_t i = 1; i < a.size(); ++i) {
        const char c = a[i];
        CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    }
}

TEST_CASE("dataset records survive the json round trip") {
    DatasetRecord r = sample_record("x1");
    r.gate.exec_ok = true;
    r.gate.similarity = 0.81;
    r.gate.retained = false;

    const DatasetRecord b = record_from_json(record_to_json(r));
    CHECK(b.id == r.id);
    CHECK(b.language == r.language);
    CHECK(b.question == r.question);
    CHECK(b.query_code_mixed == r.query_code_mixed);
    CHECK(b.query_monolingual == r.query_monolingual);
    CHECK(b.input_table_id == r.input_table_id);
    CHECK(b.answer == r.answer);
    CHECK(b.operator_classes == r.operator_classes);
    CHECK(b.keyword_count == r.keyword_count);
    REQUIRE(b.gate.similarity);
    CHECK(*b.gate.similarity == doctest::Approx(0.81));
    CHECK(b.gate.retained == false);

    const nlohmann::json j = record_to_json(sample_record("x2"));
    CHECK(j.at("gate_metadata").at("similarity").is_null());
    CHECK_FALSE(record_from_json(j).gate.similarity);

    const DatasetRecord m = record_from_json(nlohmann::json{{"id", "m"}, {"answer", "a"}});
    CHECK(m.language == "und");
    CHECK(m.keyword_count == 0);
    CHECK(m.gate.exec_ok);
    CHECK(m.gate.retained);

    CHECK_THROWS_AS(record_from_json(nlohmann::json{{"id", "m"}}), nlohmann::json::exception);
}

TEST_CASE("record files skip blank lines and reject bad json") {
    const fs::path dir = temp_dir("records");
    const std::vector<DatasetRecord> recs = {sample_record("a"), sample_record("b")};
    write_records(dir / "d.jsonl", recs);
    const auto back = read_records(dir / "d.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "a");
    CHECK(back[1].answer == recs[1].answer);

    write_text(dir / "gap.jsonl", record_to_json(recs[0]).dump() + "\n\n" +
                                      record_to_json(recs[1]).dump() + "\n");
    CHECK(read_records(dir / "gap.jsonl").size() == 2);

    write_text(dir / "bad.jsonl", "{\"id\": \"a\"\n");
    CHECK_THROWS_AS(read_records(dir / "bad.jsonl"), Error);
}

TEST_CASE("a dataset is one file or a name-ordered shard directory") {
    const fs::path dir = temp_dir("dataset");
    write_records(dir / "solo.jsonl", {sample_record("s")});
    CHECK(read_dataset(dir / "solo.jsonl").size() == 1);

    const fs::path shards = dir / "shards";
    fs::create_directories(shards);
    write_records(shards / "train-00001.jsonl", {sample_record("c")});
    write_records(shards / "train-00000.jsonl", {sample_record("a"), sample_record("b")});
    write_text(shards / "notes.txt", "ignored");
    const auto all = read_dataset(shards);
    REQUIRE(all.size() == 3);
    CHECK(all[0].id == "a");
    CHECK(all[1].id == "b");
    CHECK(all[2].id == "c");
}

TEST_CASE("splits are stable per table and monotone in the permille") {
    CHECK(split_of("t1", 0) == "train");
    CHECK(split_of("t1", 1000) == "validation");
    int validation = 0;
    for (int i = 0; i < 400; ++i) {
        const std::string id = "table-" + std::to_string(i);
        CHECK(split_of(id, 10) == split_of(id, 10));
        if (split_of(id, 50) == "validation") ++validation;
        if (split_of(id, 10) == "validation") {
            CHECK(split_of(id, 100) == "validation");
            CHECK(split_of(id, 500) == "validation");
        }
        if (split_of(id, 500) == "train") CHECK(split_of(id, 100) == "train");
    }
    CHECK(validation > 0);
    CHECK(validation < 200);
}

TEST_CASE("checksums cover content and member names") {
    const fs::path dir = temp_dir("sums");
    write_text(dir / "x.bin", "hello\n");
    CHECK(file_checksum(dir / "x.bin") == hex64(fnv1a("hello\n")));
    CHECK(input_checksum(dir / "x.bin") == file_checksum(dir / "x.bin"));

    const fs::path d1 = dir / "d1";
    const fs::path d2 = dir / "d2";
    fs::create_directories(d1);
    fs::create_directories(d2);
    write_text(d1 / "a.txt", "A");
    write_text(d1 / "b.txt", "B");
    write_text(d2 / "c.txt", "A");
    write_text(d2 / "b.txt", "B");

    uint64_t h = kFnvOffset;
    for (const std::string name : {"a.txt", "b.txt"}) {
        h = fnv1a_u64(name.size(), h);
        h = fnv1a(name, h);
        h = fnv1a(name == "a.txt" ? "A" : "B", h);
    }
    CHECK(input_checksum(d1) == hex64(h));
    CHECK(input_checksum(d1) != input_checksum(d2));
}

TEST_CASE("table loading accepts the binary store and loose files") {
    const fs::path dir = temp_dir("anytables");
    const auto corpus = synth::make_synth_corpus(5, 4, "any", bn());
    persist_store(corpus, dir / "tables.store");
    const auto from_store = load_any_tables(dir / "tables.store", "bn");
    REQUIRE(from_store.size() == corpus.size());
    // The store orders tables by content id, so match by id rather than slot.
    std::map<std::string, const Table*> by_id;
    for (const Table& t : corpus) by_id[t.id] = &t;
    for (const Table& t : from_store) {
        REQUIRE(by_id.count(t.id) == 1);
        CHECK(t.rows.size() == by_id[t.id]->rows.size());
        CHECK(t.headers == by_id[t.id]->headers);
    }

    write_text(dir / "one.jsonl",
               "{\"name\":\"j\",\"headers\":[\"a\",\"b\"],\"rows\":[[\"1\",\"x\"]]}\n");
    const auto from_jsonl = load_any_tables(dir / "one.jsonl", "bn");
    REQUIRE(from_jsonl.size() == 1);
    CHECK(from_jsonl[0].language == "bn");
    CHECK(from_jsonl[0].headers == std::vector<std::string>{"a", "b"});

    write_text(dir / "flat.csv", "h1,h2\n1,dhaka\n");
    const auto from_csv = load_any_tables(dir / "flat.csv", "bn");
    REQUIRE(from_csv.size() == 1);
    CHECK(from_csv[0].name == "flat");
    CHECK(from_csv[0].rows.size() == 1);
}

TEST_CASE("generation writes shards, a manifest, and reproduces byte for byte") {
    const fs::path work = temp_dir("gen");
    const auto corpus = synth::make_synth_corpus(7, 6, "gen", bn());
    persist_store(corpus, work / "tables.store");

    const GenerateConfig cfg_a = base_config(work, work / "out_a");
    const GenerateReport rep = cmd_generate(cfg_a);

    CHECK(rep.generated > 0);
    CHECK(rep.exec_stats.reconciles());
    CHECK(rep.written == rep.exec_stats.kept);
    CHECK(rep.manifest.version == kToolkitVersion);
    CHECK(rep.manifest.language == "bn");
    CHECK(rep.manifest.seed == 42);
    CHECK(rep.manifest.templates_checksum == input_checksum(cfg_a.templates));
    CHECK(rep.manifest.lexicon_checksum == input_checksum(cfg_a.lexicon));
    CHECK(rep.manifest.tables_checksum == input_checksum(cfg_a.tables));
    CHECK_FALSE(rep.manifest.similarity_gated);

    size_t counted = 0;
    for (const auto& [split, n] : rep.manifest.counts) counted += n;
    CHECK(counted == rep.written);

    const nlohmann::json mj = nlohmann::json::parse(read_text(work / "out_a" / "manifest.json"));
    CHECK(mj.at("version") == "1.0.0");
    const Manifest m = manifest_from_json(mj);
    CHECK(m.version == rep.manifest.version);
    CHECK(m.seed == rep.manifest.seed);
    CHECK(m.counts == rep.manifest.counts);

    for (const auto& [split, infos] : m.shards) {
        size_t total = 0;
        for (size_t i = 0; i < infos.size(); ++i) {
            char want[64];
            std::snprintf(want, sizeof want, "%s-%05zu.jsonl", split.c_str(), i);
            CHECK(infos[i].file == want);
            const fs::path f = work / "out_a" / infos[i].file;
            REQUIRE(fs::exists(f));
            CHECK(infos[i].checksum == file_checksum(f));
            CHECK(infos[i].records <= cfg_a.shard_size);
            CHECK(infos[i].records == read_records(f).size());
            total += infos[i].records;
        }
        CHECK(total == m.counts.at(split));
    }

    GenerateConfig cfg_b = cfg_a;
    cfg_b.out_dir = work / "out_b";
    cmd_generate(cfg_b);
    CHECK(read_text(work / "out_a" / "manifest.json") ==
          read_text(work / "out_b" / "manifest.json"));
    for (const auto& [split, infos] : m.shards)
        for (const auto& s : infos)
            CHECK(read_text(work / "out_a" / s.file) == read_text(work / "out_b" / s.file));

    std::map<std::string, const Table*> by_id;
    for (const auto& t : corpus) by_id[t.id] = &t;
    const auto records = read_dataset(work / "out_a");
    REQUIRE(records.size() == rep.written);
    for (const auto& r : records) {
        CHECK(r.id == record_id(r.input_table_id, r.query_code_mixed));
        CHECK(r.language == "bn");
        CHECK(r.question == r.query_monolingual);
        CHECK(r.keyword_count >= 3);
        CHECK(r.keyword_count <= 10);
        REQUIRE(by_id.count(r.input_table_id) == 1);
        CHECK(verify_record(r, *by_id.at(r.input_table_id), bn()));
    }
    std::map<std::string, size_t> want_counts;
    for (const auto& r : records) ++want_counts[split_of(r.input_table_id, 500)];
    CHECK(want_counts == m.counts);

    DatasetRecord bad = records[0];
    bad.answer += "x";
    CHECK_FALSE(verify_record(bad, *by_id.at(bad.input_table_id), bn()));
    bad = records[0];
    bad.query_code_mixed = "select `zzz` from w";
    CHECK_FALSE(verify_record(bad, *by_id.at(bad.input_table_id), bn()));
}

TEST_CASE("score and question sidecars gate and relabel generation") {
    const fs::path work = temp_dir("gensc");
    const auto corpus = synth::make_synth_corpus(7, 6, "gen", bn());
    persist_store(corpus, work / "tables.store");

    const GenerateConfig cfg_a = base_config(work, work / "plain");
    const GenerateReport rep_a = cmd_generate(cfg_a);
    const auto plain = read_dataset(work / "plain");
    REQUIRE(plain.size() == rep_a.written);
    REQUIRE(plain.size() >= 4);

    std::map<std::string, double> score;
    for (size_t i = 0; i < plain.size(); ++i) score[plain[i].id] = (i % 2 == 0) ? 0.9 : 0.5;
    score[plain[1].id] = 0.74;
    score[plain[2].id] = 0.7399;
    std::string tsv = "# similarity scores\n";
    for (const auto& [id, s] : score) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "%s\t%.4f\n", id.c_str(), s);
        tsv += buf;
    }
    write_text(work / "scores.tsv", tsv);
    write_text(work / "questions.tsv", plain[0].id + "\tকে জিতেছে?\n" + plain[1].id + "\t\n");

    GenerateConfig cfg_g = cfg_a;
    cfg_g.out_dir = work / "gated";
    cfg_g.scores = work / "scores.tsv";
    cfg_g.questions = work / "questions.tsv";
    const GenerateReport rep_g = cmd_generate(cfg_g);

    std::set<std::string> want_kept;
    for (const auto& [id, s] : score)
        if (s >= kDefaultSimilarityThreshold) want_kept.insert(id);
    CHECK(want_kept.count(plain[0].id) == 1);
    CHECK(want_kept.count(plain[1].id) == 1);
    CHECK(want_kept.count(plain[2].id) == 0);

    CHECK(rep_g.manifest.similarity_gated);
    CHECK(rep_g.manifest.threshold == kDefaultSimilarityThreshold);
    CHECK(rep_g.sim_stats.total == plain.size());
    CHECK(rep_g.sim_stats.kept == want_kept.size());
    CHECK(rep_g.sim_stats.reconciles());
    CHECK(rep_g.written == want_kept.size());

    const auto gated = read_dataset(work / "gated");
    REQUIRE(gated.size() == want_kept.size());
    for (const auto& r : gated) {
        CHECK(want_kept.count(r.id) == 1);
        REQUIRE(r.gate.similarity);
        CHECK(*r.gate.similarity >= kDefaultSimilarityThreshold);
        CHECK(*r.gate.similarity == doctest::Approx(score.at(r.id)));
        if (r.id == plain[0].id)
            CHECK(r.question == "কে জিতেছে?");
        else
            CHECK(r.question == r.query_monolingual);
    }

    std::string missing;
    for (const auto& [id, s] : score) {
        if (id == plain[3].id) continue;
        char buf[80];
        std::snprintf(buf, sizeof buf, "%s\t%.4f\n", id.c_str(), s);
        missing += buf;
    }
    write_text(work / "missing.tsv", missing);
    GenerateConfig cfg_m = cfg_g;
    cfg_m.out_dir = work / "gated2";
    cfg_m.scores = work / "missing.tsv";
    CHECK_THROWS_AS(cmd_generate(cfg_m), MissingScore);
}

TEST_CASE("operator classes partition reporting") {
    CHECK(operator_class_names() ==
          std::vector<std::string>{"arithmetic", "filtering", "group_by", "logical", "set",
                                   "sorting"});
    auto classes = [](const char* q) { return classify(parse_sql(q)); };
    using V = std::vector<std::string>;
    CHECK(classes("select count(`a`) from w") == V{"arithmetic"});
    CHECK(classes("select `a` from w where `a` = 1") == V{"filtering"});
    CHECK(classes("select `a` from w where `a` = 1 and `b` = 2") == V{"filtering", "logical"});
    CHECK(classes("select `a` from w where `a` not like \"x%\"") == V{"filtering", "logical"});
    CHECK(classes("select `a` from w group by `a`") == V{"group_by"});
    CHECK(classes("select `a` from w order by `a`") == V{"sorting"});
    CHECK(classes("select `a` from w union select `b` from v") == V{"set"});
    CHECK(classes("select `a` from w group by `a` having count(*) > 1 order by count(*) desc") ==
          V{"arithmetic", "filtering", "group_by", "sorting"});
    CHECK(classes("select distinct `a` from w limit 5").empty());
}

TEST_CASE("dataset statistics aggregate classes, keywords and languages") {
    DatasetStats s;
    s.add({"filtering", "logical"}, 4, "t1", "bn");
    s.add({"filtering"}, 4, "t1", "bn");
    s.add({"set"}, 5, "t2", "hi");
    CHECK(s.records == 3);
    CHECK(s.tables.size() == 2);
    CHECK(s.by_class.at("filtering") == 2);
    CHECK(s.by_class.at("logical") == 1);
    CHECK(s.by_class.at("set") == 1);
    CHECK(s.keyword_histogram.at(4) == 2);
    CHECK(s.by_language.at("bn") == 2);
    CHECK(s.by_language.at("hi") == 1);
    CHECK(s.keyword_mode() == 4);

    DatasetStats tie;
    tie.add({}, 5, "t", "bn");
    tie.add({}, 3, "t", "bn");
    tie.add({}, 3, "t", "bn");
    tie.add({}, 5, "t", "bn");
    CHECK(tie.keyword_mode() == 3);

    const std::vector<DatasetRecord> recs = {sample_record("a"), sample_record("b")};
    const DatasetStats ds = dataset_stats(recs);
    CHECK(ds.records == 2);
    CHECK(ds.by_class.at("filtering") == 2);

    const fs::path dir = temp_dir("stats");
    write_stats_csv(ds, dir / "stats.csv");
    const std::string csv = read_text(dir / "stats.csv");
    CHECK(csv.rfind("section,key,value\n", 0) == 0);
    CHECK(csv.find("summary,records,2\n") != std::string::npos);
    CHECK(csv.find("operator_class,filtering,2\n") != std::string::npos);

    write_stats_svg(ds, dir / "stats.svg");
    const std::string svg = read_text(dir / "stats.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("operator classes") != std::string::npos);
    CHECK(svg.find("keywords per query") != std::string::npos);
}

TEST_CASE("gating an existing dataset keeps the justifying score") {
    const fs::path dir = temp_dir("gatefile");
    std::vector<DatasetRecord> recs;
    for (const char* id : {"a", "b", "c", "d", "e"}) recs.push_back(sample_record(id));
    write_records(dir / "in.jsonl", recs);
    write_text(dir / "scores.tsv", "a\t0.9\nb\t0.5\nc\t0.74\nd\t0.7399\ne\t1.0\n");

    const GateFileReport rep = gate_dataset(dir / "in.jsonl", dir / "out.jsonl",
                                            dir / "scores.tsv", kDefaultSimilarityThreshold);
    CHECK(rep.stats.total == 5);
    CHECK(rep.stats.kept == 3);
    CHECK(rep.stats.dropped == 2);
    CHECK(rep.stats.reconciles());
    CHECK(rep.written == 3);

    const auto kept = read_records(dir / "out.jsonl");
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].id == "a");
    CHECK(kept[1].id == "c");
    CHECK(kept[2].id == "e");
    REQUIRE(kept[1].gate.similarity);
    CHECK(*kept[1].gate.similarity == doctest::Approx(0.74));

    write_text(dir / "short.tsv", "a\t0.9\n");
    CHECK_THROWS_AS(gate_dataset(dir / "in.jsonl", dir / "out2.jsonl", dir / "short.tsv", 0.5),
                    MissingScore);
}

TEST_CASE("annotation sheets round trip the question column") {
    const fs::path dir = temp_dir("sheet");
    std::vector<DatasetRecord> recs = {sample_record("a"), sample_record("b"),
                                       sample_record("c")};
    export_annotation_sheet(recs, dir / "sheet.tsv");
    const std::string sheet = read_text(dir / "sheet.tsv");
    CHECK(sheet.rfind("id\tlanguage\tquery_monolingual\tquestion\n", 0) == 0);
    CHECK(std::count(sheet.begin(), sheet.end(), '\n') == 4);

    std::string edited = "id\tlanguage\tquery_monolingual\tquestion\n";
    edited += "a\tbn\tmono a\tকে জিতেছে?\n";
    edited += "b\tbn\tmono b\t\n";
    edited += "c\tbn\tmono c\t" + recs[2].question + "\n";
    write_text(dir / "edited.tsv", edited);
    CHECK(import_annotation_sheet(recs, dir / "edited.tsv") == 1);
    CHECK(recs[0].question == "কে জিতেছে?");
    CHECK(recs[1].question == "প্রশ্ন b");
    CHECK(import_annotation_sheet(recs, dir / "edited.tsv") == 0);

    write_text(dir / "narrow.tsv", "id\tlanguage\tquery_monolingual\tquestion\na\tbn\tmono\n");
    CHECK_THROWS_AS(import_annotation_sheet(recs, dir / "narrow.tsv"), Error);

    std::vector<DatasetRecord> dirty = {sample_record("t")};
    dirty[0].query_monolingual = "bad\ttab";
    CHECK_THROWS_AS(export_annotation_sheet(dirty, dir / "bad.tsv"), Error);
}

TEST_CASE("prediction files postprocess across scripts") {
    const fs::path dir = temp_dir("preds");
    std::string in;
    in += nlohmann::json{{"id", "p1"}, {"answer", "<কলাম> গণনা(`x`) <রো ১> ৫"}}.dump() + "\n";
    in += nlohmann::json{{"id", "p2"}, {"answer", "শুধু লেখা"}}.dump() + "\n";
    write_text(dir / "in.jsonl", in);

    const PostprocessFileReport rep =
        postprocess_predictions(dir / "in.jsonl", dir / "out.jsonl", bn(), hi());
    CHECK(rep.records == 2);
    CHECK(rep.malformed == 0);

    std::ifstream out(dir / "out.jsonl");
    std::string l1, l2;
    std::getline(out, l1);
    std::getline(out, l2);
    const nlohmann::json j1 = nlohmann::json::parse(l1);
    CHECK(j1.at("id") == "p1");
    CHECK(j1.at("answer") == "<कॉलम> गणना(`x`) <रो १> ५");
    CHECK(nlohmann::json::parse(l2).at("answer") == "শুধু লেখা");

    std::string in2;
    in2 += nlohmann::json{{"id", "q1"}, {"answer", "<কলাম> শহর <রো ১> ঢাকা"}}.dump() + "\n";
    in2 += nlohmann::json{{"id", "q2"}, {"answer", "শুধু লেখা"}}.dump() + "\n";
    write_text(dir / "in2.jsonl", in2);
    size_t calls = 0;
    const TranslatorHook hook = [&](const std::string& s) -> std::optional<std::string> {
        ++calls;
        if (s == "ঢাকা") return std::string("dhaka");
        return std::nullopt;
    };
    const PostprocessFileReport rep2 =
        postprocess_predictions(dir / "in2.jsonl", dir / "out2.jsonl", bn(), hi(), hook);
    CHECK(rep2.records == 2);
    CHECK(rep2.malformed == 1);
    CHECK(rep2.cells.cells == 2);
    CHECK(rep2.cells.translated == 1);
    CHECK(rep2.cells.untranslated == 1);
    CHECK(calls == 2);

    std::ifstream out2(dir / "out2.jsonl");
    std::getline(out2, l1);
    CHECK(nlohmann::json::parse(l1).at("answer") == "<कॉलम> শহর <रो १> dhaka");
}
