#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <tabqa/hooks_http.hpp>
#include <tabqa/tabqa.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabqa;

namespace {

json triple_json(const ScoreTriple& t) {
    return {{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
}

json metric_json(const MetricReport& r) {
    return {{"records", r.records},   {"malformed", r.malformed}, {"table_em", r.table_em()},
            {"rows", triple_json(r.rows())}, {"cols", triple_json(r.cols())},
            {"cells", triple_json(r.cells())}};
}

json exec_stats_json(const ExecGateStats& s) {
    return {{"total", s.total},
            {"kept", s.kept},
            {"dropped_error", s.dropped_error},
            {"dropped_empty", s.dropped_empty},
            {"by_error", s.by_error}};
}

json sim_stats_json(const SimGateStats& s) {
    return {{"total", s.total}, {"kept", s.kept}, {"dropped", s.dropped}};
}

struct GenerateArgs {
    GenerateConfig cfg;
    std::string scores, questions;
};

struct EvaluateArgs {
    std::string pred, gold, lexicon, postprocess_from;
    bool by_class = false;
};

struct StatsArgs {
    std::string dataset, out_csv, out_svg;
};

struct GateArgs {
    std::string dataset, scores, out;
    double threshold = kDefaultSimilarityThreshold;
};

struct SuggestArgs {
    std::string scores;
    size_t bins = 40;
};

struct SheetArgs {
    std::string dataset, sheet, out;
};

struct PostArgs {
    std::string pred, out, from, to, translate_cmd, translate_url;
};

int run_generate(const GenerateArgs& a) {
    GenerateConfig cfg = a.cfg;
    if (!a.scores.empty()) cfg.scores = fs::path(a.scores);
    if (!a.questions.empty()) cfg.questions = fs::path(a.questions);
    const GenerateReport rep = cmd_generate(cfg);
    json out;
    out["manifest"] = manifest_to_json(rep.manifest);
    out["generated"] = rep.generated;
    out["written"] = rep.written;
    out["execution_gate"] = exec_stats_json(rep.exec_stats);
    if (cfg.scores) out["similarity_gate"] = sim_stats_json(rep.sim_stats);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_evaluate(const EvaluateArgs& a) {
    const KeywordLexicon lex = a.lexicon.empty() ? english_lexicon() : load_lexicon(a.lexicon);
    EvalOptions opts;
    opts.by_class = a.by_class;
    if (!a.postprocess_from.empty()) {
        // Shared state keeps the lexicon alive inside the std::function.
        auto from = std::make_shared<KeywordLexicon>(load_lexicon(a.postprocess_from));
        auto to = std::make_shared<KeywordLexicon>(lex);
        opts.transform = [from, to](const std::string& s) {
            return postprocess_linearized(s, *from, *to);
        };
    }
    const EvalReport rep = evaluate_file(a.pred, a.gold, lex, opts);
    json out;
    out["overall"] = metric_json(rep.overall);
    if (a.by_class) {
        json by = json::object();
        for (const auto& name : operator_class_names())
            by[name] = metric_json(rep.by_class.count(name) ? rep.by_class.at(name)
                                                            : MetricReport{});
        out["by_class"] = by;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_stats(const StatsArgs& a) {
    const auto records = read_dataset(a.dataset);
    const DatasetStats s = dataset_stats(records);
    if (!a.out_csv.empty()) write_stats_csv(s, a.out_csv);
    if (!a.out_svg.empty()) write_stats_svg(s, a.out_svg);
    json out;
    out["records"] = s.records;
    out["tables"] = s.tables.size();
    out["keyword_mode"] = s.keyword_mode();
    out["by_class"] = s.by_class;
    out["by_language"] = s.by_language;
    json hist = json::object();
    for (const auto& [k, n] : s.keyword_histogram) hist[std::to_string(k)] = n;
    out["keywords_per_query"] = hist;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_gate(const GateArgs& a) {
    const GateFileReport rep = gate_dataset(a.dataset, a.out, a.scores, a.threshold);
    json out;
    out["threshold"] = a.threshold;
    out["similarity_gate"] = sim_stats_json(rep.stats);
    out["written"] = rep.written;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_suggest(const SuggestArgs& a) {
    const auto by_id = load_scores(a.scores);
    std::vector<double> scores;
    scores.reserve(by_id.size());
    for (const auto& [id, s] : by_id) scores.push_back(s);
    const ThresholdSuggestion sug = suggest_threshold(scores, a.bins);
    json out;
    out["found"] = sug.found;
    if (sug.found) out["threshold"] = sug.threshold;
    out["histogram"] = sug.histogram;
    out["smoothed"] = sug.smoothed;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_sheet_export(const SheetArgs& a) {
    const auto records = read_dataset(a.dataset);
    export_annotation_sheet(records, a.out);
    std::cout << "{\"exported\": " << records.size() << "}\n";
    return 0;
}

int run_sheet_import(const SheetArgs& a) {
    auto records = read_dataset(a.dataset);
    const size_t changed = import_annotation_sheet(records, a.sheet);
    write_records(a.out, records);
    std::cout << "{\"records\": " << records.size() << ", \"updated\": " << changed << "}\n";
    return 0;
}

int run_postprocess(const PostArgs& a) {
    const KeywordLexicon from = load_lexicon(a.from);
    const KeywordLexicon to = load_lexicon(a.to);
    TranslatorHook hook;
    std::optional<SubprocessTranslator> proc;
    std::optional<HttpTranslator> http;
    if (!a.translate_cmd.empty()) {
        proc.emplace(a.translate_cmd);
        hook = [&proc](const std::string& s) { return (*proc)(s); };
    } else if (!a.translate_url.empty()) {
        http.emplace(a.translate_url);
        hook = [&http](const std::string& s) { return (*http)(s); };
    }
    const PostprocessFileReport rep = postprocess_predictions(a.pred, a.out, from, to, hook);
    json out;
    out["records"] = rep.records;
    out["malformed"] = rep.malformed;
    out["cells"] = rep.cells.cells;
    out["digit_remapped"] = rep.cells.digit_remapped;
    out["keyword_remapped"] = rep.cells.keyword_remapped;
    out["translated"] = rep.cells.translated;
    out["untranslated"] = rep.cells.untranslated;
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dataset synthesis and evaluation toolkit for low-resource table QA"};
    app.set_config("--config", "", "read options from a config file");
    app.require_subcommand(1);
    std::string workspace;
    app.add_option("--workspace", workspace, "base directory for relative paths")
        ->envname("TABQA_WORKSPACE");

    std::function<int()> action;

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "synthesize a dataset from tables and templates");
    g->add_option("--tables", gen.cfg.tables, "table store, file, or directory")->required();
    g->add_option("--templates", gen.cfg.templates, "template file")->required();
    g->add_option("--lexicon", gen.cfg.lexicon, "keyword lexicon")->required();
    g->add_option("--out", gen.cfg.out_dir, "output directory")->required();
    g->add_option("--quota", gen.cfg.quota, "target sample count");
    g->add_option("--seed", gen.cfg.seed, "generation seed");
    g->add_option("--threads", gen.cfg.threads, "worker threads, 0 = hardware");
    g->add_flag("--drop-empty", gen.cfg.drop_empty_answers, "drop empty answer tables");
    g->add_option("--scores", gen.scores, "similarity scores for gate 2");
    g->add_option("--threshold", gen.cfg.threshold, "similarity threshold");
    g->add_option("--questions", gen.questions, "id<TAB>question sidecar");
    g->add_option("--shard-size", gen.cfg.shard_size, "records per shard");
    g->add_option("--validation-permille", gen.cfg.validation_permille,
                  "per-mille of tables routed to validation");
    g->callback([&] { action = [&] { return run_generate(gen); }; });

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "score predictions against gold answers");
    e->add_option("--pred", ev.pred, "predictions JSONL with {id, answer}")->required();
    e->add_option("--gold", ev.gold, "gold JSONL with {id, answer, operator_classes}")
        ->required();
    e->add_option("--lexicon", ev.lexicon, "lexicon of the gold language");
    e->add_flag("--by-class", ev.by_class, "report per operator class");
    e->add_option("--postprocess-from", ev.postprocess_from,
                  "remap predictions from this lexicon before scoring");
    e->callback([&] { action = [&] { return run_evaluate(ev); }; });

    StatsArgs st;
    auto* s = app.add_subcommand("stats", "dataset statistics");
    s->add_option("--dataset", st.dataset, "dataset file or shard directory")->required();
    s->add_option("--out-csv", st.out_csv, "write per-section CSV");
    s->add_option("--out-svg", st.out_svg, "write bar chart SVG");
    s->callback([&] { action = [&] { return run_stats(st); }; });

    GateArgs ga;
    auto* q = app.add_subcommand("gate", "similarity-gate an existing dataset");
    q->add_option("--dataset", ga.dataset, "dataset file or shard directory")->required();
    q->add_option("--scores", ga.scores, "id<TAB>score file")->required();
    q->add_option("--out", ga.out, "filtered JSONL output")->required();
    q->add_option("--threshold", ga.threshold, "similarity threshold");
    q->callback([&] { action = [&] { return run_gate(ga); }; });

    SuggestArgs su;
    auto* u = app.add_subcommand("suggest-threshold", "propose a threshold from a score file");
    u->add_option("--scores", su.scores, "id<TAB>score file")->required();
    u->add_option("--bins", su.bins, "histogram bins");
    u->callback([&] { action = [&] { return run_suggest(su); }; });

    SheetArgs sh;
    auto* n = app.add_subcommand("annotation-sheet", "export or import question sheets");
    auto* nx = n->add_subcommand("export", "write a TSV sheet for annotators");
    nx->add_option("--dataset", sh.dataset, "dataset file or shard directory")->required();
    nx->add_option("--out", sh.out, "sheet TSV")->required();
    nx->callback([&] { action = [&] { return run_sheet_export(sh); }; });
    auto* ni = n->add_subcommand("import", "fold annotated questions back in");
    ni->add_option("--dataset", sh.dataset, "dataset file or shard directory")->required();
    ni->add_option("--sheet", sh.sheet, "filled sheet TSV")->required();
    ni->add_option("--out", sh.out, "updated dataset JSONL")->required();
    ni->callback([&] { action = [&] { return run_sheet_import(sh); }; });
    n->require_subcommand(1);

    PostArgs po;
    auto* p = app.add_subcommand("postprocess", "cross-lingual cleanup of predictions");
    p->add_option("--pred", po.pred, "predictions JSONL with {id, answer}")->required();
    p->add_option("--out", po.out, "rewritten predictions JSONL")->required();
    p->add_option("--from", po.from, "lexicon of the model's training language")->required();
    p->add_option("--to", po.to, "lexicon of the target language")->required();
    auto* cmd_opt = p->add_option("--translate-cmd", po.translate_cmd,
                                  "line-oriented translator subprocess");
    p->add_option("--translate-url", po.translate_url, "translator http endpoint")
        ->excludes(cmd_opt);
    p->callback([&] { action = [&] { return run_postprocess(po); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!workspace.empty()) fs::current_path(workspace);
        return action ? action() : 1;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
}
