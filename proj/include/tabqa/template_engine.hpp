#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "parallel.hpp"
#include "sql/canonical.hpp"
#include "sql/keywords.hpp"
#include "sql/parser.hpp"
#include "table.hpp"
#include "util.hpp"

namespace tabqa {

struct UnparsableTemplate : Error {
    using Error::Error;
};
struct UnknownPlaceholder : Error {
    using Error::Error;
};

// Placeholder conventions: "w" is the table, "c1".."c9" are columns,
// "value"/"valueN" sample a cell of their partner column, "number"/"numberN"
// sample a numeric threshold. A template is ordinary query text, so it
// parses under the standard grammar with placeholders as bare identifiers.
enum class PlaceholderKind {
    table,
    column_any,
    column_numeric,
    column_text,
    cell_literal,
    numeric_literal,
};

// Where a literal placeholder draws its sample from.
struct AssocTarget {
    enum Kind { none, column, count_rows } kind = none;
    std::string source;  // column placeholder or concrete header name
};

struct TemplateSpec {
    std::string id;
    std::string text;  // template body without annotations
    QueryAst ast;
    std::map<std::string, PlaceholderKind> kinds;
    std::vector<std::string> discovery_order;
    std::map<std::string, AssocTarget> assoc;
    std::map<std::string, size_t> leaf_of;       // literal placeholder -> leaf id
    std::set<std::string> pattern_placeholders;  // sampled as like prefixes
    std::set<size_t> ordered_pairs;              // leaves whose two bounds sort by value
    size_t keyword_count = 0;
};

namespace tpl_detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline bool is_column_placeholder(const ColumnRef& ref) {
    return !ref.quoted && ref.name.size() >= 2 && ref.name[0] == 'c' &&
           all_digits(std::string_view(ref.name).substr(1));
}

inline bool is_literal_placeholder_name(std::string_view name, std::string_view stem) {
    if (name.substr(0, stem.size()) != stem) return false;
    const auto rest = name.substr(stem.size());
    return rest.empty() || all_digits(rest);
}

inline bool is_value_placeholder(const ColumnRef& ref) {
    return !ref.quoted && is_literal_placeholder_name(ref.name, "value");
}

inline bool is_number_placeholder(const ColumnRef& ref) {
    return !ref.quoted && is_literal_placeholder_name(ref.name, "number");
}

class Analyzer {
  public:
    explicit Analyzer(TemplateSpec& spec) : spec_(spec) {}

    void run() {
        analyze_core(spec_.ast.core);
        for (auto& part : spec_.ast.compounds) analyze_core(part.core);
        for (auto& o : spec_.ast.order_by) note_order_operand(o.expr);
        for (const auto& [name, kind] : spec_.kinds) {
            if (kind != PlaceholderKind::cell_literal && kind != PlaceholderKind::numeric_literal)
                continue;
            if (spec_.assoc.at(name).kind == AssocTarget::none)
                throw UnknownPlaceholder("placeholder '" + name +
                                         "' has no column to sample from");
        }
    }

  private:
    TemplateSpec& spec_;
    size_t next_leaf_ = 0;

    void record(const std::string& name, PlaceholderKind kind) {
        const auto it = spec_.kinds.find(name);
        if (it == spec_.kinds.end()) {
            spec_.kinds.emplace(name, kind);
            spec_.discovery_order.push_back(name);
            if (kind == PlaceholderKind::cell_literal || kind == PlaceholderKind::numeric_literal)
                spec_.assoc[name] = {};
            return;
        }
        PlaceholderKind& have = it->second;
        if (have == kind) return;
        // Column kinds may tighten from any to numeric/text, never across.
        if (have == PlaceholderKind::column_any &&
            (kind == PlaceholderKind::column_numeric || kind == PlaceholderKind::column_text)) {
            have = kind;
            return;
        }
        if (kind == PlaceholderKind::column_any &&
            (have == PlaceholderKind::column_numeric || have == PlaceholderKind::column_text))
            return;
        throw UnknownPlaceholder("placeholder '" + name + "' used with conflicting kinds");
    }

    void note_column(const ColumnRef& ref, PlaceholderKind kind) {
        if (is_value_placeholder(ref) || is_number_placeholder(ref))
            throw UnknownPlaceholder("literal placeholder '" + ref.name +
                                     "' in a column position");
        if (is_column_placeholder(ref)) record(ref.name, kind);
    }

    void note_agg(const AggTerm& agg) {
        if (agg.star) return;
        note_column(agg.column, agg.fn == AggFn::sum || agg.fn == AggFn::avg
                                    ? PlaceholderKind::column_numeric
                                    : PlaceholderKind::column_any);
    }

    void note_order_operand(const Operand& op) {
        if (const auto* c = std::get_if<ColumnRef>(&op)) {
            note_column(*c, PlaceholderKind::column_any);
            return;
        }
        if (const auto* a = std::get_if<AggTerm>(&op)) note_agg(*a);
    }

    // The non-literal side of a predicate leaf, used as sampling source.
    std::optional<AssocTarget> source_of(const Operand& op, bool ordering) {
        if (const auto* c = std::get_if<ColumnRef>(&op)) {
            if (is_value_placeholder(*c) || is_number_placeholder(*c)) return std::nullopt;
            note_column(*c, ordering ? PlaceholderKind::column_numeric
                                     : PlaceholderKind::column_any);
            return AssocTarget{AssocTarget::column, c->name};
        }
        if (const auto* a = std::get_if<AggTerm>(&op)) {
            note_agg(*a);
            if (a->fn == AggFn::count) return AssocTarget{AssocTarget::count_rows, ""};
            return AssocTarget{AssocTarget::column, a->column.name};
        }
        return std::nullopt;
    }

    void bind_literal(const Operand& op, const AssocTarget& target, PlaceholderKind kind,
                      size_t leaf, bool pattern) {
        const auto* c = std::get_if<ColumnRef>(&op);
        if (!c) return;  // a concrete literal, nothing to bind
        const bool value_ish = is_value_placeholder(*c);
        const bool number_ish = is_number_placeholder(*c);
        if (!value_ish && !number_ish) return;
        record(c->name, number_ish ? PlaceholderKind::numeric_literal : kind);
        spec_.assoc[c->name] = target;
        spec_.leaf_of[c->name] = leaf;
        if (pattern) spec_.pattern_placeholders.insert(c->name);
    }

    static bool literal_placeholder(const Operand& op) {
        const auto* c = std::get_if<ColumnRef>(&op);
        return c && (is_value_placeholder(*c) || is_number_placeholder(*c));
    }

    void analyze_pred(const BoolExpr& e) {
        const size_t leaf = next_leaf_++;
        switch (e.kind) {
            case BoolExpr::cmp: {
                const bool ordering = e.op == CmpOp::lt || e.op == CmpOp::le ||
                                      e.op == CmpOp::gt || e.op == CmpOp::ge;
                const bool l_ph = literal_placeholder(*e.lhs);
                const bool r_ph = literal_placeholder(*e.rhs);
                if (l_ph && r_ph)
                    throw UnknownPlaceholder(
                        "a comparison cannot relate two literal placeholders");
                if (r_ph) {
                    const auto src = source_of(*e.lhs, ordering);
                    if (!src)
                        throw UnknownPlaceholder("no sampling source in comparison");
                    bind_literal(*e.rhs, *src, PlaceholderKind::cell_literal, leaf, false);
                    return;
                }
                if (l_ph) {
                    const auto src = source_of(*e.rhs, ordering);
                    if (!src)
                        throw UnknownPlaceholder("no sampling source in comparison");
                    bind_literal(*e.lhs, *src, PlaceholderKind::cell_literal, leaf, false);
                    return;
                }
                source_of(*e.lhs, ordering);
                source_of(*e.rhs, ordering);
                return;
            }
            case BoolExpr::in_list: {
                const auto src = source_of(*e.lhs, false);
                for (const auto& item : e.items) {
                    if (!literal_placeholder(item)) continue;
                    if (!src)
                        throw UnknownPlaceholder("in-list placeholder without a column side");
                    bind_literal(item, *src, PlaceholderKind::cell_literal, leaf, false);
                }
                return;
            }
            case BoolExpr::between: {
                const auto src = source_of(*e.lhs, true);
                bool any_ph = false;
                for (const auto& item : e.items) any_ph = any_ph || literal_placeholder(item);
                if (any_ph && !src)
                    throw UnknownPlaceholder("between placeholder without a column side");
                for (const auto& item : e.items)
                    bind_literal(item, src ? *src : AssocTarget{},
                                 PlaceholderKind::numeric_literal, leaf, false);
                if (any_ph) spec_.ordered_pairs.insert(leaf);
                return;
            }
            case BoolExpr::like: {
                if (const auto* c = std::get_if<ColumnRef>(&*e.lhs))
                    note_column(*c, PlaceholderKind::column_text);
                const auto src = source_of(*e.lhs, false);
                if (literal_placeholder(e.items[0])) {
                    if (!src)
                        throw UnknownPlaceholder("like placeholder without a column side");
                    bind_literal(e.items[0], *src, PlaceholderKind::cell_literal, leaf, true);
                }
                return;
            }
            default:
                for (const auto& ch : e.children) analyze_pred(ch);
                return;
        }
    }

    void analyze_core(const SelectCore& core) {
        for (const auto& it : core.items) {
            if (it.agg != AggFn::none) {
                if (it.kind != SelectItem::star)
                    note_agg(AggTerm{it.agg, false, it.col});
            } else if (it.kind == SelectItem::column) {
                note_column(it.col, PlaceholderKind::column_any);
            }
        }
        if (core.table) record(*core.table, PlaceholderKind::table);
        if (core.where) analyze_pred(*core.where);
        for (const auto& g : core.group_by) note_column(g, PlaceholderKind::column_any);
        if (core.having) analyze_pred(*core.having);
    }
};

}  // namespace tpl_detail

// Parses one template line: query text, then optional "| name:kind ..."
// overrides. Throws UnparsableTemplate or UnknownPlaceholder.
inline TemplateSpec parse_template(std::string_view line, std::string id) {
    TemplateSpec spec;
    spec.id = std::move(id);
    std::string_view body = line;
    std::string_view annotations;
    if (const size_t bar = line.find(" | "); bar != std::string_view::npos) {
        body = line.substr(0, bar);
        annotations = line.substr(bar + 3);
    }
    spec.text = std::string(trim(body));
    try {
        spec.ast = parse_sql(spec.text);
    } catch (const SyntaxError& e) {
        throw UnparsableTemplate("template '" + spec.text + "': " + e.what());
    }
    tpl_detail::Analyzer(spec).run();
    spec.keyword_count = count_keywords(spec.text);

    // Annotation overrides.
    std::string_view rest = trim(annotations);
    while (!rest.empty()) {
        size_t sp = rest.find(' ');
        if (sp == std::string_view::npos) sp = rest.size();
        const std::string_view pair = rest.substr(0, sp);
        rest = trim(rest.substr(sp));
        const size_t colon = pair.find(':');
        if (colon == std::string_view::npos)
            throw UnknownPlaceholder("annotation '" + std::string(pair) +
                                     "' is not name:kind");
        const std::string name(pair.substr(0, colon));
        const std::string kind(pair.substr(colon + 1));
        const auto it = spec.kinds.find(name);
        if (it == spec.kinds.end())
            throw UnknownPlaceholder("annotation names unknown placeholder '" + name + "'");
        if (kind == "column")
            it->second = PlaceholderKind::column_any;
        else if (kind == "column_numeric")
            it->second = PlaceholderKind::column_numeric;
        else if (kind == "column_text")
            it->second = PlaceholderKind::column_text;
        else if (kind == "cell_literal")
            it->second = PlaceholderKind::cell_literal;
        else if (kind == "numeric_literal")
            it->second = PlaceholderKind::numeric_literal;
        else if (kind == "table")
            it->second = PlaceholderKind::table;
        else
            throw UnknownPlaceholder("unknown placeholder kind '" + kind + "'");
    }
    return spec;
}

// One template per non-comment line.
inline std::vector<TemplateSpec> load_templates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open templates " + path.string());
    std::vector<TemplateSpec> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        out.push_back(parse_template(sv, "tpl" + std::to_string(out.size())));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Instantiation

struct Instantiation {
    std::string query_text;
    std::string table_id;
    std::string template_id;
};

namespace tpl_detail {

struct Bindings {
    std::map<std::string, size_t> columns;    // placeholder -> column index
    std::map<std::string, Literal> literals;  // placeholder -> bound literal
};

inline void substitute_column(ColumnRef& ref, const Bindings& b, const Table& table) {
    const auto it = b.columns.find(ref.name);
    if (it == b.columns.end()) return;
    ref.name = table.headers[it->second];
    ref.quoted = true;
}

inline void substitute_operand(Operand& op, const Bindings& b, const Table& table) {
    if (auto* c = std::get_if<ColumnRef>(&op)) {
        const auto lit = b.literals.find(c->name);
        if (lit != b.literals.end()) {
            op = lit->second;
            return;
        }
        substitute_column(*c, b, table);
        return;
    }
    if (auto* a = std::get_if<AggTerm>(&op)) substitute_column(a->column, b, table);
}

inline void substitute_pred(BoolExpr& e, const Bindings& b, const Table& table) {
    if (e.lhs) substitute_operand(*e.lhs, b, table);
    if (e.rhs) substitute_operand(*e.rhs, b, table);
    for (auto& item : e.items) substitute_operand(item, b, table);
    for (auto& ch : e.children) substitute_pred(ch, b, table);
}

inline void substitute_core(SelectCore& core, const Bindings& b, const Table& table) {
    for (auto& it : core.items)
        if (it.kind == SelectItem::column) substitute_column(it.col, b, table);
    if (core.where) substitute_pred(*core.where, b, table);
    for (auto& g : core.group_by) substitute_column(g, b, table);
    if (core.having) substitute_pred(*core.having, b, table);
}

inline Literal cell_to_literal(const Cell& cell, ColumnKind kind) {
    if (kind == ColumnKind::number) {
        const std::string spelling(trim(cell.raw));
        return Literal{Literal::number, spelling, cell.value, cell.integral};
    }
    return Literal{Literal::string, cell.raw, 0.0, true};
}

}  // namespace tpl_detail

// Binds every placeholder against the given table, or returns nothing when
// the table cannot satisfy the template (no column of the right kind, no
// distinct cells left, and so on). Same rng state plus same inputs always
// yields the same instantiation.
inline std::optional<Instantiation> instantiate(const TemplateSpec& tpl, const Table& table,
                                                const std::vector<ColumnKind>& kinds,
                                                Rng& rng) {
    using namespace tpl_detail;
    Bindings bind;
    std::vector<bool> used(table.width(), false);

    for (const auto& name : tpl.discovery_order) {
        const PlaceholderKind kind = tpl.kinds.at(name);
        if (kind != PlaceholderKind::column_any && kind != PlaceholderKind::column_numeric &&
            kind != PlaceholderKind::column_text)
            continue;
        std::vector<size_t> candidates;
        for (size_t c = 0; c < table.width(); ++c) {
            if (used[c]) continue;
            if (kind == PlaceholderKind::column_numeric && kinds[c] != ColumnKind::number)
                continue;
            if (kind == PlaceholderKind::column_text && kinds[c] != ColumnKind::text) continue;
            candidates.push_back(c);
        }
        if (candidates.empty()) return std::nullopt;
        const size_t pick = candidates[rng.index(candidates.size())];
        used[pick] = true;
        bind.columns.emplace(name, pick);
    }

    // Literal placeholders, grouped per predicate leaf so in-lists draw
    // distinct values and between bounds come out ordered.
    std::map<size_t, std::vector<std::string>> by_leaf;
    for (const auto& name : tpl.discovery_order)
        if (tpl.leaf_of.count(name)) by_leaf[tpl.leaf_of.at(name)].push_back(name);

    for (auto& [leaf, names] : by_leaf) {
        const AssocTarget& target = tpl.assoc.at(names.front());
        if (target.kind == AssocTarget::count_rows) {
            for (const auto& name : names) {
                const uint64_t n = rng.bounded(table.height() + 1);
                bind.literals.emplace(
                    name, Literal{Literal::number, std::to_string(n),
                                  static_cast<double>(n), true});
            }
            continue;
        }
        size_t col = 0;
        const auto bound = bind.columns.find(target.source);
        if (bound != bind.columns.end()) {
            col = bound->second;
        } else {
            const int idx = find_header(table, target.source);
            if (idx < 0) return std::nullopt;
            col = static_cast<size_t>(idx);
        }

        std::vector<const Cell*> pool;
        std::unordered_set<std::string> seen_raw;
        for (const Row& r : table.rows) {
            const Cell& cell = r[col];
            if (cell.kind == CellKind::empty) continue;
            if (seen_raw.insert(cell.raw).second) pool.push_back(&cell);
        }

        std::vector<Literal> sampled;
        for (const auto& name : names) {
            const bool pattern = tpl.pattern_placeholders.count(name) > 0;
            const bool numeric_ph = tpl.kinds.at(name) == PlaceholderKind::numeric_literal;
            if (pattern && kinds[col] != ColumnKind::text) return std::nullopt;
            if (numeric_ph && kinds[col] != ColumnKind::number) return std::nullopt;
            if (pool.empty()) return std::nullopt;
            const size_t pick = rng.index(pool.size());
            const Cell* cell = pool[pick];
            pool.erase(pool.begin() + static_cast<long>(pick));
            if (pattern) {
                const size_t cps = utf8_length(cell->raw);
                const std::string prefix = utf8_prefix(cell->raw, (cps + 1) / 2);
                sampled.push_back(Literal{Literal::string, prefix + "%", 0.0, true});
            } else {
                sampled.push_back(cell_to_literal(*cell, kinds[col]));
            }
        }
        if (tpl.ordered_pairs.count(leaf) && sampled.size() == 2 &&
            sampled[0].value > sampled[1].value)
            std::swap(sampled[0], sampled[1]);
        for (size_t i = 0; i < names.size(); ++i)
            bind.literals.emplace(names[i], std::move(sampled[i]));
    }

    QueryAst ast = tpl.ast;
    substitute_core(ast.core, bind, table);
    for (auto& part : ast.compounds) substitute_core(part.core, bind, table);
    for (auto& o : ast.order_by) substitute_operand(o.expr, bind, table);

    Instantiation inst;
    inst.query_text = ast_to_canonical(ast);
    inst.table_id = table.id;
    inst.template_id = tpl.id;
    return inst;
}

inline std::optional<Instantiation> instantiate(const TemplateSpec& tpl, const Table& table,
                                                Rng& rng) {
    return instantiate(tpl, table, column_kinds(table), rng);
}

// ---------------------------------------------------------------------------
// Batch generation

struct BatchOptions {
    size_t quota = 0;          // 0 means run until every pair retires
    uint64_t seed = 0;
    unsigned threads = 1;
    size_t retire_after = 64;  // consecutive misses before a pair stops
    size_t round_block = 8;
};

// Round-robin over rounds x tables x templates with per-pair retirement and
// per-table dedup on query text. Work is seeded per (table, template, round),
// so the output is one fixed sequence regardless of thread count, truncated
// at the quota.
inline std::vector<Instantiation> generate_batch(const std::vector<TemplateSpec>& templates,
                                                 const std::vector<Table>& tables,
                                                 const BatchOptions& opts) {
    struct PairState {
        size_t miss = 0;
        bool retired = false;
    };
    struct TableGen {
        std::vector<ColumnKind> kinds;
        std::unordered_set<std::string> seen;
        std::vector<PairState> pairs;
        size_t alive = 0;
    };
    std::vector<TableGen> state(tables.size());
    for (size_t ti = 0; ti < tables.size(); ++ti) {
        state[ti].kinds = column_kinds(tables[ti]);
        state[ti].pairs.resize(templates.size());
        state[ti].alive = templates.size();
    }

    std::vector<Instantiation> accepted;
    size_t round = 0;
    size_t alive_total = tables.size() * templates.size();
    while (alive_total > 0 && (opts.quota == 0 || accepted.size() < opts.quota)) {
        const size_t block = opts.round_block;
        // block_out[ti][r] holds table ti's accepted items for round+r.
        std::vector<std::vector<std::vector<Instantiation>>> block_out(tables.size());
        parallel_for(tables.size(), opts.threads, [&](size_t ti) {
            TableGen& tg = state[ti];
            block_out[ti].resize(block);
            if (tg.alive == 0) return;
            for (size_t r = 0; r < block; ++r) {
                for (size_t pi = 0; pi < templates.size(); ++pi) {
                    PairState& ps = tg.pairs[pi];
                    if (ps.retired) continue;
                    Rng rng(derive_seed(opts.seed, tables[ti].id, templates[pi].id,
                                        round + r));
                    auto inst = instantiate(templates[pi], tables[ti], tg.kinds, rng);
                    const bool fresh =
                        inst && tg.seen.insert(inst->query_text).second;
                    if (!fresh) {
                        if (++ps.miss >= opts.retire_after) {
                            ps.retired = true;
                            --tg.alive;
                        }
                        continue;
                    }
                    ps.miss = 0;
                    block_out[ti][r].push_back(std::move(*inst));
                }
            }
        });
        for (size_t r = 0; r < block; ++r)
            for (size_t ti = 0; ti < tables.size(); ++ti)
                for (auto& inst : block_out[ti][r]) {
                    if (opts.quota != 0 && accepted.size() >= opts.quota) break;
                    accepted.push_back(std::move(inst));
                }
        alive_total = 0;
        for (const auto& tg : state) alive_total += tg.alive;
        round += block;
    }
    return accepted;
}

}  // namespace tabqa
