#pragma once

#include <algorithm>
#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexicon.hpp"
#include "parallel.hpp"
#include "sql/parser.hpp"
#include "table.hpp"

namespace tabqa {

enum class ExecErrorKind { unknown_column, type_error, division_context };

struct ExecError {
    ExecErrorKind kind = ExecErrorKind::type_error;
    std::string message;
};

// An execution either yields an answer table or a typed error; errors are
// data for the first quality gate, not exceptions.
struct ExecResult {
    std::optional<Table> answer;
    std::optional<ExecError> error;

    bool ok() const { return answer.has_value(); }
};

namespace exec_detail {

struct Fail {
    ExecError err;
};

[[noreturn]] inline void fail_unknown(const std::string& name) {
    throw Fail{{ExecErrorKind::unknown_column, "unknown column `" + name + "`"}};
}
[[noreturn]] inline void fail_type(std::string msg) {
    throw Fail{{ExecErrorKind::type_error, std::move(msg)}};
}

// Value classes mirror a reference engine's storage classes: null sorts
// below every number, every number below every text, text compares as raw
// bytes. Cells take the class of their column, not their own spelling, so a
// lone "42" inside a text column stays text.
struct TypedVal {
    enum Cls { null_v = 0, num_v = 1, text_v = 2 } cls = null_v;
    double num = 0.0;
    std::string_view text;
};

inline TypedVal typed_num(double v) { return {TypedVal::num_v, v, {}}; }
inline TypedVal typed_text(std::string_view s) { return {TypedVal::text_v, 0.0, s}; }

inline TypedVal typed_cell(const Cell& c, ColumnKind kind) {
    if (c.kind == CellKind::empty) return {};
    if (kind == ColumnKind::number) return typed_num(c.value);
    return typed_text(c.raw);
}

// Null equals null here; predicate evaluation handles the three-valued case
// before ever calling this.
inline int cmp_typed(const TypedVal& a, const TypedVal& b) {
    if (a.cls != b.cls) return a.cls < b.cls ? -1 : 1;
    if (a.cls == TypedVal::num_v) return a.num < b.num ? -1 : (b.num < a.num ? 1 : 0);
    if (a.cls == TypedVal::text_v) {
        const int c = a.text.compare(b.text);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    return 0;
}

enum class Tri { f, t, u };

inline Tri tri_of(bool b) { return b ? Tri::t : Tri::f; }
inline Tri tri_not(Tri x) {
    return x == Tri::u ? Tri::u : (x == Tri::t ? Tri::f : Tri::t);
}
inline Tri tri_and(Tri a, Tri b) {
    if (a == Tri::f || b == Tri::f) return Tri::f;
    if (a == Tri::u || b == Tri::u) return Tri::u;
    return Tri::t;
}
inline Tri tri_or(Tri a, Tri b) {
    if (a == Tri::t || b == Tri::t) return Tri::t;
    if (a == Tri::u || b == Tri::u) return Tri::u;
    return Tri::f;
}

// SQL LIKE over codepoints: % spans any run, _ one codepoint, everything
// else matches exactly (case-sensitive).
inline bool like_match(std::string_view value, std::string_view pattern) {
    const auto vs = utf8_codepoints(value);
    const auto ps = utf8_codepoints(pattern);
    const size_t nv = vs.size(), np = ps.size();
    std::vector<uint8_t> prev(nv + 1), cur(nv + 1);
    prev[0] = 1;
    for (size_t j = 1; j <= nv; ++j) prev[j] = 0;
    for (size_t i = 1; i <= np; ++i) {
        const uint32_t pc = ps[i - 1];
        cur[0] = pc == '%' && prev[0];
        for (size_t j = 1; j <= nv; ++j) {
            if (pc == '%')
                cur[j] = cur[j - 1] || prev[j];
            else if (pc == '_')
                cur[j] = prev[j - 1];
            else
                cur[j] = prev[j - 1] && vs[j - 1] == pc;
        }
        std::swap(prev, cur);
    }
    return prev[nv];
}

struct OutputCol {
    std::string header;
    ColumnKind kind = ColumnKind::text;
};

struct Ctx {
    const Table& table;
    const KeywordLexicon& lex;
    std::vector<ColumnKind> kinds;

    explicit Ctx(const Table& t, const KeywordLexicon& l) : table(t), lex(l), kinds(column_kinds(t)) {}

    size_t col(const ColumnRef& ref) const {
        const int i = find_header(table, ref.name);
        if (i < 0) fail_unknown(ref.name);
        return static_cast<size_t>(i);
    }
};

// ---------------------------------------------------------------------------
// Aggregates

struct AggOut {
    bool is_null = false;
    bool numeric = false;      // count/sum/avg produce numbers
    double num = 0.0;
    bool integral = true;
    const Cell* cell = nullptr;  // min/max: the extremal source cell
    ColumnKind cell_kind = ColumnKind::text;
};

inline AggOut eval_agg(const AggTerm& agg, const std::vector<size_t>& rows, const Ctx& ctx) {
    AggOut out;
    if (agg.fn == AggFn::count) {
        out.numeric = true;
        if (agg.star) {
            out.num = static_cast<double>(rows.size());
            return out;
        }
        const size_t c = ctx.col(agg.column);
        size_t n = 0;
        for (const size_t r : rows)
            if (ctx.table.rows[r][c].kind != CellKind::empty) ++n;
        out.num = static_cast<double>(n);
        return out;
    }
    const size_t c = ctx.col(agg.column);
    const ColumnKind kind = ctx.kinds[c];
    if (agg.fn == AggFn::sum || agg.fn == AggFn::avg) {
        if (kind != ColumnKind::number)
            fail_type(std::string(agg_name(agg.fn)) + " over text column `" +
                      ctx.table.headers[c] + "`");
        out.numeric = true;
        double sum = 0.0;
        size_t n = 0;
        bool integral = true;
        for (const size_t r : rows) {
            const Cell& cell = ctx.table.rows[r][c];
            if (cell.kind == CellKind::empty) continue;
            sum += cell.value;
            integral = integral && cell.integral;
            ++n;
        }
        if (agg.fn == AggFn::avg) {
            if (n == 0)
                throw Fail{{ExecErrorKind::division_context,
                            "avg over zero rows of column `" + ctx.table.headers[c] + "`"}};
            out.num = sum / static_cast<double>(n);
            out.integral = false;
            return out;
        }
        if (n == 0) {
            out.is_null = true;
            return out;
        }
        out.num = sum;
        out.integral = integral;
        return out;
    }
    // min / max keep the extremal source cell verbatim.
    out.cell_kind = kind;
    const Cell* best = nullptr;
    for (const size_t r : rows) {
        const Cell& cell = ctx.table.rows[r][c];
        if (cell.kind == CellKind::empty) continue;
        if (!best) {
            best = &cell;
            continue;
        }
        const int cmp = cmp_typed(typed_cell(cell, kind), typed_cell(*best, kind));
        if ((agg.fn == AggFn::min && cmp < 0) || (agg.fn == AggFn::max && cmp > 0))
            best = &cell;
    }
    if (!best) {
        out.is_null = true;
        return out;
    }
    out.cell = best;
    return out;
}

inline TypedVal agg_typed(const AggOut& a) {
    if (a.is_null) return {};
    if (a.numeric) return typed_num(a.num);
    return typed_cell(*a.cell, a.cell_kind);
}

inline Cell agg_cell(const AggTerm& agg, const AggOut& a, const Ctx& ctx) {
    if (a.is_null) return make_cell("");
    if (agg.fn == AggFn::avg) return make_cell(ctx.lex.localize_digits(format_decimal2(a.num)));
    if (a.numeric) return make_cell(ctx.lex.localize_digits(format_number(a.num, a.integral)));
    return *a.cell;
}

inline ColumnKind agg_out_kind(const AggTerm& agg, const Ctx& ctx) {
    if (agg.fn == AggFn::min || agg.fn == AggFn::max) return ctx.kinds[ctx.col(agg.column)];
    return ColumnKind::number;
}

inline std::string agg_header(const AggTerm& agg, const Ctx& ctx) {
    std::string inner = "*";
    if (!agg.star) inner = "`" + detail::escape_backticks(ctx.table.headers[ctx.col(agg.column)]) + "`";
    return ctx.lex.local(agg_name(agg.fn)) + "(" + inner + ")";
}

// ---------------------------------------------------------------------------
// Predicates

// Group scope: predicate operands are aggregates, grouped columns or
// literals. Row scope: plain columns and literals.
struct Scope {
    const Ctx& ctx;
    const size_t* row = nullptr;                  // row scope
    const std::vector<size_t>* group = nullptr;   // group scope rows
    const std::vector<size_t>* group_cols = nullptr;  // resolved group-by columns
};

// Column operands carry their column's affinity; literals and aggregates
// have none.
enum class Affinity { none, numeric, text };

struct OperandVal {
    TypedVal val;
    Affinity affinity = Affinity::none;
    const Literal* lit = nullptr;
};

inline OperandVal eval_operand(const Operand& op, const Scope& s) {
    OperandVal out;
    if (const auto* c = std::get_if<ColumnRef>(&op)) {
        const size_t idx = s.ctx.col(*c);
        out.affinity =
            s.ctx.kinds[idx] == ColumnKind::number ? Affinity::numeric : Affinity::text;
        if (s.row) {
            out.val = typed_cell(s.ctx.table.rows[*s.row][idx], s.ctx.kinds[idx]);
            return out;
        }
        bool grouped_col = false;
        for (const size_t g : *s.group_cols) grouped_col = grouped_col || g == idx;
        if (!grouped_col)
            fail_type("column `" + s.ctx.table.headers[idx] + "` is not grouped");
        const Cell& cell = s.group->empty() ? Cell{} : s.ctx.table.rows[(*s.group)[0]][idx];
        out.val = typed_cell(cell, s.ctx.kinds[idx]);
        return out;
    }
    if (const auto* l = std::get_if<Literal>(&op)) {
        out.lit = l;
        if (l->kind == Literal::number)
            out.val = typed_num(l->value);
        else
            out.val = typed_text(l->text);
        return out;
    }
    const auto& agg = std::get<AggTerm>(op);
    if (s.row) fail_type("aggregate outside grouped evaluation");
    out.val = agg_typed(eval_agg(agg, *s.group, s.ctx));
    return out;
}

// Affinity transfer before a comparison: a text literal facing a
// numeric-affinity operand becomes a number when it parses as one, a numeric
// literal facing a text-affinity operand becomes its canonical rendering.
// Nothing moves when both sides carry an affinity of their own.
inline void apply_affinity(OperandVal& a, const OperandVal& b, std::string& scratch) {
    if (!a.lit || b.affinity == Affinity::none) return;
    if (b.affinity == Affinity::numeric && a.lit->kind == Literal::string) {
        if (const auto num = parse_number(a.val.text)) a.val = typed_num(num->value);
        return;
    }
    if (b.affinity == Affinity::text && a.lit->kind == Literal::number) {
        scratch = format_number(a.lit->value, a.lit->integral);
        a.val = typed_text(scratch);
    }
}

inline Tri tri_cmp(CmpOp op, const OperandVal& lhs, const OperandVal& rhs) {
    OperandVal a = lhs, b = rhs;
    std::string sa, sb;
    apply_affinity(a, b, sa);
    apply_affinity(b, a, sb);
    if (a.val.cls == TypedVal::null_v || b.val.cls == TypedVal::null_v) return Tri::u;
    const int c = cmp_typed(a.val, b.val);
    switch (op) {
        case CmpOp::eq: return tri_of(c == 0);
        case CmpOp::ne: return tri_of(c != 0);
        case CmpOp::lt: return tri_of(c < 0);
        case CmpOp::le: return tri_of(c <= 0);
        case CmpOp::gt: return tri_of(c > 0);
        case CmpOp::ge: return tri_of(c >= 0);
    }
    return Tri::u;
}

inline Tri eval_pred(const BoolExpr& e, const Scope& s) {
    switch (e.kind) {
        case BoolExpr::cmp:
            return tri_cmp(e.op, eval_operand(*e.lhs, s), eval_operand(*e.rhs, s));
        case BoolExpr::in_list: {
            const OperandVal lhs = eval_operand(*e.lhs, s);
            if (lhs.val.cls == TypedVal::null_v) return Tri::u;
            Tri any = Tri::f;
            for (const Operand& item : e.items)
                any = tri_or(any, tri_cmp(CmpOp::eq, lhs, eval_operand(item, s)));
            return e.negated ? tri_not(any) : any;
        }
        case BoolExpr::between: {
            const OperandVal lhs = eval_operand(*e.lhs, s);
            return tri_and(tri_cmp(CmpOp::ge, lhs, eval_operand(e.items[0], s)),
                           tri_cmp(CmpOp::le, lhs, eval_operand(e.items[1], s)));
        }
        case BoolExpr::like: {
            const OperandVal lhs = eval_operand(*e.lhs, s);
            const OperandVal pat = eval_operand(e.items[0], s);
            if (lhs.val.cls == TypedVal::null_v || pat.val.cls == TypedVal::null_v)
                return Tri::u;
            auto as_text = [](const TypedVal& v) {
                if (v.cls == TypedVal::num_v)
                    return format_number(v.num, v.num == static_cast<double>(
                                                            static_cast<long long>(v.num)));
                return std::string(v.text);
            };
            const bool hit = like_match(as_text(lhs.val), as_text(pat.val));
            return tri_of(e.negated ? !hit : hit);
        }
        case BoolExpr::conj: {
            Tri acc = Tri::t;
            for (const auto& ch : e.children) acc = tri_and(acc, eval_pred(ch, s));
            return acc;
        }
        case BoolExpr::disj: {
            Tri acc = Tri::f;
            for (const auto& ch : e.children) acc = tri_or(acc, eval_pred(ch, s));
            return acc;
        }
        case BoolExpr::negation:
            return tri_not(eval_pred(e.children[0], s));
    }
    return Tri::u;
}

// ---------------------------------------------------------------------------
// Core evaluation

struct CoreOutput {
    std::vector<OutputCol> cols;
    std::vector<Row> rows;
    std::vector<std::vector<TypedVal>> order_keys;  // parallel to rows when requested
};

inline void append_typed_key(std::string& key, const TypedVal& v) {
    key.push_back(static_cast<char>(v.cls));
    if (v.cls == TypedVal::num_v) {
        const double d = v.num == 0.0 ? 0.0 : v.num;  // collapse -0
        char buf[8];
        std::memcpy(buf, &d, 8);
        key.append(buf, 8);
    } else if (v.cls == TypedVal::text_v) {
        const uint32_t n = static_cast<uint32_t>(v.text.size());
        char buf[4];
        std::memcpy(buf, &n, 4);
        key.append(buf, 4);
        key.append(v.text);
    }
}

inline std::string encode_key(const Row& row, const std::vector<OutputCol>& cols) {
    std::string key;
    key.reserve(row.size() * 10);
    for (size_t j = 0; j < row.size(); ++j) append_typed_key(key, typed_cell(row[j], cols[j].kind));
    return key;
}

inline CoreOutput exec_core(const SelectCore& core, const std::vector<OrderItem>& order,
                            const Ctx& ctx) {
    CoreOutput out;
    const bool want_keys = !order.empty();

    // Filter.
    std::vector<size_t> kept;
    kept.reserve(ctx.table.rows.size());
    for (size_t r = 0; r < ctx.table.rows.size(); ++r) {
        if (core.where) {
            Scope s{ctx, &r, nullptr, nullptr};
            if (eval_pred(*core.where, s) != Tri::t) continue;
        }
        kept.push_back(r);
    }

    const bool group_mode = grouped(core);

    // Output schema.
    std::vector<int> item_cols(core.items.size(), -1);
    for (size_t i = 0; i < core.items.size(); ++i) {
        const SelectItem& it = core.items[i];
        if (it.agg != AggFn::none) {
            AggTerm agg{it.agg, it.kind == SelectItem::star, it.col};
            out.cols.push_back({agg_header(agg, ctx), agg_out_kind(agg, ctx)});
        } else if (it.kind == SelectItem::star) {
            if (group_mode) fail_type("cannot select '*' in a grouped query");
            for (size_t c = 0; c < ctx.table.width(); ++c)
                out.cols.push_back({ctx.table.headers[c], ctx.kinds[c]});
        } else if (it.kind == SelectItem::literal) {
            out.cols.push_back({it.lit.text, it.lit.kind == Literal::number
                                                 ? ColumnKind::number
                                                 : ColumnKind::text});
        } else {
            const size_t c = ctx.col(it.col);
            item_cols[i] = static_cast<int>(c);
            out.cols.push_back({ctx.table.headers[c], ctx.kinds[c]});
        }
    }

    std::vector<size_t> group_cols;
    for (const auto& g : core.group_by) group_cols.push_back(ctx.col(g));

    if (group_mode) {
        for (size_t i = 0; i < core.items.size(); ++i) {
            const SelectItem& it = core.items[i];
            if (it.agg != AggFn::none || it.kind != SelectItem::column) continue;
            const size_t c = static_cast<size_t>(item_cols[i]);
            bool ok = false;
            for (const size_t g : group_cols) ok = ok || g == c;
            if (!ok)
                fail_type("column `" + ctx.table.headers[c] +
                          "` must appear in group by to be selected");
        }
    } else {
        for (const auto& o : order)
            if (std::holds_alternative<AggTerm>(o.expr))
                fail_type("aggregate order key without grouping");
    }

    // Group formation: explicit keys, or one whole-table group for bare
    // aggregate queries. Encounter order is kept.
    std::vector<std::vector<size_t>> groups;
    if (group_mode) {
        if (group_cols.empty()) {
            groups.push_back(kept);
        } else {
            std::unordered_map<std::string, size_t> seen;
            for (const size_t r : kept) {
                std::string key;
                for (const size_t c : group_cols)
                    append_typed_key(key, typed_cell(ctx.table.rows[r][c], ctx.kinds[c]));
                const auto [it, inserted] = seen.emplace(std::move(key), groups.size());
                if (inserted) groups.emplace_back();
                groups[it->second].push_back(r);
            }
        }
        if (core.having) {
            std::vector<std::vector<size_t>> filtered;
            for (auto& g : groups) {
                Scope s{ctx, nullptr, &g, &group_cols};
                if (eval_pred(*core.having, s) == Tri::t) filtered.push_back(std::move(g));
            }
            groups = std::move(filtered);
        }
    }

    // Order-key builders share operand resolution with projection.
    auto order_key_for_group = [&](const std::vector<size_t>& g) {
        std::vector<TypedVal> keys;
        for (const auto& o : order) {
            if (const auto* agg = std::get_if<AggTerm>(&o.expr)) {
                keys.push_back(agg_typed(eval_agg(*agg, g, ctx)));
                continue;
            }
            const auto& colref = std::get<ColumnRef>(o.expr);
            const size_t c = ctx.col(colref);
            bool grouped_col = false;
            for (const size_t gc : group_cols) grouped_col = grouped_col || gc == c;
            if (!grouped_col)
                fail_type("order by column `" + ctx.table.headers[c] + "` is not grouped");
            keys.push_back(g.empty() ? TypedVal{}
                                     : typed_cell(ctx.table.rows[g[0]][c], ctx.kinds[c]));
        }
        return keys;
    };
    auto order_key_for_row = [&](size_t r) {
        std::vector<TypedVal> keys;
        for (const auto& o : order) {
            const auto& colref = std::get<ColumnRef>(o.expr);
            const size_t c = ctx.col(colref);
            if (core.distinct) {
                bool selected = false;
                for (size_t i = 0; i < core.items.size(); ++i)
                    selected = selected || item_cols[i] == static_cast<int>(c);
                if (!selected)
                    fail_type("order by column `" + ctx.table.headers[c] +
                              "` must be selected under distinct");
            }
            keys.push_back(typed_cell(ctx.table.rows[r][c], ctx.kinds[c]));
        }
        return keys;
    };

    // Projection.
    auto project_group = [&](const std::vector<size_t>& g) {
        Row row;
        row.reserve(out.cols.size());
        for (const auto& it : core.items) {
            if (it.agg != AggFn::none) {
                AggTerm agg{it.agg, it.kind == SelectItem::star, it.col};
                row.push_back(agg_cell(agg, eval_agg(agg, g, ctx), ctx));
            } else if (it.kind == SelectItem::literal) {
                row.push_back(make_cell(it.lit.text));
            } else {
                const size_t c = ctx.col(it.col);
                row.push_back(g.empty() ? make_cell("") : ctx.table.rows[g[0]][c]);
            }
        }
        return row;
    };

    if (group_mode) {
        out.rows.reserve(groups.size());
        for (const auto& g : groups) {
            out.rows.push_back(project_group(g));
            if (want_keys) out.order_keys.push_back(order_key_for_group(g));
        }
    } else {
        out.rows.reserve(kept.size());
        for (const size_t r : kept) {
            Row row;
            row.reserve(out.cols.size());
            for (size_t i = 0; i < core.items.size(); ++i) {
                const SelectItem& it = core.items[i];
                if (it.kind == SelectItem::star) {
                    for (const Cell& c : ctx.table.rows[r]) row.push_back(c);
                } else if (it.kind == SelectItem::literal) {
                    row.push_back(make_cell(it.lit.text));
                } else {
                    row.push_back(ctx.table.rows[r][static_cast<size_t>(item_cols[i])]);
                }
            }
            out.rows.push_back(std::move(row));
            if (want_keys) out.order_keys.push_back(order_key_for_row(r));
        }
    }

    if (core.distinct) {
        std::unordered_set<std::string> seen;
        std::vector<Row> rows;
        std::vector<std::vector<TypedVal>> keys;
        for (size_t i = 0; i < out.rows.size(); ++i) {
            if (!seen.insert(encode_key(out.rows[i], out.cols)).second) continue;
            rows.push_back(std::move(out.rows[i]));
            if (want_keys) keys.push_back(std::move(out.order_keys[i]));
        }
        out.rows = std::move(rows);
        out.order_keys = std::move(keys);
    }
    return out;
}

}  // namespace exec_detail

// Evaluates a parsed query against one table. The from clause, when present,
// is not resolved against anything: the table travels with the call. Answer
// headers localize aggregate names through the lexicon; count/sum/avg values
// are written in the lexicon's digits, min/max return the extremal cell
// verbatim.
inline ExecResult execute(const QueryAst& q, const Table& table,
                          const KeywordLexicon& lex = english_lexicon()) {
    using namespace exec_detail;
    ExecResult result;
    try {
        Ctx ctx(table, lex);
        CoreOutput first = exec_core(q.core, q.compound() ? std::vector<OrderItem>{} : q.order_by, ctx);

        std::vector<Row> rows;
        std::vector<std::vector<TypedVal>> keys;
        std::vector<const std::vector<OutputCol>*> owner;
        std::vector<CoreOutput> parts;

        if (!q.compound()) {
            rows = std::move(first.rows);
            keys = std::move(first.order_keys);
        } else {
            parts.reserve(q.compounds.size() + 1);
            parts.push_back(std::move(first));
            for (const auto& part : q.compounds) parts.push_back(exec_core(part.core, {}, ctx));
            for (size_t p = 1; p < parts.size(); ++p)
                if (parts[p].cols.size() != parts[0].cols.size())
                    fail_type("compound parts disagree on column count");

            // Left fold; every row remembers which part's schema types it.
            rows = std::move(parts[0].rows);
            owner.assign(rows.size(), &parts[0].cols);
            for (size_t p = 1; p < parts.size(); ++p) {
                const SetOp op = q.compounds[p - 1].op;
                std::vector<Row>& rhs_rows = parts[p].rows;
                if (op == SetOp::union_all) {
                    for (auto& r : rhs_rows) {
                        rows.push_back(std::move(r));
                        owner.push_back(&parts[p].cols);
                    }
                    continue;
                }
                if (op == SetOp::union_distinct) {
                    std::unordered_set<std::string> seen;
                    std::vector<Row> merged;
                    std::vector<const std::vector<OutputCol>*> merged_owner;
                    for (size_t i = 0; i < rows.size(); ++i)
                        if (seen.insert(encode_key(rows[i], *owner[i])).second) {
                            merged.push_back(std::move(rows[i]));
                            merged_owner.push_back(owner[i]);
                        }
                    for (auto& r : rhs_rows)
                        if (seen.insert(encode_key(r, parts[p].cols)).second) {
                            merged.push_back(std::move(r));
                            merged_owner.push_back(&parts[p].cols);
                        }
                    rows = std::move(merged);
                    owner = std::move(merged_owner);
                    continue;
                }
                std::unordered_set<std::string> rhs_keys;
                for (const auto& r : rhs_rows) rhs_keys.insert(encode_key(r, parts[p].cols));
                std::unordered_set<std::string> emitted;
                std::vector<Row> merged;
                std::vector<const std::vector<OutputCol>*> merged_owner;
                for (size_t i = 0; i < rows.size(); ++i) {
                    std::string key = encode_key(rows[i], *owner[i]);
                    const bool in_rhs = rhs_keys.count(key) > 0;
                    if (op == SetOp::intersect ? !in_rhs : in_rhs) continue;
                    if (!emitted.insert(std::move(key)).second) continue;
                    merged.push_back(std::move(rows[i]));
                    merged_owner.push_back(owner[i]);
                }
                rows = std::move(merged);
                owner = std::move(merged_owner);
            }

            if (!q.order_by.empty()) {
                // Order keys name output columns of the first part.
                std::vector<size_t> key_cols;
                for (const auto& o : q.order_by) {
                    const auto* colref = std::get_if<ColumnRef>(&o.expr);
                    if (!colref) fail_type("compound order keys must be output columns");
                    const std::string want = collapse_ws(colref->name);
                    int found = -1;
                    for (size_t c = 0; c < parts[0].cols.size(); ++c)
                        if (collapse_ws(parts[0].cols[c].header) == want)
                            found = static_cast<int>(c);
                    if (found < 0)
                        fail_type("order by column `" + colref->name +
                                  "` is not an output column");
                    key_cols.push_back(static_cast<size_t>(found));
                }
                keys.resize(rows.size());
                for (size_t i = 0; i < rows.size(); ++i)
                    for (const size_t c : key_cols)
                        keys[i].push_back(typed_cell(rows[i][c], (*owner[i])[c].kind));
            }
        }

        if (!q.order_by.empty()) {
            std::vector<size_t> idx(rows.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
                for (size_t k = 0; k < q.order_by.size(); ++k) {
                    const int c = cmp_typed(keys[a][k], keys[b][k]);
                    if (c != 0) return q.order_by[k].desc ? c > 0 : c < 0;
                }
                return false;
            });
            std::vector<Row> sorted;
            sorted.reserve(rows.size());
            for (const size_t i : idx) sorted.push_back(std::move(rows[i]));
            rows = std::move(sorted);
        }

        if (q.limit && rows.size() > static_cast<size_t>(*q.limit))
            rows.resize(static_cast<size_t>(*q.limit));

        Table answer;
        answer.language = lex.language;
        const auto& cols = q.compound() ? parts[0].cols : first.cols;
        answer.headers.reserve(cols.size());
        for (const auto& c : cols) answer.headers.push_back(c.header);
        answer.rows = std::move(rows);
        result.answer = std::move(answer);
    } catch (const exec_detail::Fail& f) {
        result.error = f.err;
    }
    return result;
}

inline ExecResult execute(std::string_view query_text, const Table& table,
                          const KeywordLexicon& lex = english_lexicon()) {
    return execute(parse_sql(query_text), table, lex);
}

// Batch evaluation with deterministic output order: slot i always holds the
// result of queries[i] no matter how work was scheduled.
inline std::vector<ExecResult> execute_batch(
    const std::vector<std::pair<const QueryAst*, const Table*>>& queries,
    const KeywordLexicon& lex = english_lexicon(), unsigned threads = 1) {
    std::vector<ExecResult> results(queries.size());
    parallel_for(queries.size(), threads, [&](size_t i) {
        results[i] = execute(*queries[i].first, *queries[i].second, lex);
    });
    return results;
}

}  // namespace tabqa
