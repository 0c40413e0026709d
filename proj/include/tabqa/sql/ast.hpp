#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tabqa {

enum class AggFn { none, count, sum, avg, min, max };

inline const char* agg_name(AggFn fn) {
    switch (fn) {
        case AggFn::count: return "count";
        case AggFn::sum: return "sum";
        case AggFn::avg: return "avg";
        case AggFn::min: return "min";
        case AggFn::max: return "max";
        default: return "";
    }
}

struct ColumnRef {
    std::string name;
    bool quoted = false;  // written with backticks in the source text

    bool operator==(const ColumnRef& o) const { return name == o.name; }
};

struct Literal {
    enum Kind { number, string } kind = string;
    std::string text;  // verbatim spelling, without quotes
    double value = 0.0;
    bool integral = true;

    bool operator==(const Literal& o) const { return kind == o.kind && text == o.text; }
};

// count(*) is AggTerm{count, star=true}.
struct AggTerm {
    AggFn fn = AggFn::count;
    bool star = false;
    ColumnRef column;

    bool operator==(const AggTerm& o) const {
        return fn == o.fn && star == o.star && (star || column == o.column);
    }
};

using Operand = std::variant<ColumnRef, Literal, AggTerm>;

enum class CmpOp { eq, ne, lt, le, gt, ge };

inline const char* cmp_text(CmpOp op) {
    switch (op) {
        case CmpOp::eq: return "=";
        case CmpOp::ne: return "!=";
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
    }
    return "=";
}

// Predicate tree. Leaves carry their operands inline; and/or/not use the
// children vector (not holds exactly one child).
struct BoolExpr {
    enum Kind { cmp, in_list, between, like, conj, disj, negation } kind = cmp;

    CmpOp op = CmpOp::eq;
    std::optional<Operand> lhs;
    std::optional<Operand> rhs;
    std::vector<Operand> items;  // in_list values, between {lo, hi}, like {pattern}
    bool negated = false;        // "not in", "not like"
    std::vector<BoolExpr> children;

    bool operator==(const BoolExpr& o) const = default;
};

struct SelectItem {
    enum Kind { column, literal, star } kind = column;
    AggFn agg = AggFn::none;  // wraps column or star
    ColumnRef col;
    Literal lit;

    bool operator==(const SelectItem& o) const {
        if (kind != o.kind || agg != o.agg) return false;
        switch (kind) {
            case column: return col == o.col;
            case literal: return lit == o.lit;
            case star: return true;
        }
        return false;
    }
};

struct OrderItem {
    Operand expr;  // ColumnRef or AggTerm
    bool desc = false;

    bool operator==(const OrderItem& o) const = default;
};

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::optional<std::string> table;  // absent once monolingualized
    std::optional<BoolExpr> where;
    std::vector<ColumnRef> group_by;
    std::optional<BoolExpr> having;

    bool operator==(const SelectCore& o) const = default;
};

enum class SetOp { union_distinct, union_all, intersect, except };

inline const char* setop_text(SetOp op) {
    switch (op) {
        case SetOp::union_distinct: return "union";
        case SetOp::union_all: return "union all";
        case SetOp::intersect: return "intersect";
        case SetOp::except: return "except";
    }
    return "union";
}

struct CompoundPart {
    SetOp op = SetOp::union_distinct;
    SelectCore core;

    bool operator==(const CompoundPart& o) const = default;
};

// A query is a first core plus zero or more set-operation parts, folded left
// to right, with order/limit applying to the combined result.
struct QueryAst {
    SelectCore core;
    std::vector<CompoundPart> compounds;
    std::vector<OrderItem> order_by;
    std::optional<long long> limit;
    std::string limit_text;  // verbatim spelling of the limit count, any script

    bool compound() const { return !compounds.empty(); }
    bool operator==(const QueryAst& o) const = default;
};

// True when the query needs grouped evaluation: an explicit group by, an
// aggregate select item, or a having clause.
inline bool has_aggregate(const SelectCore& core) {
    for (const auto& it : core.items)
        if (it.agg != AggFn::none) return true;
    return false;
}

inline bool grouped(const SelectCore& core) {
    return !core.group_by.empty() || core.having.has_value() || has_aggregate(core);
}

}  // namespace tabqa
