#pragma once

#include <string>
#include <vector>

#include "ast.hpp"
#include "lexer.hpp"

namespace tabqa {

struct ArityMismatch : SyntaxError {
    using SyntaxError::SyntaxError;
};

// Recursive-descent parser for the query subset:
//
//   query    := part (setop part)* [order by ...] [limit N]
//   part     := core | '(' core ')'
//   core     := select [distinct] items [from table] [where pred]
//               [group by cols] [having pred]
//   items    := '*' | item (',' item)*
//   item     := agg '(' '*' | column ')' | column | literal
//   pred     := disjunction of conjunctions of [not] leaves
//   leaf     := '(' pred ')' | operand (cmp operand | [not] in (lits)
//               | between lit and lit | [not] like lit)
//
// Keywords are matched case-insensitively on ASCII; anything inside
// backticks or double quotes is payload. Bare words that are not keywords
// act as column references, which is what lets raw templates parse under
// the same grammar before placeholders are bound.
class Parser {
  public:
    explicit Parser(std::string_view src) : toks_(lex_sql(src)) {}

    QueryAst parse_query() {
        QueryAst q;
        q.core = parse_part();
        while (auto op = peek_setop()) {
            consume_setop(*op);
            CompoundPart part;
            part.op = *op;
            part.core = parse_part();
            q.compounds.push_back(std::move(part));
        }
        if (is_kw("order")) {
            expect_kw("order");
            expect_kw("by");
            for (;;) {
                q.order_by.push_back(parse_order_item());
                if (!is_symbol(",")) break;
                ++pos_;
            }
        }
        if (is_kw("limit")) {
            ++pos_;
            const Token& t = cur();
            if (t.type != Token::number || !t.integral || t.value < 0)
                throw SyntaxError(t.pos, "limit expects a non-negative integer");
            q.limit = static_cast<long long>(t.value);
            q.limit_text = t.text;
            ++pos_;
        }
        if (cur().type != Token::end)
            throw SyntaxError(cur().pos, "unexpected trailing input '" + cur().text + "'");
        check_arity(q);
        return q;
    }

  private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    const Token& ahead(size_t k) const {
        const size_t i = pos_ + k;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }

    bool is_kw(std::string_view kw, size_t off = 0) const {
        const Token& t = ahead(off);
        return t.type == Token::word && ascii_iequals(t.text, kw);
    }
    void expect_kw(std::string_view kw) {
        if (!is_kw(kw))
            throw SyntaxError(cur().pos, "expected '" + std::string(kw) + "', found '" +
                                             cur().text + "'");
        ++pos_;
    }
    bool is_symbol(std::string_view s, size_t off = 0) const {
        const Token& t = ahead(off);
        return t.type == Token::symbol && t.text == s;
    }
    void expect_symbol(std::string_view s) {
        if (!is_symbol(s))
            throw SyntaxError(cur().pos,
                              "expected '" + std::string(s) + "', found '" + cur().text + "'");
        ++pos_;
    }

    static bool clause_boundary_word(std::string_view w) {
        for (const char* b : {"from", "where", "group", "having", "order", "limit", "union",
                              "intersect", "except", "and", "or", "asc", "desc", "between",
                              "in", "like", "not"})
            if (ascii_iequals(w, b)) return true;
        return false;
    }

    static AggFn agg_from_word(std::string_view w) {
        for (const AggFn fn : {AggFn::count, AggFn::sum, AggFn::avg, AggFn::min, AggFn::max})
            if (ascii_iequals(w, agg_name(fn))) return fn;
        return AggFn::none;
    }

    std::optional<SetOp> peek_setop() const {
        if (is_kw("union")) return is_kw("all", 1) ? SetOp::union_all : SetOp::union_distinct;
        if (is_kw("intersect")) return SetOp::intersect;
        if (is_kw("except")) return SetOp::except;
        return std::nullopt;
    }
    void consume_setop(SetOp op) {
        ++pos_;
        if (op == SetOp::union_all) ++pos_;
    }

    SelectCore parse_part() {
        if (is_symbol("(")) {
            ++pos_;
            SelectCore core = parse_core();
            expect_symbol(")");
            return core;
        }
        return parse_core();
    }

    SelectCore parse_core() {
        SelectCore core;
        expect_kw("select");
        if (is_kw("distinct")) {
            core.distinct = true;
            ++pos_;
        }
        for (;;) {
            core.items.push_back(parse_select_item());
            if (!is_symbol(",")) break;
            ++pos_;
        }
        if (is_kw("from")) {
            ++pos_;
            const Token& t = cur();
            if (t.type == Token::word && !clause_boundary_word(t.text)) {
                core.table = t.text;
                ++pos_;
            } else if (t.type == Token::quoted_ident) {
                core.table = t.text;
                ++pos_;
            } else {
                throw SyntaxError(t.pos, "expected table name after 'from'");
            }
        }
        if (is_kw("where")) {
            ++pos_;
            core.where = parse_pred(false);
        }
        if (is_kw("group")) {
            ++pos_;
            expect_kw("by");
            for (;;) {
                core.group_by.push_back(parse_column_ref());
                if (!is_symbol(",")) break;
                ++pos_;
            }
        }
        if (is_kw("having")) {
            ++pos_;
            core.having = parse_pred(true);
        }
        if (core.having && core.group_by.empty() && !has_aggregate(core))
            throw SyntaxError(cur().pos, "having requires group by or an aggregate select");
        return core;
    }

    ColumnRef parse_column_ref() {
        const Token& t = cur();
        if (t.type == Token::quoted_ident) {
            ++pos_;
            return ColumnRef{t.text, true};
        }
        if (t.type == Token::word && !clause_boundary_word(t.text)) {
            ++pos_;
            return ColumnRef{t.text, false};
        }
        throw SyntaxError(t.pos, "expected column, found '" + t.text + "'");
    }

    SelectItem parse_select_item() {
        SelectItem item;
        const Token& t = cur();
        if (is_symbol("*")) {
            ++pos_;
            item.kind = SelectItem::star;
            return item;
        }
        if (t.type == Token::word) {
            const AggFn fn = agg_from_word(t.text);
            if (fn != AggFn::none && is_symbol("(", 1)) {
                pos_ += 2;
                item.agg = fn;
                if (is_symbol("*")) {
                    if (fn != AggFn::count)
                        throw SyntaxError(cur().pos, "'*' only combines with count");
                    ++pos_;
                    item.kind = SelectItem::star;
                } else {
                    item.kind = SelectItem::column;
                    item.col = parse_column_ref();
                }
                expect_symbol(")");
                return item;
            }
        }
        if (t.type == Token::number || t.type == Token::string_lit) {
            item.kind = SelectItem::literal;
            item.lit = parse_literal();
            return item;
        }
        item.kind = SelectItem::column;
        item.col = parse_column_ref();
        return item;
    }

    Literal parse_literal() {
        const Token& t = cur();
        if (t.type == Token::number) {
            ++pos_;
            return Literal{Literal::number, t.text, t.value, t.integral};
        }
        if (t.type == Token::string_lit) {
            ++pos_;
            return Literal{Literal::string, t.text, 0.0, true};
        }
        throw SyntaxError(t.pos, "expected literal, found '" + t.text + "'");
    }

    // Aggregates are legal operands only in having and order clauses.
    Operand parse_operand(bool allow_agg) {
        const Token& t = cur();
        if (t.type == Token::word) {
            const AggFn fn = agg_from_word(t.text);
            if (fn != AggFn::none && is_symbol("(", 1)) {
                if (!allow_agg)
                    throw SyntaxError(t.pos, "aggregate not allowed in this clause");
                pos_ += 2;
                AggTerm agg;
                agg.fn = fn;
                if (is_symbol("*")) {
                    if (fn != AggFn::count)
                        throw SyntaxError(cur().pos, "'*' only combines with count");
                    agg.star = true;
                    ++pos_;
                } else {
                    agg.column = parse_column_ref();
                }
                expect_symbol(")");
                return agg;
            }
        }
        if (t.type == Token::number || t.type == Token::string_lit) return parse_literal();
        return parse_column_ref();
    }

    BoolExpr parse_pred(bool in_having) { return parse_disjunction(in_having); }

    BoolExpr parse_disjunction(bool in_having) {
        BoolExpr first = parse_conjunction(in_having);
        if (!is_kw("or")) return first;
        BoolExpr node;
        node.kind = BoolExpr::disj;
        append_flat(node, std::move(first), BoolExpr::disj);
        while (is_kw("or")) {
            ++pos_;
            append_flat(node, parse_conjunction(in_having), BoolExpr::disj);
        }
        return node;
    }

    BoolExpr parse_conjunction(bool in_having) {
        BoolExpr first = parse_negation(in_having);
        if (!is_kw("and")) return first;
        BoolExpr node;
        node.kind = BoolExpr::conj;
        append_flat(node, std::move(first), BoolExpr::conj);
        while (is_kw("and")) {
            ++pos_;
            append_flat(node, parse_negation(in_having), BoolExpr::conj);
        }
        return node;
    }

    // and/or are normalized to flat n-ary nodes so the canonical rendering
    // reparses to an equal tree regardless of original parenthesization.
    static void append_flat(BoolExpr& parent, BoolExpr child, BoolExpr::Kind kind) {
        if (child.kind == kind)
            for (auto& c : child.children) parent.children.push_back(std::move(c));
        else
            parent.children.push_back(std::move(child));
    }

    BoolExpr parse_negation(bool in_having) {
        // "not" followed by "in"/"like" belongs to the leaf, not here.
        if (is_kw("not") && !is_kw("in", 1) && !is_kw("like", 1)) {
            ++pos_;
            BoolExpr node;
            node.kind = BoolExpr::negation;
            node.children.push_back(parse_negation(in_having));
            return node;
        }
        return parse_leaf(in_having);
    }

    BoolExpr parse_leaf(bool in_having) {
        if (is_symbol("(")) {
            ++pos_;
            BoolExpr inner = parse_pred(in_having);
            expect_symbol(")");
            return inner;
        }
        BoolExpr node;
        node.lhs = parse_operand(in_having);
        bool negated = false;
        if (is_kw("not")) {
            if (!is_kw("in", 1) && !is_kw("like", 1))
                throw SyntaxError(cur().pos, "expected 'in' or 'like' after 'not'");
            negated = true;
            ++pos_;
        }
        if (is_kw("in")) {
            ++pos_;
            node.kind = BoolExpr::in_list;
            node.negated = negated;
            expect_symbol("(");
            for (;;) {
                node.items.push_back(parse_operand(in_having));
                if (!is_symbol(",")) break;
                ++pos_;
            }
            expect_symbol(")");
            return node;
        }
        if (is_kw("like")) {
            ++pos_;
            node.kind = BoolExpr::like;
            node.negated = negated;
            node.items.push_back(parse_operand(in_having));
            return node;
        }
        if (negated) throw SyntaxError(cur().pos, "expected 'in' or 'like' after 'not'");
        if (is_kw("between")) {
            ++pos_;
            node.kind = BoolExpr::between;
            node.items.push_back(parse_operand(in_having));
            expect_kw("and");
            node.items.push_back(parse_operand(in_having));
            return node;
        }
        node.kind = BoolExpr::cmp;
        const Token& t = cur();
        if (t.type != Token::symbol)
            throw SyntaxError(t.pos, "expected comparison, found '" + t.text + "'");
        if (t.text == "=")
            node.op = CmpOp::eq;
        else if (t.text == "!=" || t.text == "<>")
            node.op = CmpOp::ne;
        else if (t.text == "<")
            node.op = CmpOp::lt;
        else if (t.text == "<=")
            node.op = CmpOp::le;
        else if (t.text == ">")
            node.op = CmpOp::gt;
        else if (t.text == ">=")
            node.op = CmpOp::ge;
        else
            throw SyntaxError(t.pos, "expected comparison, found '" + t.text + "'");
        ++pos_;
        node.rhs = parse_operand(in_having);
        return node;
    }

    OrderItem parse_order_item() {
        OrderItem item;
        item.expr = parse_operand(true);
        if (std::holds_alternative<Literal>(item.expr))
            throw SyntaxError(cur().pos, "order by expects a column or aggregate");
        if (is_kw("asc")) {
            ++pos_;
        } else if (is_kw("desc")) {
            item.desc = true;
            ++pos_;
        }
        return item;
    }

    // Bare star selects are rejected inside compounds so operand arity is
    // always known up front; an aggregate over the star is a single column
    // and stays legal.
    void check_arity(const QueryAst& q) const {
        if (q.compounds.empty()) return;
        auto arity = [](const SelectCore& core) -> size_t {
            for (const auto& it : core.items)
                if (it.kind == SelectItem::star && it.agg == AggFn::none)
                    throw ArityMismatch(0, "'*' select not allowed in a compound query");
            return core.items.size();
        };
        const size_t first = arity(q.core);
        for (const auto& part : q.compounds)
            if (arity(part.core) != first)
                throw ArityMismatch(0, "compound parts select " + std::to_string(first) +
                                           " vs " + std::to_string(arity(part.core)) +
                                           " columns");
    }
};

inline QueryAst parse_sql(std::string_view src) { return Parser(src).parse_query(); }

}  // namespace tabqa
