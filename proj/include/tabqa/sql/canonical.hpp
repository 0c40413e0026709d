#pragma once

#include <functional>
#include <string>

#include "ast.hpp"
#include "lexer.hpp"

namespace tabqa {

// One serializer covers canonical text, template re-emission and the
// monolingual rendering: the keyword hook decides the surface form of each
// of the grammar's keywords (multi-word ones like "group by" are looked up
// as a unit), identifiers and literals always pass through verbatim.
struct RenderOptions {
    std::function<std::string(std::string_view)> keyword;  // identity when unset
    bool include_from = true;
    bool parenthesize_compounds = true;
};

namespace detail {

inline std::string escape_backticks(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        if (c == '`') out.push_back('`');
        out.push_back(c);
    }
    return out;
}

inline std::string escape_dquotes(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out;
}

// A table name can stay bare only if the lexer would hand it back as one
// word token.
inline bool bare_word_safe(std::string_view name) {
    if (name.empty() || parse_number(name)) return false;
    try {
        const auto toks = lex_sql(name);
        return toks.size() == 2 && toks[0].type == Token::word && toks[0].text == name;
    } catch (const SyntaxError&) {
        return false;
    }
}

class Renderer {
  public:
    explicit Renderer(const RenderOptions& opts) : opts_(opts) {}

    std::string query(const QueryAst& q) const {
        std::string out;
        const bool parens = opts_.parenthesize_compounds && q.compound();
        out += wrap(core(q.core), parens);
        for (const auto& part : q.compounds) {
            out += " " + kw(setop_text(part.op)) + " ";
            out += wrap(core(part.core), parens);
        }
        if (!q.order_by.empty()) {
            out += " " + kw("order by");
            for (size_t i = 0; i < q.order_by.size(); ++i) {
                out += i ? ", " : " ";
                out += operand(q.order_by[i].expr);
                if (q.order_by[i].desc) out += " " + kw("desc");
            }
        }
        if (q.limit) {
            out += " " + kw("limit") + " ";
            out += q.limit_text.empty() ? std::to_string(*q.limit) : q.limit_text;
        }
        return out;
    }

    std::string core(const SelectCore& c) const {
        std::string out = kw("select");
        if (c.distinct) out += " " + kw("distinct");
        for (size_t i = 0; i < c.items.size(); ++i) {
            out += i ? ", " : " ";
            out += select_item(c.items[i]);
        }
        if (c.table && opts_.include_from) {
            out += " " + kw("from") + " ";
            out += bare_word_safe(*c.table) ? *c.table
                                            : "`" + escape_backticks(*c.table) + "`";
        }
        if (c.where) out += " " + kw("where") + " " + pred(*c.where);
        if (!c.group_by.empty()) {
            out += " " + kw("group by");
            for (size_t i = 0; i < c.group_by.size(); ++i) {
                out += i ? ", " : " ";
                out += column(c.group_by[i]);
            }
        }
        if (c.having) out += " " + kw("having") + " " + pred(*c.having);
        return out;
    }

  private:
    const RenderOptions& opts_;

    std::string kw(std::string_view english) const {
        return opts_.keyword ? opts_.keyword(english) : std::string(english);
    }

    static std::string column(const ColumnRef& c) {
        return "`" + escape_backticks(c.name) + "`";
    }

    static std::string literal(const Literal& l) {
        if (l.kind == Literal::number) return l.text;
        return "\"" + escape_dquotes(l.text) + "\"";
    }

    std::string agg(AggFn fn, bool star, const ColumnRef& col) const {
        return kw(agg_name(fn)) + "(" + (star ? "*" : column(col)) + ")";
    }

    std::string select_item(const SelectItem& it) const {
        if (it.agg != AggFn::none) return agg(it.agg, it.kind == SelectItem::star, it.col);
        switch (it.kind) {
            case SelectItem::star: return "*";
            case SelectItem::literal: return literal(it.lit);
            default: return column(it.col);
        }
    }

    std::string operand(const Operand& op) const {
        if (const auto* c = std::get_if<ColumnRef>(&op)) return column(*c);
        if (const auto* l = std::get_if<Literal>(&op)) return literal(*l);
        const auto& a = std::get<AggTerm>(op);
        return agg(a.fn, a.star, a.column);
    }

    std::string pred(const BoolExpr& e) const {
        switch (e.kind) {
            case BoolExpr::cmp:
                return operand(*e.lhs) + " " + cmp_text(e.op) + " " + operand(*e.rhs);
            case BoolExpr::in_list: {
                std::string out = operand(*e.lhs) + " " + kw(e.negated ? "not in" : "in") + " (";
                for (size_t i = 0; i < e.items.size(); ++i) {
                    if (i) out += ", ";
                    out += operand(e.items[i]);
                }
                return out + ")";
            }
            case BoolExpr::between:
                return operand(*e.lhs) + " " + kw("between") + " " + operand(e.items[0]) +
                       " " + kw("and") + " " + operand(e.items[1]);
            case BoolExpr::like:
                return operand(*e.lhs) + " " + kw(e.negated ? "not like" : "like") + " " +
                       operand(e.items[0]);
            case BoolExpr::conj: {
                std::string out;
                for (size_t i = 0; i < e.children.size(); ++i) {
                    if (i) out += " " + kw("and") + " ";
                    const BoolExpr& ch = e.children[i];
                    out += wrap(pred(ch), ch.kind == BoolExpr::disj);
                }
                return out;
            }
            case BoolExpr::disj: {
                std::string out;
                for (size_t i = 0; i < e.children.size(); ++i) {
                    if (i) out += " " + kw("or") + " ";
                    out += pred(e.children[i]);
                }
                return out;
            }
            case BoolExpr::negation: {
                const BoolExpr& ch = e.children[0];
                const bool parens = ch.kind == BoolExpr::conj || ch.kind == BoolExpr::disj;
                return kw("not") + " " + wrap(pred(ch), parens);
            }
        }
        return {};
    }

    static std::string wrap(std::string s, bool parens) {
        return parens ? "(" + std::move(s) + ")" : std::move(s);
    }
};

}  // namespace detail

inline std::string render_sql(const QueryAst& q, const RenderOptions& opts) {
    return detail::Renderer(opts).query(q);
}

// Canonical form: lowercase English keywords, every column backticked,
// string literals double-quoted, compound parts parenthesized. Guaranteed to
// reparse to an equal tree.
inline std::string ast_to_canonical(const QueryAst& q) {
    return render_sql(q, RenderOptions{});
}

}  // namespace tabqa
