#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "lexer.hpp"

namespace tabqa {

// The fixed keyword inventory. Multi-word entries count as one keyword and
// are matched greedily, so "not in" never double-counts as "not" plus "in".
inline constexpr std::array<std::string_view, 27> kKeywordInventory = {
    "select", "distinct", "from",      "where",   "group by", "having", "order by",
    "asc",    "desc",     "limit",     "count",   "sum",      "avg",    "min",
    "max",    "union",    "union all", "intersect", "except", "and",    "or",
    "not",    "in",       "not in",    "between", "like",     "not like",
};

namespace detail {

inline const std::vector<std::vector<std::string>>& keyword_word_seqs() {
    static const std::vector<std::vector<std::string>> seqs = [] {
        std::vector<std::vector<std::string>> out;
        for (const auto kw : kKeywordInventory) {
            std::vector<std::string> words;
            size_t b = 0;
            while (b < kw.size()) {
                size_t e = kw.find(' ', b);
                if (e == std::string_view::npos) e = kw.size();
                words.emplace_back(kw.substr(b, e - b));
                b = e + 1;
            }
            out.push_back(std::move(words));
        }
        return out;
    }();
    return seqs;
}

}  // namespace detail

// Counts keyword occurrences in a query text, with multiplicity. The text is
// lexed first, so quoted identifiers and string literals are never
// inspected; a malformed text surfaces the lexer's SyntaxError.
inline size_t count_keywords(std::string_view query_text) {
    const auto toks = lex_sql(query_text);
    const auto& seqs = detail::keyword_word_seqs();
    size_t count = 0;
    size_t i = 0;
    while (toks[i].type != Token::end) {
        if (toks[i].type != Token::word) {
            ++i;
            continue;
        }
        size_t best = 0;
        for (const auto& words : seqs) {
            if (words.size() <= best) continue;
            bool ok = true;
            for (size_t k = 0; k < words.size(); ++k) {
                const Token& t = toks[i + k];
                if (t.type != Token::word || !ascii_iequals(t.text, words[k])) {
                    ok = false;
                    break;
                }
            }
            if (ok) best = words.size();
        }
        if (best > 0) {
            ++count;
            i += best;
        } else {
            ++i;
        }
    }
    return count;
}

}  // namespace tabqa
