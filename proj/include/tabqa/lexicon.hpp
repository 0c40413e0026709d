#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sql/canonical.hpp"
#include "sql/keywords.hpp"
#include "util.hpp"

namespace tabqa {

struct MissingMapping : Error {
    using Error::Error;
};

// A lexicon binds the 27-keyword inventory, the ten decimal digits and the
// two linearization sentinel words to one target language. Keyword mappings
// are bijective so remapping through the English pivot is lossless.
struct KeywordLexicon {
    std::string language;
    std::map<std::string, std::string, std::less<>> to_local;    // english -> local
    std::map<std::string, std::string, std::less<>> to_english;  // local -> english
    std::array<std::string, 10> digits;
    std::string sentinel_column;
    std::string sentinel_row;

    const std::string& local(std::string_view english) const {
        const auto it = to_local.find(english);
        if (it == to_local.end())
            throw MissingMapping("no mapping for keyword '" + std::string(english) + "' (" +
                                 language + ")");
        return it->second;
    }

    // Zero codepoint of the digit block this lexicon writes in.
    uint32_t digit_zero() const {
        size_t i = 0;
        return digit_block(utf8_next(digits[0], i));
    }

    // ASCII digits in text rewritten to this lexicon's digits.
    std::string localize_digits(std::string_view text) const {
        std::string out;
        out.reserve(text.size() * 3);
        for (char c : text) {
            if (c >= '0' && c <= '9')
                out += digits[static_cast<size_t>(c - '0')];
            else
                out.push_back(c);
        }
        return out;
    }
};

inline KeywordLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lexicon " + path.string());
    KeywordLexicon lex;
    std::array<bool, 10> digit_seen{};
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const size_t tab = sv.find('\t');
        if (tab == std::string_view::npos)
            throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                 ": expected <key>\\t<value>");
        const std::string key(trim(sv.substr(0, tab)));
        const std::string value(trim(sv.substr(tab + 1)));
        if (value.empty())
            throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                 ": empty value for '" + key + "'");
        if (key == "language") {
            lex.language = value;
        } else if (key.rfind("keyword:", 0) == 0) {
            const std::string english = ascii_lower(key.substr(8));
            if (std::find(kKeywordInventory.begin(), kKeywordInventory.end(), english) ==
                kKeywordInventory.end())
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": '" + english + "' is not in the keyword inventory");
            if (!lex.to_local.emplace(english, value).second)
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": duplicate keyword '" + english + "'");
            if (!lex.to_english.emplace(value, english).second)
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": localized form '" + value +
                                     "' maps to two keywords");
        } else if (key.rfind("digit:", 0) == 0) {
            const std::string d = key.substr(6);
            if (d.size() != 1 || d[0] < '0' || d[0] > '9')
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": digit key must be 0..9");
            const int idx = d[0] - '0';
            size_t i = 0;
            const uint32_t cp = utf8_next(value, i);
            if (i != value.size() || digit_value(cp) != idx)
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": digit " + d + " must be a single codepoint of value " +
                                     d);
            digit_seen[static_cast<size_t>(idx)] = true;
            lex.digits[static_cast<size_t>(idx)] = value;
        } else if (key == "sentinel:column" || key == "sentinel:row") {
            if (value.find_first_of("<>|") != std::string::npos ||
                value.find(' ') != std::string::npos)
                throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                     ": sentinel words may not contain '<', '>', '|' or spaces");
            (key == "sentinel:column" ? lex.sentinel_column : lex.sentinel_row) = value;
        } else {
            throw MissingMapping(path.string() + ":" + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
        }
    }
    if (lex.language.empty()) throw MissingMapping(path.string() + ": missing language tag");
    if (lex.to_local.size() != kKeywordInventory.size()) {
        std::string missing;
        for (const auto kw : kKeywordInventory)
            if (!lex.to_local.count(std::string(kw))) missing += " '" + std::string(kw) + "'";
        throw MissingMapping(path.string() + ": keyword inventory incomplete, missing" +
                             missing);
    }
    for (int d = 0; d < 10; ++d)
        if (!digit_seen[static_cast<size_t>(d)])
            throw MissingMapping(path.string() + ": missing digit " + std::to_string(d));
    const uint32_t zero = lex.digit_zero();
    for (int d = 0; d < 10; ++d) {
        size_t i = 0;
        if (digit_block(utf8_next(lex.digits[static_cast<size_t>(d)], i)) != zero)
            throw MissingMapping(path.string() + ": digits mix scripts");
    }
    if (lex.sentinel_column.empty() || lex.sentinel_row.empty())
        throw MissingMapping(path.string() + ": missing sentinel:column or sentinel:row");
    return lex;
}

// Identity lexicon, used as the default and in tests.
inline KeywordLexicon english_lexicon() {
    KeywordLexicon lex;
    lex.language = "en";
    for (const auto kw : kKeywordInventory) {
        lex.to_local.emplace(kw, kw);
        lex.to_english.emplace(kw, kw);
    }
    for (int d = 0; d < 10; ++d)
        lex.digits[static_cast<size_t>(d)] = std::string(1, static_cast<char>('0' + d));
    lex.sentinel_column = "column";
    lex.sentinel_row = "row";
    return lex;
}

// Monolingual rendering: every keyword goes through the lexicon, the from
// clause disappears (the table travels alongside the query, not inside it),
// identifiers and literals stay verbatim, token order is unchanged.
inline std::string monolingualize(const QueryAst& ast, const KeywordLexicon& lex) {
    RenderOptions opts;
    opts.keyword = [&lex](std::string_view kw) { return lex.local(kw); };
    opts.include_from = false;
    opts.parenthesize_compounds = false;
    return render_sql(ast, opts);
}

namespace detail {

inline size_t prev_cp_start(std::string_view s, size_t i) {
    size_t j = i;
    while (j > 0 && (static_cast<unsigned char>(s[j - 1]) & 0xC0) == 0x80) --j;
    return j > 0 ? j - 1 : 0;
}

// Word boundary for keyword remapping: text edges and ASCII
// non-alphanumerics bound a word, any other neighbor glues.
inline bool boundary_before(std::string_view s, size_t i) {
    if (i == 0) return true;
    const char c = s[prev_cp_start(s, i)];
    return static_cast<unsigned char>(c) < 0x80 && !is_ascii_alnum(c);
}

inline bool boundary_after(std::string_view s, size_t i) {
    if (i >= s.size()) return true;
    const char c = s[i];
    return static_cast<unsigned char>(c) < 0x80 && !is_ascii_alnum(c);
}

inline size_t skip_quoted(std::string_view s, size_t i, char q) {
    ++i;
    while (i < s.size()) {
        if (s[i] == q) {
            if (i + 1 < s.size() && s[i + 1] == q) {
                i += 2;
                continue;
            }
            return i + 1;
        }
        ++i;
    }
    return i;  // unterminated: rest of the text is payload
}

}  // namespace detail

// Swaps from-language keyword surface forms to the to-language ones through
// the English pivot. Quoted identifiers and string literals pass through,
// everything else is plain text, so this works on raw model output.
inline std::string remap_keywords(std::string_view text, const KeywordLexicon& from,
                                  const KeywordLexicon& to) {
    std::vector<std::pair<std::string_view, const std::string*>> forms;
    forms.reserve(from.to_english.size());
    for (const auto& [local, english] : from.to_english)
        forms.emplace_back(local, &to.local(english));
    std::sort(forms.begin(), forms.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();
    });
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '`' || c == '"') {
            const size_t j = detail::skip_quoted(text, i, c);
            out.append(text.substr(i, j - i));
            i = j;
            continue;
        }
        bool replaced = false;
        if (detail::boundary_before(text, i)) {
            for (const auto& [local, target] : forms) {
                if (text.compare(i, local.size(), local) == 0 &&
                    detail::boundary_after(text, i + local.size())) {
                    out += *target;
                    i += local.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (replaced) continue;
        size_t j = i;
        utf8_next(text, j);
        out.append(text.substr(i, j - i));
        i = j;
    }
    return out;
}

// Rewrites from-script digits to the to-script, everywhere including quoted
// regions: cell values carry digits too.
inline std::string remap_digits(std::string_view text, const KeywordLexicon& from,
                                const KeywordLexicon& to) {
    const uint32_t from_zero = from.digit_zero();
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const size_t start = i;
        const uint32_t cp = utf8_next(text, i);
        if (cp >= from_zero && cp < from_zero + 10)
            out += to.digits[cp - from_zero];
        else
            out.append(text.substr(start, i - start));
    }
    return out;
}

}  // namespace tabqa
