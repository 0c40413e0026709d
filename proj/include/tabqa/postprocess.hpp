#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "lexicon.hpp"
#include "table.hpp"

namespace tabqa {

// Cell-level translation hook. Returns nullopt on failure; the caller keeps
// the untranslated text and counts it.
using TranslatorHook = std::function<std::optional<std::string>(const std::string&)>;

struct PostprocessReport {
    size_t cells = 0;
    size_t digit_remapped = 0;
    size_t keyword_remapped = 0;
    size_t translated = 0;
    size_t untranslated = 0;
};

// 128-aligned codepoint block holding the lexicon's digits. All Indic digit
// rows sit inside their script's first 128 codepoints, so the block doubles
// as a script detector. ASCII gets [0x00, 0x7F].
inline std::pair<uint32_t, uint32_t> script_block(const KeywordLexicon& lex) {
    const uint32_t lo = lex.digit_zero() & ~0x7Fu;
    return {lo, lo + 0x7Fu};
}

// True when the text contains codepoints of the lexicon's script. For the
// ASCII block only letters count; digits and punctuation are script neutral
// there.
inline bool has_script(std::string_view text, const KeywordLexicon& lex) {
    const auto [lo, hi] = script_block(lex);
    size_t i = 0;
    while (i < text.size()) {
        const uint32_t cp = utf8_next(text, i);
        if (cp < lo || cp > hi) continue;
        if (lo == 0) {
            const bool letter = (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
            if (!letter) continue;
        }
        return true;
    }
    return false;
}

struct ScriptAudit {
    size_t foreign_cells = 0;
    size_t digit_hits = 0;
    size_t keyword_hits = 0;
};

namespace post_detail {

inline size_t count_digit_hits(std::string_view text, const KeywordLexicon& lex) {
    const uint32_t zero = lex.digit_zero();
    size_t hits = 0, i = 0;
    while (i < text.size()) {
        const uint32_t cp = utf8_next(text, i);
        if (cp >= zero && cp < zero + 10) ++hits;
    }
    return hits;
}

// Localized keyword forms still present, matched like remap_keywords does:
// word boundaries, quoted regions skipped, longest form first.
inline size_t count_keyword_hits(std::string_view text, const KeywordLexicon& lex) {
    std::vector<std::string_view> forms;
    forms.reserve(kKeywordInventory.size());
    for (const auto kw : kKeywordInventory) forms.push_back(lex.local(kw));
    std::sort(forms.begin(), forms.end(),
              [](std::string_view a, std::string_view b) { return a.size() > b.size(); });
    size_t hits = 0, i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '`' || c == '"') {
            i = detail::skip_quoted(text, i, c);
            continue;
        }
        bool matched = false;
        if (detail::boundary_before(text, i)) {
            for (const auto form : forms) {
                if (text.compare(i, form.size(), form) == 0 &&
                    detail::boundary_after(text, i + form.size())) {
                    ++hits;
                    i += form.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) utf8_next(text, i);
    }
    return hits;
}

}  // namespace post_detail

// Residue left in one string after the deterministic stages: digits of the
// foreign script and its localized keyword forms.
inline ScriptAudit audit_text(std::string_view text, const KeywordLexicon& foreign) {
    ScriptAudit a;
    a.digit_hits = post_detail::count_digit_hits(text, foreign);
    a.keyword_hits = post_detail::count_keyword_hits(text, foreign);
    a.foreign_cells = has_script(text, foreign) ? 1 : 0;
    return a;
}

// Cells (headers included) still carrying foreign-script codepoints, plus
// digit and localized-keyword residue counts.
inline ScriptAudit script_audit(const Table& t, const KeywordLexicon& foreign) {
    ScriptAudit total;
    auto add = [&](std::string_view s) {
        const ScriptAudit a = audit_text(s, foreign);
        total.foreign_cells += a.foreign_cells;
        total.digit_hits += a.digit_hits;
        total.keyword_hits += a.keyword_hits;
    };
    for (const auto& h : t.headers) add(h);
    for (const auto& row : t.rows)
        for (const auto& c : row) add(c.raw);
    return total;
}

// Deterministic stages only: digits first, then keyword forms. Idempotent.
inline std::string postprocess_text(const std::string& text, const KeywordLexicon& from,
                                    const KeywordLexicon& to) {
    std::string s = remap_digits(text, from, to);
    return remap_keywords(s, from, to);
}

// Stage order: digits, keywords, then the translation hook on cells that
// still carry from-language script. Without a hook such cells pass through
// and are reported as untranslated.
inline Table postprocess(const Table& pred, const KeywordLexicon& from, const KeywordLexicon& to,
                         const TranslatorHook& hook = {}, PostprocessReport* report = nullptr) {
    PostprocessReport rep;
    auto one = [&](const std::string& raw) {
        ++rep.cells;
        std::string s = remap_digits(raw, from, to);
        if (s != raw) ++rep.digit_remapped;
        std::string k = remap_keywords(s, from, to);
        if (k != s) ++rep.keyword_remapped;
        if (has_script(k, from)) {
            std::optional<std::string> tr;
            if (hook) tr = hook(k);
            if (tr) {
                ++rep.translated;
                k = std::move(*tr);
            } else {
                ++rep.untranslated;
            }
        }
        return k;
    };
    Table out;
    out.id = pred.id;
    out.name = pred.name;
    out.language = to.language;
    out.headers.reserve(pred.headers.size());
    for (const auto& h : pred.headers) out.headers.push_back(one(h));
    out.rows.reserve(pred.rows.size());
    for (const auto& row : pred.rows) {
        std::vector<Cell> cells;
        cells.reserve(row.size());
        for (const auto& c : row) cells.push_back(make_cell(one(c.raw)));
        out.rows.push_back(std::move(cells));
    }
    if (report) *report = rep;
    return out;
}

// Linearized-text variant for evaluation transforms. Swaps sentinel tokens
// so the result decodes under the target lexicon, then runs stages 1 and 2.
// Cell boundaries survive: no localized form contains the pipe delimiter.
inline std::string postprocess_linearized(const std::string& text, const KeywordLexicon& from,
                                          const KeywordLexicon& to) {
    std::string s = text;
    auto swap_all = [&](const std::string& needle, const std::string& repl) {
        if (needle == repl || needle.empty()) return;
        size_t at = 0;
        while ((at = s.find(needle, at)) != std::string::npos) {
            s.replace(at, needle.size(), repl);
            at += repl.size();
        }
    };
    swap_all("<" + from.sentinel_column + ">", "<" + to.sentinel_column + ">");
    swap_all("<" + from.sentinel_row + " ", "<" + to.sentinel_row + " ");
    return postprocess_text(s, from, to);
}

}  // namespace tabqa
