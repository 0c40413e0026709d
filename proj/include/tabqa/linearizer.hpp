#pragma once

#include <string>
#include <vector>

#include "lexicon.hpp"
#include "table.hpp"

namespace tabqa {

// Linearized layout, localized sentinels and native row indices:
//
//   question <col> h1 | h2 <row 1> c11 | c12 <row 2> c21 | c22
//
// Cells join with " | "; every '|' inside a cell is doubled, which keeps
// pipe runs even so the single-pipe separator can never appear inside an
// escaped cell. Segments join with single spaces, so decode strips exactly
// one joiner space at each segment edge and whitespace inside cells
// round-trips byte for byte.

namespace lin_detail {

inline std::string escape_cell(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == '|') out.push_back('|');
        out.push_back(c);
    }
    return out;
}

inline std::string unescape_cell(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        out.push_back(s[i]);
        if (s[i] == '|' && i + 1 < s.size() && s[i + 1] == '|') ++i;
    }
    return out;
}

// Split on exact " | ". Escaping keeps pipe runs inside cells even, and a
// separator needs a lone pipe, so no escaped payload can fake one.
inline std::vector<std::string> split_cells(std::string_view segment) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i + 3 <= segment.size();) {
        if (segment[i] == ' ' && segment[i + 1] == '|' && segment[i + 2] == ' ') {
            out.push_back(unescape_cell(segment.substr(start, i - start)));
            i += 3;
            start = i;
        } else {
            ++i;
        }
    }
    out.push_back(unescape_cell(segment.substr(start)));
    return out;
}

struct Sentinel {
    size_t begin = 0;  // position of '<'
    size_t end = 0;    // one past '>'
};

inline std::vector<Sentinel> find_row_sentinels(std::string_view text, size_t from,
                                                const std::string& row_word) {
    const std::string lead = "<" + row_word + " ";
    std::vector<Sentinel> out;
    size_t i = from;
    while (i < text.size()) {
        const size_t hit = text.find(lead, i);
        if (hit == std::string_view::npos) break;
        size_t j = hit + lead.size();
        size_t digits = 0;
        while (j < text.size() && text[j] != '>') {
            size_t k = j;
            const uint32_t cp = utf8_next(text, k);
            if (digit_value(cp) < 0) break;
            ++digits;
            j = k;
        }
        if (digits > 0 && j < text.size() && text[j] == '>') {
            out.push_back({hit, j + 1});
            i = j + 1;
        } else {
            i = hit + 1;
        }
    }
    return out;
}

// One joiner space on each side of a segment belongs to the layout.
inline std::string_view strip_joiners(std::string_view s, bool leading, bool trailing) {
    if (leading && !s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (trailing && !s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

}  // namespace lin_detail

inline std::string encode_table(const Table& table, const KeywordLexicon& lex,
                                std::string_view question = {}) {
    using namespace lin_detail;
    std::string out;
    if (!question.empty()) {
        out.append(question);
        out.push_back(' ');
    }
    out += "<" + lex.sentinel_column + ">";
    for (size_t c = 0; c < table.headers.size(); ++c) {
        out += c ? " | " : " ";
        out += escape_cell(table.headers[c]);
    }
    for (size_t r = 0; r < table.rows.size(); ++r) {
        out += " <" + lex.sentinel_row + " " + lex.localize_digits(std::to_string(r + 1)) + ">";
        for (size_t c = 0; c < table.rows[r].size(); ++c) {
            out += c ? " | " : " ";
            out += escape_cell(table.rows[r][c].raw);
        }
    }
    return out;
}

// Lenient decode for model output. A structural break flags the result as
// malformed and keeps the longest clean prefix; dropped counts feed the
// metrics denominators so malformed content earns no credit.
struct DecodeResult {
    Table table;
    std::string question;  // text before the column sentinel, joiner trimmed
    bool malformed = false;
    size_t dropped_rows = 0;
    size_t dropped_cells = 0;
    std::string note;
};

inline DecodeResult decode_table(std::string_view text, const KeywordLexicon& lex) {
    using namespace lin_detail;
    DecodeResult res;
    res.table.language = lex.language;
    const std::string col_sent = "<" + lex.sentinel_column + ">";
    const size_t col_at = text.find(col_sent);
    if (col_at == std::string_view::npos) {
        res.malformed = true;
        res.note = "missing column sentinel";
        return res;
    }
    res.question = std::string(
        strip_joiners(text.substr(0, col_at), false, true));

    const auto rows = find_row_sentinels(text, col_at + col_sent.size(), lex.sentinel_row);

    const size_t head_end = rows.empty() ? text.size() : rows[0].begin;
    const std::string_view head_seg = strip_joiners(
        text.substr(col_at + col_sent.size(), head_end - col_at - col_sent.size()), true,
        !rows.empty());
    if (trim(head_seg).empty()) {
        res.malformed = true;
        res.note = "no header cells";
        return res;
    }
    res.table.headers = split_cells(head_seg);
    const size_t width = res.table.headers.size();

    for (size_t k = 0; k < rows.size(); ++k) {
        const size_t seg_begin = rows[k].end;
        const size_t seg_end = k + 1 < rows.size() ? rows[k + 1].begin : text.size();
        const std::string_view seg = strip_joiners(text.substr(seg_begin, seg_end - seg_begin),
                                                   true, k + 1 < rows.size());
        auto cells = split_cells(seg);
        if (cells.size() != width) {
            res.malformed = true;
            res.note = "row " + std::to_string(k + 1) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(width);
            for (size_t d = k; d < rows.size(); ++d) {
                ++res.dropped_rows;
                if (d == k) {
                    res.dropped_cells += cells.size();
                } else {
                    const size_t b = rows[d].end;
                    const size_t e = d + 1 < rows.size() ? rows[d + 1].begin : text.size();
                    res.dropped_cells +=
                        split_cells(strip_joiners(text.substr(b, e - b), true,
                                                  d + 1 < rows.size()))
                            .size();
                }
            }
            break;
        }
        Row row;
        row.reserve(width);
        for (auto& cell : cells) row.push_back(make_cell(std::move(cell)));
        res.table.rows.push_back(std::move(row));
    }
    return res;
}

}  // namespace tabqa
