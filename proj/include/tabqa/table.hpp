#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "util.hpp"

namespace tabqa {

struct RaggedTable : Error {
    size_t row;
    RaggedTable(size_t r, const std::string& msg) : Error(msg), row(r) {}
};
struct DuplicateHeader : Error {
    using Error::Error;
};
struct EmptyHeader : Error {
    using Error::Error;
};
struct UnknownHeader : Error {
    using Error::Error;
};

enum class CellKind { empty, number, text };

// A cell keeps the raw bytes it was loaded with; the numeric view is derived
// once and reused by the executor. Whitespace-only cells are empty cells.
struct Cell {
    std::string raw;
    CellKind kind = CellKind::empty;
    double value = 0.0;
    bool integral = true;

    bool operator==(const Cell& o) const { return raw == o.raw; }
};

inline Cell make_cell(std::string raw) {
    Cell c;
    c.raw = std::move(raw);
    const std::string_view t = trim(c.raw);
    if (t.empty()) {
        c.kind = CellKind::empty;
    } else if (const auto num = parse_number(t)) {
        c.kind = CellKind::number;
        c.value = num->value;
        c.integral = num->integral;
    } else {
        c.kind = CellKind::text;
    }
    return c;
}

using Row = std::vector<Cell>;

struct Table {
    std::string id;        // content hash, "t" + 16 hex digits
    std::string name;      // source title, any script
    std::string language;  // BCP-47 tag of the source corpus, "und" if unknown
    std::vector<std::string> headers;
    std::vector<Row> rows;

    size_t width() const { return headers.size(); }
    size_t height() const { return rows.size(); }
};

// Header lookup is whitespace-normalized; stored headers stay verbatim.
inline int find_header(const Table& t, std::string_view name) {
    const std::string key = collapse_ws(name);
    for (size_t i = 0; i < t.headers.size(); ++i)
        if (collapse_ws(t.headers[i]) == key) return static_cast<int>(i);
    return -1;
}

inline size_t header_index(const Table& t, std::string_view name) {
    const int i = find_header(t, name);
    if (i < 0) throw UnknownHeader("unknown header: " + std::string(name));
    return static_cast<size_t>(i);
}

// Enforced on every load path: rectangular, at least one column, headers
// non-empty and unique under whitespace normalization.
inline void validate_table(const Table& t) {
    if (t.headers.empty()) throw EmptyHeader("table '" + t.name + "' has no columns");
    std::unordered_map<std::string, size_t> seen;
    for (size_t i = 0; i < t.headers.size(); ++i) {
        const std::string key = collapse_ws(t.headers[i]);
        if (key.empty())
            throw EmptyHeader("table '" + t.name + "': header " + std::to_string(i) +
                              " is empty");
        if (!seen.emplace(key, i).second)
            throw DuplicateHeader("table '" + t.name + "': duplicate header '" + key + "'");
    }
    for (size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r].size() != t.headers.size())
            throw RaggedTable(r, "table '" + t.name + "': row " + std::to_string(r) + " has " +
                                     std::to_string(t.rows[r].size()) + " cells, expected " +
                                     std::to_string(t.headers.size()));
}

enum class ColumnKind { number, text };

// A column is numeric when every non-empty cell parses as a number. An
// all-empty column counts as numeric so aggregates degrade the same way a
// reference engine treats a column of NULLs.
inline ColumnKind column_kind(const Table& t, size_t col) {
    for (const Row& r : t.rows) {
        const Cell& c = r[col];
        if (c.kind == CellKind::text) return ColumnKind::text;
    }
    return ColumnKind::number;
}

inline ColumnKind typed_column(const Table& t, std::string_view header) {
    return column_kind(t, header_index(t, header));
}

inline std::vector<ColumnKind> column_kinds(const Table& t) {
    std::vector<ColumnKind> kinds(t.width());
    for (size_t i = 0; i < t.width(); ++i) kinds[i] = column_kind(t, i);
    return kinds;
}

// Content identity: name, headers and cell bytes, framed so that
// concatenation ambiguities cannot collide.
inline std::string table_content_id(const Table& t) {
    uint64_t h = fnv1a(t.name);
    h = fnv1a_u64(t.headers.size(), h);
    for (const auto& hd : t.headers) {
        h = fnv1a_u64(hd.size(), h);
        h = fnv1a(hd, h);
    }
    h = fnv1a_u64(t.rows.size(), h);
    for (const Row& r : t.rows)
        for (const Cell& c : r) {
            h = fnv1a_u64(c.raw.size(), h);
            h = fnv1a(c.raw, h);
        }
    return "t" + hex64(h);
}

inline Table make_table(std::string name, std::vector<std::string> headers,
                        std::vector<std::vector<std::string>> raw_rows,
                        std::string language = "und") {
    Table t;
    t.name = std::move(name);
    t.language = std::move(language);
    t.headers = std::move(headers);
    t.rows.reserve(raw_rows.size());
    for (auto& rr : raw_rows) {
        Row row;
        row.reserve(rr.size());
        for (auto& cell : rr) row.push_back(make_cell(std::move(cell)));
        t.rows.push_back(std::move(row));
    }
    validate_table(t);
    t.id = table_content_id(t);
    return t;
}

}  // namespace tabqa
