#pragma once

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <vector>

#include "table.hpp"

namespace tabqa {

struct CorruptStore : Error {
    using Error::Error;
};

enum class TableFormat { csv, tsv, jsonl, autodetect };

namespace detail {

// RFC 4180 style: quoted fields may contain separators, doubled quotes and
// newlines. Returns rows of raw field strings.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text, char sep) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
            continue;
        }
        if (c == '"' && field.empty() && sep != '\t') {
            quoted = true;
            any = true;
            ++i;
        } else if (c == sep) {
            end_field();
            any = true;
            ++i;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            ++i;
            if (any || !field.empty() || !row.empty()) end_row();
        } else {
            field.push_back(c);
            any = true;
            ++i;
        }
    }
    if (any || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline std::string json_cell(const nlohmann::json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline Table table_from_json(const nlohmann::json& j, const std::string& fallback_name,
                             const std::string& language) {
    std::vector<std::string> headers;
    for (const auto& h : j.at("headers")) headers.push_back(json_cell(h));
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : j.at("rows")) {
        std::vector<std::string> row;
        for (const auto& c : r) row.push_back(json_cell(c));
        rows.push_back(std::move(row));
    }
    const std::string name = j.contains("name") ? json_cell(j.at("name")) : fallback_name;
    const std::string lang =
        j.contains("language") ? j.at("language").get<std::string>() : language;
    return make_table(name, std::move(headers), std::move(rows), lang);
}

inline TableFormat sniff_format(const std::filesystem::path& p) {
    const std::string ext = ascii_lower(p.extension().string());
    if (ext == ".csv") return TableFormat::csv;
    if (ext == ".tsv") return TableFormat::tsv;
    if (ext == ".jsonl" || ext == ".ndjson") return TableFormat::jsonl;
    throw Error("cannot infer table format from '" + p.string() + "'");
}

}  // namespace detail

// Loads one file: a csv/tsv file is a single table named after the file stem,
// a jsonl file carries one table object per line. When path is a directory
// every regular file inside with a recognized extension is loaded, in
// filename order.
inline std::vector<Table> load_tables(const std::filesystem::path& path,
                                      TableFormat format = TableFormat::autodetect,
                                      const std::string& language = "und") {
    namespace fs = std::filesystem;
    std::vector<Table> tables;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            if (format == TableFormat::autodetect) {
                const std::string ext = ascii_lower(f.extension().string());
                if (ext != ".csv" && ext != ".tsv" && ext != ".jsonl" && ext != ".ndjson")
                    continue;
            }
            auto sub = load_tables(f, format, language);
            for (auto& t : sub) tables.push_back(std::move(t));
        }
        return tables;
    }
    const TableFormat fmt =
        format == TableFormat::autodetect ? detail::sniff_format(path) : format;
    if (fmt == TableFormat::jsonl) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open " + path.string());
        std::string line;
        size_t n = 0;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw Error(path.string() + ":" + std::to_string(n + 1) + ": " + e.what());
            }
            tables.push_back(detail::table_from_json(
                j, path.stem().string() + "#" + std::to_string(n), language));
            ++n;
        }
        return tables;
    }
    const std::string text = detail::read_file(path);
    auto rows = detail::parse_csv(text, fmt == TableFormat::csv ? ',' : '\t');
    if (rows.empty()) throw EmptyHeader("no header row in " + path.string());
    std::vector<std::string> headers = std::move(rows.front());
    rows.erase(rows.begin());
    tables.push_back(make_table(path.stem().string(), std::move(headers), std::move(rows),
                                language));
    return tables;
}

// ---------------------------------------------------------------------------
// Binary store
//
// Layout: magic, format version, table count, then one length-prefixed
// payload per table followed by its FNV-1a checksum. Tables are written in
// id order so a store file is a pure function of its contents.

inline constexpr char kStoreMagic[8] = {'T', 'A', 'B', 'Q', 'A', 'S', 'T', '1'};

struct TableStore {
    std::vector<Table> tables;
    std::unordered_map<std::string, size_t> by_id;

    size_t size() const { return tables.size(); }

    const Table* find(const std::string& id) const {
        const auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &tables[it->second];
    }

    const Table& at(const std::string& id) const {
        const Table* t = find(id);
        if (!t) throw UnknownHeader("no table with id " + id);
        return *t;
    }
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (k * 8)) & 0xFF));
}
inline void put_u64(std::string& out, uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (k * 8)) & 0xFF));
}
inline void put_str(std::string& out, std::string_view s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.append(s);
}

struct Reader {
    std::string_view data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw CorruptStore("truncated store payload");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int k = 0; k < 4; ++k)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + k])) << (k * 8);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int k = 0; k < 8; ++k)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + k])) << (k * 8);
        pos += 8;
        return v;
    }
    std::string str() {
        const uint32_t n = u32();
        need(n);
        std::string s(data.substr(pos, n));
        pos += n;
        return s;
    }
};

inline std::string encode_table_payload(const Table& t) {
    std::string out;
    put_str(out, t.id);
    put_str(out, t.name);
    put_str(out, t.language);
    put_u32(out, static_cast<uint32_t>(t.headers.size()));
    for (const auto& h : t.headers) put_str(out, h);
    put_u64(out, t.rows.size());
    for (const Row& r : t.rows)
        for (const Cell& c : r) put_str(out, c.raw);
    return out;
}

inline Table decode_table_payload(std::string_view payload) {
    Reader rd{payload};
    Table t;
    t.id = rd.str();
    t.name = rd.str();
    t.language = rd.str();
    const uint32_t ncols = rd.u32();
    t.headers.reserve(ncols);
    for (uint32_t i = 0; i < ncols; ++i) t.headers.push_back(rd.str());
    const uint64_t nrows = rd.u64();
    t.rows.reserve(nrows);
    for (uint64_t r = 0; r < nrows; ++r) {
        Row row;
        row.reserve(ncols);
        for (uint32_t c = 0; c < ncols; ++c) row.push_back(make_cell(rd.str()));
        t.rows.push_back(std::move(row));
    }
    if (rd.pos != payload.size()) throw CorruptStore("trailing bytes in table payload");
    validate_table(t);
    return t;
}

}  // namespace detail

inline void persist_store(const std::vector<Table>& tables, const std::filesystem::path& path) {
    std::vector<const Table*> sorted;
    sorted.reserve(tables.size());
    for (const Table& t : tables) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const Table* a, const Table* b) { return a->id < b->id; });
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kStoreMagic, sizeof kStoreMagic);
    std::string head;
    detail::put_u64(head, sorted.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const Table* t : sorted) {
        const std::string payload = detail::encode_table_payload(*t);
        std::string frame;
        detail::put_u64(frame, payload.size());
        out.write(frame.data(), static_cast<std::streamsize>(frame.size()));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        std::string sum;
        detail::put_u64(sum, fnv1a(payload));
        out.write(sum.data(), static_cast<std::streamsize>(sum.size()));
    }
    if (!out) throw Error("short write to " + path.string());
}

inline TableStore open_store(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    if (data.size() < sizeof(kStoreMagic) + 8 ||
        std::memcmp(data.data(), kStoreMagic, sizeof kStoreMagic) != 0)
        throw CorruptStore("bad store magic in " + path.string());
    detail::Reader rd{std::string_view(data).substr(sizeof kStoreMagic)};
    const uint64_t count = rd.u64();
    TableStore store;
    store.tables.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint64_t len = rd.u64();
        rd.need(len);
        const std::string_view payload = rd.data.substr(rd.pos, len);
        rd.pos += len;
        const uint64_t sum = rd.u64();
        if (sum != fnv1a(payload))
            throw CorruptStore("checksum mismatch for table " + std::to_string(i) + " in " +
                               path.string());
        Table t = detail::decode_table_payload(payload);
        store.by_id.emplace(t.id, store.tables.size());
        store.tables.push_back(std::move(t));
    }
    if (rd.pos != rd.data.size()) throw CorruptStore("trailing bytes in " + path.string());
    return store;
}

}  // namespace tabqa
