#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sql/ast.hpp"
#include "sql/keywords.hpp"

namespace tabqa {

// Operator classes for reporting. A query can belong to several; distinct
// and limit belong to none.
//   arithmetic: count, sum, avg, min, max
//   sorting:    an order by clause (asc is the default direction)
//   group_by:   an explicit group by
//   filtering:  where or having
//   set:        union, union all, intersect, except
//   logical:    and, or, not, in, not in, between, like inside a predicate
inline const std::vector<std::string>& operator_class_names() {
    static const std::vector<std::string> names = {
        "arithmetic", "filtering", "group_by", "logical", "set", "sorting",
    };
    return names;
}

namespace analytics_detail {

inline bool pred_has_logical(const BoolExpr& e) {
    switch (e.kind) {
        case BoolExpr::conj:
        case BoolExpr::disj:
        case BoolExpr::negation:
        case BoolExpr::in_list:
        case BoolExpr::between:
        case BoolExpr::like:
            return true;
        default:
            return false;
    }
}

inline bool tree_has_logical(const BoolExpr& e) {
    if (pred_has_logical(e)) return true;
    for (const auto& ch : e.children)
        if (tree_has_logical(ch)) return true;
    return false;
}

inline bool tree_has_agg(const BoolExpr& e) {
    auto op_has = [](const std::optional<Operand>& o) {
        return o && std::holds_alternative<AggTerm>(*o);
    };
    if (op_has(e.lhs) || op_has(e.rhs)) return true;
    for (const auto& item : e.items)
        if (std::holds_alternative<AggTerm>(item)) return true;
    for (const auto& ch : e.children)
        if (tree_has_agg(ch)) return true;
    return false;
}

inline void classify_core(const SelectCore& core, std::set<std::string>& out) {
    for (const auto& it : core.items)
        if (it.agg != AggFn::none) out.insert("arithmetic");
    if (core.where || core.having) out.insert("filtering");
    if (!core.group_by.empty()) out.insert("group_by");
    if (core.where && tree_has_logical(*core.where)) out.insert("logical");
    if (core.having) {
        if (tree_has_logical(*core.having)) out.insert("logical");
        if (tree_has_agg(*core.having)) out.insert("arithmetic");
    }
}

}  // namespace analytics_detail

inline std::vector<std::string> classify(const QueryAst& ast) {
    std::set<std::string> out;
    analytics_detail::classify_core(ast.core, out);
    for (const auto& part : ast.compounds) {
        out.insert("set");
        analytics_detail::classify_core(part.core, out);
    }
    if (!ast.order_by.empty()) {
        out.insert("sorting");
        for (const auto& o : ast.order_by)
            if (std::holds_alternative<AggTerm>(o.expr)) out.insert("arithmetic");
    }
    return std::vector<std::string>(out.begin(), out.end());
}

// ---------------------------------------------------------------------------
// Dataset-level statistics

struct DatasetStats {
    size_t records = 0;
    std::set<std::string> tables;
    std::map<std::string, size_t> by_class;
    std::map<size_t, size_t> keyword_histogram;
    std::map<std::string, size_t> by_language;

    size_t keyword_mode() const {
        size_t best_k = 0, best_n = 0;
        for (const auto& [k, n] : keyword_histogram)
            if (n > best_n) {
                best_k = k;
                best_n = n;
            }
        return best_k;
    }

    void add(const std::vector<std::string>& classes, size_t keyword_count,
             const std::string& table_id, const std::string& language) {
        ++records;
        tables.insert(table_id);
        for (const auto& c : classes) ++by_class[c];
        ++keyword_histogram[keyword_count];
        ++by_language[language];
    }
};

inline void write_stats_csv(const DatasetStats& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << "section,key,value\n";
    out << "summary,records," << s.records << "\n";
    out << "summary,tables," << s.tables.size() << "\n";
    out << "summary,keyword_mode," << s.keyword_mode() << "\n";
    for (const auto& [k, n] : s.by_language) out << "language," << k << "," << n << "\n";
    for (const auto& [k, n] : s.by_class) out << "operator_class," << k << "," << n << "\n";
    for (const auto& [k, n] : s.keyword_histogram)
        out << "keywords_per_query," << k << "," << n << "\n";
    if (!out) throw Error("short write to " + path.string());
}

namespace analytics_detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out.push_back(c);
    }
    return out;
}

inline void svg_bars(std::ofstream& out, const std::vector<std::pair<std::string, size_t>>& data,
                     int x0, int y0, int width, int height, const std::string& title,
                     const std::string& fill) {
    out << "<text x='" << x0 << "' y='" << y0 - 8 << "' font-size='13' font-family='monospace'>"
        << svg_escape(title) << "</text>\n";
    size_t peak = 1;
    for (const auto& [k, v] : data) peak = std::max(peak, v);
    const int n = static_cast<int>(data.size());
    if (n == 0) return;
    const int bar_w = std::max(6, width / std::max(1, n) - 4);
    for (int i = 0; i < n; ++i) {
        const auto& [label, value] = data[static_cast<size_t>(i)];
        const int h = static_cast<int>(static_cast<double>(height) *
                                       static_cast<double>(value) / static_cast<double>(peak));
        const int x = x0 + i * (bar_w + 4);
        out << "<rect x='" << x << "' y='" << y0 + height - h << "' width='" << bar_w
            << "' height='" << h << "' fill='" << fill << "'/>\n";
        out << "<text x='" << x << "' y='" << y0 + height + 12
            << "' font-size='9' font-family='monospace'>" << svg_escape(label) << "</text>\n";
        out << "<text x='" << x << "' y='" << y0 + height - h - 3
            << "' font-size='9' font-family='monospace'>" << value << "</text>\n";
    }
}

}  // namespace analytics_detail

// One-file visual summary: operator-class distribution on top, keyword-count
// histogram below.
inline void write_stats_svg(const DatasetStats& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    std::vector<std::pair<std::string, size_t>> classes(s.by_class.begin(), s.by_class.end());
    std::vector<std::pair<std::string, size_t>> keywords;
    for (const auto& [k, n] : s.keyword_histogram) keywords.emplace_back(std::to_string(k), n);
    const int width = 720;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
        << "' height='420' viewBox='0 0 " << width << " 420'>\n";
    out << "<rect x='0' y='0' width='" << width << "' height='420' fill='white'/>\n";
    analytics_detail::svg_bars(out, classes, 20, 40, width - 40, 120, "operator classes",
                               "#4878a8");
    analytics_detail::svg_bars(out, keywords, 20, 240, width - 40, 120,
                               "keywords per query", "#a85448");
    out << "</svg>\n";
    if (!out) throw Error("short write to " + path.string());
}

}  // namespace tabqa
