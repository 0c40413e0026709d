#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <tabqa/executor.hpp>

using namespace tabqa;
namespace fs = std::filesystem;

namespace {

// name text (one numeric-looking cell), score numeric with a hole, city text
// with a hole, rate numeric with redundant spellings.
Table fixture() {
    return make_table("w", {"name", "score", "city", "rate"},
                      {{"alice", "10", "dhaka", "00.5"},
                       {"bob", "", "pune", ""},
                       {"carol", "7", "dhaka", "2.50"},
                       {"dave", "10", "", "1"},
                       {"42", "3", "dhaka", ""}});
}

Table compound_fixture() {
    return make_table("v", {"a", "b"},
                      {{"1", "2"}, {"2", "x"}, {"2", "y"}, {"3", "z"}});
}

std::vector<std::string> col0(const Table& t) {
    std::vector<std::string> out;
    for (const Row& r : t.rows) out.push_back(r[0].raw);
    return out;
}

Table run(std::string_view sql, const Table& t,
          const KeywordLexicon& lex = english_lexicon()) {
    ExecResult res = execute(sql, t, lex);
    REQUIRE_MESSAGE(res.ok(), (res.error ? res.error->message : std::string{}));
    return *res.answer;
}

ExecError run_err(std::string_view sql, const Table& t) {
    ExecResult res = execute(sql, t, english_lexicon());
    REQUIRE_FALSE(res.ok());
    return *res.error;
}

}  // namespace

TEST_CASE("projection keeps encounter order and source headers") {
    const Table t = fixture();
    const Table a = run("select name from w where score = 10", t);
    CHECK(a.headers == std::vector<std::string>{"name"});
    CHECK(col0(a) == std::vector<std::string>{"alice", "dave"});
    CHECK(a.language == "en");

    const Table all = run("select * from w", t);
    CHECK(all.headers == t.headers);
    CHECK(all.height() == 5);
}

TEST_CASE("empty cells are unknown in predicates") {
    const Table t = fixture();
    CHECK(col0(run("select name from w where score = 10 or score != 10", t)) ==
          std::vector<std::string>{"alice", "carol", "dave", "42"});
    CHECK(col0(run("select name from w where not score = 10", t)) ==
          std::vector<std::string>{"carol", "42"});
    CHECK(col0(run("select name from w where score in (10, 3)", t)) ==
          std::vector<std::string>{"alice", "dave", "42"});
    CHECK(col0(run("select name from w where score not in (10, 3)", t)) ==
          std::vector<std::string>{"carol"});
    CHECK(col0(run("select name from w where score between 3 and 9", t)) ==
          std::vector<std::string>{"carol", "42"});
}

TEST_CASE("cells take their column's class, literals adapt") {
    const Table t = fixture();
    // "42" sits in a text column: a numeric literal is rendered to text.
    CHECK(col0(run("select name from w where name = 42", t)) ==
          std::vector<std::string>{"42"});
    // A quoted number facing a numeric column parses to a number.
    CHECK(col0(run("select name from w where score = \"10\"", t)) ==
          std::vector<std::string>{"alice", "dave"});
    // Text that does not parse stays text and never equals a number column.
    CHECK(run("select name from w where score = \"x10\"", t).height() == 0);
}

TEST_CASE("like runs over codepoints with class-aware text rendering") {
    const Table t = fixture();
    CHECK(col0(run("select name from w where name like \"d%\"", t)) ==
          std::vector<std::string>{"dave"});
    CHECK(col0(run("select name from w where name not like \"%a%\"", t)) ==
          std::vector<std::string>{"bob", "42"});
    CHECK(col0(run("select name from w where score like \"1_\"", t)) ==
          std::vector<std::string>{"alice", "dave"});

    const Table bnw = make_table("b", {"w"}, {{"রাম"}, {"রাত"}, {"দিন"}});
    CHECK(col0(run("select w from b where w like \"রা_\"", bnw)) ==
          std::vector<std::string>{"রাম", "রাত"});
    CHECK(col0(run("select w from b where w like \"%ন\"", bnw)) ==
          std::vector<std::string>{"দিন"});
}

TEST_CASE("aggregates skip empty cells") {
    const Table t = fixture();
    CHECK(run("select count(*) from w", t).rows[0][0].raw == "5");
    CHECK(run("select count(score) from w", t).rows[0][0].raw == "4");
    CHECK(run("select sum(score) from w", t).rows[0][0].raw == "30");
    CHECK(run("select avg(score) from w", t).rows[0][0].raw == "7.5");
    CHECK(run("select sum(rate) from w", t).rows[0][0].raw == "4");
    CHECK(run("select avg(rate) from w", t).rows[0][0].raw == "1.33");
    CHECK(run("select count(city) from w", t).rows[0][0].raw == "4");
}

TEST_CASE("min and max return the extremal source cell verbatim") {
    const Table t = fixture();
    CHECK(run("select min(rate) from w", t).rows[0][0].raw == "00.5");
    CHECK(run("select max(rate) from w", t).rows[0][0].raw == "2.50");
    CHECK(run("select min(name) from w", t).rows[0][0].raw == "42");
    CHECK(run("select max(name) from w", t).rows[0][0].raw == "dave");
    // Ties keep the first encountered cell.
    CHECK(run("select max(score) from w", t).rows[0][0].raw == "10");
}

TEST_CASE("aggregate degradation on zero rows") {
    const Table t = fixture();
    CHECK(run("select count(*) from w where name = \"zzz\"", t).rows[0][0].raw == "0");
    CHECK(run("select sum(score) from w where name = \"zzz\"", t).rows[0][0].kind ==
          CellKind::empty);
    CHECK(run("select min(score) from w where name = \"zzz\"", t).rows[0][0].kind ==
          CellKind::empty);
    const ExecError e = run_err("select avg(score) from w where name = \"zzz\"", t);
    CHECK(e.kind == ExecErrorKind::division_context);
}

TEST_CASE("typed errors instead of exceptions") {
    const Table t = fixture();
    CHECK(run_err("select nope from w", t).kind == ExecErrorKind::unknown_column);
    CHECK(run_err("select sum(name) from w", t).kind == ExecErrorKind::type_error);
    CHECK(run_err("select name from w group by city", t).kind == ExecErrorKind::type_error);
    CHECK(run_err("select * from w group by city", t).kind == ExecErrorKind::type_error);
    CHECK(run_err("select name from w order by max(score)", t).kind ==
          ExecErrorKind::type_error);
    CHECK(run_err("select city from w group by city having score > 1", t).kind ==
          ExecErrorKind::type_error);
    CHECK(run_err("select city from w group by city order by score", t).kind ==
          ExecErrorKind::type_error);
    CHECK(run_err("select distinct name from w order by score", t).kind ==
          ExecErrorKind::type_error);
}

TEST_CASE("groups form in encounter order, empty key included") {
    const Table t = fixture();
    const Table g = run("select city, count(*) from w group by city", t);
    CHECK(g.headers == std::vector<std::string>{"city", "count(*)"});
    REQUIRE(g.height() == 3);
    CHECK(g.rows[0][0].raw == "dhaka");
    CHECK(g.rows[0][1].raw == "3");
    CHECK(g.rows[1][0].raw == "pune");
    CHECK(g.rows[2][0].kind == CellKind::empty);
    CHECK(g.rows[2][1].raw == "1");

    CHECK(col0(run("select city from w group by city having count(*) > 1", t)) ==
          std::vector<std::string>{"dhaka"});

    const Table o = run("select city, count(*) from w group by city order by count(*) desc", t);
    CHECK(o.rows[0][0].raw == "dhaka");
    // Stable sort keeps pune ahead of the empty key on equal counts.
    CHECK(o.rows[1][0].raw == "pune");
    CHECK(o.rows[2][0].kind == CellKind::empty);
}

TEST_CASE("sorting is stable with null below number below text") {
    const Table t = fixture();
    const Table a = run("select name, score from w order by score desc, name", t);
    std::vector<std::string> names;
    for (const Row& r : a.rows) names.push_back(r[0].raw);
    CHECK(names == std::vector<std::string>{"alice", "dave", "carol", "42", "bob"});

    CHECK(col0(run("select name from w order by name limit 2", t)) ==
          std::vector<std::string>{"42", "alice"});
    CHECK(run("select name from w order by name limit 99", t).height() == 5);

    const Table d = run("select distinct city from w order by city", t);
    REQUIRE(d.height() == 3);
    CHECK(d.rows[0][0].kind == CellKind::empty);
    CHECK(d.rows[1][0].raw == "dhaka");
    CHECK(d.rows[2][0].raw == "pune");
}

TEST_CASE("distinct dedupes projected rows in encounter order") {
    const Table t = fixture();
    CHECK(col0(run("select distinct city from w", t)) ==
          std::vector<std::string>{"dhaka", "pune", ""});
    CHECK(run("select distinct name, city from w", t).height() == 5);
}

TEST_CASE("set operations fold left with per-part row typing") {
    const Table v = compound_fixture();
    CHECK(col0(run("select a from v union select a from v", v)) ==
          std::vector<std::string>{"1", "2", "3"});
    CHECK(run("select a from v union all select a from v", v).height() == 8);
    CHECK(col0(run("select a from v except select a from v where a = 2", v)) ==
          std::vector<std::string>{"1", "3"});
    CHECK(col0(run("select a from v intersect select a from v where a > 1", v)) ==
          std::vector<std::string>{"2", "3"});
    CHECK(col0(run("select a from v except select a from v where a = 2 "
                   "union select a from v where a = 2",
                   v)) == std::vector<std::string>{"1", "3", "2"});

    // Numeric 2 and text "2" stay distinct across parts.
    const Table mixed = run("select a from v union select b from v", v);
    CHECK(mixed.headers == std::vector<std::string>{"a"});
    CHECK(col0(mixed) == std::vector<std::string>{"1", "2", "3", "2", "x", "y", "z"});

    CHECK(col0(run("select a from v union select a from v order by a desc", v)) ==
          std::vector<std::string>{"3", "2", "1"});
    CHECK(run_err("select a from v union select a from v order by b", v).kind ==
          ExecErrorKind::type_error);
}

TEST_CASE("aggregate surface localizes through the lexicon") {
    const KeywordLexicon bn = load_lexicon(fs::path(TABQA_DATA_DIR) / "lexicon_bn.tsv");
    const Table t = fixture();
    const Table c = run("select count(name) from w", t, bn);
    CHECK(c.language == "bn");
    CHECK(c.headers == std::vector<std::string>{"গণনা(`name`)"});
    CHECK(c.rows[0][0].raw == "৫");
    CHECK(run("select count(*) from w", t, bn).headers[0] == "গণনা(*)");
    CHECK(run("select avg(score) from w", t, bn).rows[0][0].raw == "৭.৫");
    // min/max hand back source bytes, not relocalized ones.
    CHECK(run("select min(rate) from w", t, bn).rows[0][0].raw == "00.5");
}

TEST_CASE("empty input table degrades cleanly") {
    const Table e = make_table("e", {"x"}, {});
    CHECK(run("select count(*) from e", e).rows[0][0].raw == "0");
    CHECK(run("select sum(x) from e", e).rows[0][0].kind == CellKind::empty);
    CHECK(run("select min(x) from e", e).rows[0][0].kind == CellKind::empty);
    CHECK(run_err("select avg(x) from e", e).kind == ExecErrorKind::division_context);
    const Table sel = run("select x from e", e);
    CHECK(sel.height() == 0);
    CHECK(sel.headers == std::vector<std::string>{"x"});
}

TEST_CASE("batch execution is schedule independent") {
    const Table t = fixture();
    const Table v = compound_fixture();
    const char* sqls[] = {
        "select name from w where score = 10",
        "select city, count(*) from w group by city order by count(*) desc",
        "select nope from w",
        "select a from v union select b from v",
        "select avg(rate) from w",
        "select min(name) from w",
    };
    std::vector<QueryAst> asts;
    for (const char* s : sqls) asts.push_back(parse_sql(s));
    std::vector<std::pair<const QueryAst*, const Table*>> work;
    for (int rep = 0; rep < 8; ++rep)
        for (size_t i = 0; i < asts.size(); ++i)
            work.emplace_back(&asts[i], i < 3 ? &t : &v);

    const auto one = execute_batch(work, english_lexicon(), 1);
    const auto four = execute_batch(work, english_lexicon(), 4);
    REQUIRE(one.size() == four.size());
    for (size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].ok() == four[i].ok());
        if (one[i].ok()) {
            CHECK(one[i].answer->headers == four[i].answer->headers);
            CHECK(one[i].answer->rows == four[i].answer->rows);
        } else {
            CHECK(one[i].error->kind == four[i].error->kind);
        }
    }
}
