#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <tabqa/tabqa.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

using namespace tabqa;

namespace {

const KeywordLexicon& bn() {
    static KeywordLexicon lex =
        load_lexicon(std::filesystem::path(TABQA_DATA_DIR) / "lexicon_bn.tsv");
    return lex;
}

const KeywordLexicon& hi() {
    static KeywordLexicon lex =
        load_lexicon(std::filesystem::path(TABQA_DATA_DIR) / "lexicon_hi.tsv");
    return lex;
}

}  // namespace

TEST_CASE("script blocks align to the lexicon digit rows") {
    CHECK(script_block(bn()).first == 0x0980u);
    CHECK(script_block(bn()).second == 0x09FFu);
    CHECK(script_block(hi()).first == 0x0900u);
    CHECK(script_block(hi()).second == 0x097Fu);
    CHECK(script_block(english_lexicon()).first == 0x0000u);
    CHECK(script_block(english_lexicon()).second == 0x007Fu);

    CHECK(has_script("কলাম", bn()));
    CHECK(has_script("x ৪৫", bn()));
    CHECK_FALSE(has_script("কলাম", hi()));
    CHECK(has_script("कॉलम", hi()));
    CHECK_FALSE(has_script("abc", bn()));
    // ASCII block: letters count, digits and punctuation do not.
    CHECK(has_script("abc", english_lexicon()));
    CHECK_FALSE(has_script("123 (|)", english_lexicon()));
    CHECK_FALSE(has_script("৪৫", english_lexicon()));
}

TEST_CASE("deterministic stages remap digits then keyword forms") {
    const std::string in =
        "নির্বাচন করুন গণনা(`a`) যেখানে `a` = \"b\" সীমা ৩";
    const std::string out = postprocess_text(in, bn(), hi());
    CHECK(out == "चुनें गणना(`a`) जहाँ `a` = \"b\" सीमा ३");
    CHECK(postprocess_text(out, bn(), hi()) == out);

    // Quoted payloads keep keyword forms but digits remap everywhere.
    const std::string quoted = "`সীমা১` যেখানে \"গণনা\"";
    const std::string q = postprocess_text(quoted, bn(), hi());
    CHECK(q == "`সীমা१` जहाँ \"গণনা\"");
}

TEST_CASE("audits count digit and keyword residue outside quotes") {
    const std::string in =
        "নির্বাচন করুন গণনা(`a`) যেখানে `a` = \"b\" সীমা ৩";
    const ScriptAudit before = audit_text(in, bn());
    CHECK(before.foreign_cells == 1);
    CHECK(before.digit_hits == 1);
    CHECK(before.keyword_hits == 4);

    const ScriptAudit after = audit_text(postprocess_text(in, bn(), hi()), bn());
    CHECK(after.foreign_cells == 0);
    CHECK(after.digit_hits == 0);
    CHECK(after.keyword_hits == 0);

    const Table t = make_table("pred", {"গণনা(`x`)", "plain"}, {{"৪২", "text"}}, "bn");
    const ScriptAudit audit = script_audit(t, bn());
    CHECK(audit.foreign_cells == 2);
    CHECK(audit.digit_hits == 2);
    CHECK(audit.keyword_hits == 1);
    CHECK(script_audit(t, hi()).foreign_cells == 0);
}

TEST_CASE("table postprocess without a hook reports untranslated residue") {
    const Table pred = make_table("pred", {"গণনা(`name`)"}, {{"৫"}, {"অমিত"}}, "bn");
    PostprocessReport rep;
    const Table out = postprocess(pred, bn(), hi(), {}, &rep);

    CHECK(out.language == "hi");
    CHECK(out.name == "pred");
    REQUIRE(out.headers.size() == 1);
    CHECK(out.headers[0] == "गणना(`name`)");
    REQUIRE(out.rows.size() == 2);
    CHECK(out.rows[0][0].raw == "५");
    CHECK(out.rows[1][0].raw == "অমিত");

    CHECK(rep.cells == 3);
    CHECK(rep.digit_remapped == 1);
    CHECK(rep.keyword_remapped == 1);
    CHECK(rep.translated == 0);
    CHECK(rep.untranslated == 1);

    const ScriptAudit audit = script_audit(out, bn());
    CHECK(audit.digit_hits == 0);
    CHECK(audit.keyword_hits == 0);
    CHECK(audit.foreign_cells == 1);
}

TEST_CASE("hook runs only on cells that still carry source script") {
    size_t calls = 0;
    const TranslatorHook hook = [&](const std::string& s) -> std::optional<std::string> {
        ++calls;
        if (s == "অমিত") return std::string("amit");
        return std::nullopt;
    };

    const Table pred =
        make_table("pred", {"h"}, {{"যেখানে ৪"}, {"plain"}, {"অমিত"}, {"ঢাকা"}}, "bn");
    PostprocessReport rep;
    const Table out = postprocess(pred, bn(), hi(), hook, &rep);

    // "যেখানে ৪" is fully consumed by the deterministic stages.
    CHECK(calls == 2);
    CHECK(out.rows[0][0].raw == "जहाँ ४");
    CHECK(out.rows[1][0].raw == "plain");
    CHECK(out.rows[2][0].raw == "amit");
    CHECK(out.rows[3][0].raw == "ঢাকা");
    CHECK(rep.cells == 5);
    CHECK(rep.translated == 1);
    CHECK(rep.untranslated == 1);
}

TEST_CASE("subprocess translator speaks one line per cell") {
    SubprocessTranslator cat("cat");
    CHECK(cat.alive());
    REQUIRE(cat("hello"));
    CHECK(*cat("hello") == "hello");
    CHECK(*cat("কলাম ৫") == "কলাম ৫");

    // Embedded newlines would desync the protocol; rejected locally.
    CHECK_FALSE(cat("a\nb"));
    CHECK(cat.alive());
    CHECK(*cat("next") == "next");
}

TEST_CASE("subprocess translator rewrites text through a filter") {
    SubprocessTranslator sed("sed -u 's/অমিত/amit/'");
    REQUIRE(sed("অমিত"));
    CHECK(*sed("অমিত") == "amit");
    CHECK(*sed("other") == "other");

    const Table pred = make_table("pred", {"h"}, {{"অমিত"}}, "bn");
    const TranslatorHook hook = [&](const std::string& s) { return sed(s); };
    PostprocessReport rep;
    const Table out = postprocess(pred, bn(), hi(), hook, &rep);
    CHECK(out.rows[0][0].raw == "amit");
    CHECK(rep.translated == 1);
    CHECK(rep.untranslated == 0);
}

TEST_CASE("a dead subprocess degrades to pass-through") {
    SubprocessTranslator dead("exit 0");
    CHECK_FALSE(dead("x"));
    CHECK_FALSE(dead.alive());
    CHECK_FALSE(dead("y"));

    const Table pred = make_table("pred", {"h"}, {{"অমিত"}}, "bn");
    const TranslatorHook hook = [&](const std::string& s) { return dead(s); };
    PostprocessReport rep;
    const Table out = postprocess(pred, bn(), hi(), hook, &rep);
    CHECK(out.rows[0][0].raw == "অমিত");
    CHECK(rep.translated == 0);
    CHECK(rep.untranslated == 1);
}

TEST_CASE("linearized text swaps sentinels before the stages") {
    const std::string in =
        "গণনা কত? <কলাম> গণনা(`x`) | শহর <রো ১> ৫ | ঢাকা <রো ২> ৪২ | পুনে";
    const std::string out = postprocess_linearized(in, bn(), hi());
    CHECK(out ==
          "गणना কত? <कॉलम> गणना(`x`) | শহর <रो १> ५ | ঢাকা <रो २> ४२ | পুনে");
    CHECK(postprocess_linearized(out, bn(), hi()) == out);

    const DecodeResult dec = decode_table(out, hi());
    CHECK_FALSE(dec.malformed);
    CHECK(dec.question == "गणना কত?");
    REQUIRE(dec.table.headers.size() == 2);
    CHECK(dec.table.headers[0] == "गणना(`x`)");
    CHECK(dec.table.headers[1] == "শহর");
    REQUIRE(dec.table.rows.size() == 2);
    CHECK(dec.table.rows[0][0].raw == "५");
    CHECK(dec.table.rows[1][1].raw == "পুনে");
}
