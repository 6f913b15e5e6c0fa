#include <string>

#include "doctest.h"
#include "testutil.hpp"
#include "xpandir/error.hpp"
#include "xpandir/toml_lite.hpp"

using namespace xpandir;

namespace {

toml::Value parse(const std::string& text) { return toml::parse(text, "test.toml"); }

}  // namespace

TEST_CASE("scalar values parse with their kinds") {
    toml::Value v = parse(
        "name = \"xpandir\"\n"
        "count = 42\n"
        "ratio = 0.75\n"
        "scientific = 1e3\n"
        "negative = -7\n"
        "on = true\n"
        "off = false\n");
    CHECK(v.at("name").as_string("name") == "xpandir");
    CHECK(v.at("count").as_int("count") == 42);
    CHECK(v.at("ratio").as_float("ratio") == 0.75);
    CHECK(v.at("scientific").as_float("scientific") == 1000.0);
    CHECK(v.at("negative").as_int("negative") == -7);
    CHECK(v.at("on").as_bool("on"));
    CHECK_FALSE(v.at("off").as_bool("off"));

    // integers satisfy float accessors, but not the reverse
    CHECK(v.at("count").as_float("count") == 42.0);
    CHECK_THROWS_AS(v.at("ratio").as_int("ratio"), ConfigError);
    CHECK_THROWS_AS(v.at("name").as_float("name"), ConfigError);
    CHECK_THROWS_AS(v.at("absent"), ConfigError);
    CHECK(v.find("absent") == nullptr);
}

TEST_CASE("string escapes and quoted keys") {
    toml::Value v = parse(
        "a = \"line\\nbreak\"\n"
        "b = \"tab\\there\"\n"
        "c = \"say \\\"hi\\\"\"\n"
        "d = \"back\\\\slash\"\n"
        "e = \"dash \\u2013 here\"\n"
        "\"quoted key\" = 1\n");
    CHECK(v.at("a").as_string("a") == "line\nbreak");
    CHECK(v.at("b").as_string("b") == "tab\there");
    CHECK(v.at("c").as_string("c") == "say \"hi\"");
    CHECK(v.at("d").as_string("d") == "back\\slash");
    CHECK(v.at("e").as_string("e") == "dash \xE2\x80\x93 here");
    CHECK(v.at("quoted key").as_int("quoted key") == 1);

    CHECK_THROWS_AS(parse("x = \"unterminated\n"), ConfigError);
    CHECK_THROWS_AS(parse("x = \"bad \\q escape\"\n"), ConfigError);
    CHECK_THROWS_AS(parse("x = \"bad \\uZZZZ\"\n"), ConfigError);
}

TEST_CASE("arrays parse inline, mixed, and empty") {
    toml::Value v = parse(
        "strings = [\"a\", \"b\", \"c\"]\n"
        "numbers = [1, 2, 3]\n"
        "trailing = [\"x\",]\n"
        "empty = []\n");
    CHECK(v.string_array("strings") == std::vector<std::string>{"a", "b", "c"});
    CHECK(v.at("numbers").as_array("numbers").size() == 3);
    CHECK(v.at("numbers").as_array("numbers")[2].as_int("n") == 3);
    CHECK(v.string_array("trailing") == std::vector<std::string>{"x"});
    CHECK(v.at("empty").as_array("empty").empty());

    CHECK_THROWS_AS(parse("x = [1, 2\n"), ConfigError);
    CHECK_THROWS_AS(v.string_array("numbers"), ConfigError);  // entries not strings
}

TEST_CASE("comments and blank lines are skipped") {
    toml::Value v = parse(
        "# leading comment\n"
        "\n"
        "a = 1  # trailing comment\n"
        "   \n"
        "b = \"x # not a comment\"\n");
    CHECK(v.at("a").as_int("a") == 1);
    CHECK(v.at("b").as_string("b") == "x # not a comment");
}

TEST_CASE("table headers nest and dotted paths create intermediates") {
    toml::Value v = parse(
        "top = 1\n"
        "[bm25]\n"
        "k1 = 1.2\n"
        "b = 0.75\n"
        "[outer.inner]\n"
        "deep = true\n");
    CHECK(v.at("top").as_int("top") == 1);
    CHECK(v.at("bm25").at("k1").as_float("k1") == 1.2);
    CHECK(v.at("outer").at("inner").at("deep").as_bool("deep"));
}

TEST_CASE("array-of-table headers append entries in order") {
    toml::Value v = parse(
        "[[query_sets]]\n"
        "lang = \"en\"\n"
        "path = \"queries.en.tsv\"\n"
        "[[query_sets]]\n"
        "lang = \"fr\"\n"
        "path = \"queries.fr.tsv\"\n"
        "[[matrix.plans]]\n"
        "strategy = \"cot\"\n");
    const auto& sets = v.at("query_sets").as_array("query_sets");
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].at("lang").as_string("lang") == "en");
    CHECK(sets[1].at("lang").as_string("lang") == "fr");
    const auto& plans = v.at("matrix").at("plans").as_array("plans");
    REQUIRE(plans.size() == 1);
    CHECK(plans[0].at("strategy").as_string("strategy") == "cot");

    // keys after a header land in the most recent array entry
    toml::Value w = parse(
        "[[jobs]]\n"
        "id = 1\n"
        "[jobs.opts]\n"
        "fast = true\n");
    CHECK(w.at("jobs").as_array("jobs")[0].at("opts").at("fast").as_bool("fast"));
}

TEST_CASE("parse errors carry the source name and line") {
    auto message_of = [](const std::string& text) {
        try {
            parse(text);
            return std::string("no error");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
    };
    CHECK(message_of("a = 1\na = 2\n").find("test.toml:2") == 0);
    CHECK(message_of("a = 1\na = 2\n").find("defined twice") != std::string::npos);
    CHECK(message_of("a 1\n").find("expected '='") != std::string::npos);
    CHECK(message_of("= 1\n").find("expected a key") != std::string::npos);
    CHECK(message_of("a = 1 stray\n").find("unexpected character") != std::string::npos);
    CHECK(message_of("[unclosed\n").find("table header") != std::string::npos);
    CHECK(message_of("a = what\n").find("cannot parse value") != std::string::npos);

    // same key in different tables is fine
    CHECK_NOTHROW(parse("[a]\nk = 1\n[b]\nk = 2\n"));
}

TEST_CASE("parse_file reads bytes and reports missing paths") {
    testutil::TempDir tmp("toml");
    testutil::spit(tmp.path / "c.toml", "k = \"v\"\n");
    toml::Value v = toml::parse_file(tmp.file("c.toml"));
    CHECK(v.at("k").as_string("k") == "v");
    CHECK_THROWS_AS(toml::parse_file(tmp.file("missing.toml")), IoError);

    // windows line endings parse cleanly
    testutil::spit(tmp.path / "crlf.toml", "a = 1\r\nb = 2\r\n");
    toml::Value w = toml::parse_file(tmp.file("crlf.toml"));
    CHECK(w.at("a").as_int("a") == 1);
    CHECK(w.at("b").as_int("b") == 2);
}
