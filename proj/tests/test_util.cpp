#include <cstring>
#include <limits>

#include "doctest.h"
#include "forge/util.hpp"

using namespace forge;

TEST_CASE("trim and whitespace splitting") {
    CHECK(util::trim("  a b \t") == "a b");
    CHECK(util::trim("") == "");
    CHECK(util::trim(" \n\r ") == "");

    auto words = util::split_whitespace("  foo\tbar\nbaz  ");
    REQUIRE(words.size() == 3);
    CHECK(words[0] == "foo");
    CHECK(words[2] == "baz");
    CHECK(util::split_whitespace("").empty());
    CHECK(util::split_whitespace("   ").empty());
}

TEST_CASE("split on separator keeps empty fields") {
    auto parts = util::split("a,,b,", ',');
    REQUIRE(parts.size() == 4);
    CHECK(parts[1] == "");
    CHECK(parts[3] == "");
}

TEST_CASE("base64 known vectors and round trip") {
    CHECK(util::base64_encode("Man", 3) == "TWFu");
    CHECK(util::base64_encode("Ma", 2) == "TWE=");
    CHECK(util::base64_encode("M", 1) == "TQ==");

    const char blob[] = "\x00\xff\x10иま";
    auto enc = util::base64_encode(blob, sizeof blob - 1);
    auto dec = util::base64_decode(enc);
    REQUIRE(dec.size() == sizeof blob - 1);
    CHECK(std::memcmp(dec.data(), blob, dec.size()) == 0);

    CHECK_THROWS_AS(util::base64_decode("a!b="), FormatError);
}

TEST_CASE("checked arithmetic raises instead of wrapping") {
    // results are capped at INT64_MAX so JSON keeps them exact
    auto cap = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    CHECK(util::checked_add_u64(cap - 1, 1, "t") == cap);
    CHECK_THROWS_AS(util::checked_add_u64(cap, 1, "t"), DataError);
    CHECK(util::checked_mul_u64(1ull << 31, 1ull << 31, "t") == 1ull << 62);
    CHECK_THROWS_AS(util::checked_mul_u64(1ull << 32, 1ull << 32, "t"), DataError);
    CHECK(util::checked_mul_u64(0, cap, "t") == 0);
}

TEST_CASE("fixed precision formatting is stable") {
    CHECK(util::format_double(3.14159, 2) == "3.14");
    CHECK(util::format_double(-0.5, 0) == "-0");
    CHECK(util::format_double(70.25454, 2) == "70.25");
    CHECK(util::format_with_commas(0) == "0");
    CHECK(util::format_with_commas(999) == "999");
    CHECK(util::format_with_commas(129504151552ull) == "129,504,151,552");
}

TEST_CASE("csv parsing handles quotes") {
    auto plain = util::parse_csv_line("a,b,c");
    REQUIRE(plain.size() == 3);
    auto quoted = util::parse_csv_line(R"("a,b",c,"say ""hi""")");
    REQUIRE(quoted.size() == 3);
    CHECK(quoted[0] == "a,b");
    CHECK(quoted[2] == "say \"hi\"");
    CHECK(util::csv_escape("plain") == "plain");
    CHECK(util::csv_escape("a,b") == "\"a,b\"");
    CHECK(util::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("text table aligns columns") {
    util::TextTable t({"Name", "N"});
    t.add_row({"first", "1"});
    t.add_row({"much longer", "22"});
    auto s = t.str();
    CHECK(s.find("Name") != std::string::npos);
    CHECK(s.find("much longer") != std::string::npos);
    auto md = t.markdown();
    CHECK(md.find("| Name | N |") != std::string::npos);
    CHECK(md.find("|---|---|") != std::string::npos);
}

TEST_CASE("read_file reports missing paths") {
    CHECK_THROWS_AS(util::read_file("/nonexistent/forge-test-file"), IoError);
}
