#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "forge/bpe.hpp"
#include "forge/errors.hpp"
#include "forge/util.hpp"
#include "nlohmann/json.hpp"

using namespace forge;

namespace {

// mirror of data/demo_vocab.json, small enough to verify merges by hand
const char* kVocab = R"({
    "<unk>": 0, "</s>": 1, "l": 2, "o": 3, "w": 4, "e": 5, "r": 6, "s": 7,
    "t": 8, "n": 9, "i": 10, "d": 11, "lo": 12, "low": 13, "er": 14,
    "es": 15, "est": 16, "ne": 17, "wi": 18, "new": 19, "newest": 20,
    "lower": 21, "lowest": 22, "wid": 23, "widest": 24})";
const char* kMerges =
    "l o\nlo w\ne r\ne s\nes t\nn e\nw i\nwi d\nne w\nnew est\nlow er\nlow est\nwid est\n";

BpeTokenizer demo() { return BpeTokenizer::load(kVocab, kMerges); }

// every byte token present turns the fallback on
std::string byte_fallback_vocab() {
    nlohmann::json v = nlohmann::json::object();
    int id = 0;
    v["</s>"] = id++;
    for (int b = 0; b < 256; ++b) {
        char name[8];
        std::snprintf(name, sizeof name, "<0x%02X>", b);
        v[name] = id++;
    }
    v["ab"] = id++;
    v["a"] = id++;
    v["b"] = id++;
    return v.dump();
}

}  // namespace

TEST_CASE("utf8 symbol splitting") {
    auto plain = utf8_symbols("abc");
    REQUIRE(plain.size() == 3);
    CHECK(plain[0] == "a");

    auto accented = utf8_symbols("s\xc3\xa3o");  // 'ã' is two bytes
    REQUIRE(accented.size() == 3);
    CHECK(accented[1] == "\xc3\xa3");

    auto emoji = utf8_symbols("a\xf0\x9f\x99\x82");
    REQUIRE(emoji.size() == 2);
    CHECK(emoji[1].size() == 4);

    // a stray continuation byte degrades to a single-byte symbol
    auto broken = utf8_symbols("a\xa0" "b");
    REQUIRE(broken.size() == 3);
    CHECK(broken[1] == "\xa0");

    // a truncated lead byte at end of input does the same
    auto cut = utf8_symbols("a\xc3");
    REQUIRE(cut.size() == 2);
    CHECK(cut[1] == "\xc3");
}

TEST_CASE("merge ranks applied lowest first, leftmost on ties") {
    auto tok = demo();
    CHECK(tok.merge_word("low") == std::vector<std::string>{"low"});
    CHECK(tok.merge_word("lower") == std::vector<std::string>{"lower"});
    CHECK(tok.merge_word("lowest") == std::vector<std::string>{"lowest"});
    CHECK(tok.merge_word("newest") == std::vector<std::string>{"newest"});
    CHECK(tok.merge_word("widest") == std::vector<std::string>{"widest"});
    CHECK(tok.merge_word("wide") == std::vector<std::string>{"wid", "e"});
    CHECK(tok.merge_word("old") == std::vector<std::string>{"o", "l", "d"});
    // "ee": no pair ranked, stays split
    CHECK(tok.merge_word("ee") == std::vector<std::string>{"e", "e"});
    // leftmost tie: "eses" has (e,s) twice; first application hits position 0
    CHECK(tok.merge_word("eses") == std::vector<std::string>{"es", "es"});
}

TEST_CASE("encoding maps through the vocabulary") {
    auto tok = demo();
    CHECK(tok.encode("low") == std::vector<std::int64_t>{13});
    CHECK(tok.encode("low lower lowest") == std::vector<std::int64_t>{13, 21, 22});
    CHECK(tok.encode("wide") == std::vector<std::int64_t>{23, 5});
    CHECK(tok.token_count("low lower lowest newest widest") == 5);
    CHECK(tok.token_count("wide wide") == 4);

    // unknown characters fall back to <unk>
    CHECK(tok.encode("z") == std::vector<std::int64_t>{0});
    REQUIRE(tok.unk_id().has_value());
    REQUIRE(tok.eos_id().has_value());
    CHECK(*tok.eos_id() == 1);
    CHECK(!tok.byte_fallback());
}

TEST_CASE("byte fallback covers anything") {
    auto tok = BpeTokenizer::load(byte_fallback_vocab(), "a b\n");
    CHECK(tok.byte_fallback());
    // U+00A1 encodes as bytes C2 A1
    auto ids = tok.encode("\xc2\xa1");
    REQUIRE(ids.size() == 2);
    CHECK(tok.token_for(ids[0]) == "<0xC2>");
    CHECK(tok.token_for(ids[1]) == "<0xA1>");
    // the ranked merge still wins where it applies
    auto merged = tok.encode("ab");
    REQUIRE(merged.size() == 1);
    CHECK(tok.token_for(merged[0]) == "ab");
}

TEST_CASE("no unk and no fallback is an error for unknown input") {
    auto tok = BpeTokenizer::load(R"({"a": 0, "</s>": 1})", "");
    CHECK_THROWS_AS(tok.encode("b"), DataError);
    CHECK(tok.encode("a") == std::vector<std::int64_t>{0});
}

TEST_CASE("vocabulary and merge validation") {
    CHECK_THROWS_AS(BpeTokenizer::load("[]", ""), FormatError);
    CHECK_THROWS_AS(BpeTokenizer::load(R"({"a": 0, "b": 2})", ""), FormatError);  // gap
    CHECK_THROWS_AS(BpeTokenizer::load(R"({"a": 0, "b": 0})", ""), FormatError);  // dup id
    CHECK_THROWS_AS(BpeTokenizer::load(R"({"a": 0, "b": 1})", "a c\n"), FormatError);
    // the merged pair must itself be a token
    CHECK_THROWS_AS(BpeTokenizer::load(R"({"a": 0, "b": 1})", "a b\n"), FormatError);
    CHECK_THROWS_AS(BpeTokenizer::load(R"({"a": 0, "b": 1, "ab": 2})", "a b\na b\n"),
                    FormatError);
    // comments and blank lines are fine
    auto tok = BpeTokenizer::load(R"({"a": 0, "b": 1, "ab": 2})", "# c\n\na b\n");
    CHECK(tok.vocab_size() == 3);
}

TEST_CASE("serialized forms round trip") {
    auto tok = demo();
    auto tok2 = BpeTokenizer::load(tok.vocab_json(), tok.merges_text());
    CHECK(tok2.vocab_size() == tok.vocab_size());
    CHECK(tok2.encode("low lower lowest") == tok.encode("low lower lowest"));
    CHECK(tok2.merges_text() == tok.merges_text());
}

TEST_CASE("corpus encoding appends one end-of-text token per document") {
    auto tok = demo();
    std::vector<Document> docs(3);
    docs[0].text = "low lower";
    docs[1].text = "newest";
    docs[2].text = "";
    auto stats = encode_corpus_serial(tok, docs);
    CHECK(stats.documents == 3);
    CHECK(stats.words == 3);
    CHECK(stats.tokens == tok.token_count(docs[0].text) + tok.token_count(docs[1].text) + 3);

    for (int threads : {2, 4}) {
        auto par = encode_corpus(tok, docs, threads);
        CHECK(par.tokens == stats.tokens);
        CHECK(par.words == stats.words);
    }

    auto no_eos = BpeTokenizer::load(R"({"a": 0})", "");
    CHECK_THROWS_AS(encode_corpus_serial(no_eos, docs), ConfigError);
}

TEST_CASE("longer merge lists never produce more tokens") {
    // prefix property over randomized texts drawn from the demo alphabet
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 10), words(1, 20);
    const std::string alphabet = "lowerstnid";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);

    auto merge_lines = util::split(kMerges, '\n');
    for (int round = 0; round < 25; ++round) {
        std::string text;
        int n = words(rng);
        for (int w = 0; w < n; ++w) {
            if (w) text += ' ';
            int l = len(rng);
            for (int c = 0; c < l; ++c) text += alphabet[pick(rng)];
        }
        std::uint64_t last = UINT64_MAX;
        for (std::size_t k = 0; k <= 13; ++k) {
            std::string merges;
            for (std::size_t i = 0; i < k; ++i) merges += merge_lines[i] + "\n";
            auto tok = BpeTokenizer::load(kVocab, merges);
            auto count = tok.token_count(text);
            CHECK(count <= last);
            last = count;
        }
    }
}

TEST_CASE("compression report ranks by tokens per word") {
    std::vector<CompressionRow> rows(4);
    rows[0] = {.name = "loose", .vocab_size = 100, .tokens = 300, .words = 100};
    rows[1] = {.name = "tight", .vocab_size = 200, .tokens = 150, .words = 100};
    rows[2] = {.name = "tight-small", .vocab_size = 50, .tokens = 150, .words = 100};
    rows[3] = {.name = "broken", .ok = false, .error = "missing vocab"};
    auto report = make_compression_report(rows);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].name == "tight-small");  // tie broken by vocab size
    CHECK(report.rows[1].name == "tight");
    CHECK(report.rows[2].name == "loose");
    CHECK(report.rows[3].name == "broken");
    CHECK(report.rows[0].tokens_per_word == doctest::Approx(1.5));

    auto j = report.to_json();
    CHECK(j.at("kind") == "compression");
    auto csv = report.csv();
    CHECK(csv.rfind("name,vocab_size,tokens,words,tokens_per_word,ok,error", 0) == 0);
    CHECK(report.table().find("tight-small") != std::string::npos);
}

TEST_CASE("a zero-word corpus cannot be scored") {
    std::vector<CompressionRow> rows(1);
    rows[0] = {.name = "x", .vocab_size = 10, .tokens = 5, .words = 0};
    auto report = make_compression_report(rows);
    CHECK(!report.rows[0].ok);
}
