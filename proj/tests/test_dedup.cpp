#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "forge/dedup.hpp"

using namespace forge;

namespace {

// reference output of the public x64_128 implementation, seeds 0 and 42
struct MurmurVector {
    const char* input;
    std::uint64_t key, hi, lo;
};
const MurmurVector kVectors[] = {
    {"", 0, 0x0000000000000000ull, 0x0000000000000000ull},
    {"a b", 0, 0x2db63eaffc6cc969ull, 0x5760c3f62570cf6eull},
    {"abc", 0, 0xb4963f3f3fad7867ull, 0x3ba2744126ca2d52ull},
    {"hello world", 0, 0x533f6046eb7f610eull, 0xab97467d60eb63b1ull},
    {"The quick brown fox jumps over the lazy dog", 0, 0xe34bbc7bbc071b6cull,
     0x7a433ca9c49a9347ull},
    {"", 42, 0xf02aa77dfa1b8523ull, 0xd1016610da11cbb9ull},
    {"a b", 42, 0x9676b8b209e7abc3ull, 0x28e1b7fa40669422ull},
    {"abc", 42, 0x0d85089fb3cff7d6ull, 0x7510712b42353d30ull},
    {"hello world", 42, 0xc05292b747fc78c0ull, 0x85bdab5e19e59315ull},
    {"The quick brown fox jumps over the lazy dog", 42, 0x740dcf93fe0bd5d7ull,
     0xc4546cf4ec705c8full},
};

std::vector<Document> random_docs(std::size_t n, double dup_rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> letters(0, 25);
    std::uniform_int_distribution<int> len(3, 30);
    std::vector<Document> docs(n);
    for (std::size_t i = 0; i < n; ++i) {
        docs[i].id = "d" + std::to_string(i);
        docs[i].subset = i % 4 ? "a" : "b";
        docs[i].sequence_no = i;
        if (i > 0 && coin(rng) < dup_rate) {
            std::uniform_int_distribution<std::size_t> back(0, i - 1);
            docs[i].text = docs[back(rng)].text;
        } else {
            int l = len(rng);
            for (int c = 0; c < l; ++c) docs[i].text += static_cast<char>('a' + letters(rng));
        }
    }
    return docs;
}

std::vector<std::string> ids(const std::vector<Document>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.id);
    return out;
}

}  // namespace

TEST_CASE("hash matches the reference implementation") {
    for (const auto& v : kVectors) {
        auto f = murmur3_x64_128(v.input, std::string_view(v.input).size(), v.key);
        CHECK(f.hi == v.hi);
        CHECK(f.lo == v.lo);
    }
}

TEST_CASE("normalization collapses whitespace only") {
    CHECK(normalize_for_hash("  a\t b\n") == "a b");
    CHECK(normalize_for_hash("a  \r\n  b") == "a b");
    CHECK(normalize_for_hash("AbC") == "AbC");  // no case folding
    CHECK(normalize_for_hash("") == "");
    // fingerprints see the normalized text
    CHECK(fingerprint(" a   b ") == fingerprint("a b"));
    CHECK(fingerprint("a b") != fingerprint("a c"));
    CHECK(fingerprint("a b", 1) != fingerprint("a b", 2));
}

TEST_CASE("first occurrence wins") {
    std::vector<Document> docs;
    docs.push_back({.id = "keep", .subset = "a", .text = "same text"});
    docs.push_back({.id = "drop1", .subset = "b", .text = "same  text"});  // same after normalize
    docs.push_back({.id = "other", .subset = "a", .text = "different"});
    docs.push_back({.id = "drop2", .subset = "a", .text = "same text"});
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].sequence_no = i;

    auto [kept, report] = dedup_documents(docs);
    CHECK(ids(kept) == std::vector<std::string>{"keep", "other"});
    CHECK(report.input_count == 4);
    CHECK(report.kept_count == 2);
    CHECK(report.removed_count == 2);
    CHECK(report.removed_by_subset.at("a") == 1);
    CHECK(report.removed_by_subset.at("b") == 1);
}

TEST_CASE("sharded path agrees with the sequential one") {
    auto docs = random_docs(5000, 0.35, 11);
    DedupOptions serial;
    auto [kept_serial, rep_serial] = dedup_documents(docs, serial);
    for (int threads : {2, 4, 8}) {
        DedupOptions par;
        par.threads = threads;
        auto [kept_par, rep_par] = dedup_documents(docs, par);
        CHECK(ids(kept_par) == ids(kept_serial));
        CHECK(rep_par.removed_by_subset == rep_serial.removed_by_subset);
    }
}

TEST_CASE("dedup is idempotent") {
    auto docs = random_docs(2000, 0.5, 3);
    DedupOptions opts;
    opts.threads = 4;
    auto [once, rep1] = dedup_documents(docs, opts);
    auto [twice, rep2] = dedup_documents(once, opts);
    CHECK(ids(twice) == ids(once));
    CHECK(rep2.removed_count == 0);
}

TEST_CASE("spill mode gives the same answer") {
    auto docs = random_docs(3000, 0.4, 17);
    auto [kept_mem, rep_mem] = dedup_documents(docs);

    DedupOptions spill;
    spill.spill_to_disk = true;
    spill.spill_dir = std::filesystem::temp_directory_path().string();
    auto [kept_spill, rep_spill] = dedup_documents(docs, spill);
    CHECK(ids(kept_spill) == ids(kept_mem));
    CHECK(rep_spill.kept_count == rep_mem.kept_count);
}

TEST_CASE("hash key changes the fingerprints but not the decisions") {
    auto docs = random_docs(500, 0.3, 5);
    DedupOptions a, b;
    b.hash_key = 1234567;
    auto [kept_a, ra] = dedup_documents(docs, a);
    auto [kept_b, rb] = dedup_documents(docs, b);
    CHECK(ids(kept_a) == ids(kept_b));
}

TEST_CASE("dedup report serializes") {
    auto docs = random_docs(100, 0.5, 1);
    auto [kept, report] = dedup_documents(docs);
    auto j = report.to_json();
    CHECK(j.at("kind") == "dedup");
    CHECK(j.at("input_count") == 100);
    CHECK(j.at("kept_count").get<std::uint64_t>() == kept.size());
    CHECK(report.table().find("removed") != std::string::npos);
}
