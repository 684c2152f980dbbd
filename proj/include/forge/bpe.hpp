#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// split into UTF-8 codepoints; bytes that do not form a valid sequence
// become single-byte symbols
std::vector<std::string> utf8_symbols(std::string_view word);

inline const char* kEosToken = "</s>";
inline const char* kUnkToken = "<unk>";

class BpeTokenizer {
  public:
    // vocab: JSON object token -> id (ids dense 0..n-1); merges: "left right"
    // lines, '#' comments and blank lines skipped. Throws FormatError.
    static BpeTokenizer load(const std::string& vocab_json, const std::string& merges_text);

    std::string vocab_json() const;   // canonical form, round-trips through load
    std::string merges_text() const;

    // greedy merge loop: always apply the lowest-rank adjacent pair, the
    // leftmost occurrence on ties, until no ranked pair remains
    std::vector<std::string> merge_word(std::string_view word) const;

    std::vector<std::int64_t> encode(std::string_view text) const;
    std::uint64_t token_count(std::string_view text) const;

    std::size_t vocab_size() const { return id_of_.size(); }
    bool byte_fallback() const { return byte_fallback_; }
    std::optional<std::int64_t> eos_id() const { return eos_id_; }
    std::optional<std::int64_t> unk_id() const { return unk_id_; }
    const std::string& token_for(std::int64_t id) const { return token_of_.at(id); }

  private:
    std::unordered_map<std::string, std::int64_t> id_of_;
    std::vector<std::string> token_of_;  // index = id
    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::string, int> rank_;  // key "left\nright"
    bool byte_fallback_ = false;
    std::optional<std::int64_t> eos_id_;
    std::optional<std::int64_t> unk_id_;
};

struct CorpusTokenStats {
    std::uint64_t documents = 0;
    std::uint64_t words = 0;
    std::uint64_t tokens = 0;  // includes one end-of-text token per document
};

// Requires the end-of-text token in the vocab (ConfigError otherwise).
CorpusTokenStats encode_corpus(const BpeTokenizer& tok, std::span<const Document> docs,
                               int threads = 1);
CorpusTokenStats encode_corpus_serial(const BpeTokenizer& tok, std::span<const Document> docs);

struct CompressionRow {
    std::string name;
    std::uint64_t vocab_size = 0;
    std::uint64_t tokens = 0;
    std::uint64_t words = 0;
    double tokens_per_word = 0.0;
    bool ok = true;
    std::string error;
};

struct CompressionReport {
    std::vector<CompressionRow> rows;

    nlohmann::json to_json() const;
    std::string table() const;
    std::string csv() const;
};

// Rows ordered by tokens_per_word, ties by vocab size; failed rows go last.
CompressionReport make_compression_report(std::vector<CompressionRow> rows);

}  // namespace forge
