#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge {

enum class QualityLabel { low, high };

const char* to_string(QualityLabel l);
QualityLabel quality_label_from_string(const std::string& s);

// One text record. Records are immutable once ingested; sequence_no reflects
// ingestion order and is the dedup tie-breaker.
struct Document {
    std::string id;
    std::string subset;
    std::string text;
    std::optional<QualityLabel> quality_label;
    std::optional<double> quality_confidence;  // present iff quality_label is
    std::uint64_t sequence_no = 0;
    nlohmann::json extra = nlohmann::json::object();  // unknown input fields, preserved on output
};

struct IngestOptions {
    std::size_t max_record_bytes = 8ull << 20;
    std::string default_subset = "unknown";
    std::uint64_t first_sequence_no = 0;  // lets multi-file readers keep one sequence
};

struct IngestStats {
    std::uint64_t lines_read = 0;
    std::uint64_t yielded = 0;
    std::uint64_t skipped = 0;  // malformed or oversized lines
};

// Pull-based reader over line-delimited JSON. Malformed lines are counted,
// not fatal; a line over max_record_bytes is skipped the same way.
class JsonlReader {
  public:
    JsonlReader(std::istream& in, IngestOptions opts = {});

    std::optional<Document> next();
    const IngestStats& stats() const { return stats_; }

  private:
    std::istream& in_;
    IngestOptions opts_;
    IngestStats stats_;
    std::uint64_t next_seq_ = 0;
};

// Canonical one-line JSON form; parse_record is its inverse.
std::string to_jsonl_line(const Document& doc);

// Throws FormatError on schema violations (missing text, label without
// confidence, out-of-range confidence, ...).
Document parse_record(const std::string& line, const IngestOptions& opts, std::uint64_t sequence_no);

std::vector<Document> read_jsonl(std::istream& in, IngestOptions opts = {}, IngestStats* stats = nullptr);
void write_jsonl(std::ostream& out, const std::vector<Document>& docs);

struct SubsetStats {
    std::string subset;
    std::uint64_t doc_count = 0;
    std::optional<std::uint64_t> token_count;
    double share = 0.0;  // doc_count / total_docs
};

struct CorpusManifest {
    std::vector<SubsetStats> subsets;  // sorted by doc_count desc, then name
    std::uint64_t total_docs = 0;
    std::optional<std::uint64_t> total_tokens;
};

class ManifestBuilder {
  public:
    void add(const Document& doc);
    void add_counts(const std::string& subset, std::uint64_t docs,
                    std::optional<std::uint64_t> tokens = std::nullopt);
    // Shard-local builders can be merged associatively.
    void merge(const ManifestBuilder& other);
    CorpusManifest build() const;

  private:
    struct Tally {
        std::uint64_t docs = 0;
        std::uint64_t tokens = 0;
        bool has_tokens = false;
    };
    std::map<std::string, Tally> tallies_;
};

CorpusManifest build_manifest(const std::vector<Document>& docs);

nlohmann::json manifest_to_json(const CorpusManifest& m);
std::string manifest_table(const CorpusManifest& m);

}  // namespace forge
