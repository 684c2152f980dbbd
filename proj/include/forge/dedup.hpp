#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "forge/document.hpp"

namespace forge {

inline constexpr std::uint64_t kDefaultHashKey = 0;

// 128-bit digest of the keyed hash of normalized text.
struct Fingerprint {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    bool operator==(const Fingerprint&) const = default;
    auto operator<=>(const Fingerprint&) const = default;
};

struct FingerprintHash {
    std::size_t operator()(const Fingerprint& f) const noexcept {
        // halves are already well mixed
        return static_cast<std::size_t>(f.hi ^ (f.lo * 0x9e3779b97f4a7c15ull));
    }
};

// MurmurHash3 x64 128-bit. The key seeds both lanes; for keys below 2^32
// this matches the reference implementation's seeded output.
Fingerprint murmur3_x64_128(const void* data, std::size_t len, std::uint64_t key);

// Trims, collapses ASCII whitespace runs to single spaces. No case folding,
// no Unicode normalization.
std::string normalize_for_hash(std::string_view text);

Fingerprint fingerprint(std::string_view text, std::uint64_t key = kDefaultHashKey);

struct DedupReport {
    std::uint64_t input_count = 0;
    std::uint64_t kept_count = 0;
    std::uint64_t removed_count = 0;
    std::map<std::string, std::uint64_t> removed_by_subset;

    nlohmann::json to_json() const;
    std::string table() const;
};

// Serial reference path: one in-core seen-set, keep-first in stream order.
class SequentialDedup {
  public:
    explicit SequentialDedup(std::uint64_t key = kDefaultHashKey) : key_(key) {}

    // True when this document is the first occurrence of its fingerprint.
    bool admit(const Document& doc);

  private:
    std::uint64_t key_;
    std::unordered_set<Fingerprint, FingerprintHash> seen_;
};

// OpenMP path. Fingerprints are computed in parallel over a block, then the
// seen-sets are updated per digest shard (top bits of hi), one shard per
// task, so the outcome never depends on the thread count and matches the
// sequential path exactly.
class ShardedDedup {
  public:
    explicit ShardedDedup(std::uint64_t key = kDefaultHashKey, int shard_bits = 8);

    // keep[i] = first occurrence of docs[i]. State persists across blocks.
    void filter_block(std::span<const Document> docs, std::vector<char>& keep);

  private:
    std::uint64_t key_;
    int shard_bits_;
    std::vector<std::unordered_set<Fingerprint, FingerprintHash>> shards_;
};

// Bounded-memory mode: fingerprints spill to sorted runs on disk, a k-way
// merge picks the lowest sequence_no per digest, and a second pass over the
// documents emits the keepers. Output is identical to the in-core paths.
class SpillDedup {
  public:
    explicit SpillDedup(std::string spill_dir, std::size_t run_capacity = 1u << 20);
    ~SpillDedup();

    void observe(const Fingerprint& fp, std::uint64_t sequence_no);
    // Sorts/merges the runs; afterwards kept() answers in ascending
    // sequence_no order only.
    void finalize();
    bool kept(std::uint64_t sequence_no);

  private:
    void flush_run();

    std::string dir_;
    std::size_t run_capacity_;
    std::vector<std::string> run_files_;
    struct Entry {
        Fingerprint fp;
        std::uint64_t seq;
    };
    std::vector<Entry> buffer_;
    std::vector<std::uint64_t> kept_seqs_;  // ascending
    std::size_t cursor_ = 0;
    bool finalized_ = false;
};

struct DedupOptions {
    std::uint64_t hash_key = kDefaultHashKey;
    int threads = 1;           // >1 selects the sharded OpenMP path
    bool spill_to_disk = false;
    std::string spill_dir = "/tmp";
    std::size_t block_size = 4096;  // documents per parallel block
};

// Convenience driver over an in-memory stream; used by tests and small runs.
std::pair<std::vector<Document>, DedupReport> dedup_documents(const std::vector<Document>& docs,
                                                              const DedupOptions& opts = {});

}  // namespace forge
