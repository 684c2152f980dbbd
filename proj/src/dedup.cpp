#include "forge/dedup.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <queue>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

static inline std::uint64_t rotl64(std::uint64_t x, int r) {
    return (x << r) | (x >> (64 - r));
}

static inline std::uint64_t fmix64(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdull;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ull;
    k ^= k >> 33;
    return k;
}

Fingerprint murmur3_x64_128(const void* data, std::size_t len, std::uint64_t key) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    const std::size_t nblocks = len / 16;

    std::uint64_t h1 = key;
    std::uint64_t h2 = key;
    const std::uint64_t c1 = 0x87c37b91114253d5ull;
    const std::uint64_t c2 = 0x4cf5ad432745937full;

    for (std::size_t i = 0; i < nblocks; ++i) {
        std::uint64_t k1, k2;
        std::memcpy(&k1, p + i * 16, 8);
        std::memcpy(&k2, p + i * 16 + 8, 8);

        k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
        h1 = rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729;
        k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
        h2 = rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5;
    }

    const std::uint8_t* tail = p + nblocks * 16;
    std::uint64_t k1 = 0, k2 = 0;
    switch (len & 15) {
        case 15: k2 ^= static_cast<std::uint64_t>(tail[14]) << 48; [[fallthrough]];
        case 14: k2 ^= static_cast<std::uint64_t>(tail[13]) << 40; [[fallthrough]];
        case 13: k2 ^= static_cast<std::uint64_t>(tail[12]) << 32; [[fallthrough]];
        case 12: k2 ^= static_cast<std::uint64_t>(tail[11]) << 24; [[fallthrough]];
        case 11: k2 ^= static_cast<std::uint64_t>(tail[10]) << 16; [[fallthrough]];
        case 10: k2 ^= static_cast<std::uint64_t>(tail[9]) << 8; [[fallthrough]];
        case 9:
            k2 ^= static_cast<std::uint64_t>(tail[8]);
            k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
            [[fallthrough]];
        case 8: k1 ^= static_cast<std::uint64_t>(tail[7]) << 56; [[fallthrough]];
        case 7: k1 ^= static_cast<std::uint64_t>(tail[6]) << 48; [[fallthrough]];
        case 6: k1 ^= static_cast<std::uint64_t>(tail[5]) << 40; [[fallthrough]];
        case 5: k1 ^= static_cast<std::uint64_t>(tail[4]) << 32; [[fallthrough]];
        case 4: k1 ^= static_cast<std::uint64_t>(tail[3]) << 24; [[fallthrough]];
        case 3: k1 ^= static_cast<std::uint64_t>(tail[2]) << 16; [[fallthrough]];
        case 2: k1 ^= static_cast<std::uint64_t>(tail[1]) << 8; [[fallthrough]];
        case 1:
            k1 ^= static_cast<std::uint64_t>(tail[0]);
            k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
            break;
        case 0: break;
    }

    h1 ^= static_cast<std::uint64_t>(len);
    h2 ^= static_cast<std::uint64_t>(len);
    h1 += h2;
    h2 += h1;
    h1 = fmix64(h1);
    h2 = fmix64(h2);
    h1 += h2;
    h2 += h1;
    return {h1, h2};
}

std::string normalize_for_hash(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_run = false;
    for (char c : util::trim(text)) {
        if (util::is_space(c)) {
            in_run = true;
        } else {
            if (in_run) out.push_back(' ');
            in_run = false;
            out.push_back(c);
        }
    }
    return out;
}

Fingerprint fingerprint(std::string_view text, std::uint64_t key) {
    std::string norm = normalize_for_hash(text);
    return murmur3_x64_128(norm.data(), norm.size(), key);
}

nlohmann::json DedupReport::to_json() const {
    nlohmann::json j;
    j["kind"] = "dedup";
    j["input_count"] = input_count;
    j["kept_count"] = kept_count;
    j["removed_count"] = removed_count;
    j["removed_by_subset"] = removed_by_subset;
    return j;
}

std::string DedupReport::table() const {
    util::TextTable t({"Subset", "Removed"});
    for (const auto& [subset, n] : removed_by_subset)
        t.add_row({subset, util::format_with_commas(n)});
    t.add_row({"(total removed)", util::format_with_commas(removed_count)});
    t.add_row({"(kept)", util::format_with_commas(kept_count)});
    t.add_row({"(input)", util::format_with_commas(input_count)});
    return t.str();
}

bool SequentialDedup::admit(const Document& doc) {
    return seen_.insert(fingerprint(doc.text, key_)).second;
}

ShardedDedup::ShardedDedup(std::uint64_t key, int shard_bits)
    : key_(key), shard_bits_(shard_bits), shards_(std::size_t(1) << shard_bits) {}

void ShardedDedup::filter_block(std::span<const Document> docs, std::vector<char>& keep) {
    const std::size_t n = docs.size();
    keep.assign(n, 0);
    std::vector<Fingerprint> fps(n);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        fps[i] = fingerprint(docs[i].text, key_);

    // Bucket indices by shard, then let each shard run keep-first over its
    // own slice in stream order. Equal fingerprints always land in the same
    // shard, so this reproduces the sequential result for any thread count.
    const int shift = 64 - shard_bits_;
    std::vector<std::vector<std::uint32_t>> buckets(shards_.size());
    for (std::size_t i = 0; i < n; ++i)
        buckets[fps[i].hi >> shift].push_back(static_cast<std::uint32_t>(i));

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(buckets.size()); ++s) {
        auto& seen = shards_[s];
        for (std::uint32_t i : buckets[s])
            keep[i] = seen.insert(fps[i]).second ? 1 : 0;
    }
}

SpillDedup::SpillDedup(std::string spill_dir, std::size_t run_capacity)
    : dir_(std::move(spill_dir)), run_capacity_(run_capacity) {
    buffer_.reserve(std::min<std::size_t>(run_capacity_, 1u << 16));
}

SpillDedup::~SpillDedup() {
    for (const auto& f : run_files_) std::remove(f.c_str());
}

void SpillDedup::observe(const Fingerprint& fp, std::uint64_t sequence_no) {
    if (finalized_) throw DataError("SpillDedup: observe after finalize");
    buffer_.push_back({fp, sequence_no});
    if (buffer_.size() >= run_capacity_) flush_run();
}

void SpillDedup::flush_run() {
    if (buffer_.empty()) return;
    std::sort(buffer_.begin(), buffer_.end(), [](const Entry& a, const Entry& b) {
        if (a.fp != b.fp) return a.fp < b.fp;
        return a.seq < b.seq;
    });
    std::string path = dir_ + "/forge-dedup-run-" + std::to_string(run_files_.size()) + "-" +
                       std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".bin";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot create spill run: " + path);
    std::size_t written = std::fwrite(buffer_.data(), sizeof(Entry), buffer_.size(), f);
    std::fclose(f);
    if (written != buffer_.size()) throw IoError("short write on spill run: " + path);
    run_files_.push_back(std::move(path));
    buffer_.clear();
}

void SpillDedup::finalize() {
    if (finalized_) return;
    flush_run();
    finalized_ = true;

    // k-way merge ordered by (fingerprint, seq); first entry per
    // fingerprint wins.
    struct Cursor {
        std::FILE* f;
        Entry cur;
        bool ok;
    };
    std::vector<Cursor> cursors;
    cursors.reserve(run_files_.size());
    for (const auto& path : run_files_) {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw IoError("cannot reopen spill run: " + path);
        Cursor c{f, {}, false};
        c.ok = std::fread(&c.cur, sizeof(Entry), 1, f) == 1;
        cursors.push_back(c);
    }

    auto greater = [&](std::size_t a, std::size_t b) {
        const Entry& ea = cursors[a].cur;
        const Entry& eb = cursors[b].cur;
        if (ea.fp != eb.fp) return eb.fp < ea.fp;
        return eb.seq < ea.seq;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < cursors.size(); ++i)
        if (cursors[i].ok) heap.push(i);

    bool have_prev = false;
    Fingerprint prev{};
    while (!heap.empty()) {
        std::size_t i = heap.top();
        heap.pop();
        const Entry& e = cursors[i].cur;
        if (!have_prev || e.fp != prev) {
            kept_seqs_.push_back(e.seq);
            prev = e.fp;
            have_prev = true;
        }
        cursors[i].ok = std::fread(&cursors[i].cur, sizeof(Entry), 1, cursors[i].f) == 1;
        if (cursors[i].ok) heap.push(i);
    }
    for (auto& c : cursors) std::fclose(c.f);

    std::sort(kept_seqs_.begin(), kept_seqs_.end());
    cursor_ = 0;
}

bool SpillDedup::kept(std::uint64_t sequence_no) {
    if (!finalized_) throw DataError("SpillDedup: kept before finalize");
    while (cursor_ < kept_seqs_.size() && kept_seqs_[cursor_] < sequence_no) ++cursor_;
    return cursor_ < kept_seqs_.size() && kept_seqs_[cursor_] == sequence_no;
}

std::pair<std::vector<Document>, DedupReport> dedup_documents(const std::vector<Document>& docs,
                                                              const DedupOptions& opts) {
    std::vector<Document> kept;
    DedupReport report;
    report.input_count = docs.size();

    auto remove = [&](const Document& d) {
        ++report.removed_count;
        ++report.removed_by_subset[d.subset];
    };

    if (opts.spill_to_disk) {
        SpillDedup spill(opts.spill_dir);
        for (const auto& d : docs) spill.observe(fingerprint(d.text, opts.hash_key), d.sequence_no);
        spill.finalize();
        for (const auto& d : docs) {
            if (spill.kept(d.sequence_no)) kept.push_back(d);
            else remove(d);
        }
    } else if (opts.threads > 1) {
        omp_set_num_threads(opts.threads);
        ShardedDedup sharded(opts.hash_key);
        std::vector<char> keep;
        for (std::size_t start = 0; start < docs.size(); start += opts.block_size) {
            std::size_t len = std::min(opts.block_size, docs.size() - start);
            sharded.filter_block(std::span(docs).subspan(start, len), keep);
            for (std::size_t i = 0; i < len; ++i) {
                if (keep[i]) kept.push_back(docs[start + i]);
                else remove(docs[start + i]);
            }
        }
    } else {
        SequentialDedup seq(opts.hash_key);
        for (const auto& d : docs) {
            if (seq.admit(d)) kept.push_back(d);
            else remove(d);
        }
    }

    report.kept_count = kept.size();
    return {std::move(kept), std::move(report)};
}

}  // namespace forge
