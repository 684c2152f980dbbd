// Compares the serial reference kernels against their OpenMP versions on
// synthetic documents. Numbers are throughput, not correctness; the test
// suite owns equivalence checks.
#include <omp.h>

#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "forge/bpe.hpp"
#include "forge/dedup.hpp"
#include "forge/document.hpp"
#include "forge/quality.hpp"
#include "forge/util.hpp"

using namespace forge;

namespace {

std::vector<Document> synth_docs(std::size_t count, std::uint64_t seed) {
    static const char* good[] = {"lowest", "newest", "widest", "lower", "low",
                                 "wide",   "inside", "dinner", "towel", "stone"};
    static const char* spam[] = {"win", "now", "now", "free", "free", "click"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len(8, 40);
    std::uniform_int_distribution<int> pick_good(0, 9);
    std::uniform_int_distribution<int> pick_spam(0, 5);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<Document> docs;
    docs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Document d;
        d.id = "doc-" + std::to_string(i);
        d.subset = i % 3 ? "web" : "wiki";
        d.sequence_no = i;
        bool spammy = coin(rng) < 0.4;
        int words = len(rng);
        for (int w = 0; w < words; ++w) {
            if (w) d.text += ' ';
            d.text += spammy ? spam[pick_spam(rng)] : good[pick_good(rng)];
        }
        // ~25% duplicates so the dedup kernel has real work to do
        if (i > 4 && coin(rng) < 0.25) d.text = docs[i / 2].text;
        docs.push_back(std::move(d));
    }
    return docs;
}

QualityModel synth_model(const std::vector<Document>& docs) {
    std::vector<LabeledText> labeled;
    for (std::size_t i = 0; i < docs.size() && labeled.size() < 2000; ++i)
        labeled.push_back({docs[i].text,
                           docs[i].text.find("free") != std::string::npos ||
                                   docs[i].text.find("click") != std::string::npos
                               ? QualityLabel::low
                               : QualityLabel::high});
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.feature_dim = 1u << 16;
    return train_classifier(labeled, cfg);
}

BpeTokenizer synth_tokenizer() {
    const char* vocab = R"({"<unk>":0,"</s>":1,"l":2,"o":3,"w":4,"e":5,"r":6,"s":7,
        "t":8,"n":9,"i":10,"d":11,"c":12,"k":13,"f":14,"lo":15,"low":16,"er":17,
        "es":18,"est":19,"ne":20,"wi":21})";
    const char* merges = "l o\nlo w\ne r\ne s\nes t\nn e\nw i\n";
    return BpeTokenizer::load(vocab, merges);
}

struct Timing {
    double serial_s = 0.0;
    double parallel_s = 0.0;
};

void print_row(const char* name, std::size_t docs, const Timing& t) {
    std::printf("%-14s %12.0f %14.0f %9.2fx\n", name, docs / t.serial_s,
                docs / t.parallel_s, t.serial_s / t.parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t count = 200000;
    int threads = omp_get_max_threads();
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--quick")) count = 20000;
        else if (!std::strcmp(argv[i], "--docs") && i + 1 < argc) count = std::stoull(argv[++i]);
        else if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) threads = std::stoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: forge_bench [--quick] [--docs N] [--threads N]\n");
            return 2;
        }
    }

    auto docs = synth_docs(count, 7);
    std::printf("%zu synthetic documents, %d threads\n\n", docs.size(), threads);
    std::printf("%-14s %12s %14s %9s\n", "kernel", "serial/s", "parallel/s", "speedup");

    {
        Timing t;
        double t0 = omp_get_wtime();
        DedupOptions serial_opts;
        auto serial = dedup_documents(docs, serial_opts);
        t.serial_s = omp_get_wtime() - t0;
        DedupOptions par_opts;
        par_opts.threads = threads;
        t0 = omp_get_wtime();
        auto parallel = dedup_documents(docs, par_opts);
        t.parallel_s = omp_get_wtime() - t0;
        if (serial.first.size() != parallel.first.size()) {
            std::fprintf(stderr, "dedup mismatch: %zu vs %zu\n", serial.first.size(),
                         parallel.first.size());
            return 1;
        }
        print_row("dedup", docs.size(), t);
    }

    {
        auto model = synth_model(docs);
        FilterOptions serial_opts;
        Timing t;
        std::vector<char> serial, parallel;
        double t0 = omp_get_wtime();
        filter_block(docs, &model, serial_opts, serial);
        t.serial_s = omp_get_wtime() - t0;
        FilterOptions par_opts;
        par_opts.threads = threads;
        t0 = omp_get_wtime();
        filter_block(docs, &model, par_opts, parallel);
        t.parallel_s = omp_get_wtime() - t0;
        if (serial != parallel) {
            std::fprintf(stderr, "filter mismatch\n");
            return 1;
        }
        print_row("classify", docs.size(), t);
    }

    {
        auto tok = synth_tokenizer();
        Timing t;
        double t0 = omp_get_wtime();
        auto serial = encode_corpus_serial(tok, docs);
        t.serial_s = omp_get_wtime() - t0;
        t0 = omp_get_wtime();
        auto parallel = encode_corpus(tok, docs, threads);
        t.parallel_s = omp_get_wtime() - t0;
        if (serial.tokens != parallel.tokens) {
            std::fprintf(stderr, "encode mismatch: %llu vs %llu\n",
                         (unsigned long long)serial.tokens, (unsigned long long)parallel.tokens);
            return 1;
        }
        print_row("bpe-encode", docs.size(), t);
    }
    return 0;
}
