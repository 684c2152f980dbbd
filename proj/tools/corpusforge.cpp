#include <omp.h>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "forge/bpe.hpp"
#include "forge/dedup.hpp"
#include "forge/document.hpp"
#include "forge/errors.hpp"
#include "forge/eval_analytics.hpp"
#include "forge/mixture.hpp"
#include "forge/quality.hpp"
#include "forge/run_analytics.hpp"
#include "forge/util.hpp"

using namespace forge;

namespace {

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        if (std::cin.bad()) throw IoError("failed reading standard input");
        return buf.str();
    }
    return util::read_file(path);
}

std::vector<Document> read_docs(const std::vector<std::string>& inputs, IngestOptions opts,
                                IngestStats* total_stats = nullptr) {
    std::vector<Document> docs;
    for (const auto& path : inputs) {
        std::ifstream file;
        if (path != "-") {
            file.open(path, std::ios::binary);
            if (!file) throw IoError("cannot open " + path);
        }
        std::istream& in = path == "-" ? std::cin : file;
        opts.first_sequence_no = docs.empty() ? 0 : docs.back().sequence_no + 1;
        IngestStats stats;
        for (auto d = read_jsonl(in, opts, &stats); auto& doc : d) docs.push_back(std::move(doc));
        if (total_stats) {
            total_stats->lines_read += stats.lines_read;
            total_stats->yielded += stats.yielded;
            total_stats->skipped += stats.skipped;
        }
    }
    return docs;
}

void write_docs(const std::string& path, const std::vector<Document>& docs) {
    if (path == "-") {
        write_jsonl(std::cout, docs);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_jsonl(out, docs);
    if (!out) throw IoError("failed writing " + path);
}

// --out: empty = table only, "-" = JSON to stdout (table suppressed),
// otherwise JSON file plus table
void emit_report(const nlohmann::json& report, const std::string& out_path,
                 const std::string& table, bool suppress_table = false) {
    std::string payload = report.dump(2);
    payload.push_back('\n');
    if (out_path == "-") {
        std::cout << payload;
        return;
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw IoError("cannot open " + out_path + " for writing");
        out << payload;
        if (!out) throw IoError("failed writing " + out_path);
    }
    if (!suppress_table) std::cout << table;
}

void progress(const std::string& msg) { std::cerr << "[corpusforge] " << msg << "\n"; }

std::string scalar_text(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

// fallback renderer for any kind-tagged report: scalars as key: value lines,
// arrays of objects as tables over the union of their keys
std::string render_generic(const nlohmann::json& j) {
    std::string out;
    for (auto& [key, value] : j.items())
        if (!value.is_array() && !value.is_object())
            out += key + ": " + scalar_text(value) + "\n";
    for (auto& [key, value] : j.items()) {
        if (value.is_object()) {
            for (auto& [sub, sv] : value.items())
                out += key + "." + sub + ": " + scalar_text(sv) + "\n";
        }
    }
    for (auto& [key, value] : j.items()) {
        if (!value.is_array()) continue;
        if (value.empty() || !value.front().is_object()) {
            if (!value.empty()) out += key + ": " + value.dump() + "\n";
            continue;
        }
        std::set<std::string> columns;
        for (auto& row : value)
            for (auto& [k, v] : row.items()) columns.insert(k);
        util::TextTable t({columns.begin(), columns.end()});
        for (auto& row : value) {
            std::vector<std::string> cells;
            for (auto& col : columns)
                cells.push_back(row.contains(col) ? scalar_text(row.at(col)) : "");
            t.add_row(std::move(cells));
        }
        out += "\n[" + key + "]\n" + t.str();
    }
    return out;
}

struct TokenizerSpec {
    std::string name, vocab_path, merges_path;
};

TokenizerSpec parse_tokenizer_spec(const std::string& spec) {
    auto eq = spec.find('=');
    auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || comma == std::string::npos || eq == 0)
        throw ConfigError("tokenizer spec must look like NAME=vocab.json,merges.txt: " + spec);
    return {spec.substr(0, eq), spec.substr(eq + 1, comma - eq - 1), spec.substr(comma + 1)};
}

// name,tokens rows with an optional vocab_size column
std::vector<CompressionRow> load_external_counts(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("external count file is empty");
    auto header = util::parse_csv_line(line);
    bool with_vocab = header == std::vector<std::string>{"name", "tokens", "vocab_size"};
    if (!with_vocab && header != std::vector<std::string>{"name", "tokens"})
        throw FormatError("external count header must be name,tokens[,vocab_size]");
    std::vector<CompressionRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != header.size())
            throw FormatError("external count line " + std::to_string(lineno) +
                              " has the wrong field count");
        CompressionRow r;
        r.name = fields[0];
        try {
            r.tokens = std::stoull(fields[1]);
            if (with_vocab) r.vocab_size = std::stoull(fields[2]);
        } catch (const std::exception&) {
            throw FormatError("external count line " + std::to_string(lineno) +
                              " has a malformed number");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

struct GlobalOpts {
    int threads = omp_get_max_threads();
    std::uint64_t seed = 42;
};

int run(CLI::App& app, const GlobalOpts& g);

}  // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    CLI::App app{"corpus curation and training analytics"};
    app.set_config("--config", "", "key-value file; explicit flags win");
    app.allow_config_extras(false);
    app.add_option("--threads", g.threads, "worker threads (default: all cores)");
    app.add_option("--seed", g.seed, "seed for anything randomized")->capture_default_str();
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "read record streams, report a corpus manifest");
    struct {
        std::vector<std::string> inputs{"-"};
        std::size_t max_bytes = 8ull << 20;
        std::string default_subset = "unknown";
        std::string emit, out;
    } ing;
    ingest->add_option("inputs", ing.inputs, "JSONL files, - for stdin");
    ingest->add_option("--max-record-bytes", ing.max_bytes, "skip longer lines")
        ->capture_default_str();
    ingest->add_option("--default-subset", ing.default_subset, "subset for untagged records")
        ->capture_default_str();
    ingest->add_option("--emit", ing.emit, "write the canonical record stream here");
    ingest->add_option("--out", ing.out, "manifest JSON destination, - for stdout");

    // ---- dedup ----
    auto* dedup = app.add_subcommand("dedup", "drop exact duplicates, keeping first occurrences");
    struct {
        std::vector<std::string> inputs{"-"};
        std::size_t max_bytes = 8ull << 20;
        std::string default_subset = "unknown";
        std::uint64_t key = kDefaultHashKey;
        bool spill = false;
        std::string spill_dir = "/tmp";
        std::string output, out;
    } dd;
    dedup->add_option("inputs", dd.inputs, "JSONL files, - for stdin");
    dedup->add_option("--max-record-bytes", dd.max_bytes)->capture_default_str();
    dedup->add_option("--default-subset", dd.default_subset)->capture_default_str();
    dedup->add_option("--key", dd.key, "hash key override")->capture_default_str();
    dedup->add_flag("--spill", dd.spill, "bounded-memory mode with on-disk runs");
    dedup->add_option("--spill-dir", dd.spill_dir, "directory for spill runs")
        ->capture_default_str();
    dedup->add_option("--output", dd.output, "kept records go here, - for stdout");
    dedup->add_option("--out", dd.out, "report JSON destination, - for stdout");

    // ---- filter-train ----
    auto* ftrain = app.add_subcommand("filter-train", "fit the quality classifier");
    struct {
        std::vector<std::string> inputs{"-"};
        std::string model_out;
        std::string score_field = "score";
        double lr = 0.5;
        int epochs = 10;
        std::uint32_t dim = 1u << 20;
        std::uint64_t hash_seed = 0;
        std::string out;
    } ft;
    ftrain->add_option("inputs", ft.inputs, "labeled JSONL files, - for stdin");
    ftrain->add_option("--model-out", ft.model_out, "where to write the model")->required();
    ftrain->add_option("--score-field", ft.score_field, "numeric field to binarize")
        ->capture_default_str();
    ftrain->add_option("--lr", ft.lr, "SGD learning rate")->capture_default_str();
    ftrain->add_option("--epochs", ft.epochs)->capture_default_str();
    ftrain->add_option("--feature-dim", ft.dim, "hashed feature buckets, power of two")
        ->capture_default_str();
    ftrain->add_option("--hash-seed", ft.hash_seed)->capture_default_str();
    ftrain->add_option("--out", ft.out, "training report destination, - for stdout");

    // ---- filter-eval ----
    auto* feval = app.add_subcommand("filter-eval", "score the classifier on labeled data");
    struct {
        std::vector<std::string> inputs{"-"};
        std::string model;
        std::string score_field = "score";
        std::string out;
    } fe;
    feval->add_option("inputs", fe.inputs, "labeled JSONL files, - for stdin");
    feval->add_option("--model", fe.model, "model file")->required();
    feval->add_option("--score-field", fe.score_field)->capture_default_str();
    feval->add_option("--out", fe.out, "report destination, - for stdout");

    // ---- filter-apply ----
    auto* fapply = app.add_subcommand("filter-apply", "drop confidently low-quality records");
    struct {
        std::vector<std::string> inputs{"-"};
        std::string model;
        double threshold = 0.95;
        bool use_annotations = false;
        std::string output, out;
    } fa;
    fapply->add_option("inputs", fa.inputs, "JSONL files, - for stdin");
    fapply->add_option("--model", fa.model, "model file (optional with --use-annotations)");
    fapply->add_option("--threshold", fa.threshold, "drop needs confidence strictly above this")
        ->capture_default_str();
    fapply->add_flag("--use-annotations", fa.use_annotations,
                     "prefer label/confidence fields already on the records");
    fapply->add_option("--output", fa.output, "kept records go here, - for stdout");
    fapply->add_option("--out", fa.out, "retention report destination, - for stdout");

    // ---- plan ----
    auto* plan = app.add_subcommand("plan", "repeated-epoch mixture totals from subset rows");
    struct {
        std::string rows;
        std::uint64_t cap = 4;
        std::uint64_t epochs = 0;
        std::uint64_t reported = 0;
        std::string out;
    } pl;
    plan->add_option("--rows", pl.rows, "subset rows JSON")->required();
    plan->add_option("--cap", pl.cap, "repeat factor warning threshold")->capture_default_str();
    plan->add_option("--epochs", pl.epochs, "also total the whole mixture over K epochs");
    plan->add_option("--reported-total", pl.reported,
                     "externally published total to diff against");
    plan->add_option("--out", pl.out, "plan JSON destination, - for stdout");

    // ---- tokbench ----
    auto* tokbench = app.add_subcommand("tokbench", "tokens-per-word compression comparison");
    struct {
        std::string text, corpus;
        std::vector<std::string> tokenizers;
        std::string external;
        std::string csv, out;
    } tb;
    tokbench->add_option("--text", tb.text, "reference text file");
    tokbench->add_option("--corpus", tb.corpus, "JSONL corpus instead of --text");
    tokbench->add_option("--tokenizer", tb.tokenizers, "NAME=vocab.json,merges.txt")
        ->take_all();
    tokbench->add_option("--external-counts", tb.external,
                         "name,tokens[,vocab_size] rows from outside encoders");
    tokbench->add_option("--csv", tb.csv, "also write the report as CSV");
    tokbench->add_option("--out", tb.out, "report destination, - for stdout");

    // ---- analytics ----
    auto* analytics = app.add_subcommand("analytics", "training-run measurement formulas");
    analytics->require_subcommand(1);
    struct {
        double kwh = 0.0, intensity = kGridIntensityKgPerKwh;
        std::string out;
    } em;
    auto* emissions = analytics->add_subcommand("emissions", "kWh times grid intensity");
    emissions->add_option("--kwh", em.kwh, "energy drawn")->required();
    emissions->add_option("--intensity", em.intensity, "kgCO2eq per kWh")
        ->capture_default_str();
    emissions->add_option("--out", em.out);

    struct {
        double hours = 0.0, rate = kGpuHourRateUsd;
        std::string out;
    } co;
    auto* cost = analytics->add_subcommand("cost", "accelerator hours times hourly rate");
    cost->add_option("--gpu-hours", co.hours)->required();
    cost->add_option("--rate", co.rate, "USD per accelerator hour")->capture_default_str();
    cost->add_option("--out", co.out);

    struct {
        std::string dims, model, out;
    } fl;
    auto* flops = analytics->add_subcommand("flops", "per-token training cost from dimensions");
    flops->add_option("--dims", fl.dims, "model dimension JSON")->required();
    flops->add_option("--model", fl.model, "limit to one model");
    flops->add_option("--out", fl.out);

    struct {
        std::string dims, model, out;
        double throughput = 0.0, peak = kA100Bf16Peak;
        int gpus = 0;
    } mf;
    auto* mfu = analytics->add_subcommand("mfu", "observed compute over hardware peak");
    mfu->add_option("--dims", mf.dims, "model dimension JSON")->required();
    mfu->add_option("--model", mf.model)->required();
    mfu->add_option("--throughput", mf.throughput, "aggregate tokens per second")->required();
    mfu->add_option("--gpus", mf.gpus)->required();
    mfu->add_option("--peak", mf.peak, "per-accelerator peak FLOP/s")->capture_default_str();
    mfu->add_option("--out", mf.out);

    struct {
        std::string runs, dims, out;
        double peak = kA100Bf16Peak, intensity = kGridIntensityKgPerKwh,
               rate = kGpuHourRateUsd;
    } ru;
    auto* runs = analytics->add_subcommand("runs", "full per-run report from logged measurements");
    runs->add_option("--runs", ru.runs, "run log CSV")->required();
    runs->add_option("--dims", ru.dims, "model dimension JSON")->required();
    runs->add_option("--peak", ru.peak)->capture_default_str();
    runs->add_option("--intensity", ru.intensity)->capture_default_str();
    runs->add_option("--rate", ru.rate)->capture_default_str();
    runs->add_option("--out", ru.out);

    struct {
        std::string series, out;
        int window = 5;
    } dl;
    auto* dloss = analytics->add_subcommand("dloss", "smoothed loss rate of change");
    dloss->add_option("--series", dl.series, "tokens,loss CSV")->required();
    dloss->add_option("--window", dl.window, "moving average width")->capture_default_str();
    dloss->add_option("--out", dl.out);

    struct {
        std::uint64_t steps = 0, batch = 0, reported = 0;
        std::string out;
    } tk;
    auto* tokens = analytics->add_subcommand("tokens", "optimizer steps times batch tokens");
    tokens->add_option("--steps", tk.steps)->required();
    tokens->add_option("--batch-tokens", tk.batch)->required();
    tokens->add_option("--reported", tk.reported, "published total to diff against");
    tokens->add_option("--out", tk.out);

    struct {
        std::uint64_t corpus = 0, epochs = 0, reported = 0;
        std::string out;
    } ep;
    auto* epochs = analytics->add_subcommand("epochs", "corpus tokens times epoch count");
    epochs->add_option("--corpus-tokens", ep.corpus)->required();
    epochs->add_option("--epochs", ep.epochs)->required();
    epochs->add_option("--reported", ep.reported, "published total to diff against");
    epochs->add_option("--out", ep.out);

    struct {
        std::uint64_t tokens = 0, params = 0;
        std::string out;
    } tp;
    auto* tpp = analytics->add_subcommand("tokens-per-param", "training tokens per parameter");
    tpp->add_option("--tokens", tp.tokens)->required();
    tpp->add_option("--params", tp.params)->required();
    tpp->add_option("--out", tp.out);

    // ---- evalcorr ----
    auto* evalcorr = app.add_subcommand(
        "evalcorr", "benchmark-vs-tokens correlation, reliability, leaderboard");
    struct {
        std::string checkpoints, correlations, scores, win_records, out;
        double threshold = 0.6;
    } ec;
    evalcorr->add_option("--checkpoints", ec.checkpoints,
                         "model,benchmark,tokens_ingested,score CSV");
    evalcorr->add_option("--correlations", ec.correlations,
                         "benchmark,model,r CSV of precomputed coefficients");
    evalcorr->add_option("--threshold", ec.threshold, "reliability cut, strictly above")
        ->capture_default_str();
    evalcorr->add_option("--scores", ec.scores, "model,benchmark,score CSV for the leaderboard");
    evalcorr->add_option("--win-records", ec.win_records,
                         "model,avg_length,wins,base_wins[,lc_win_rate[,std_err]] CSV");
    evalcorr->add_option("--out", ec.out, "report destination, - for stdout");

    // ---- report ----
    auto* report = app.add_subcommand("report", "render any emitted JSON report as text");
    struct {
        std::string input{"-"};
    } rp;
    report->add_option("input", rp.input, "report JSON file, - for stdin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    try {
        if (*ingest) {
            IngestOptions opts{ing.max_bytes, ing.default_subset};
            IngestStats stats;
            auto docs = read_docs(ing.inputs, opts, &stats);
            progress("read " + std::to_string(stats.yielded) + " documents, skipped " +
                     std::to_string(stats.skipped));
            if (!ing.emit.empty()) write_docs(ing.emit, docs);
            auto manifest = build_manifest(docs);
            nlohmann::json j = manifest_to_json(manifest);
            j["ingest"] = {{"lines_read", stats.lines_read},
                           {"yielded", stats.yielded},
                           {"skipped", stats.skipped}};
            emit_report(j, ing.out, manifest_table(manifest), ing.emit == "-");
        } else if (*dedup) {
            IngestOptions opts{dd.max_bytes, dd.default_subset};
            auto docs = read_docs(dd.inputs, opts);
            progress("deduplicating " + std::to_string(docs.size()) + " documents");
            DedupOptions dopts;
            dopts.hash_key = dd.key;
            dopts.threads = g.threads;
            dopts.spill_to_disk = dd.spill;
            dopts.spill_dir = dd.spill_dir;
            auto [kept, rep] = dedup_documents(docs, dopts);
            if (!dd.output.empty()) write_docs(dd.output, kept);
            emit_report(rep.to_json(), dd.out, rep.table(), dd.output == "-");
        } else if (*ftrain) {
            auto docs = read_docs(ft.inputs, {});
            auto harvest = labeled_from_documents(docs, ft.score_field);
            progress("training on " + std::to_string(harvest.labeled.size()) +
                     " labeled examples (" + std::to_string(harvest.skipped_band) +
                     " in the excluded band, " + std::to_string(harvest.skipped_unlabeled) +
                     " unlabeled)");
            TrainConfig cfg;
            cfg.learning_rate = ft.lr;
            cfg.epochs = ft.epochs;
            cfg.seed = g.seed;
            cfg.feature_dim = ft.dim;
            cfg.hash_seed = ft.hash_seed;
            TrainLog log;
            auto model = train_classifier(harvest.labeled, cfg, &log);
            for (std::size_t i = 0; i < log.epoch_loss.size(); ++i)
                progress("epoch " + std::to_string(i + 1) + " loss " +
                         util::format_double(log.epoch_loss[i], 6));
            std::ofstream mout(ft.model_out, std::ios::binary);
            if (!mout) throw IoError("cannot open " + ft.model_out + " for writing");
            mout << save_model(model) << "\n";
            if (!mout) throw IoError("failed writing " + ft.model_out);

            nlohmann::json j{{"kind", "train"},
                             {"examples", harvest.labeled.size()},
                             {"from_labels", harvest.from_labels},
                             {"from_scores", harvest.from_scores},
                             {"skipped_band", harvest.skipped_band},
                             {"skipped_unlabeled", harvest.skipped_unlabeled},
                             {"epochs", ft.epochs},
                             {"epoch_loss", log.epoch_loss},
                             {"final_accuracy", log.final_accuracy},
                             {"model", ft.model_out}};
            util::TextTable t({"Epoch", "Mean loss"});
            for (std::size_t i = 0; i < log.epoch_loss.size(); ++i)
                t.add_row({std::to_string(i + 1), util::format_double(log.epoch_loss[i], 6)});
            std::string table = t.str() + "training accuracy: " +
                                util::format_double(log.final_accuracy, 4) + "\n";
            emit_report(j, ft.out, table);
        } else if (*feval) {
            auto docs = read_docs(fe.inputs, {});
            auto harvest = labeled_from_documents(docs, fe.score_field);
            auto model = load_model(slurp(fe.model));
            auto rep = evaluate_classifier(model, harvest.labeled);
            emit_report(rep.to_json(), fe.out, rep.table());
        } else if (*fapply) {
            auto docs = read_docs(fa.inputs, {});
            FilterOptions opts;
            opts.policy.confidence_threshold = fa.threshold;
            opts.use_annotations = fa.use_annotations;
            opts.threads = g.threads;
            QualityModel model;
            bool have_model = !fa.model.empty();
            if (have_model) model = load_model(slurp(fa.model));
            auto [kept, rep] = apply_filter(docs, have_model ? &model : nullptr, opts);
            progress("kept " + std::to_string(rep.overall.kept) + " of " +
                     std::to_string(rep.overall.total));
            if (!fa.output.empty()) write_docs(fa.output, kept);
            emit_report(rep.to_json(), fa.out, rep.table(), fa.output == "-");
        } else if (*plan) {
            auto rows = load_plan_rows(slurp(pl.rows));
            auto mix = plan_mixture(std::move(rows), pl.cap);
            for (auto& w : mix.warnings) progress("warning: " + w);
            nlohmann::json j = mix.to_json();
            std::string extra;
            std::uint64_t compare_against = mix.mixed_token_total;
            if (pl.epochs > 0) {
                std::uint64_t total = epochs_plan(mix.raw_token_total, pl.epochs);
                j["epochs"] = {{"count", pl.epochs}, {"total_tokens", total}};
                extra += "tokens over " + std::to_string(pl.epochs) +
                         " epochs: " + util::format_with_commas(total) + "\n";
                compare_against = total;
            }
            if (pl.reported > 0) {
                auto check = check_reported(compare_against, pl.reported);
                j["reported"] = {{"computed", check.computed},
                                 {"reported", check.reported},
                                 {"delta_pct", check.delta_pct},
                                 {"flagged", check.flagged}};
                extra += "reported total " + util::format_with_commas(check.reported) +
                         " differs by " + util::format_double(check.delta_pct, 3) + "%" +
                         (check.flagged ? " (above 1% tolerance)" : "") + "\n";
            }
            emit_report(j, pl.out, mix.table() + extra);
        } else if (*tokbench) {
            if (tb.text.empty() == tb.corpus.empty())
                throw ConfigError("give exactly one of --text or --corpus");
            std::vector<CompressionRow> rows;
            std::string text;
            std::vector<Document> docs;
            std::uint64_t words = 0;
            if (!tb.text.empty()) {
                text = slurp(tb.text);
                words = util::split_whitespace(text).size();
                if (words == 0) throw DataError("reference text has no words");
            } else {
                docs = read_docs({tb.corpus}, {});
                for (auto& d : docs) words += util::split_whitespace(d.text).size();
            }
            for (auto& spec : tb.tokenizers) {
                auto ts = parse_tokenizer_spec(spec);
                CompressionRow row;
                row.name = ts.name;
                try {
                    auto tok = BpeTokenizer::load(util::read_file(ts.vocab_path),
                                                  util::read_file(ts.merges_path));
                    row.vocab_size = tok.vocab_size();
                    row.words = words;
                    row.tokens = tb.text.empty()
                                     ? encode_corpus(tok, docs, g.threads).tokens
                                     : tok.token_count(text);
                } catch (const Error& e) {
                    row.ok = false;
                    row.error = e.what();
                }
                rows.push_back(std::move(row));
            }
            if (!tb.external.empty()) {
                for (auto& row : load_external_counts(slurp(tb.external))) {
                    CompressionRow r = row;
                    r.words = words;
                    rows.push_back(std::move(r));
                }
            }
            auto rep = make_compression_report(std::move(rows));
            if (!tb.csv.empty()) {
                std::ofstream csv(tb.csv, std::ios::binary);
                if (!csv) throw IoError("cannot open " + tb.csv + " for writing");
                csv << rep.csv();
            }
            emit_report(rep.to_json(), tb.out, rep.table());
        } else if (*evalcorr) {
            if (ec.checkpoints.empty() == ec.correlations.empty())
                throw ConfigError("give exactly one of --checkpoints or --correlations");
            CorrelationTable table = ec.checkpoints.empty()
                                         ? load_correlations_csv(slurp(ec.correlations))
                                         : correlate_all(load_checkpoints_csv(slurp(ec.checkpoints)));
            auto selected = reliability_select(table, ec.threshold);
            nlohmann::json j{{"kind", "evalcorr"},
                             {"correlation", table.to_json()},
                             {"threshold", ec.threshold},
                             {"selected", selected}};
            std::string md = table.markdown() + "\nreliable above " +
                             util::format_double(ec.threshold, 2) + ": ";
            if (selected.empty()) md += "(none)";
            for (std::size_t i = 0; i < selected.size(); ++i)
                md += (i ? ", " : "") + selected[i];
            md += "\n";
            if (!ec.scores.empty()) {
                auto lb = build_leaderboard(load_scores_csv(slurp(ec.scores)), selected);
                j["leaderboard"] = lb.to_json();
                md += "\n" + lb.markdown();
            }
            if (!ec.win_records.empty()) {
                auto wr = build_win_report(load_win_records_csv(slurp(ec.win_records)));
                j["winrate"] = wr.to_json();
                md += "\n" + wr.markdown();
            }
            emit_report(j, ec.out, md);
        } else if (*report) {
            nlohmann::json j = nlohmann::json::parse(slurp(rp.input), nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("kind"))
                throw FormatError("input is not a kind-tagged JSON report");
            std::cout << render_generic(j);
        } else if (*emissions) {
            double kg = energy_to_emissions(em.kwh, em.intensity);
            nlohmann::json j{{"kind", "emissions"},
                             {"kwh", em.kwh},
                             {"intensity", em.intensity},
                             {"emissions_kg", kg}};
            emit_report(j, em.out, util::format_double(kg, 2) + " kgCO2eq\n");
        } else if (*cost) {
            double usd = gpu_cost(co.hours, co.rate);
            nlohmann::json j{{"kind", "cost"},
                             {"gpu_hours", co.hours},
                             {"rate", co.rate},
                             {"cost_usd", usd}};
            emit_report(j, co.out, util::format_double(usd, 2) + " USD\n");
        } else if (*flops) {
            auto dims = dims_from_json(slurp(fl.dims));
            nlohmann::json arr = nlohmann::json::array();
            util::TextTable t({"Model", "Dense", "With attention"});
            bool found = fl.model.empty();
            for (auto& d : dims) {
                if (!fl.model.empty() && d.name != fl.model) continue;
                found = true;
                std::uint64_t dense = flops_per_token(d, FlopsMode::dense_only);
                std::uint64_t attn = flops_per_token(d, FlopsMode::with_attention);
                arr.push_back({{"model", d.name}, {"dense", dense}, {"attention", attn}});
                t.add_row({d.name, util::format_with_commas(dense),
                           util::format_with_commas(attn)});
            }
            if (!found) throw DataError("no dimensions for model " + fl.model);
            emit_report(nlohmann::json{{"kind", "flops"}, {"rows", arr}}, fl.out, t.str());
        } else if (*mfu) {
            auto dims = dims_from_json(slurp(mf.dims));
            const ModelDims* d = nullptr;
            for (auto& cand : dims)
                if (cand.name == mf.model) d = &cand;
            if (!d) throw DataError("no dimensions for model " + mf.model);
            std::uint64_t dense = flops_per_token(*d, FlopsMode::dense_only);
            std::uint64_t attn = flops_per_token(*d, FlopsMode::with_attention);
            double mfu_dense = model_flops_utilization(mf.throughput, dense, mf.gpus, mf.peak);
            double mfu_attn = model_flops_utilization(mf.throughput, attn, mf.gpus, mf.peak);
            nlohmann::json j{{"kind", "mfu"},
                             {"model", mf.model},
                             {"throughput_tok_s", mf.throughput},
                             {"gpus", mf.gpus},
                             {"per_gpu_tok_s", mf.throughput / mf.gpus},
                             {"peak_flops", mf.peak},
                             {"flops_per_token_dense", dense},
                             {"flops_per_token_attention", attn},
                             {"mfu_dense", mfu_dense},
                             {"mfu_attention", mfu_attn}};
            std::string table = "dense " + util::format_double(100.0 * mfu_dense, 2) +
                                "%, with attention " +
                                util::format_double(100.0 * mfu_attn, 2) + "%\n";
            emit_report(j, mf.out, table);
        } else if (*runs) {
            auto rep = build_run_report(load_runs_csv(slurp(ru.runs)),
                                        dims_from_json(slurp(ru.dims)), ru.peak, ru.intensity,
                                        ru.rate);
            emit_report(rep.to_json(), ru.out, rep.table());
        } else if (*dloss) {
            auto series = load_loss_csv(slurp(dl.series));
            auto rates = loss_rate_of_change(series, dl.window);
            nlohmann::json arr = nlohmann::json::array();
            util::TextTable t({"Tokens", "d_loss"});
            for (std::size_t i = 0; i < rates.size(); ++i) {
                arr.push_back({{"tokens", series.steps[i]}, {"d_loss", rates[i]}});
                t.add_row({util::format_double(series.steps[i], 0),
                           util::format_double(rates[i], 8)});
            }
            nlohmann::json j{{"kind", "dloss"}, {"window", dl.window}, {"rows", arr}};
            emit_report(j, dl.out, t.str());
        } else if (*tokens) {
            std::uint64_t total = steps_to_tokens(tk.steps, tk.batch);
            nlohmann::json j{{"kind", "tokens"},
                             {"steps", tk.steps},
                             {"batch_tokens", tk.batch},
                             {"total_tokens", total}};
            std::string table = util::format_with_commas(total) + " tokens\n";
            if (tk.reported > 0) {
                auto check = check_reported(total, tk.reported);
                j["reported"] = {{"reported", check.reported},
                                 {"delta_pct", check.delta_pct},
                                 {"flagged", check.flagged}};
                table += "reported " + util::format_with_commas(check.reported) +
                         " differs by " + util::format_double(check.delta_pct, 3) + "%" +
                         (check.flagged ? " (above 1% tolerance)" : "") + "\n";
            }
            emit_report(j, tk.out, table);
        } else if (*epochs) {
            std::uint64_t total = epochs_plan(ep.corpus, ep.epochs);
            nlohmann::json j{{"kind", "tokens"},
                             {"corpus_tokens", ep.corpus},
                             {"epochs", ep.epochs},
                             {"total_tokens", total}};
            std::string table = util::format_with_commas(total) + " tokens\n";
            if (ep.reported > 0) {
                auto check = check_reported(total, ep.reported);
                j["reported"] = {{"reported", check.reported},
                                 {"delta_pct", check.delta_pct},
                                 {"flagged", check.flagged}};
                table += "reported " + util::format_with_commas(check.reported) +
                         " differs by " + util::format_double(check.delta_pct, 3) + "%" +
                         (check.flagged ? " (above 1% tolerance)" : "") + "\n";
            }
            emit_report(j, ep.out, table);
        } else if (*tpp) {
            double ratio = tokens_per_parameter(tp.tokens, tp.params);
            nlohmann::json j{{"kind", "tokens_per_param"},
                             {"tokens", tp.tokens},
                             {"params", tp.params},
                             {"tokens_per_param", ratio}};
            emit_report(j, tp.out, util::format_double(ratio, 2) + " tokens per parameter\n");
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
