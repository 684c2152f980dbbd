#include "forge/run_analytics.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

void ModelDims::validate() const {
    if (name.empty()) throw DataError("model entry without a name");
    if (params == 0 || layers == 0 || d_model == 0 || d_mlp == 0 || heads == 0 ||
        kv_heads == 0 || head_dim == 0 || ctx == 0)
        throw DataError("model " + name + " has a zero dimension");
}

std::vector<ModelDims> dims_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw FormatError("model dimension file is not valid JSON");
    if (j.is_object() && j.contains("models")) j = j["models"];
    if (!j.is_array()) throw FormatError("model dimension file must hold a JSON array");
    std::vector<ModelDims> out;
    for (auto& item : j) {
        if (!item.is_object()) throw FormatError("model dimension entry is not a JSON object");
        ModelDims d;
        try {
            d.name = item.at("name").get<std::string>();
            d.params = item.at("params").get<std::uint64_t>();
            d.layers = item.at("layers").get<std::uint64_t>();
            d.d_model = item.at("d_model").get<std::uint64_t>();
            d.d_mlp = item.at("d_mlp").get<std::uint64_t>();
            d.heads = item.at("heads").get<std::uint64_t>();
            d.kv_heads = item.at("kv_heads").get<std::uint64_t>();
            d.head_dim = item.at("head_dim").get<std::uint64_t>();
            d.ctx = item.at("ctx").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("bad model dimension entry: ") + e.what());
        }
        d.validate();
        out.push_back(std::move(d));
    }
    return out;
}

FlopsMode flops_mode_from_string(const std::string& s) {
    if (s == "dense") return FlopsMode::dense_only;
    if (s == "attention") return FlopsMode::with_attention;
    throw ConfigError("unknown flops mode: " + s + " (expected dense or attention)");
}

std::uint64_t flops_per_token(const ModelDims& dims, FlopsMode mode) {
    dims.validate();
    std::uint64_t fpt = util::checked_mul_u64(6, dims.params, "flops per token");
    if (mode == FlopsMode::with_attention) {
        std::uint64_t attn = util::checked_mul_u64(12, dims.layers, "flops per token");
        attn = util::checked_mul_u64(attn, dims.d_model, "flops per token");
        attn = util::checked_mul_u64(attn, dims.ctx, "flops per token");
        fpt = util::checked_add_u64(fpt, attn, "flops per token");
    }
    return fpt;
}

double model_flops_utilization(double throughput_tok_s, std::uint64_t flops_per_tok, int gpus,
                               double peak_flops) {
    if (!(throughput_tok_s > 0.0)) throw DataError("throughput must be positive");
    if (gpus < 1) throw DataError("accelerator count must be positive");
    if (!(peak_flops > 0.0)) throw ConfigError("peak FLOP/s must be positive");
    return throughput_tok_s * static_cast<double>(flops_per_tok) /
           (static_cast<double>(gpus) * peak_flops);
}

double energy_to_emissions(double kwh, double intensity) {
    if (kwh < 0.0) throw DataError("energy must be non-negative");
    if (!(intensity > 0.0)) throw ConfigError("grid intensity must be positive");
    return kwh * intensity;
}

double gpu_cost(double gpu_hours, double rate) {
    if (gpu_hours < 0.0) throw DataError("accelerator hours must be non-negative");
    if (!(rate > 0.0)) throw ConfigError("hourly rate must be positive");
    return gpu_hours * rate;
}

void LossSeries::validate() const {
    if (steps.size() != losses.size())
        throw DataError("loss series has mismatched step and loss counts");
    if (steps.size() < 2) throw DataError("loss series needs at least two points");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!std::isfinite(steps[i]) || !std::isfinite(losses[i]))
            throw DataError("loss series has a non-finite value at index " + std::to_string(i));
        if (i > 0 && !(steps[i] > steps[i - 1]))
            throw DataError("loss series steps must be strictly increasing");
    }
}

std::vector<double> loss_rate_of_change(const LossSeries& series, int smooth_window) {
    series.validate();
    if (smooth_window < 1) throw ConfigError("smoothing window must be >= 1");
    const auto& x = series.steps;
    const auto& y = series.losses;
    std::size_t n = x.size();

    std::vector<double> d(n);
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);

    int half = smooth_window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
        std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) sum += d[k];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

std::vector<TrainingRun> load_runs_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("run log is empty");
    auto header = util::parse_csv_line(line);
    const std::vector<std::string> expected = {"model", "gpus", "throughput_tok_s", "hours",
                                              "train_kwh", "exp_kwh"};
    if (header != expected)
        throw FormatError("run log header must be model,gpus,throughput_tok_s,hours,train_kwh,exp_kwh");

    std::vector<TrainingRun> runs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != 6)
            throw FormatError("run log line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected 6");
        TrainingRun r;
        try {
            r.model = fields[0];
            r.gpus = std::stoi(fields[1]);
            r.throughput_tok_s = std::stod(fields[2]);
            r.hours = std::stod(fields[3]);
            r.train_kwh = std::stod(fields[4]);
            r.exp_kwh = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw FormatError("run log line " + std::to_string(lineno) +
                              " has a malformed number");
        }
        runs.push_back(std::move(r));
    }
    return runs;
}

LossSeries load_loss_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("loss series is empty");
    auto header = util::parse_csv_line(line);
    if (header != std::vector<std::string>{"tokens", "loss"})
        throw FormatError("loss series header must be tokens,loss");

    LossSeries s;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != 2)
            throw FormatError("loss series line " + std::to_string(lineno) +
                              " has " + std::to_string(fields.size()) + " fields, expected 2");
        try {
            s.steps.push_back(std::stod(fields[0]));
            s.losses.push_back(std::stod(fields[1]));
        } catch (const std::exception&) {
            throw FormatError("loss series line " + std::to_string(lineno) +
                              " has a malformed number");
        }
    }
    s.validate();
    return s;
}

RunReport build_run_report(const std::vector<TrainingRun>& runs,
                           const std::vector<ModelDims>& dims, double peak_flops,
                           double intensity, double rate) {
    std::unordered_map<std::string, const ModelDims*> by_name;
    for (auto& d : dims) {
        d.validate();
        by_name[d.name] = &d;
    }

    RunReport rep;
    for (auto& run : runs) {
        auto it = by_name.find(run.model);
        if (it == by_name.end())
            throw DataError("run references unknown model: " + run.model);
        const ModelDims& d = *it->second;

        RunRow row;
        row.model = run.model;
        row.gpus = run.gpus;
        row.throughput_tok_s = run.throughput_tok_s;
        row.per_gpu_tok_s = run.throughput_tok_s / run.gpus;
        row.hours = run.hours;
        row.gpu_hours = run.hours * run.gpus;
        row.fpt_dense = flops_per_token(d, FlopsMode::dense_only);
        row.fpt_attention = flops_per_token(d, FlopsMode::with_attention);
        row.mfu_dense =
            model_flops_utilization(run.throughput_tok_s, row.fpt_dense, run.gpus, peak_flops);
        row.mfu_attention = model_flops_utilization(run.throughput_tok_s, row.fpt_attention,
                                                    run.gpus, peak_flops);
        row.train_kwh = run.train_kwh;
        row.exp_kwh = run.exp_kwh;
        row.emissions_kg = energy_to_emissions(run.train_kwh + run.exp_kwh, intensity);
        row.cost_usd = gpu_cost(row.gpu_hours, rate);

        rep.total_hours += run.hours;
        rep.total_train_kwh += run.train_kwh;
        rep.total_exp_kwh += run.exp_kwh;
        rep.total_emissions_kg += row.emissions_kg;
        rep.total_cost_usd += row.cost_usd;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : rows)
        arr.push_back({{"model", r.model},
                       {"gpus", r.gpus},
                       {"throughput_tok_s", r.throughput_tok_s},
                       {"per_gpu_tok_s", r.per_gpu_tok_s},
                       {"hours", r.hours},
                       {"gpu_hours", r.gpu_hours},
                       {"flops_per_token_dense", r.fpt_dense},
                       {"flops_per_token_attention", r.fpt_attention},
                       {"mfu_dense", r.mfu_dense},
                       {"mfu_attention", r.mfu_attention},
                       {"train_kwh", r.train_kwh},
                       {"exp_kwh", r.exp_kwh},
                       {"emissions_kg", r.emissions_kg},
                       {"cost_usd", r.cost_usd}});
    return nlohmann::json{{"kind", "runs"},
                          {"rows", arr},
                          {"total_hours", total_hours},
                          {"total_train_kwh", total_train_kwh},
                          {"total_exp_kwh", total_exp_kwh},
                          {"total_emissions_kg", total_emissions_kg},
                          {"total_cost_usd", total_cost_usd}};
}

std::string RunReport::table() const {
    util::TextTable t({"Model", "GPUs", "Tok/s", "Tok/s/GPU", "Hours", "MFU dense", "MFU attn",
                 "kWh", "CO2e kg", "Cost $"});
    for (auto& r : rows)
        t.add_row({r.model, std::to_string(r.gpus), util::format_with_commas(static_cast<std::uint64_t>(r.throughput_tok_s)),
                   util::format_with_commas(static_cast<std::uint64_t>(r.per_gpu_tok_s)),
                   util::format_double(r.hours, 0), util::format_double(100.0 * r.mfu_dense, 1) + "%",
                   util::format_double(100.0 * r.mfu_attention, 1) + "%",
                   util::format_double(r.train_kwh + r.exp_kwh, 0), util::format_double(r.emissions_kg, 0),
                   util::format_double(r.cost_usd, 0)});
    t.add_row({"Total", "", "", "", util::format_double(total_hours, 0), "", "",
               util::format_double(total_train_kwh + total_exp_kwh, 0),
               util::format_double(total_emissions_kg, 0), util::format_double(total_cost_usd, 0)});
    return t.str();
}

}  // namespace forge
