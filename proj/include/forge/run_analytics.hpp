#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forge/document.hpp"

namespace forge {

struct ModelDims {
    std::string name;
    std::uint64_t params = 0;
    std::uint64_t layers = 0;
    std::uint64_t d_model = 0;
    std::uint64_t d_mlp = 0;
    std::uint64_t heads = 0;
    std::uint64_t kv_heads = 0;
    std::uint64_t head_dim = 0;
    std::uint64_t ctx = 0;

    void validate() const;  // all fields positive, throws DataError
};

// JSON array of objects keyed params/layers/d_model/d_mlp/heads/kv_heads/
// head_dim/ctx; unknown keys ignored
std::vector<ModelDims> dims_from_json(const std::string& json_text);

enum class FlopsMode { dense_only, with_attention };

FlopsMode flops_mode_from_string(const std::string& s);  // "dense" | "attention"

// per-token training cost; the attention term adds the context-dependent part
std::uint64_t flops_per_token(const ModelDims& dims, FlopsMode mode);

inline constexpr double kA100Bf16Peak = 312e12;  // FLOP/s per accelerator

// fraction of peak, e.g. 0.43 for 43%
double model_flops_utilization(double throughput_tok_s, std::uint64_t flops_per_tok, int gpus,
                               double peak_flops = kA100Bf16Peak);

inline constexpr double kGridIntensityKgPerKwh = 0.37;
inline constexpr double kGpuHourRateUsd = 1.1;

double energy_to_emissions(double kwh, double intensity = kGridIntensityKgPerKwh);
double gpu_cost(double gpu_hours, double rate = kGpuHourRateUsd);

struct LossSeries {
    std::vector<double> steps;   // strictly increasing
    std::vector<double> losses;  // finite, same length

    void validate() const;  // throws DataError
};

// derivative by central differences (one-sided at the ends), then a centered
// moving average of the given width, truncated at the boundaries; output
// matches the input length
std::vector<double> loss_rate_of_change(const LossSeries& series, int smooth_window = 5);

struct TrainingRun {
    std::string model;
    int gpus = 0;
    double throughput_tok_s = 0.0;
    double hours = 0.0;
    double train_kwh = 0.0;
    double exp_kwh = 0.0;  // experiments and evaluation overhead
};

// CSV with header model,gpus,throughput_tok_s,hours,train_kwh,exp_kwh
std::vector<TrainingRun> load_runs_csv(const std::string& csv_text);

// CSV with header tokens,loss
LossSeries load_loss_csv(const std::string& csv_text);

struct RunRow {
    std::string model;
    int gpus = 0;
    double throughput_tok_s = 0.0;
    double per_gpu_tok_s = 0.0;
    double hours = 0.0;
    double gpu_hours = 0.0;
    std::uint64_t fpt_dense = 0;
    std::uint64_t fpt_attention = 0;
    double mfu_dense = 0.0;
    double mfu_attention = 0.0;
    double train_kwh = 0.0;
    double exp_kwh = 0.0;
    double emissions_kg = 0.0;
    double cost_usd = 0.0;
};

struct RunReport {
    std::vector<RunRow> rows;  // input order preserved
    double total_hours = 0.0;
    double total_train_kwh = 0.0;
    double total_exp_kwh = 0.0;
    double total_emissions_kg = 0.0;
    double total_cost_usd = 0.0;

    nlohmann::json to_json() const;
    std::string table() const;
};

// joins runs with dims by model name; a run without dims is an error
RunReport build_run_report(const std::vector<TrainingRun>& runs,
                           const std::vector<ModelDims>& dims,
                           double peak_flops = kA100Bf16Peak,
                           double intensity = kGridIntensityKgPerKwh,
                           double rate = kGpuHourRateUsd);

}  // namespace forge
