#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// nullopt when either side has zero variance; DataError on length mismatch
// or fewer than two points
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CheckpointRecord {
    double tokens = 0.0;
    std::map<std::string, double> scores;  // benchmark -> score
};

struct ModelSeries {
    std::string name;
    std::vector<CheckpointRecord> checkpoints;
};

enum class CorrFlag { ok, too_few_points, zero_variance };

struct CorrCell {
    std::optional<double> r;
    CorrFlag flag = CorrFlag::ok;
};

struct CorrelationTable {
    std::vector<std::string> models;      // column order as given
    std::vector<std::string> benchmarks;  // sorted
    // cells[b][m] aligned with benchmarks x models
    std::vector<std::vector<CorrCell>> cells;

    const CorrCell& at(const std::string& benchmark, const std::string& model) const;

    nlohmann::json to_json() const;
    std::string table() const;
    std::string markdown() const;
};

// checkpoints are ordered by token count internally before correlating
CorrelationTable correlate_all(std::vector<ModelSeries> series);

// CSV with header model,benchmark,tokens_ingested,score; model column order
// follows first appearance; duplicate (model, benchmark, tokens) rows are an
// error
std::vector<ModelSeries> load_checkpoints_csv(const std::string& csv_text);

// CSV with header benchmark,model,r for precomputed coefficients
CorrelationTable load_correlations_csv(const std::string& csv_text);

// build from precomputed coefficients (missing entries become zero-variance)
CorrelationTable correlation_table_from_values(
    std::vector<std::string> models, std::vector<std::string> benchmarks,
    const std::map<std::string, std::map<std::string, double>>& values);

// benchmarks whose correlation is defined and strictly above the threshold in
// every model column
std::vector<std::string> reliability_select(const CorrelationTable& table,
                                            double threshold = 0.6);

struct LeaderboardEntry {
    std::string name;
    double mean = 0.0;
    std::vector<double> scores;  // aligned with the selected benchmark list
};

struct Leaderboard {
    std::vector<std::string> benchmarks;
    std::vector<LeaderboardEntry> entries;          // mean desc, name asc on ties
    std::vector<std::string> excluded;              // models missing a score

    nlohmann::json to_json() const;
    std::string table() const;
    std::string markdown() const;
};

Leaderboard build_leaderboard(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& model_scores,
    const std::vector<std::string>& benchmarks);

// CSV with header model,benchmark,score; model order follows first appearance
std::vector<std::pair<std::string, std::map<std::string, double>>> load_scores_csv(
    const std::string& csv_text);

struct WinRecord {
    std::string name;
    double avg_length = 0.0;
    std::uint64_t wins = 0;
    std::uint64_t base_wins = 0;
    double lc_win_rate = 0.0;  // length-controlled, externally supplied
    double std_err = 0.0;
};

double raw_win_rate(const WinRecord& rec);

// CSV with header model,avg_length,wins,base_wins and optional trailing
// lc_win_rate, std_err columns
struct WinRecordFile {
    std::vector<WinRecord> records;
    bool has_lc = false;
    bool has_std_err = false;
};

WinRecordFile load_win_records_csv(const std::string& csv_text);

struct WinReport {
    std::vector<WinRecord> records;  // best rate first, name asc on ties
    bool has_lc = false;
    bool has_std_err = false;

    nlohmann::json to_json() const;
    std::string table() const;
    std::string markdown() const;
};

WinReport build_win_report(WinRecordFile file);

}  // namespace forge
