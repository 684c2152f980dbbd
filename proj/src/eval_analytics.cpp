#include "forge/eval_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("correlation inputs differ in length");
    if (x.size() < 2) throw DataError("correlation needs at least two points");
    std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // a flat series has no direction to correlate with; that is distinct
    // from a correlation of zero
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

const CorrCell& CorrelationTable::at(const std::string& benchmark,
                                     const std::string& model) const {
    auto bi = std::find(benchmarks.begin(), benchmarks.end(), benchmark);
    auto mi = std::find(models.begin(), models.end(), model);
    if (bi == benchmarks.end() || mi == models.end())
        throw DataError("no cell for " + benchmark + " x " + model);
    return cells[bi - benchmarks.begin()][mi - models.begin()];
}

CorrelationTable correlate_all(std::vector<ModelSeries> series) {
    CorrelationTable t;
    std::set<std::string> bench_set;
    for (auto& s : series) {
        if (s.name.empty()) throw DataError("model series without a name");
        t.models.push_back(s.name);
        std::sort(s.checkpoints.begin(), s.checkpoints.end(),
                  [](const CheckpointRecord& a, const CheckpointRecord& b) {
                      return a.tokens < b.tokens;
                  });
        for (auto& c : s.checkpoints)
            for (auto& [bench, score] : c.scores) bench_set.insert(bench);
    }
    t.benchmarks.assign(bench_set.begin(), bench_set.end());

    for (auto& bench : t.benchmarks) {
        std::vector<CorrCell> row;
        for (auto& s : series) {
            std::vector<double> xs, ys;
            for (auto& c : s.checkpoints) {
                if (auto it = c.scores.find(bench); it != c.scores.end()) {
                    xs.push_back(c.tokens);
                    ys.push_back(it->second);
                }
            }
            CorrCell cell;
            if (xs.size() < 2) {
                cell.flag = CorrFlag::too_few_points;
            } else if (auto r = pearson(xs, ys)) {
                cell.r = *r;
                cell.flag = CorrFlag::ok;
            } else {
                cell.flag = CorrFlag::zero_variance;
            }
            row.push_back(cell);
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

std::vector<ModelSeries> load_checkpoints_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("checkpoint file is empty");
    auto header = util::parse_csv_line(line);
    if (header != std::vector<std::string>{"model", "benchmark", "tokens_ingested", "score"})
        throw FormatError("checkpoint header must be model,benchmark,tokens_ingested,score");

    std::vector<ModelSeries> series;
    std::map<std::string, std::size_t> model_index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != 4)
            throw FormatError("checkpoint line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected 4");
        double tokens, score;
        try {
            tokens = std::stod(fields[2]);
            score = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw FormatError("checkpoint line " + std::to_string(lineno) +
                              " has a malformed number");
        }
        if (tokens < 0)
            throw DataError("checkpoint line " + std::to_string(lineno) +
                            " has negative tokens");

        auto [it, fresh] = model_index.emplace(fields[0], series.size());
        if (fresh) series.push_back(ModelSeries{fields[0], {}});
        auto& checkpoints = series[it->second].checkpoints;
        auto cp = std::find_if(checkpoints.begin(), checkpoints.end(),
                               [&](const CheckpointRecord& c) { return c.tokens == tokens; });
        if (cp == checkpoints.end()) {
            checkpoints.push_back(CheckpointRecord{tokens, {}});
            cp = checkpoints.end() - 1;
        }
        if (!cp->scores.emplace(fields[1], score).second)
            throw DataError("duplicate checkpoint for " + fields[0] + "/" + fields[1] +
                            " at the same token count (line " + std::to_string(lineno) + ")");
    }
    return series;
}

CorrelationTable load_correlations_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("correlation file is empty");
    auto header = util::parse_csv_line(line);
    if (header != std::vector<std::string>{"benchmark", "model", "r"})
        throw FormatError("correlation header must be benchmark,model,r");

    std::vector<std::string> models;
    std::vector<std::string> benchmarks;
    std::map<std::string, std::map<std::string, double>> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != 3)
            throw FormatError("correlation line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected 3");
        double r;
        try {
            r = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw FormatError("correlation line " + std::to_string(lineno) +
                              " has a malformed coefficient");
        }
        if (!(r >= -1.0 && r <= 1.0))
            throw DataError("correlation line " + std::to_string(lineno) +
                            " is outside [-1, 1]");
        if (std::find(models.begin(), models.end(), fields[1]) == models.end())
            models.push_back(fields[1]);
        if (std::find(benchmarks.begin(), benchmarks.end(), fields[0]) == benchmarks.end())
            benchmarks.push_back(fields[0]);
        if (!values[fields[0]].emplace(fields[1], r).second)
            throw DataError("duplicate correlation for " + fields[0] + "/" + fields[1]);
    }
    return correlation_table_from_values(std::move(models), std::move(benchmarks), values);
}

CorrelationTable correlation_table_from_values(
    std::vector<std::string> models, std::vector<std::string> benchmarks,
    const std::map<std::string, std::map<std::string, double>>& values) {
    CorrelationTable t;
    t.models = std::move(models);
    t.benchmarks = std::move(benchmarks);
    std::sort(t.benchmarks.begin(), t.benchmarks.end());
    for (auto& bench : t.benchmarks) {
        std::vector<CorrCell> row;
        auto bit = values.find(bench);
        for (auto& model : t.models) {
            CorrCell cell;
            cell.flag = CorrFlag::zero_variance;
            if (bit != values.end()) {
                if (auto mit = bit->second.find(model); mit != bit->second.end()) {
                    cell.r = mit->second;
                    cell.flag = CorrFlag::ok;
                }
            }
            row.push_back(cell);
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

namespace {

const char* flag_name(CorrFlag f) {
    switch (f) {
        case CorrFlag::ok: return "ok";
        case CorrFlag::too_few_points: return "too_few_points";
        case CorrFlag::zero_variance: return "zero_variance";
    }
    return "?";
}

std::string cell_text(const CorrCell& c) {
    if (c.flag == CorrFlag::ok) return util::format_double(*c.r, 2);
    return std::string("n/a (") + flag_name(c.flag) + ")";
}

}  // namespace

nlohmann::json CorrelationTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t b = 0; b < benchmarks.size(); ++b) {
        nlohmann::json cols = nlohmann::json::object();
        for (std::size_t m = 0; m < models.size(); ++m) {
            const CorrCell& c = cells[b][m];
            nlohmann::json cj{{"flag", flag_name(c.flag)}};
            if (c.r) cj["r"] = *c.r;
            cols[models[m]] = std::move(cj);
        }
        rows.push_back({{"benchmark", benchmarks[b]}, {"by_model", std::move(cols)}});
    }
    return nlohmann::json{{"kind", "correlation"}, {"models", models}, {"rows", rows}};
}

std::string CorrelationTable::table() const {
    std::vector<std::string> headers{"Benchmark"};
    headers.insert(headers.end(), models.begin(), models.end());
    util::TextTable t(headers);
    for (std::size_t b = 0; b < benchmarks.size(); ++b) {
        std::vector<std::string> row{benchmarks[b]};
        for (auto& c : cells[b]) row.push_back(cell_text(c));
        t.add_row(row);
    }
    return t.str();
}

std::string CorrelationTable::markdown() const {
    std::vector<std::string> headers{"Benchmark"};
    headers.insert(headers.end(), models.begin(), models.end());
    util::TextTable t(headers);
    for (std::size_t b = 0; b < benchmarks.size(); ++b) {
        std::vector<std::string> row{benchmarks[b]};
        for (auto& c : cells[b]) row.push_back(cell_text(c));
        t.add_row(row);
    }
    return t.markdown();
}

std::vector<std::string> reliability_select(const CorrelationTable& table, double threshold) {
    std::vector<std::string> selected;
    for (std::size_t b = 0; b < table.benchmarks.size(); ++b) {
        bool all_pass = !table.models.empty();
        for (auto& c : table.cells[b]) {
            if (c.flag != CorrFlag::ok || !(*c.r > threshold)) {
                all_pass = false;
                break;
            }
        }
        if (all_pass) selected.push_back(table.benchmarks[b]);
    }
    return selected;
}

Leaderboard build_leaderboard(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& model_scores,
    const std::vector<std::string>& benchmarks) {
    if (benchmarks.empty()) throw DataError("leaderboard needs at least one benchmark");
    Leaderboard lb;
    lb.benchmarks = benchmarks;
    for (auto& [name, scores] : model_scores) {
        LeaderboardEntry e;
        e.name = name;
        bool complete = true;
        double sum = 0.0;
        for (auto& bench : benchmarks) {
            auto it = scores.find(bench);
            if (it == scores.end()) {
                complete = false;
                break;
            }
            e.scores.push_back(it->second);
            sum += it->second;
        }
        if (!complete) {
            lb.excluded.push_back(name);
            continue;
        }
        e.mean = sum / static_cast<double>(benchmarks.size());
        lb.entries.push_back(std::move(e));
    }
    std::sort(lb.entries.begin(), lb.entries.end(),
              [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                  if (a.mean != b.mean) return a.mean > b.mean;
                  return a.name < b.name;
              });
    std::sort(lb.excluded.begin(), lb.excluded.end());
    return lb;
}

std::vector<std::pair<std::string, std::map<std::string, double>>> load_scores_csv(
    const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("score file is empty");
    auto header = util::parse_csv_line(line);
    if (header != std::vector<std::string>{"model", "benchmark", "score"})
        throw FormatError("score header must be model,benchmark,score");

    std::vector<std::pair<std::string, std::map<std::string, double>>> out;
    std::map<std::string, std::size_t> index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != 3)
            throw FormatError("score line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected 3");
        double score;
        try {
            score = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw FormatError("score line " + std::to_string(lineno) +
                              " has a malformed number");
        }
        auto [it, fresh] = index.emplace(fields[0], out.size());
        if (fresh) out.push_back({fields[0], {}});
        if (!out[it->second].second.emplace(fields[1], score).second)
            throw DataError("duplicate score for " + fields[0] + "/" + fields[1]);
    }
    return out;
}

nlohmann::json Leaderboard::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& e : entries) {
        nlohmann::json scores = nlohmann::json::object();
        for (std::size_t i = 0; i < benchmarks.size(); ++i) scores[benchmarks[i]] = e.scores[i];
        arr.push_back({{"model", e.name}, {"mean", e.mean}, {"scores", std::move(scores)}});
    }
    return nlohmann::json{{"kind", "leaderboard"},
                          {"benchmarks", benchmarks},
                          {"entries", arr},
                          {"excluded", excluded}};
}

namespace {

util::TextTable leaderboard_text_table(const Leaderboard& lb) {
    std::vector<std::string> headers{"Model", "Average"};
    headers.insert(headers.end(), lb.benchmarks.begin(), lb.benchmarks.end());
    util::TextTable t(headers);
    for (auto& e : lb.entries) {
        std::vector<std::string> row{e.name, util::format_double(e.mean, 2)};
        for (double s : e.scores) row.push_back(util::format_double(s, 2));
        t.add_row(row);
    }
    return t;
}

}  // namespace

std::string Leaderboard::table() const {
    std::string out = leaderboard_text_table(*this).str();
    for (auto& name : excluded) out += "excluded (missing scores): " + name + "\n";
    return out;
}

std::string Leaderboard::markdown() const {
    std::string out = leaderboard_text_table(*this).markdown();
    for (auto& name : excluded) out += "\nexcluded (missing scores): " + name;
    if (!excluded.empty()) out += "\n";
    return out;
}

double raw_win_rate(const WinRecord& rec) {
    std::uint64_t total = rec.wins + rec.base_wins;
    if (total == 0) throw DataError("win record " + rec.name + " has no matches");
    return static_cast<double>(rec.wins) / static_cast<double>(total);
}

WinRecordFile load_win_records_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("win record file is empty");
    auto header = util::parse_csv_line(line);
    const std::vector<std::string> required = {"model", "avg_length", "wins", "base_wins"};
    bool prefix_ok = header.size() >= 4 && std::equal(required.begin(), required.end(),
                                                      header.begin());
    WinRecordFile file;
    file.has_lc = header.size() >= 5 && header[4] == "lc_win_rate";
    file.has_std_err = header.size() == 6 && header[5] == "std_err";
    std::size_t want = 4 + (file.has_lc ? 1 : 0) + (file.has_std_err ? 1 : 0);
    if (!prefix_ok || header.size() != want)
        throw FormatError(
            "win record header must be model,avg_length,wins,base_wins[,lc_win_rate[,std_err]]");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        if (fields.size() != want)
            throw FormatError("win record line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(want));
        WinRecord r;
        try {
            r.name = fields[0];
            r.avg_length = std::stod(fields[1]);
            r.wins = std::stoull(fields[2]);
            r.base_wins = std::stoull(fields[3]);
            if (file.has_lc) r.lc_win_rate = std::stod(fields[4]);
            if (file.has_std_err) r.std_err = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw FormatError("win record line " + std::to_string(lineno) +
                              " has a malformed number");
        }
        file.records.push_back(std::move(r));
    }
    return file;
}

WinReport build_win_report(WinRecordFile file) {
    bool has_lc = file.has_lc;
    std::sort(file.records.begin(), file.records.end(),
              [has_lc](const WinRecord& a, const WinRecord& b) {
                  if (has_lc && a.lc_win_rate != b.lc_win_rate)
                      return a.lc_win_rate > b.lc_win_rate;
                  double ra = raw_win_rate(a), rb = raw_win_rate(b);
                  if (ra != rb) return ra > rb;
                  return a.name < b.name;
              });
    return WinReport{std::move(file.records), file.has_lc, file.has_std_err};
}

nlohmann::json WinReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : records) {
        nlohmann::json row{{"model", r.name},
                           {"avg_length", r.avg_length},
                           {"wins", r.wins},
                           {"base_wins", r.base_wins},
                           {"raw_win_rate", raw_win_rate(r)}};
        if (has_lc) row["lc_win_rate"] = r.lc_win_rate;
        if (has_std_err) row["std_err"] = r.std_err;
        arr.push_back(std::move(row));
    }
    return nlohmann::json{{"kind", "winrate"}, {"rows", arr}};
}

namespace {

util::TextTable win_text_table(const WinReport& rep) {
    std::vector<std::string> headers{"Model", "Avg length", "Wins", "Base wins", "Raw rate"};
    if (rep.has_lc) headers.push_back("LC rate %");
    if (rep.has_std_err) headers.push_back("Std err");
    util::TextTable t(headers);
    for (auto& r : rep.records) {
        std::vector<std::string> row{r.name, util::format_double(r.avg_length, 0),
                                     std::to_string(r.wins), std::to_string(r.base_wins),
                                     util::format_double(raw_win_rate(r), 4)};
        if (rep.has_lc) row.push_back(util::format_double(r.lc_win_rate, 2));
        if (rep.has_std_err) row.push_back(util::format_double(r.std_err, 4));
        t.add_row(std::move(row));
    }
    return t;
}

}  // namespace

std::string WinReport::table() const { return win_text_table(*this).str(); }

std::string WinReport::markdown() const { return win_text_table(*this).markdown(); }

}  // namespace forge
