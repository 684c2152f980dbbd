#include "forge/mixture.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

MixturePlan plan_mixture(std::vector<SubsetPlan> rows, std::uint64_t repeat_cap) {
    if (rows.empty()) throw DataError("mixture plan needs at least one subset");
    if (repeat_cap < 1) throw ConfigError("repeat cap must be >= 1");

    MixturePlan plan;
    plan.repeat_cap = repeat_cap;
    std::size_t with_docs = 0;
    for (auto& r : rows) {
        if (r.name.empty()) throw DataError("subset row without a name");
        if (r.original_docs == 0 && r.filtered_docs > 0)
            throw DataError("subset " + r.name + " has filtered documents but no input count");
        if (r.filtered_docs > r.original_docs)
            throw DataError("subset " + r.name + " keeps more documents than it started with");
        if (r.repeat < 1)
            throw DataError("subset " + r.name + " has repeat factor below one");
        if (r.repeat > repeat_cap)
            plan.warnings.push_back("subset " + r.name + " repeats " +
                                    std::to_string(r.repeat) + "x, above the cap of " +
                                    std::to_string(repeat_cap));

        r.mixed_tokens = util::checked_mul_u64(r.tokens, r.repeat, "mixed token count");
        if (r.original_docs > 0) {
            ++with_docs;
            r.retention_pct = 100.0 * static_cast<double>(r.filtered_docs) /
                              static_cast<double>(r.original_docs);
        }

        plan.original_total =
            util::checked_add_u64(plan.original_total, r.original_docs, "document total");
        plan.filtered_total =
            util::checked_add_u64(plan.filtered_total, r.filtered_docs, "document total");
        plan.raw_token_total =
            util::checked_add_u64(plan.raw_token_total, r.tokens, "token total");
        plan.mixed_token_total =
            util::checked_add_u64(plan.mixed_token_total, r.mixed_tokens, "token total");
    }
    if (with_docs != 0 && with_docs != rows.size())
        throw DataError("document counts must be given for every subset or for none");
    plan.has_doc_counts = with_docs == rows.size();
    if (plan.has_doc_counts)
        plan.overall_retention_pct = 100.0 * static_cast<double>(plan.filtered_total) /
                                     static_cast<double>(plan.original_total);

    std::sort(rows.begin(), rows.end(), [](const SubsetPlan& a, const SubsetPlan& b) {
        if (a.original_docs != b.original_docs) return a.original_docs > b.original_docs;
        return a.name < b.name;
    });
    plan.rows = std::move(rows);
    return plan;
}

std::vector<SubsetPlan> load_plan_rows(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw FormatError("plan rows file is not valid JSON");
    if (j.is_object() && j.contains("rows")) j = j["rows"];
    if (!j.is_array()) throw FormatError("plan rows file must hold a JSON array");

    std::vector<SubsetPlan> rows;
    for (auto& item : j) {
        if (!item.is_object()) throw FormatError("plan row is not a JSON object");
        SubsetPlan r;
        try {
            if (item.contains("subset")) r.name = item.at("subset").get<std::string>();
            else r.name = item.at("name").get<std::string>();
            if (item.contains("token_count")) r.tokens = item.at("token_count").get<std::uint64_t>();
            else r.tokens = item.at("tokens").get<std::uint64_t>();
            if (item.contains("repeat_factor"))
                r.repeat = item.at("repeat_factor").get<std::uint64_t>();
            else if (item.contains("repeat"))
                r.repeat = item.at("repeat").get<std::uint64_t>();
            if (item.contains("original_docs"))
                r.original_docs = item.at("original_docs").get<std::uint64_t>();
            if (item.contains("filtered_docs"))
                r.filtered_docs = item.at("filtered_docs").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("bad plan row: ") + e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::json MixturePlan::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : rows) {
        nlohmann::json row{{"subset", r.name},
                           {"repeat_factor", r.repeat},
                           {"token_count", r.tokens},
                           {"mixed_tokens", r.mixed_tokens}};
        if (has_doc_counts) {
            row["original_docs"] = r.original_docs;
            row["filtered_docs"] = r.filtered_docs;
            row["retention_pct"] = r.retention_pct;
        }
        arr.push_back(std::move(row));
    }
    nlohmann::json j{{"kind", "mixture"},
                     {"rows", arr},
                     {"raw_token_total", raw_token_total},
                     {"mixed_token_total", mixed_token_total},
                     {"repeat_cap", repeat_cap},
                     {"warnings", warnings}};
    if (has_doc_counts) {
        j["original_total"] = original_total;
        j["filtered_total"] = filtered_total;
        j["overall_retention_pct"] = overall_retention_pct;
    }
    return j;
}

std::string MixturePlan::table() const {
    std::vector<std::string> headers{"Subset"};
    if (has_doc_counts) {
        headers.push_back("Original docs");
        headers.push_back("Filtered docs");
        headers.push_back("Kept %");
    }
    headers.push_back("Repeat");
    headers.push_back("Tokens");
    headers.push_back("Mixed tokens");
    util::TextTable t(headers);
    auto add = [&](const std::string& name, std::uint64_t orig, std::uint64_t filt, double pct,
                   const std::string& repeat, std::uint64_t toks, std::uint64_t mixed) {
        std::vector<std::string> row{name};
        if (has_doc_counts) {
            row.push_back(util::format_with_commas(orig));
            row.push_back(util::format_with_commas(filt));
            row.push_back(util::format_double(pct, 2));
        }
        row.push_back(repeat);
        row.push_back(util::format_with_commas(toks));
        row.push_back(util::format_with_commas(mixed));
        t.add_row(std::move(row));
    };
    for (auto& r : rows)
        add(r.name, r.original_docs, r.filtered_docs, r.retention_pct, std::to_string(r.repeat),
            r.tokens, r.mixed_tokens);
    add("Total", original_total, filtered_total, overall_retention_pct, "", raw_token_total,
        mixed_token_total);
    std::string out = t.str();
    for (auto& w : warnings) out += "warning: " + w + "\n";
    return out;
}

std::uint64_t epochs_plan(std::uint64_t corpus_tokens, std::uint64_t epochs) {
    if (epochs < 1) throw DataError("epoch count must be >= 1");
    return util::checked_mul_u64(corpus_tokens, epochs, "epoch token total");
}

std::uint64_t steps_to_tokens(std::uint64_t steps, std::uint64_t batch_tokens) {
    if (batch_tokens == 0) throw DataError("batch token count must be positive");
    return util::checked_mul_u64(steps, batch_tokens, "token total");
}

double tokens_per_parameter(std::uint64_t tokens, std::uint64_t params) {
    if (params == 0) throw DataError("parameter count must be positive");
    return static_cast<double>(tokens) / static_cast<double>(params);
}

TokenCheck check_reported(std::uint64_t computed, std::uint64_t reported,
                          double flag_threshold_pct) {
    if (reported == 0) throw DataError("reported token count must be positive");
    TokenCheck c;
    c.computed = computed;
    c.reported = reported;
    double diff = std::fabs(static_cast<double>(computed) - static_cast<double>(reported));
    c.delta_pct = 100.0 * diff / static_cast<double>(reported);
    c.flagged = c.delta_pct > flag_threshold_pct;
    return c;
}

}  // namespace forge
