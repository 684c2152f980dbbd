#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forge/document.hpp"

namespace forge {

struct SubsetPlan {
    std::string name;
    std::uint64_t tokens = 0;  // single pass over the filtered subset
    std::uint64_t repeat = 1;
    // document counts are optional; zero original_docs means "not provided"
    std::uint64_t original_docs = 0;
    std::uint64_t filtered_docs = 0;

    // populated by plan_mixture
    std::uint64_t mixed_tokens = 0;
    double retention_pct = 0.0;
};

struct MixturePlan {
    std::vector<SubsetPlan> rows;  // ordered by original_docs desc, name asc
    std::uint64_t raw_token_total = 0;
    std::uint64_t mixed_token_total = 0;
    bool has_doc_counts = false;  // every row carried document counts
    std::uint64_t original_total = 0;
    std::uint64_t filtered_total = 0;
    double overall_retention_pct = 0.0;
    std::uint64_t repeat_cap = 4;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    std::string table() const;
};

// All totals use overflow-checked arithmetic. Repeat factors below one are an
// error; factors above the cap only warn, the plan still builds.
MixturePlan plan_mixture(std::vector<SubsetPlan> rows, std::uint64_t repeat_cap = 4);

// rows file: JSON array of objects with subset (or name), token_count (or
// tokens), repeat_factor (or repeat), optional original_docs/filtered_docs;
// unknown keys are ignored
std::vector<SubsetPlan> load_plan_rows(const std::string& json_text);

std::uint64_t epochs_plan(std::uint64_t corpus_tokens, std::uint64_t epochs);
std::uint64_t steps_to_tokens(std::uint64_t steps, std::uint64_t batch_tokens);
double tokens_per_parameter(std::uint64_t tokens, std::uint64_t params);

struct TokenCheck {
    std::uint64_t computed = 0;
    std::uint64_t reported = 0;
    double delta_pct = 0.0;
    bool flagged = false;  // delta above the threshold
};

TokenCheck check_reported(std::uint64_t computed, std::uint64_t reported,
                          double flag_threshold_pct = 1.0);

}  // namespace forge
