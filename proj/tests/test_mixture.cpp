#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "forge/mixture.hpp"
#include "forge/errors.hpp"

using namespace forge;

namespace {

SubsetPlan row(std::string name, std::uint64_t tokens, std::uint64_t repeat,
               std::uint64_t original = 0, std::uint64_t filtered = 0) {
    SubsetPlan p;
    p.name = std::move(name);
    p.tokens = tokens;
    p.repeat = repeat;
    p.original_docs = original;
    p.filtered_docs = filtered;
    return p;
}

}  // namespace

TEST_CASE("mixture totals are exact integer arithmetic") {
    auto plan = plan_mixture({row("a", 1000, 1), row("b", 200, 4), row("c", 50, 2)});
    CHECK(plan.raw_token_total == 1250);
    CHECK(plan.mixed_token_total == 1000 + 800 + 100);
    CHECK(!plan.has_doc_counts);
    REQUIRE(plan.rows.size() == 3);
    CHECK(plan.rows[0].mixed_tokens == 1000);
    CHECK(plan.warnings.empty());
}

TEST_CASE("rows order by document count then name") {
    auto plan = plan_mixture({row("small", 10, 1, 5, 4), row("big", 10, 1, 100, 50),
                              row("alpha", 10, 1, 5, 2)});
    CHECK(plan.rows[0].name == "big");
    CHECK(plan.rows[1].name == "alpha");
    CHECK(plan.rows[2].name == "small");
}

TEST_CASE("retention appears only with full document counts") {
    auto plan = plan_mixture({row("a", 10, 1, 100, 80), row("b", 10, 1, 50, 25)});
    CHECK(plan.has_doc_counts);
    CHECK(plan.original_total == 150);
    CHECK(plan.filtered_total == 105);
    CHECK(plan.overall_retention_pct == doctest::Approx(70.0));
    CHECK(plan.rows[0].retention_pct == doctest::Approx(80.0));

    // half-annotated inputs are rejected rather than silently partial
    CHECK_THROWS_AS(plan_mixture({row("a", 10, 1, 100, 80), row("b", 10, 1)}), DataError);
}

TEST_CASE("impossible document counts are rejected") {
    CHECK_THROWS_AS(plan_mixture({row("a", 10, 1, 100, 120)}), DataError);
    // filtered docs without an original count
    SubsetPlan p = row("a", 10, 1, 0, 5);
    CHECK_THROWS_AS(plan_mixture({p}), DataError);
}

TEST_CASE("repeat factor bounds") {
    CHECK_THROWS_AS(plan_mixture({row("a", 10, 0)}), DataError);
    CHECK_THROWS_AS(plan_mixture({row("a", 10, 1)}, 0), ConfigError);
    CHECK_THROWS_AS(plan_mixture({}), DataError);

    auto warned = plan_mixture({row("a", 10, 9)}, 4);
    REQUIRE(warned.warnings.size() == 1);
    CHECK(warned.warnings[0].find("a") != std::string::npos);
    CHECK(warned.mixed_token_total == 90);  // warned, not clamped
}

TEST_CASE("token overflow is caught") {
    auto huge = std::numeric_limits<std::uint64_t>::max() / 2;
    CHECK_THROWS_AS(plan_mixture({row("a", huge, 4)}), DataError);
}

TEST_CASE("plan rows load from JSON with both spellings") {
    auto rows = load_plan_rows(R"({"rows": [
        {"subset": "a", "token_count": 100, "repeat_factor": 2, "ignored": true},
        {"name": "b", "tokens": 50, "repeat": 1}
    ]})");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].name == "a");
    CHECK(rows[0].tokens == 100);
    CHECK(rows[0].repeat == 2);
    CHECK(rows[1].name == "b");

    auto bare = load_plan_rows(R"([{"subset": "x", "tokens": 1}])");
    REQUIRE(bare.size() == 1);
    CHECK(bare[0].repeat == 1);  // defaulted

    CHECK_THROWS_AS(load_plan_rows("{}"), FormatError);
    CHECK_THROWS_AS(load_plan_rows(R"([{"tokens": 1}])"), FormatError);
}

TEST_CASE("plan serialization carries doc columns only when present") {
    auto with_docs = plan_mixture({row("a", 10, 1, 4, 2)});
    auto j = with_docs.to_json();
    CHECK(j.at("kind") == "mixture");
    CHECK(j.at("rows")[0].contains("original_docs"));
    CHECK(j.at("overall_retention_pct") == doctest::Approx(50.0));
    CHECK(with_docs.table().find("Kept %") != std::string::npos);

    auto bare = plan_mixture({row("a", 10, 1)});
    auto j2 = bare.to_json();
    CHECK(!j2.at("rows")[0].contains("original_docs"));
    CHECK(!j2.contains("overall_retention_pct"));
}

TEST_CASE("derived token quantities") {
    CHECK(epochs_plan(129504151552ull, 4) == 518016606208ull);
    CHECK(steps_to_tokens(320000, 524288) == 167772160000ull);
    CHECK(steps_to_tokens(1900000, 262144) == 498073600000ull);
    CHECK(tokens_per_parameter(515000000000ull, 2444618240ull) == doctest::Approx(210.67).epsilon(1e-3));
    CHECK(tokens_per_parameter(250000000000ull, 1100048384ull) == doctest::Approx(227.26).epsilon(1e-3));
    CHECK_THROWS_AS(tokens_per_parameter(1, 0), DataError);
}

TEST_CASE("published totals are compared with a one percent flag") {
    auto fine = check_reported(167772160000ull, 169000000000ull);
    CHECK(fine.delta_pct == doctest::Approx(0.7266).epsilon(1e-3));
    CHECK(!fine.flagged);

    auto off = check_reported(498073600000ull, 515000000000ull);
    CHECK(off.delta_pct == doctest::Approx(3.286).epsilon(1e-3));
    CHECK(off.flagged);

    auto exact = check_reported(100, 100);
    CHECK(exact.delta_pct == 0.0);
    CHECK(!exact.flagged);
}
