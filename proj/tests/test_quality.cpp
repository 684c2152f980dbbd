#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "forge/quality.hpp"
#include "forge/errors.hpp"

using namespace forge;

namespace {

// two easily separable vocabularies
std::vector<LabeledText> toy_corpus(std::size_t per_class, std::uint64_t seed) {
    static const char* clean[] = {"library", "research", "report",  "museum",
                                  "history", "science",  "article", "archive"};
    static const char* junk[] = {"click", "free", "winner", "promo", "buy", "now"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_words(5, 12);
    std::uniform_int_distribution<int> pc(0, 7), pj(0, 5);
    std::vector<LabeledText> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        std::string a, b;
        int n = n_words(rng);
        for (int w = 0; w < n; ++w) {
            if (w) a += ' ', b += ' ';
            a += clean[pc(rng)];
            b += junk[pj(rng)];
        }
        out.push_back({a, QualityLabel::high});
        out.push_back({b, QualityLabel::low});
    }
    return out;
}

QualityModel toy_model(std::uint64_t seed = 42) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.feature_dim = 1u << 16;
    cfg.seed = seed;
    return train_classifier(toy_corpus(60, 9), cfg);
}

Document annotated(std::string id, QualityLabel label, double conf) {
    Document d;
    d.id = std::move(id);
    d.subset = "s";
    d.text = "text";
    d.quality_label = label;
    d.quality_confidence = conf;
    return d;
}

}  // namespace

TEST_CASE("score band mapping") {
    CHECK(binarize_score(0.95) == QualityLabel::high);
    CHECK(binarize_score(0.8) == QualityLabel::high);
    CHECK(binarize_score(0.6) == QualityLabel::low);
    CHECK(binarize_score(0.0) == QualityLabel::low);
    CHECK(!binarize_score(0.7).has_value());
    CHECK(!binarize_score(0.79).has_value());
    CHECK_THROWS_AS(binarize_score(-0.01), DataError);
    CHECK_THROWS_AS(binarize_score(1.01), DataError);
}

TEST_CASE("hashed features are normalized and sorted") {
    QualityModel m;
    m.feature_dim = 1u << 12;
    auto f = hashed_features("the quick brown fox", m);
    REQUIRE(!f.empty());
    double norm = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        norm += f[i].second * f[i].second;
        CHECK(f[i].first < m.feature_dim);
        if (i) CHECK(f[i].first > f[i - 1].first);
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(hashed_features("the quick brown fox", m) == f);
    CHECK(hashed_features("", m).empty());

    // the seed relocates features
    QualityModel m2 = m;
    m2.hash_seed = 99;
    CHECK(hashed_features("the quick brown fox", m2) != f);
}

TEST_CASE("training separates the toy corpus") {
    auto model = toy_model();
    auto test = toy_corpus(40, 1234);  // fresh draws, same vocabularies
    auto report = evaluate_classifier(model, test);
    CHECK(report.low.f1 == doctest::Approx(1.0));
    CHECK(report.high.f1 == doctest::Approx(1.0));
    CHECK(report.accuracy == doctest::Approx(1.0));
    CHECK(report.total == 80);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto a = toy_model(7);
    auto b = toy_model(7);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    auto c = toy_model(8);
    CHECK(a.weights != c.weights);
}

TEST_CASE("single-class training data is rejected") {
    std::vector<LabeledText> one_class = {{"a", QualityLabel::high}, {"b", QualityLabel::high}};
    CHECK_THROWS_AS(train_classifier(one_class, {}), DataError);
}

TEST_CASE("prediction confidence stays in range and flips with negation") {
    auto model = toy_model();
    auto p = predict(model, "research library archive");
    CHECK(p.label == QualityLabel::high);
    CHECK(p.confidence >= 0.5);
    CHECK(p.confidence <= 1.0);
    CHECK(p.confidence == doctest::Approx(std::max(p.p_high, 1.0 - p.p_high)));

    auto q = predict(model, "click free winner promo");
    CHECK(q.label == QualityLabel::low);
    CHECK(q.p_high < 0.5);
}

TEST_CASE("model round trip preserves predictions bit for bit") {
    auto model = toy_model();
    auto loaded = load_model(save_model(model));
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.hash_seed == model.hash_seed);
    auto a = predict(model, "museum article winner");
    auto b = predict(loaded, "museum article winner");
    CHECK(a.p_high == b.p_high);
}

TEST_CASE("model loading validates the payload") {
    auto good = save_model(toy_model());
    CHECK_THROWS_AS(load_model("{}"), FormatError);
    CHECK_THROWS_AS(load_model("not json"), FormatError);

    auto wrong_version = good;
    auto pos = wrong_version.find("quality-model/1");
    REQUIRE(pos != std::string::npos);
    wrong_version.replace(pos, 15, "quality-model/9");
    CHECK_THROWS_AS(load_model(wrong_version), FormatError);
}

TEST_CASE("label harvesting precedence") {
    std::vector<Document> docs;
    docs.push_back(annotated("a", QualityLabel::low, 0.9));
    docs.back().extra["score"] = 0.99;  // explicit label wins over the score
    Document scored;
    scored.id = "b";
    scored.text = "t";
    scored.extra["score"] = 0.95;
    docs.push_back(scored);
    Document band = scored;
    band.id = "c";
    band.extra["score"] = 0.7;
    docs.push_back(band);
    Document bare;
    bare.id = "d";
    bare.text = "t";
    docs.push_back(bare);

    auto h = labeled_from_documents(docs);
    REQUIRE(h.labeled.size() == 2);
    CHECK(h.labeled[0].second == QualityLabel::low);
    CHECK(h.labeled[1].second == QualityLabel::high);
    CHECK(h.from_labels == 1);
    CHECK(h.from_scores == 1);
    CHECK(h.skipped_band == 1);
    CHECK(h.skipped_unlabeled == 1);

    Document bad;
    bad.id = "problem-doc";
    bad.text = "t";
    bad.extra["score"] = 1.7;
    try {
        labeled_from_documents(std::vector<Document>{bad});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        // the offending document is named
        CHECK(std::string(e.what()).find("problem-doc") != std::string::npos);
    }
}

TEST_CASE("evaluation metrics from a hand-checked confusion matrix") {
    // classifier that always says high
    QualityModel yes;
    yes.feature_dim = 4;
    yes.weights = {0.0, 0.0, 0.0, 0.0};
    yes.bias = 5.0;
    std::vector<LabeledText> test = {{"a", QualityLabel::high},
                                     {"b", QualityLabel::high},
                                     {"c", QualityLabel::high},
                                     {"d", QualityLabel::low}};
    auto r = evaluate_classifier(yes, test);
    CHECK(r.high.precision == doctest::Approx(0.75));
    CHECK(r.high.recall == doctest::Approx(1.0));
    CHECK(r.high.f1 == doctest::Approx(2 * 0.75 / 1.75));
    CHECK(r.low.recall == doctest::Approx(0.0));
    CHECK(r.low.f1 == doctest::Approx(0.0));
    CHECK(r.accuracy == doctest::Approx(0.75));
    CHECK(r.high.support == 3);
    CHECK(r.low.support == 1);

    auto table = r.table();
    for (const char* needle : {"Class", "Precision", "Recall", "F1-score", "Support", "accuracy"})
        CHECK(table.find(needle) != std::string::npos);
    auto j = r.to_json();
    CHECK(j.at("kind") == "classifier-eval");
}

TEST_CASE("filter drops only confident low predictions") {
    FilterOptions opts;
    opts.use_annotations = true;
    std::vector<Document> docs;
    docs.push_back(annotated("keep-high", QualityLabel::high, 0.99));
    docs.push_back(annotated("keep-low-at-threshold", QualityLabel::low, 0.95));
    docs.push_back(annotated("drop-low", QualityLabel::low, 0.96));
    docs.push_back(annotated("keep-low-unsure", QualityLabel::low, 0.6));

    auto [kept, report] = apply_filter(docs, nullptr, opts);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].id == "keep-high");
    CHECK(kept[1].id == "keep-low-at-threshold");  // strictly-greater rule
    CHECK(kept[2].id == "keep-low-unsure");
    CHECK(report.overall.total == 4);
    CHECK(report.overall.kept == 3);
    CHECK(report.by_subset.at("s").kept == 3);
}

TEST_CASE("missing model without annotations is a configuration error") {
    std::vector<Document> docs(1);
    docs[0].text = "t";
    FilterOptions opts;
    CHECK_THROWS_AS(apply_filter(docs, nullptr, opts), ConfigError);
    opts.use_annotations = true;  // still nothing to go on for this doc
    CHECK_THROWS_AS(apply_filter(docs, nullptr, opts), ConfigError);

    opts.policy.confidence_threshold = 0.0;
    CHECK_THROWS_AS(opts.policy.validate(), ConfigError);
    opts.policy.confidence_threshold = 1.5;
    CHECK_THROWS_AS(opts.policy.validate(), ConfigError);
}

TEST_CASE("annotations win over the model only when asked") {
    auto model = toy_model();
    Document doc = annotated("x", QualityLabel::low, 0.99);
    doc.text = "library research museum";  // the model would call this high

    FilterOptions trust_model;
    auto [kept1, r1] = apply_filter({doc}, &model, trust_model);
    CHECK(kept1.size() == 1);

    FilterOptions trust_tags;
    trust_tags.use_annotations = true;
    auto [kept2, r2] = apply_filter({doc}, &model, trust_tags);
    CHECK(kept2.empty());
}

TEST_CASE("retention grows with the threshold") {
    auto model = toy_model();
    std::vector<Document> docs;
    auto texts = toy_corpus(100, 77);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Document d;
        d.id = std::to_string(i);
        d.subset = "s";
        d.text = texts[i].first;
        docs.push_back(std::move(d));
    }
    std::uint64_t last_kept = 0;
    for (double threshold : {0.5, 0.8, 0.95, 0.999}) {
        FilterOptions opts;
        opts.policy.confidence_threshold = threshold;
        auto [kept, report] = apply_filter(docs, &model, opts);
        CHECK(report.overall.kept >= last_kept);
        last_kept = report.overall.kept;
    }
}

TEST_CASE("parallel filtering matches serial") {
    auto model = toy_model();
    auto texts = toy_corpus(200, 33);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Document d;
        d.id = std::to_string(i);
        d.subset = i % 2 ? "a" : "b";
        d.text = texts[i].first;
        docs.push_back(std::move(d));
    }
    FilterOptions serial;
    std::vector<char> keep_serial;
    filter_block(docs, &model, serial, keep_serial);
    for (int threads : {2, 4, 8}) {
        FilterOptions par;
        par.threads = threads;
        std::vector<char> keep_par;
        filter_block(docs, &model, par, keep_par);
        CHECK(keep_par == keep_serial);
    }
}

TEST_CASE("retention report serializes") {
    FilterOptions opts;
    opts.use_annotations = true;
    std::vector<Document> docs = {annotated("a", QualityLabel::high, 0.9),
                                  annotated("b", QualityLabel::low, 0.99)};
    auto [kept, report] = apply_filter(docs, nullptr, opts);
    auto j = report.to_json();
    CHECK(j.at("kind") == "retention");
    CHECK(j.at("overall").at("total") == 2);
    CHECK(j.at("overall").at("kept") == 1);
    CHECK(report.table().find("Kept") != std::string::npos);
}
