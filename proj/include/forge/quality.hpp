#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// Score band mapping: >= 0.8 high, <= 0.6 low, in between excluded from
// classifier training. Throws DataError outside [0,1].
std::optional<QualityLabel> binarize_score(double score);

// Hashed-feature logistic classifier: word unigrams plus byte n-grams,
// signed hashing into a power-of-two bucket space, L2-normalized counts.
struct QualityModel {
    std::uint32_t feature_dim = 1u << 20;  // power of two, >= 2
    std::uint64_t hash_seed = 0;
    std::vector<double> weights;           // length feature_dim
    double bias = 0.0;
    std::vector<int> char_ngram_orders = {3, 4, 5};
    std::string version = "quality-model/1";

    void validate() const;  // throws FormatError on violations
};

// index/sign pairs with L2-normalized values
std::vector<std::pair<std::uint32_t, double>> hashed_features(std::string_view text,
                                                              const QualityModel& model);

struct Prediction {
    QualityLabel label;
    double confidence;  // max(p, 1-p), in [0.5, 1]
    double p_high;
};

Prediction predict(const QualityModel& model, std::string_view text);

using LabeledText = std::pair<std::string, QualityLabel>;

struct TrainConfig {
    double learning_rate = 0.5;
    int epochs = 10;
    std::uint64_t seed = 42;
    std::uint32_t feature_dim = 1u << 20;
    std::uint64_t hash_seed = 0;
    std::vector<int> char_ngram_orders = {3, 4, 5};
};

struct TrainLog {
    std::vector<double> epoch_loss;  // mean log-loss per epoch
    double final_accuracy = 0.0;     // on the training set
};

// Deterministic for a fixed seed and input order. Throws DataError when only
// one class is present.
QualityModel train_classifier(std::span<const LabeledText> labeled, const TrainConfig& config,
                              TrainLog* log = nullptr);

struct LabelHarvest {
    std::vector<LabeledText> labeled;
    std::uint64_t from_labels = 0;
    std::uint64_t from_scores = 0;   // via binarize_score
    std::uint64_t skipped_band = 0;  // score in the excluded middle band
    std::uint64_t skipped_unlabeled = 0;
};

// Label source per document: an explicit quality label wins; otherwise a
// numeric score field is binarized; documents with neither are skipped.
LabelHarvest labeled_from_documents(std::span<const Document> docs,
                                    const std::string& score_field = "score");

std::string save_model(const QualityModel& model);          // versioned JSON
QualityModel load_model(const std::string& serialized);     // throws FormatError

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ClassReport {
    ClassMetrics low;
    ClassMetrics high;
    std::uint64_t total = 0;
    double accuracy = 0.0;

    nlohmann::json to_json() const;
    std::string table() const;  // rows low/high x precision/recall/F1-score
};

ClassReport evaluate_classifier(const QualityModel& model, std::span<const LabeledText> test);

struct FilterPolicy {
    QualityLabel drop_label = QualityLabel::low;
    double confidence_threshold = 0.95;  // strict-greater comparison

    void validate() const;  // threshold in (0, 1]
};

struct RetentionStats {
    std::uint64_t total = 0;
    std::uint64_t kept = 0;
    double pct() const { return total ? 100.0 * static_cast<double>(kept) / static_cast<double>(total) : 0.0; }
};

struct RetentionReport {
    std::map<std::string, RetentionStats> by_subset;
    RetentionStats overall;

    nlohmann::json to_json() const;
    std::string table() const;
};

struct FilterOptions {
    FilterPolicy policy;
    // When set, annotations already on a document win over the model.
    bool use_annotations = false;
    int threads = 1;
};

// keep[i] for each document; model may be null when every document carries
// annotations and use_annotations is set. Throws ConfigError otherwise.
void filter_block(std::span<const Document> docs, const QualityModel* model,
                  const FilterOptions& opts, std::vector<char>& keep);

std::pair<std::vector<Document>, RetentionReport> apply_filter(const std::vector<Document>& docs,
                                                               const QualityModel* model,
                                                               const FilterOptions& opts);

}  // namespace forge
