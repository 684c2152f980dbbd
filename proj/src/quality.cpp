#include "forge/quality.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <unordered_map>

#include "forge/dedup.hpp"
#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

std::optional<QualityLabel> binarize_score(double score) {
    if (!(score >= 0.0 && score <= 1.0))
        throw DataError("quality score outside [0, 1]: " + std::to_string(score));
    if (score >= 0.8) return QualityLabel::high;
    if (score <= 0.6) return QualityLabel::low;
    return std::nullopt;
}

void QualityModel::validate() const {
    if (feature_dim < 2 || (feature_dim & (feature_dim - 1)) != 0)
        throw FormatError("feature_dim must be a power of two >= 2");
    if (weights.size() != feature_dim)
        throw FormatError("weight vector length does not match feature_dim");
    for (int o : char_ngram_orders)
        if (o < 1) throw FormatError("char n-gram orders must be >= 1");
}

namespace {

// feature string -> (bucket, sign) via the keyed 128-bit hash; the low bit
// of the second lane picks the sign so bucket and sign are independent
inline std::pair<std::uint32_t, double> hash_feature(std::string_view feat,
                                                     const QualityModel& model) {
    Fingerprint fp = murmur3_x64_128(feat.data(), feat.size(), model.hash_seed);
    std::uint32_t idx = static_cast<std::uint32_t>(fp.hi & (model.feature_dim - 1));
    double sign = (fp.lo & 1) ? 1.0 : -1.0;
    return {idx, sign};
}

}  // namespace

std::vector<std::pair<std::uint32_t, double>> hashed_features(std::string_view text,
                                                              const QualityModel& model) {
    std::unordered_map<std::uint32_t, double> acc;
    std::string feat;

    for (std::string_view word : util::split_whitespace(text)) {
        feat.assign("w:");
        feat.append(word);
        auto [idx, sign] = hash_feature(feat, model);
        acc[idx] += sign;
    }
    for (int order : model.char_ngram_orders) {
        if (text.size() < static_cast<std::size_t>(order)) continue;
        std::string prefix = "c" + std::to_string(order) + ":";
        for (std::size_t i = 0; i + order <= text.size(); ++i) {
            feat.assign(prefix);
            feat.append(text.substr(i, order));
            auto [idx, sign] = hash_feature(feat, model);
            acc[idx] += sign;
        }
    }

    std::vector<std::pair<std::uint32_t, double>> out(acc.begin(), acc.end());
    std::sort(out.begin(), out.end());
    double sq = 0.0;
    for (auto& [idx, v] : out) sq += v * v;
    if (sq > 0.0) {
        double inv = 1.0 / std::sqrt(sq);
        for (auto& [idx, v] : out) v *= inv;
    }
    return out;
}

namespace {

inline double dot(const QualityModel& model,
                  const std::vector<std::pair<std::uint32_t, double>>& feats) {
    double z = model.bias;
    for (auto& [idx, v] : feats) z += model.weights[idx] * v;
    return z;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Prediction predict(const QualityModel& model, std::string_view text) {
    auto feats = hashed_features(text, model);
    double p = sigmoid(dot(model, feats));
    Prediction pred;
    pred.p_high = p;
    pred.label = p >= 0.5 ? QualityLabel::high : QualityLabel::low;
    pred.confidence = std::max(p, 1.0 - p);
    return pred;
}

QualityModel train_classifier(std::span<const LabeledText> labeled, const TrainConfig& config,
                              TrainLog* log) {
    QualityModel model;
    model.feature_dim = config.feature_dim;
    model.hash_seed = config.hash_seed;
    model.char_ngram_orders = config.char_ngram_orders;
    model.weights.assign(config.feature_dim, 0.0);
    model.validate();

    if (labeled.empty()) throw DataError("empty training set");
    std::size_t n_high = 0;
    for (auto& [text, label] : labeled)
        if (label == QualityLabel::high) ++n_high;
    if (n_high == 0 || n_high == labeled.size())
        throw DataError("training set must contain both quality classes");
    if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

    // features are reused across epochs, so hash each example once
    std::vector<std::vector<std::pair<std::uint32_t, double>>> feats;
    feats.reserve(labeled.size());
    for (auto& [text, label] : labeled) feats.push_back(hashed_features(text, model));

    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);

    if (log) log->epoch_loss.clear();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t i : order) {
            double p = sigmoid(dot(model, feats[i]));
            double y = labeled[i].second == QualityLabel::high ? 1.0 : 0.0;
            double g = p - y;
            for (auto& [idx, v] : feats[i]) model.weights[idx] -= config.learning_rate * g * v;
            model.bias -= config.learning_rate * g;
            double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
            loss_sum += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        }
        if (log) log->epoch_loss.push_back(loss_sum / static_cast<double>(labeled.size()));
    }

    if (log) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            double p = sigmoid(dot(model, feats[i]));
            QualityLabel got = p >= 0.5 ? QualityLabel::high : QualityLabel::low;
            if (got == labeled[i].second) ++correct;
        }
        log->final_accuracy = static_cast<double>(correct) / static_cast<double>(labeled.size());
    }
    return model;
}

LabelHarvest labeled_from_documents(std::span<const Document> docs,
                                    const std::string& score_field) {
    LabelHarvest h;
    for (auto& d : docs) {
        if (d.quality_label) {
            h.labeled.emplace_back(d.text, *d.quality_label);
            ++h.from_labels;
            continue;
        }
        auto it = d.extra.find(score_field);
        if (it == d.extra.end() || !it->is_number()) {
            ++h.skipped_unlabeled;
            continue;
        }
        double score = it->get<double>();
        std::optional<QualityLabel> label;
        try {
            label = binarize_score(score);
        } catch (const DataError&) {
            throw DataError("document " + d.id + " has score " + std::to_string(score) +
                            " outside [0, 1]");
        }
        if (!label) {
            ++h.skipped_band;
            continue;
        }
        h.labeled.emplace_back(d.text, *label);
        ++h.from_scores;
    }
    return h;
}

std::string save_model(const QualityModel& model) {
    model.validate();
    nlohmann::json j;
    j["version"] = model.version;
    j["feature_dim"] = model.feature_dim;
    j["hash_seed"] = model.hash_seed;
    j["bias"] = model.bias;
    j["char_ngram_orders"] = model.char_ngram_orders;

    // weights serialized as little-endian float64, base64 wrapped
    std::string raw(model.weights.size() * sizeof(double), '\0');
    std::memcpy(raw.data(), model.weights.data(), raw.size());
    j["weights_b64"] = util::base64_encode(raw.data(), raw.size());
    return j.dump();
}

QualityModel load_model(const std::string& serialized) {
    nlohmann::json j = nlohmann::json::parse(serialized, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FormatError("model file is not a JSON object");
    QualityModel model;
    try {
        model.version = j.at("version").get<std::string>();
        if (model.version != "quality-model/1")
            throw FormatError("unsupported model version: " + model.version);
        model.feature_dim = j.at("feature_dim").get<std::uint32_t>();
        model.hash_seed = j.at("hash_seed").get<std::uint64_t>();
        model.bias = j.at("bias").get<double>();
        model.char_ngram_orders = j.at("char_ngram_orders").get<std::vector<int>>();
        std::vector<std::uint8_t> raw = util::base64_decode(j.at("weights_b64").get<std::string>());
        if (raw.size() % sizeof(double) != 0)
            throw FormatError("weight blob length is not a multiple of 8");
        model.weights.resize(raw.size() / sizeof(double));
        std::memcpy(model.weights.data(), raw.data(), raw.size());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model file: ") + e.what());
    }
    model.validate();
    return model;
}

namespace {

ClassMetrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                                 std::uint64_t tn) {
    ClassMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    m.support = tp + fn;
    m.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

}  // namespace

ClassReport evaluate_classifier(const QualityModel& model, std::span<const LabeledText> test) {
    if (test.empty()) throw DataError("empty evaluation set");
    std::uint64_t hh = 0, hl = 0, lh = 0, ll = 0;  // actual x predicted
    for (auto& [text, label] : test) {
        Prediction pred = predict(model, text);
        bool actual_high = label == QualityLabel::high;
        bool pred_high = pred.label == QualityLabel::high;
        if (actual_high && pred_high) ++hh;
        else if (actual_high) ++hl;
        else if (pred_high) ++lh;
        else ++ll;
    }
    ClassReport rep;
    rep.high = metrics_from_counts(hh, lh, hl, ll);
    rep.low = metrics_from_counts(ll, hl, lh, hh);
    rep.total = test.size();
    rep.accuracy = static_cast<double>(hh + ll) / static_cast<double>(rep.total);
    return rep;
}

nlohmann::json ClassReport::to_json() const {
    auto cls = [](const ClassMetrics& m) {
        return nlohmann::json{{"precision", m.precision},
                              {"recall", m.recall},
                              {"f1", m.f1},
                              {"support", m.support}};
    };
    return nlohmann::json{{"kind", "classifier-eval"},
                          {"low", cls(low)},
                          {"high", cls(high)},
                          {"accuracy", accuracy},
                          {"total", total}};
}

std::string ClassReport::table() const {
    util::TextTable t({"Class", "Precision", "Recall", "F1-score", "Support"});
    auto row = [&](const char* name, const ClassMetrics& m) {
        t.add_row({name, util::format_double(m.precision, 2), util::format_double(m.recall, 2),
                   util::format_double(m.f1, 2), std::to_string(m.support)});
    };
    row("low", low);
    row("high", high);
    std::string out = t.str();
    out += "accuracy: " + util::format_double(accuracy, 4) + " on " + std::to_string(total) +
           " examples\n";
    return out;
}

void FilterPolicy::validate() const {
    if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0))
        throw ConfigError("confidence threshold must lie in (0, 1]");
}

void filter_block(std::span<const Document> docs, const QualityModel* model,
                  const FilterOptions& opts, std::vector<char>& keep) {
    opts.policy.validate();
    keep.assign(docs.size(), 1);

    if (!model) {
        if (!opts.use_annotations)
            throw ConfigError("no model given and annotation reuse is disabled");
        for (auto& d : docs)
            if (!d.quality_label || !d.quality_confidence)
                throw ConfigError("document " + d.id +
                                  " has no quality annotation and no model was given");
    }

    auto decide = [&](const Document& d) -> char {
        QualityLabel label;
        double conf;
        if (opts.use_annotations && d.quality_label && d.quality_confidence) {
            label = *d.quality_label;
            conf = *d.quality_confidence;
        } else {
            Prediction pred = predict(*model, d.text);
            label = pred.label;
            conf = pred.confidence;
        }
        // a document is dropped only on a confident match of the drop label
        return (label == opts.policy.drop_label && conf > opts.policy.confidence_threshold) ? 0
                                                                                           : 1;
    };

    if (opts.threads > 1) {
        std::int64_t n = static_cast<std::int64_t>(docs.size());
#pragma omp parallel for num_threads(opts.threads) schedule(static)
        for (std::int64_t i = 0; i < n; ++i) keep[i] = decide(docs[i]);
    } else {
        for (std::size_t i = 0; i < docs.size(); ++i) keep[i] = decide(docs[i]);
    }
}

std::pair<std::vector<Document>, RetentionReport> apply_filter(const std::vector<Document>& docs,
                                                               const QualityModel* model,
                                                               const FilterOptions& opts) {
    std::vector<char> keep;
    filter_block(docs, model, opts, keep);

    std::vector<Document> kept;
    RetentionReport rep;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto& stats = rep.by_subset[docs[i].subset];
        ++stats.total;
        ++rep.overall.total;
        if (keep[i]) {
            ++stats.kept;
            ++rep.overall.kept;
            kept.push_back(docs[i]);
        }
    }
    return {std::move(kept), std::move(rep)};
}

nlohmann::json RetentionReport::to_json() const {
    nlohmann::json subsets = nlohmann::json::array();
    for (auto& [name, s] : by_subset)
        subsets.push_back({{"subset", name},
                           {"total", s.total},
                           {"kept", s.kept},
                           {"kept_pct", s.pct()}});
    return nlohmann::json{{"kind", "retention"},
                          {"subsets", subsets},
                          {"overall",
                           {{"total", overall.total},
                            {"kept", overall.kept},
                            {"kept_pct", overall.pct()}}}};
}

std::string RetentionReport::table() const {
    util::TextTable t({"Subset", "Docs in", "Docs kept", "Kept %"});
    for (auto& [name, s] : by_subset)
        t.add_row({name, util::format_with_commas(s.total), util::format_with_commas(s.kept),
                   util::format_double(s.pct(), 2)});
    t.add_row({"Total", util::format_with_commas(overall.total), util::format_with_commas(overall.kept),
               util::format_double(overall.pct(), 2)});
    return t.str();
}

}  // namespace forge
