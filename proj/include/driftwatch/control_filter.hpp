#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/random.hpp"
#include "driftwatch/term_selection.hpp"
#include "driftwatch/timestamp.hpp"

namespace driftwatch {

struct TrainingExample {
    std::string doc_id;
    std::vector<double> features;  // raw relative frequencies over the term vector
    int label = 0;                 // the initial filter's verdict
};

// How the learning base was sampled from the filter's own verdicts.
struct SamplingProvenance {
    TimeInterval requested_window;
    TimeInterval effective_window;
    std::size_t positives_available = 0;
    std::size_t positives_kept = 0;
    std::size_t negatives_available = 0;
    std::size_t negatives_kept = 0;
    std::uint64_t seed = 0;
};

struct TrainingSet {
    std::vector<TrainingExample> examples;
    SamplingProvenance provenance;
};

struct Hyperparams {
    double learning_rate = 0.1;
    std::size_t max_epochs = 1000;
    double loss_tolerance = 1e-7;
    double init_range = 0.1;
    std::uint64_t seed = 0;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::size_t epochs_run = 0;
    double final_loss = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

// A trained single tanh unit over the term vector: the control filter F'.
struct ControlModel {
    std::string topic_name;
    TermVector term_vector;
    std::vector<double> weights;
    double bias = 0.0;
    TrainingMeta training_meta;
};

// ---------------------------------------------------------------------------
// Training-set assembly

// Picks the learning base from the initial filter's verdicts. Positives are
// the selected documents inside `window`; a verbose filter is subsampled to
// max_pos, a mute one (fewer than max_pos positives in a window narrower
// than the corpus) has its window widened to the full corpus span first.
// Negatives are sampled from the rejected documents of the same effective
// window. Feature vectors are filled in later, once a term vector exists.
inline TrainingSet assemble_training_set(const std::vector<Document>& corpus,
                                         const std::vector<int>& verdicts,
                                         TimeInterval window, std::size_t max_pos,
                                         double neg_ratio, std::uint64_t seed) {
    if (corpus.empty()) throw DataError("empty corpus");
    if (corpus.size() != verdicts.size()) throw DataError("corpus/verdicts length mismatch");
    if (max_pos < 1) throw DataError("max_pos must be >= 1");
    if (!(neg_ratio > 0.0)) throw DataError("neg_ratio must be positive");

    TimeInterval full_span{corpus.front().ts, corpus.front().ts};
    for (const auto& d : corpus) {
        full_span.begin = std::min(full_span.begin, d.ts);
        full_span.end = std::max(full_span.end, d.ts);
    }

    const auto collect = [&](const TimeInterval& w, int wanted) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (w.contains(corpus[i].ts) && verdicts[i] == wanted) idx.push_back(i);
        }
        return idx;
    };

    TimeInterval effective = window;
    auto pos = collect(effective, 1);
    if (pos.size() < max_pos && !window.covers(full_span)) {
        effective = full_span;
        pos = collect(effective, 1);
    }
    if (pos.empty()) throw DataError("untrainable topic: the filter selected no documents");

    TrainingSet ts;
    ts.provenance.requested_window = window;
    ts.provenance.effective_window = effective;
    ts.provenance.positives_available = pos.size();
    ts.provenance.seed = seed;

    if (pos.size() > max_pos) {
        Rng rng(derive_seed(seed, 0));
        const auto picks = sample_indices(pos.size(), max_pos, rng);
        std::vector<std::size_t> sampled;
        sampled.reserve(picks.size());
        for (const auto p : picks) sampled.push_back(pos[p]);
        pos = std::move(sampled);
    }
    ts.provenance.positives_kept = pos.size();

    auto neg = collect(effective, 0);
    ts.provenance.negatives_available = neg.size();
    const std::size_t neg_wanted = static_cast<std::size_t>(
        std::ceil(neg_ratio * static_cast<double>(pos.size())));
    if (neg.empty()) throw DataError("single-class training set: no rejected documents");
    if (neg.size() > neg_wanted) {
        Rng rng(derive_seed(seed, 1));
        const auto picks = sample_indices(neg.size(), neg_wanted, rng);
        std::vector<std::size_t> sampled;
        sampled.reserve(picks.size());
        for (const auto p : picks) sampled.push_back(neg[p]);
        neg = std::move(sampled);
    }
    ts.provenance.negatives_kept = neg.size();

    for (const auto i : pos) ts.examples.push_back({corpus[i].id, {}, 1});
    for (const auto i : neg) ts.examples.push_back({corpus[i].id, {}, 0});
    return ts;
}

// Raw relative frequencies of the term-vector terms in a document.
inline std::vector<double> raw_features(const Document& d, const TermVector& tv) {
    std::vector<double> out(tv.terms.size(), 0.0);
    if (d.tokens.empty()) return out;
    const auto counts = token_counts(d.tokens);
    const double total = static_cast<double>(d.tokens.size());
    for (std::size_t i = 0; i < tv.terms.size(); ++i) {
        const auto it = counts.find(tv.terms[i]);
        if (it != counts.end()) out[i] = static_cast<double>(it->second) / total;
    }
    return out;
}

// Z-scored inputs for the unit: (relfreq - mean) / max(std, floor).
inline std::vector<double> featurize(const Document& d, const TermVector& tv) {
    auto z = raw_features(d, tv);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = (z[i] - tv.means[i]) / std::max(tv.stds[i], kStdFloor);
    }
    return z;
}

inline void populate_features(TrainingSet& ts, const std::vector<Document>& corpus,
                              const TermVector& tv) {
    std::unordered_map<std::string, const Document*> by_id;
    for (const auto& d : corpus) by_id.emplace(d.id, &d);
    for (auto& ex : ts.examples) {
        const auto it = by_id.find(ex.doc_id);
        if (it == by_id.end()) {
            throw DataError("training example references unknown document: " + ex.doc_id);
        }
        ex.features = raw_features(*it->second, tv);
    }
}

// ---------------------------------------------------------------------------
// The tanh unit

namespace unit_detail {

inline double unit_output(const std::vector<double>& w, double b,
                          const std::vector<double>& x) {
    double a = b;
    for (std::size_t i = 0; i < w.size(); ++i) a += w[i] * x[i];
    return (1.0 + std::tanh(a)) / 2.0;
}

}  // namespace unit_detail

// Probability-of-relevance score of a document under the model.
inline double score(const ControlModel& model, const Document& d) {
    const auto x = featurize(d, model.term_vector);
    const double y = unit_detail::unit_output(model.weights, model.bias, x);
    return std::clamp(y, 0.0, 1.0);
}

// Exact gradient of (y_hat - y)^2 for one example, with respect to the
// weights and bias. The input vector is taken as-is (already standardized).
inline std::pair<std::vector<double>, double> loss_gradient(const ControlModel& model,
                                                            const std::vector<double>& x,
                                                            double label) {
    double a = model.bias;
    for (std::size_t i = 0; i < model.weights.size(); ++i) a += model.weights[i] * x[i];
    const double t = std::tanh(a);
    const double y_hat = (1.0 + t) / 2.0;
    // d/da [(y_hat - y)^2] = 2 (y_hat - y) * (1 - t^2)/2
    const double g = (y_hat - label) * (1.0 - t * t);
    std::vector<double> dw(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dw[i] = g * x[i];
    return {std::move(dw), g};
}

// Full-batch gradient descent on the mean squared error between the unit
// output (1 + tanh(w.x + b))/2 and the filter's verdicts. Deterministic for
// a given seed; stops at max_epochs or when the per-epoch loss decrease
// falls under loss_tolerance.
inline ControlModel train(const TrainingSet& ts, const TermVector& tv,
                          const Hyperparams& hp, std::string topic_name = {}) {
    if (ts.examples.empty()) throw DataError("empty training set");
    if (!(hp.learning_rate > 0.0)) throw DataError("learning_rate must be positive");
    if (hp.max_epochs < 1) throw DataError("max_epochs must be >= 1");
    if (!(hp.loss_tolerance > 0.0)) throw DataError("loss_tolerance must be positive");
    if (!(hp.init_range > 0.0)) throw DataError("init_range must be positive");

    const std::size_t dim = tv.terms.size();
    std::size_t n_pos = 0, n_neg = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    inputs.reserve(ts.examples.size());
    for (const auto& ex : ts.examples) {
        if (ex.features.size() != dim) {
            throw DataError("training example feature length does not match term vector");
        }
        std::vector<double> z(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            z[i] = (ex.features[i] - tv.means[i]) / std::max(tv.stds[i], kStdFloor);
        }
        inputs.push_back(std::move(z));
        targets.push_back(ex.label == 1 ? 1.0 : 0.0);
        (ex.label == 1 ? n_pos : n_neg) += 1;
    }

    ControlModel model;
    model.topic_name = std::move(topic_name);
    model.term_vector = tv;
    model.weights.assign(dim, 0.0);
    model.bias = 0.0;
    Rng rng(hp.seed);
    for (auto& w : model.weights) {
        w = (2.0 * rng.uniform01() - 1.0) * hp.init_range;
    }

    const double n = static_cast<double>(inputs.size());
    const auto mse = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const double y = unit_detail::unit_output(model.weights, model.bias, inputs[i]);
            loss += (y - targets[i]) * (y - targets[i]);
        }
        return loss / n;
    };

    double prev_loss = mse();
    double cur_loss = prev_loss;
    std::size_t epochs_run = 0;
    std::vector<double> grad_w(dim);
    for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            double a = model.bias;
            for (std::size_t k = 0; k < dim; ++k) a += model.weights[k] * inputs[i][k];
            const double t = std::tanh(a);
            const double g = ((1.0 + t) / 2.0 - targets[i]) * (1.0 - t * t);
            for (std::size_t k = 0; k < dim; ++k) grad_w[k] += g * inputs[i][k];
            grad_b += g;
        }
        for (std::size_t k = 0; k < dim; ++k) {
            model.weights[k] -= hp.learning_rate * grad_w[k] / n;
        }
        model.bias -= hp.learning_rate * grad_b / n;

        cur_loss = mse();
        epochs_run = epoch;
        if (!std::isfinite(cur_loss)) {
            throw DataError("training diverged at epoch " + std::to_string(epoch));
        }
        if (prev_loss - cur_loss < hp.loss_tolerance) break;
        prev_loss = cur_loss;
    }

    model.training_meta = {hp.seed, epochs_run, cur_loss, n_pos, n_neg};
    return model;
}

// ---------------------------------------------------------------------------
// Model file: structured text, format_version 1, reals round-trip exactly.

inline std::string save_model(const ControlModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["topic_name"] = model.topic_name;
    j["bias"] = model.bias;
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t i = 0; i < model.term_vector.terms.size(); ++i) {
        nlohmann::json entry;
        entry["term"] = model.term_vector.terms[i];
        entry["mean"] = model.term_vector.means[i];
        entry["std"] = model.term_vector.stds[i];
        entry["weight"] = model.weights[i];
        terms.push_back(entry);
    }
    j["terms"] = terms;
    j["training_meta"] = {{"seed", model.training_meta.seed},
                          {"epochs_run", model.training_meta.epochs_run},
                          {"final_loss", model.training_meta.final_loss},
                          {"n_pos", model.training_meta.n_pos},
                          {"n_neg", model.training_meta.n_neg}};
    return j.dump(2) + "\n";
}

inline ControlModel load_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("model file is not parsable: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") ||
        !j["format_version"].is_number_integer()) {
        throw ModelError("model file has no format_version");
    }
    if (j["format_version"].get<int>() != 1) {
        throw ModelError("unsupported model format_version " +
                         j["format_version"].dump());
    }
    try {
        ControlModel model;
        model.topic_name = j.at("topic_name").get<std::string>();
        model.bias = j.at("bias").get<double>();
        for (const auto& entry : j.at("terms")) {
            model.term_vector.terms.push_back(entry.at("term").get<std::string>());
            model.term_vector.means.push_back(entry.at("mean").get<double>());
            model.term_vector.stds.push_back(entry.at("std").get<double>());
            model.weights.push_back(entry.at("weight").get<double>());
        }
        const auto& meta = j.at("training_meta");
        model.training_meta.seed = meta.at("seed").get<std::uint64_t>();
        model.training_meta.epochs_run = meta.at("epochs_run").get<std::size_t>();
        model.training_meta.final_loss = meta.at("final_loss").get<double>();
        model.training_meta.n_pos = meta.at("n_pos").get<std::size_t>();
        model.training_meta.n_neg = meta.at("n_neg").get<std::size_t>();
        if (!std::isfinite(model.bias)) throw ModelError("non-finite bias");
        for (const double w : model.weights) {
            if (!std::isfinite(w)) throw ModelError("non-finite weight");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("model file is incomplete: ") + e.what());
    }
}

inline ControlModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

}  // namespace driftwatch
