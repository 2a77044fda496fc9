#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "driftwatch/corpus_io.hpp"
#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/random.hpp"
#include "driftwatch/supervisor.hpp"

namespace driftwatch {

// ---------------------------------------------------------------------------
// Filtering metrics

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct EvaluationReport {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

inline ConfusionCounts confusion_counts(const std::vector<bool>& predicted,
                                        const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) {
        throw DataError("confusion_counts: length mismatch");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && truth[i]) ++c.tp;
        if (predicted[i] && !truth[i]) ++c.fp;
        if (!predicted[i] && !truth[i]) ++c.tn;
        if (!predicted[i] && truth[i]) ++c.fn;
    }
    return c;
}

// f = 2pr / (p + r), 0 when p + r = 0.
inline double f_from_pr(double p, double r) {
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

inline EvaluationReport f_measure(const ConfusionCounts& c) {
    EvaluationReport rep;
    const double pd = static_cast<double>(c.tp + c.fp);
    const double rd = static_cast<double>(c.tp + c.fn);
    rep.precision = pd > 0.0 ? static_cast<double>(c.tp) / pd : 0.0;
    rep.recall = rd > 0.0 ? static_cast<double>(c.tp) / rd : 0.0;
    rep.f_measure = f_from_pr(rep.precision, rep.recall);
    return rep;
}

// ---------------------------------------------------------------------------
// Synthetic drift simulator

enum class DriftKind { kNone, kPolysemy, kPolymorphism };

inline const char* drift_kind_name(DriftKind k) {
    switch (k) {
        case DriftKind::kNone: return "none";
        case DriftKind::kPolysemy: return "polysemy";
        case DriftKind::kPolymorphism: return "polymorphism";
    }
    return "none";
}

// A seeded corpus recipe. Relevant documents carry the trigger term in a
// topic-vocabulary context; after the onset point a fraction of draws is
// replaced with injected documents: polysemy keeps the trigger but swaps in
// a foreign context, polymorphism keeps the context but swaps the trigger
// for a new form unknown to the rules.
struct DriftSpec {
    std::uint64_t seed = 1;
    std::size_t n_docs = 0;
    std::vector<std::string> topic_vocab;
    std::vector<std::string> background_vocab;
    std::string trigger;
    DriftKind drift_kind = DriftKind::kNone;
    std::vector<std::string> new_sense_vocab;  // polysemy
    std::string new_form;                      // polymorphism
    double onset_fraction = 0.5;
    double injection_rate = 0.0;
    double relevant_rate = 0.35;
};

struct GroundTruth {
    std::string doc_id;
    bool injected = false;
    bool relevant = false;
};

struct DriftStream {
    std::vector<Document> documents;  // monotone timestamps
    std::vector<GroundTruth> ground_truth;
};

// The stock vocabularies used by the CLI when a spec file gives only sizes.
inline DriftSpec default_drift_spec(DriftKind kind, std::size_t n_docs, std::uint64_t seed) {
    DriftSpec spec;
    spec.seed = seed;
    spec.n_docs = n_docs;
    spec.drift_kind = kind;
    spec.trigger = "acme";
    spec.new_form = "acmex";
    spec.injection_rate = kind == DriftKind::kNone ? 0.0 : 0.1;
    const auto fill = [](std::vector<std::string>& out, const char* stem, std::size_t count) {
        char buf[32];
        for (std::size_t i = 0; i < count; ++i) {
            std::snprintf(buf, sizeof(buf), "%s%03zu", stem, i);
            out.emplace_back(buf);
        }
    };
    fill(spec.topic_vocab, "topic", 150);
    fill(spec.background_vocab, "bg", 300);
    fill(spec.new_sense_vocab, "sense", 150);
    return spec;
}

namespace drift_detail {

inline void require_single_tokens(const std::vector<std::string>& vocab, const char* what) {
    for (const auto& term : vocab) {
        const auto toks = tokenize(term);
        if (toks.size() != 1 || toks[0] != term) {
            throw DataError(std::string(what) + " term is not a single lowercase token: \"" +
                            term + "\"");
        }
    }
}

inline void validate_spec(const DriftSpec& spec) {
    if (spec.n_docs < 1) throw DataError("n_docs must be >= 1");
    if (!(spec.relevant_rate > 0.0 && spec.relevant_rate < 1.0)) {
        throw DataError("relevant_rate must lie in (0,1)");
    }
    if (!(spec.onset_fraction >= 0.0 && spec.onset_fraction <= 1.0)) {
        throw DataError("onset_fraction must lie in [0,1]");
    }
    if (!(spec.injection_rate >= 0.0 && spec.injection_rate <= 1.0)) {
        throw DataError("injection_rate must lie in [0,1]");
    }
    if (spec.drift_kind == DriftKind::kNone && spec.injection_rate > 0.0) {
        throw DataError("injection_rate > 0 requires a drift kind");
    }
    if (spec.topic_vocab.empty()) throw DataError("topic_vocab is empty");
    if (spec.background_vocab.empty()) throw DataError("background_vocab is empty");
    if (spec.trigger.empty()) throw DataError("trigger is empty");
    require_single_tokens(spec.topic_vocab, "topic_vocab");
    require_single_tokens(spec.background_vocab, "background_vocab");
    require_single_tokens({spec.trigger}, "trigger");

    const std::unordered_set<std::string> topic(spec.topic_vocab.begin(),
                                                spec.topic_vocab.end());
    const std::unordered_set<std::string> background(spec.background_vocab.begin(),
                                                     spec.background_vocab.end());
    if (background.count(spec.trigger)) {
        throw DataError("trigger must not appear in background_vocab");
    }
    if (spec.drift_kind == DriftKind::kPolysemy) {
        if (spec.new_sense_vocab.empty()) throw DataError("polysemy needs new_sense_vocab");
        require_single_tokens(spec.new_sense_vocab, "new_sense_vocab");
        for (const auto& t : spec.new_sense_vocab) {
            if (topic.count(t)) {
                throw DataError("new_sense_vocab overlaps topic_vocab: \"" + t + "\"");
            }
        }
    }
    if (spec.drift_kind == DriftKind::kPolymorphism) {
        if (spec.new_form.empty()) throw DataError("polymorphism needs new_form");
        require_single_tokens({spec.new_form}, "new_form");
        if (spec.new_form == spec.trigger || topic.count(spec.new_form) ||
            background.count(spec.new_form)) {
            throw DataError("new_form must be absent from trigger and vocabularies");
        }
    }
}

inline void draw_terms(const std::vector<std::string>& vocab, std::size_t lo, std::size_t hi,
                       Rng& rng, std::vector<std::string>& out) {
    const std::size_t k = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(vocab[rng.below(vocab.size())]);
    }
}

}  // namespace drift_detail

inline DriftStream generate_drift_stream(const DriftSpec& spec) {
    drift_detail::validate_spec(spec);
    const std::size_t onset_pos = static_cast<std::size_t>(
        std::ceil(spec.onset_fraction * static_cast<double>(spec.n_docs)));
    constexpr Instant kOrigin = 1577836800;  // 2020-01-01T00:00:00Z
    Rng rng(spec.seed);

    DriftStream stream;
    stream.documents.reserve(spec.n_docs);
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        const bool drew_relevant = rng.uniform01() < spec.relevant_rate;
        bool injected = false;
        if (i >= onset_pos && spec.drift_kind != DriftKind::kNone) {
            injected = rng.uniform01() < spec.injection_rate;
        }

        std::vector<std::string> toks;
        bool relevant = drew_relevant;
        if (injected && spec.drift_kind == DriftKind::kPolysemy) {
            // Same term, different context: off topic despite the trigger.
            toks.push_back(spec.trigger);
            drift_detail::draw_terms(spec.new_sense_vocab, 8, 15, rng, toks);
            drift_detail::draw_terms(spec.background_vocab, 5, 10, rng, toks);
            relevant = false;
        } else if (injected && spec.drift_kind == DriftKind::kPolymorphism) {
            // Different term, same context: on topic but invisible to the rules.
            toks.push_back(spec.new_form);
            drift_detail::draw_terms(spec.topic_vocab, 8, 15, rng, toks);
            drift_detail::draw_terms(spec.background_vocab, 5, 10, rng, toks);
            relevant = true;
        } else if (drew_relevant) {
            toks.push_back(spec.trigger);
            drift_detail::draw_terms(spec.topic_vocab, 8, 15, rng, toks);
            drift_detail::draw_terms(spec.background_vocab, 5, 10, rng, toks);
        } else {
            drift_detail::draw_terms(spec.background_vocab, 13, 25, rng, toks);
        }
        rng.shuffle(toks);

        char id[16];
        std::snprintf(id, sizeof(id), "d%06zu", i + 1);
        std::string title, body;
        const std::size_t title_len = std::min<std::size_t>(3, toks.size());
        for (std::size_t k = 0; k < toks.size(); ++k) {
            std::string& dst = k < title_len ? title : body;
            if (!dst.empty()) dst += ' ';
            dst += toks[k];
        }
        stream.documents.push_back(
            make_document(id, kOrigin + static_cast<Instant>(i) * 60, title, body));
        stream.ground_truth.push_back({id, injected, relevant});
    }
    return stream;
}

inline std::string serialize_ground_truth(const DriftStream& stream) {
    std::string out;
    for (const auto& gt : stream.ground_truth) {
        nlohmann::json rec;
        rec["doc_id"] = gt.doc_id;
        rec["injected"] = gt.injected;
        rec["relevant"] = gt.relevant;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

inline std::vector<GroundTruth> load_ground_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open truth file: " + path);
    std::vector<GroundTruth> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorpusError(path + ": line " + std::to_string(line_no) +
                              ": not a valid record (" + e.what() + ")");
        }
        if (!rec.is_object() || !rec.contains("doc_id") || !rec["doc_id"].is_string() ||
            !rec.contains("relevant") || !rec["relevant"].is_boolean()) {
            throw CorpusError(path + ": line " + std::to_string(line_no) +
                              ": needs string \"doc_id\" and boolean \"relevant\"");
        }
        GroundTruth gt;
        gt.doc_id = rec["doc_id"].get<std::string>();
        gt.relevant = rec["relevant"].get<bool>();
        if (rec.contains("injected") && rec["injected"].is_boolean()) {
            gt.injected = rec["injected"].get<bool>();
        }
        out.push_back(std::move(gt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Detection quality

struct DetectionQuality {
    double auc = 0.0;
    double detection_rate = 0.0;
    double false_alert_rate = 0.0;
};

// Candidates are (control score, injected?) pairs: the F-selected documents
// for polysemy, the F-rejected ones for polymorphism. AUC is the probability
// that a random injected candidate is ranked as more alert-worthy than a
// random normal one (ties count one half); the rates are taken at the
// default supervisor thresholds.
inline DetectionQuality score_detection(const std::vector<std::pair<double, bool>>& candidates,
                                        DriftKind kind,
                                        const SupervisorConfig& cfg = SupervisorConfig{}) {
    if (kind == DriftKind::kNone) throw DataError("score_detection needs a drift kind");
    if (candidates.empty()) throw DataError("score_detection: no candidates");
    std::size_t n_inj = 0;
    for (const auto& [s, injected] : candidates) {
        (void)s;
        if (injected) ++n_inj;
    }
    const std::size_t n_norm = candidates.size() - n_inj;
    if (n_inj == 0 || n_norm == 0) throw DataError("score_detection: single-class input");

    // Alert-worthiness key: low scores for polysemy, high for polymorphism.
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const bool low_is_alert = kind == DriftKind::kPolysemy;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = low_is_alert ? -candidates[a].first : candidates[a].first;
        const double kb = low_is_alert ? -candidates[b].first : candidates[b].first;
        return ka < kb;
    });
    std::vector<double> midrank(candidates.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               candidates[order[j + 1]].first == candidates[order[i]].first) {
            ++j;
        }
        const double mr = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) midrank[order[k]] = mr;
        i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (candidates[k].second) rank_sum += midrank[k];
    }
    const double n1 = static_cast<double>(n_inj);
    const double n0 = static_cast<double>(n_norm);
    DetectionQuality q;
    q.auc = (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);

    std::size_t detected = 0, false_alerts = 0;
    for (const auto& [s, injected] : candidates) {
        const bool alerted = kind == DriftKind::kPolysemy ? s < cfg.s_minus : s > cfg.s_plus;
        if (alerted && injected) ++detected;
        if (alerted && !injected) ++false_alerts;
    }
    q.detection_rate = static_cast<double>(detected) / n1;
    q.false_alert_rate = static_cast<double>(false_alerts) / n0;
    return q;
}

}  // namespace driftwatch
