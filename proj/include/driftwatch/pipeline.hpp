#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftwatch/config.hpp"
#include "driftwatch/control_filter.hpp"
#include "driftwatch/document.hpp"
#include "driftwatch/rules.hpp"
#include "driftwatch/supervisor.hpp"
#include "driftwatch/term_selection.hpp"

namespace driftwatch {

// Runs the initial filter over a corpus; one verdict per document.
inline std::vector<Verdict> run_filter(const RuleSet& rules,
                                       const std::vector<Document>& docs) {
    std::vector<Verdict> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(evaluate(rules, d));
    return out;
}

// The whole control-filter construction: verdicts from the initial filter,
// training-set sampling, term selection with the rule terms excluded, and
// tanh-unit training. Deterministic for a given seed; the configured seed
// feeds independent sub-streams for sampling, probe trials and weight init.
inline ControlModel build_control_model(const std::vector<Document>& docs,
                                        const RuleSet& rules, const TopicConfig& cfg,
                                        std::optional<std::uint64_t> seed_override = {}) {
    const std::uint64_t seed = seed_override.value_or(cfg.seed);

    std::vector<int> labels(docs.size(), 0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        labels[i] = evaluate(rules, docs[i]).selected ? 1 : 0;
    }

    TimeInterval window{0, 0};
    if (cfg.window) {
        window = *cfg.window;
    } else if (!docs.empty()) {
        window = {docs.front().ts, docs.front().ts};
        for (const auto& d : docs) {
            window.begin = std::min(window.begin, d.ts);
            window.end = std::max(window.end, d.ts);
        }
    }
    TrainingSet ts = assemble_training_set(docs, labels, window, cfg.max_pos,
                                           cfg.neg_ratio, derive_seed(seed, 10));

    std::vector<Document> training_docs;
    std::vector<int> training_labels;
    training_docs.reserve(ts.examples.size());
    {
        std::unordered_map<std::string, const Document*> by_id;
        for (const auto& d : docs) by_id.emplace(d.id, &d);
        for (const auto& ex : ts.examples) {
            training_docs.push_back(*by_id.at(ex.doc_id));
            training_labels.push_back(ex.label);
        }
    }

    const FeatureMatrix matrix = build_feature_matrix(
        training_docs, training_labels, cfg.min_df, cfg.max_df_ratio, rules.rule_terms);
    const TermVector tv = select_terms_with_probe(matrix, cfg.probe_trials,
                                                  cfg.probe_confidence, cfg.max_terms,
                                                  derive_seed(seed, 20));
    populate_features(ts, docs, tv);

    Hyperparams hp;
    hp.learning_rate = cfg.learning_rate;
    hp.max_epochs = cfg.max_epochs;
    hp.loss_tolerance = cfg.loss_tolerance;
    hp.init_range = cfg.init_range;
    hp.seed = derive_seed(seed, 30);
    const std::string topic =
        cfg.topic_name.empty() ? rules.topic_name : cfg.topic_name;
    return train(ts, tv, hp, topic);
}

// Supervisor input for a scored corpus.
inline std::vector<SupervisedItem> make_supervised_items(
    const std::vector<Document>& docs, const std::vector<Verdict>& verdicts,
    const std::vector<double>& scores) {
    std::vector<SupervisedItem> items;
    items.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        items.push_back({docs[i].id, docs[i].ts, verdicts[i].selected, scores[i],
                         verdicts[i].matches});
    }
    return items;
}

}  // namespace driftwatch
