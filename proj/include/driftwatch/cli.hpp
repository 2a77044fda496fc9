#pragma once

#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftwatch/config.hpp"
#include "driftwatch/corpus_io.hpp"
#include "driftwatch/evaluation.hpp"
#include "driftwatch/pipeline.hpp"

namespace driftwatch {

namespace cli_detail {

inline RuleSet read_rules_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuleError("cannot open rules file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_rules(buf.str());
    } catch (const RuleError& e) {
        throw RuleError(path + ": " + e.what());
    }
}

inline std::string verdict_lines(const std::vector<Document>& docs,
                                 const std::vector<Verdict>& verdicts) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        nlohmann::json rec;
        rec["doc_id"] = docs[i].id;
        rec["selected"] = verdicts[i].selected;
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& s : verdicts[i].matches) {
            spans.push_back({s.begin, s.end});
        }
        rec["spans"] = spans;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

inline void cmd_filter(const std::string& rules_path, const std::string& corpus_path,
                       const std::string& out_path, std::ostream& stdout_stream) {
    const RuleSet rules = read_rules_file(rules_path);
    const auto docs = load_corpus(corpus_path);
    const auto verdicts = run_filter(rules, docs);
    const std::string content = verdict_lines(docs, verdicts);
    if (out_path.empty()) {
        stdout_stream << content;
    } else {
        write_file_atomic(out_path, content);
    }
}

inline void cmd_build_control(const std::string& config_path, const std::string& corpus_path,
                              std::string out_path, std::optional<std::uint64_t> seed) {
    const TopicConfig cfg = parse_topic_config(config_path);
    if (out_path.empty()) out_path = cfg.model_path;
    if (out_path.empty()) {
        throw ConfigError("no model output path: pass --out or set model_path");
    }
    const RuleSet rules = read_rules_file(cfg.rules_path);
    const auto docs = load_corpus(corpus_path);
    const ControlModel model = build_control_model(docs, rules, cfg, seed);
    write_file_atomic(out_path, save_model(model));
}

inline void cmd_supervise(const std::string& config_path, const std::string& corpus_path,
                          std::string model_path, const std::string& kind,
                          const std::string& out_path) {
    const TopicConfig cfg = parse_topic_config(config_path);
    if (model_path.empty()) model_path = cfg.model_path;
    if (model_path.empty()) {
        throw ConfigError("no model path: pass --model or set model_path");
    }
    const RuleSet rules = read_rules_file(cfg.rules_path);
    const auto docs = load_corpus(corpus_path);
    const ControlModel model = load_model_file(model_path);
    const auto verdicts = run_filter(rules, docs);
    std::vector<double> scores;
    scores.reserve(docs.size());
    for (const auto& d : docs) scores.push_back(score(model, d));
    const auto items = make_supervised_items(docs, verdicts, scores);

    std::unordered_map<std::string, const Document*> by_id;
    for (const auto& d : docs) by_id.emplace(d.id, &d);
    const SupervisorConfig sup{cfg.s_minus, cfg.s_plus};
    const std::string topic = cfg.topic_name.empty() ? rules.topic_name : cfg.topic_name;
    const std::string generated_at = format_instant(static_cast<Instant>(std::time(nullptr)));

    std::ostringstream report;
    if (kind == "precision" || kind == "both") {
        const auto ranked = rank_alerts(detect_precision_loss(items, sup));
        render_report(ranked, by_id,
                      {topic, AlertKind::kPrecisionLoss, sup.s_minus, generated_at}, report);
    }
    if (kind == "recall" || kind == "both") {
        const auto ranked = rank_alerts(detect_recall_loss(items, sup));
        render_report(ranked, by_id,
                      {topic, AlertKind::kRecallLoss, sup.s_plus, generated_at}, report);
    }
    write_file_atomic(out_path, report.str());
}

inline void cmd_evaluate(const std::string& predicted_path, const std::string& truth_path,
                         std::ostream& out) {
    std::ifstream in(predicted_path, std::ios::binary);
    if (!in) throw CorpusError("cannot open predicted file: " + predicted_path);
    std::vector<std::pair<std::string, bool>> predicted;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorpusError(predicted_path + ": line " + std::to_string(line_no) +
                              ": not a valid record (" + e.what() + ")");
        }
        if (!rec.is_object() || !rec.contains("doc_id") || !rec["doc_id"].is_string() ||
            !rec.contains("selected") || !rec["selected"].is_boolean()) {
            throw CorpusError(predicted_path + ": line " + std::to_string(line_no) +
                              ": needs string \"doc_id\" and boolean \"selected\"");
        }
        predicted.emplace_back(rec["doc_id"].get<std::string>(),
                               rec["selected"].get<bool>());
    }
    const auto truth = load_ground_truth(truth_path);
    std::unordered_map<std::string, bool> relevant;
    for (const auto& gt : truth) relevant[gt.doc_id] = gt.relevant;

    std::vector<bool> pred_flags, truth_flags;
    for (const auto& [id, sel] : predicted) {
        const auto it = relevant.find(id);
        if (it == relevant.end()) {
            throw CorpusError("document \"" + id + "\" missing from truth file");
        }
        pred_flags.push_back(sel);
        truth_flags.push_back(it->second);
    }
    const auto rep = f_measure(confusion_counts(pred_flags, truth_flags));
    out << "precision " << format_score(rep.precision) << "\n"
        << "recall " << format_score(rep.recall) << "\n"
        << "f_measure " << format_score(rep.f_measure) << "\n";
}

inline void cmd_simulate(const std::string& spec_path, const std::string& corpus_path,
                         const std::string& truth_path) {
    const DriftSpec spec = parse_drift_spec_file(spec_path);
    const DriftStream stream = generate_drift_stream(spec);
    write_file_atomic(corpus_path, serialize_corpus(stream.documents));
    write_file_atomic(truth_path, serialize_ground_truth(stream));
}

}  // namespace cli_detail

// Dispatches subcommands. Exit codes: 0 success, 1 usage error, 2 data error
// (corpus/model), 3 rule or config error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Supervises rule-based document filters with a learned control filter"};
    app.name("driftwatch");
    app.require_subcommand(1);

    std::string rules_path, corpus_path, out_path, config_path, model_path;
    std::string predicted_path, truth_path, spec_path, kind = "both";
    std::optional<std::uint64_t> seed;

    auto* filter = app.add_subcommand("filter", "Run the rule-based filter alone");
    filter->add_option("--rules", rules_path, "Rule program")->required();
    filter->add_option("--corpus", corpus_path, "Corpus file")->required();
    filter->add_option("--out", out_path, "Verdict output file (default: stdout)");

    auto* build = app.add_subcommand("build-control", "Train a control filter");
    build->add_option("--topic", config_path, "Topic config file")->required();
    build->add_option("--corpus", corpus_path, "Corpus file")->required();
    build->add_option("--out", out_path, "Model output file");
    build->add_option("--seed", seed, "Seed override");

    auto* supervise = app.add_subcommand("supervise", "Compare filter and control filter");
    supervise->add_option("--topic", config_path, "Topic config file")->required();
    supervise->add_option("--corpus", corpus_path, "Corpus file")->required();
    supervise->add_option("--model", model_path, "Control model file");
    supervise->add_option("--kind", kind, "Alert kind")
        ->check(CLI::IsMember({"precision", "recall", "both"}));
    supervise->add_option("--out", out_path, "Report output file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Precision / recall / F-measure");
    evaluate->add_option("--predicted", predicted_path, "Verdict file")->required();
    evaluate->add_option("--truth", truth_path, "Ground-truth file")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic drift stream");
    simulate->add_option("--spec", spec_path, "Drift spec file")->required();
    simulate->add_option("--out", corpus_path, "Corpus output file")->required();
    simulate->add_option("--truth", truth_path, "Ground-truth output file")->required();

    std::vector<const char*> argv;
    argv.push_back("driftwatch");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "driftwatch: " << e.what() << "\n";
        err << app.help();
        return 1;
    }

    try {
        if (filter->parsed()) {
            cli_detail::cmd_filter(rules_path, corpus_path, out_path, out);
        } else if (build->parsed()) {
            cli_detail::cmd_build_control(config_path, corpus_path, out_path, seed);
        } else if (supervise->parsed()) {
            cli_detail::cmd_supervise(config_path, corpus_path, model_path, kind, out_path);
        } else if (evaluate->parsed()) {
            cli_detail::cmd_evaluate(predicted_path, truth_path, out);
        } else if (simulate->parsed()) {
            cli_detail::cmd_simulate(spec_path, corpus_path, truth_path);
        }
    } catch (const RuleError& e) {
        err << "driftwatch: error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        err << "driftwatch: error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "driftwatch: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace driftwatch
