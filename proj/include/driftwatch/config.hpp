#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftwatch/control_filter.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/evaluation.hpp"
#include "driftwatch/supervisor.hpp"
#include "driftwatch/timestamp.hpp"

namespace driftwatch {

// Per-topic tuning: which rules to run, where the model lives, supervisor
// thresholds and every selection / training knob. Flat key=value text;
// unknown keys are an error so typos cannot silently fall back to defaults.
struct TopicConfig {
    std::string topic_name;
    std::string rules_path;
    std::string model_path;
    double s_minus = 0.2;
    double s_plus = 0.8;
    std::optional<TimeInterval> window;  // training window; full span if absent
    std::size_t max_pos = 500;
    double neg_ratio = 1.0;
    int min_df = 3;
    double max_df_ratio = 0.5;
    std::size_t probe_trials = 100;
    double probe_confidence = 0.95;
    std::size_t max_terms = 50;
    double learning_rate = 0.1;
    std::size_t max_epochs = 1000;
    double loss_tolerance = 1e-7;
    double init_range = 0.1;
    std::uint64_t seed = 1;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// key=value lines; '#' comments and blank lines are skipped; duplicate keys
// are an error.
inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ": line " + std::to_string(line_no) + ": empty key");
        }
        if (!kv.emplace(key, value).second) {
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": duplicate key \"" + key + "\"");
        }
    }
    return kv;
}

inline double parse_real(const std::string& path, const std::string& key,
                         const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path + ": key \"" + key + "\": not a number: \"" + value + "\"");
    }
}

inline std::uint64_t parse_uint(const std::string& path, const std::string& key,
                                const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path + ": key \"" + key + "\": not a non-negative integer: \"" +
                          value + "\"");
    }
}

inline Instant parse_time(const std::string& path, const std::string& key,
                          const std::string& value) {
    const auto t = parse_instant(value);
    if (!t) {
        throw ConfigError(path + ": key \"" + key + "\": not an ISO-8601 instant: \"" +
                          value + "\"");
    }
    return *t;
}

// Paths in a config file resolve relative to the file itself.
inline std::string resolve_path(const std::string& config_path, const std::string& value) {
    namespace fs = std::filesystem;
    const fs::path p(value);
    if (p.is_absolute()) return value;
    return (fs::path(config_path).parent_path() / p).string();
}

inline std::vector<std::string> split_terms(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream in(value);
    std::string term;
    while (in >> term) out.push_back(term);
    return out;
}

}  // namespace config_detail

inline TopicConfig parse_topic_config(const std::string& path) {
    using namespace config_detail;
    const auto kv = read_kv_file(path);
    TopicConfig cfg;
    std::optional<Instant> window_begin, window_end;
    for (const auto& [key, value] : kv) {
        if (key == "topic_name") {
            cfg.topic_name = value;
        } else if (key == "rules_path") {
            cfg.rules_path = resolve_path(path, value);
        } else if (key == "model_path") {
            cfg.model_path = resolve_path(path, value);
        } else if (key == "s_minus") {
            cfg.s_minus = parse_real(path, key, value);
        } else if (key == "s_plus") {
            cfg.s_plus = parse_real(path, key, value);
        } else if (key == "window_begin") {
            window_begin = parse_time(path, key, value);
        } else if (key == "window_end") {
            window_end = parse_time(path, key, value);
        } else if (key == "max_pos") {
            cfg.max_pos = parse_uint(path, key, value);
        } else if (key == "neg_ratio") {
            cfg.neg_ratio = parse_real(path, key, value);
        } else if (key == "min_df") {
            cfg.min_df = static_cast<int>(parse_uint(path, key, value));
        } else if (key == "max_df_ratio") {
            cfg.max_df_ratio = parse_real(path, key, value);
        } else if (key == "probe_trials") {
            cfg.probe_trials = parse_uint(path, key, value);
        } else if (key == "probe_confidence") {
            cfg.probe_confidence = parse_real(path, key, value);
        } else if (key == "max_terms") {
            cfg.max_terms = parse_uint(path, key, value);
        } else if (key == "learning_rate") {
            cfg.learning_rate = parse_real(path, key, value);
        } else if (key == "max_epochs") {
            cfg.max_epochs = parse_uint(path, key, value);
        } else if (key == "loss_tolerance") {
            cfg.loss_tolerance = parse_real(path, key, value);
        } else if (key == "init_range") {
            cfg.init_range = parse_real(path, key, value);
        } else if (key == "seed") {
            cfg.seed = parse_uint(path, key, value);
        } else {
            throw ConfigError(path + ": unknown key \"" + key + "\"");
        }
    }
    if (cfg.rules_path.empty()) throw ConfigError(path + ": missing rules_path");
    if (!(cfg.s_minus >= 0.0 && cfg.s_minus <= 1.0)) {
        throw ConfigError(path + ": s_minus must lie in [0,1]");
    }
    if (!(cfg.s_plus >= 0.0 && cfg.s_plus <= 1.0)) {
        throw ConfigError(path + ": s_plus must lie in [0,1]");
    }
    if (window_begin.has_value() != window_end.has_value()) {
        throw ConfigError(path + ": window_begin and window_end must be set together");
    }
    if (window_begin) {
        if (*window_begin > *window_end) {
            throw ConfigError(path + ": window_begin is after window_end");
        }
        cfg.window = TimeInterval{*window_begin, *window_end};
    }
    return cfg;
}

// Simulation spec file. Vocabularies are given either explicitly
// (space-separated terms) or by size, in which case the stock vocabularies
// are generated.
inline DriftSpec parse_drift_spec_file(const std::string& path) {
    using namespace config_detail;
    const auto kv = read_kv_file(path);

    const auto find = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    DriftKind kind = DriftKind::kNone;
    if (const auto* v = find("drift_kind")) {
        if (*v == "none") {
            kind = DriftKind::kNone;
        } else if (*v == "polysemy") {
            kind = DriftKind::kPolysemy;
        } else if (*v == "polymorphism") {
            kind = DriftKind::kPolymorphism;
        } else {
            throw ConfigError(path + ": drift_kind must be none, polysemy or polymorphism");
        }
    } else {
        throw ConfigError(path + ": missing drift_kind");
    }
    const auto* n_docs = find("n_docs");
    if (!n_docs) throw ConfigError(path + ": missing n_docs");

    std::uint64_t seed = 1;
    if (const auto* v = find("seed")) seed = parse_uint(path, "seed", *v);
    DriftSpec spec = default_drift_spec(kind, parse_uint(path, "n_docs", *n_docs), seed);

    const auto fill = [](const char* stem, std::size_t count) {
        std::vector<std::string> out;
        char buf[32];
        for (std::size_t i = 0; i < count; ++i) {
            std::snprintf(buf, sizeof(buf), "%s%03zu", stem, i);
            out.emplace_back(buf);
        }
        return out;
    };

    for (const auto& [key, value] : kv) {
        if (key == "seed" || key == "n_docs" || key == "drift_kind") continue;
        if (key == "trigger") {
            spec.trigger = value;
        } else if (key == "new_form") {
            spec.new_form = value;
        } else if (key == "onset_fraction") {
            spec.onset_fraction = parse_real(path, key, value);
        } else if (key == "injection_rate") {
            spec.injection_rate = parse_real(path, key, value);
        } else if (key == "relevant_rate") {
            spec.relevant_rate = parse_real(path, key, value);
        } else if (key == "topic_vocab") {
            spec.topic_vocab = split_terms(value);
        } else if (key == "background_vocab") {
            spec.background_vocab = split_terms(value);
        } else if (key == "new_sense_vocab") {
            spec.new_sense_vocab = split_terms(value);
        } else if (key == "topic_vocab_size") {
            spec.topic_vocab = fill("topic", parse_uint(path, key, value));
        } else if (key == "background_vocab_size") {
            spec.background_vocab = fill("bg", parse_uint(path, key, value));
        } else if (key == "new_sense_vocab_size") {
            spec.new_sense_vocab = fill("sense", parse_uint(path, key, value));
        } else {
            throw ConfigError(path + ": unknown key \"" + key + "\"");
        }
    }
    return spec;
}

}  // namespace driftwatch
