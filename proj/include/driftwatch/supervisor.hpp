#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/rules.hpp"
#include "driftwatch/timestamp.hpp"

namespace driftwatch {

struct SupervisorConfig {
    double s_minus = 0.2;  // precision-loss threshold: F=1 and F' below it
    double s_plus = 0.8;   // recall-loss threshold: F=0 and F' above it
};

enum class AlertKind { kPrecisionLoss, kRecallLoss };

inline const char* alert_kind_name(AlertKind k) {
    return k == AlertKind::kPrecisionLoss ? "precision_loss" : "recall_loss";
}

// One suspected filtering mistake, to be reviewed by the administrator.
struct Alert {
    std::string doc_id;
    Instant ts = 0;
    AlertKind kind = AlertKind::kPrecisionLoss;
    double control_score = 0.0;
    bool verdict = false;
    std::vector<TokenSpan> matched_spans;  // precision loss only
    std::size_t rank = 0;                  // assigned by rank_alerts
};

// One document as seen by the supervisor: the initial filter's verdict plus
// the control filter's score.
struct SupervisedItem {
    std::string doc_id;
    Instant ts = 0;
    bool selected = false;
    double control_score = 0.0;
    std::vector<TokenSpan> matched_spans;
};

// F(d) = 1 but F'(d) < s_minus: the selection looks like noise, polysemy is
// suspected. Strict inequality; boundary documents are not alerts.
inline std::vector<Alert> detect_precision_loss(const std::vector<SupervisedItem>& items,
                                                const SupervisorConfig& cfg) {
    std::vector<Alert> alerts;
    for (const auto& it : items) {
        if (it.selected && it.control_score < cfg.s_minus) {
            alerts.push_back({it.doc_id, it.ts, AlertKind::kPrecisionLoss,
                              it.control_score, true, it.matched_spans, 0});
        }
    }
    return alerts;
}

// F(d) = 0 but F'(d) > s_plus: the rejection looks like silence, polymorphism
// is suspected. Strict inequality.
inline std::vector<Alert> detect_recall_loss(const std::vector<SupervisedItem>& items,
                                             const SupervisorConfig& cfg) {
    std::vector<Alert> alerts;
    for (const auto& it : items) {
        if (!it.selected && it.control_score > cfg.s_plus) {
            alerts.push_back({it.doc_id, it.ts, AlertKind::kRecallLoss,
                              it.control_score, false, {}, 0});
        }
    }
    return alerts;
}

// Sorts one kind of alert so the administrator sees the most significant
// cases first: precision-loss ascending by score (closest to 0 is the most
// likely noise), recall-loss descending (closest to 1 is the most likely
// silence). Ties break on (timestamp, doc id). Ranks are assigned 1..n.
inline std::vector<Alert> rank_alerts(std::vector<Alert> alerts) {
    if (alerts.empty()) return alerts;
    const AlertKind kind = alerts.front().kind;
    for (const auto& a : alerts) {
        if (a.kind != kind) throw DataError("rank_alerts: mixed alert kinds");
    }
    std::sort(alerts.begin(), alerts.end(), [&](const Alert& a, const Alert& b) {
        if (a.control_score != b.control_score) {
            return kind == AlertKind::kPrecisionLoss ? a.control_score < b.control_score
                                                     : a.control_score > b.control_score;
        }
        if (a.ts != b.ts) return a.ts < b.ts;
        return a.doc_id < b.doc_id;
    });
    for (std::size_t i = 0; i < alerts.size(); ++i) alerts[i].rank = i + 1;
    return alerts;
}

// Scores in reports carry exactly 4 decimal digits, rounded half-even.
inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

struct ReportMeta {
    std::string topic;
    AlertKind kind = AlertKind::kPrecisionLoss;
    double threshold = 0.0;
    std::string generated_at;
};

// Line-delimited report: a header record followed by one record per alert,
// in rank order. Precision-loss records carry the matched spans.
inline void render_report(const std::vector<Alert>& ranked,
                          const std::unordered_map<std::string, const Document*>& docs,
                          const ReportMeta& meta, std::ostream& out) {
    const auto quoted = [](const std::string& s) { return nlohmann::json(s).dump(); };
    out << "{\"report_version\":1,\"topic\":" << quoted(meta.topic) << ",\"kind\":\""
        << alert_kind_name(meta.kind) << "\",\"threshold\":" << format_score(meta.threshold)
        << ",\"generated_at\":" << quoted(meta.generated_at) << "}\n";
    for (const auto& a : ranked) {
        const auto it = docs.find(a.doc_id);
        if (it == docs.end()) throw DataError("alert references unknown document: " + a.doc_id);
        out << "{\"rank\":" << a.rank << ",\"doc_id\":" << quoted(a.doc_id) << ",\"ts\":\""
            << format_instant(a.ts) << "\",\"score\":" << format_score(a.control_score)
            << ",\"title\":" << quoted(it->second->title);
        if (a.kind == AlertKind::kPrecisionLoss) {
            out << ",\"spans\":[";
            for (std::size_t i = 0; i < a.matched_spans.size(); ++i) {
                if (i) out << ',';
                out << '[' << a.matched_spans[i].begin << ',' << a.matched_spans[i].end << ']';
            }
            out << ']';
        }
        out << "}\n";
        if (!out) throw Error("report write failure");
    }
    if (!out) throw Error("report write failure");
}

}  // namespace driftwatch
