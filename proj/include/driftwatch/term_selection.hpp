#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/random.hpp"

namespace driftwatch {

inline constexpr double kStdFloor = 1e-6;
// Residual columns below this fraction of their original norm are considered
// collinear with the already-selected set and leave the competition.
inline constexpr double kResidualFloor = 1e-10;

// Per-topic training matrix: documents x candidate terms, values are
// relative term frequencies, target is the initial filter's verdicts.
struct FeatureMatrix {
    std::vector<std::string> doc_ids;  // N rows
    std::vector<std::string> terms;    // M columns, lexicographic
    std::vector<double> values;        // N x M, row-major
    std::vector<double> target;        // N entries in {0,1}

    double value(std::size_t row, std::size_t col) const {
        return values[row * terms.size() + col];
    }

    std::vector<double> column(std::size_t col) const {
        std::vector<double> out(doc_ids.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, col);
        return out;
    }
};

struct RankedTerm {
    std::string term;
    std::size_t rank = 0;  // 1-based
    double score = 0.0;    // error-reduction ratio at selection time
};

struct RankedTerms {
    std::vector<RankedTerm> entries;  // ordered by rank
};

// The retained discriminant terms, with standardization stats frozen from
// the training matrix so scoring is self-contained.
struct TermVector {
    std::vector<std::string> terms;
    std::vector<double> means;
    std::vector<double> stds;  // floored at kStdFloor
};

namespace ols_detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// (x.y)^2 / ((x.x)(y.y)), the share of target energy a column explains.
inline double error_reduction_ratio(double xy, double xx, double yy) {
    if (!(xx > 0.0) || !(yy > 0.0)) return 0.0;
    const double r = (xy * xy) / (xx * yy);
    return std::isfinite(r) ? r : 0.0;
}

// Greedy orthogonal least squares over a set of columns. Stops after
// max_steps selections; `exhausted` reports whether every column was either
// selected or dropped, in which case the ranking is complete.
struct GreedyRanking {
    std::vector<std::size_t> selected;          // column indices, rank order
    std::vector<double> sel_ratio;              // score at selection
    std::vector<std::vector<double>> basis;     // residual columns at selection
    std::vector<double> basis_sq;               // squared norms of basis columns
    std::vector<std::size_t> dropped;           // collinear columns
    bool exhausted = false;
};

inline GreedyRanking greedy_ols(std::vector<std::vector<double>> cols,
                                const std::vector<std::string>& names,
                                const std::vector<double>& y, std::size_t max_steps) {
    const std::size_t m = cols.size();
    const double yty = dot(y, y);
    if (!(yty > 0.0)) throw DataError("zero-norm target");

    std::vector<double> norm0(m), cur_sq(m), doty(m);
    enum : char { kActive = 0, kSelected = 1, kDropped = 2 };
    std::vector<char> state(m, kActive);
    for (std::size_t j = 0; j < m; ++j) {
        norm0[j] = cur_sq[j] = dot(cols[j], cols[j]);
        doty[j] = dot(cols[j], y);
    }

    GreedyRanking out;
    while (out.selected.size() < max_steps) {
        for (std::size_t j = 0; j < m; ++j) {
            if (state[j] == kActive &&
                (norm0[j] == 0.0 ||
                 cur_sq[j] < kResidualFloor * kResidualFloor * norm0[j])) {
                state[j] = kDropped;
                out.dropped.push_back(j);
            }
        }
        std::size_t best = m;
        double best_ratio = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (state[j] != kActive) continue;
            const double r = error_reduction_ratio(doty[j], cur_sq[j], yty);
            if (best == m || r > best_ratio ||
                (r == best_ratio && names[j] < names[best])) {
                best = j;
                best_ratio = r;
            }
        }
        if (best == m) break;
        state[best] = kSelected;
        out.selected.push_back(best);
        out.sel_ratio.push_back(best_ratio);
        out.basis.push_back(cols[best]);
        out.basis_sq.push_back(cur_sq[best]);
        // Modified Gram-Schmidt sweep; norms and target dots are recomputed
        // exactly to keep drop decisions and later ratios stable.
        const auto& q = out.basis.back();
        const double q_sq = out.basis_sq.back();
        for (std::size_t j = 0; j < m; ++j) {
            if (state[j] != kActive) continue;
            const double c = dot(cols[j], q) / q_sq;
            for (std::size_t i = 0; i < cols[j].size(); ++i) cols[j][i] -= c * q[i];
            cur_sq[j] = dot(cols[j], cols[j]);
            doty[j] = dot(cols[j], y);
        }
    }
    out.exhausted = true;
    for (std::size_t j = 0; j < m; ++j) {
        if (state[j] == kActive) {
            out.exhausted = false;
            break;
        }
    }
    return out;
}

// Rank a probe column against a precomputed real-column ranking. The probe
// never changes which real column wins a step, so its rank is the first step
// at which its own ratio beats the step's winner. Returns SIZE_MAX when the
// rank falls beyond the ranked prefix (and therefore beyond any cutoff).
inline std::size_t probe_rank(const GreedyRanking& base,
                              const std::vector<std::string>& names,
                              const std::string& probe_name,
                              const std::vector<double>& y, std::vector<double> probe) {
    const double yty = dot(y, y);
    const double p0 = dot(probe, probe);
    double p_sq = p0;
    double p_doty = dot(probe, y);

    const auto dropped_block_rank = [&]() -> std::size_t {
        if (!base.exhausted) return std::numeric_limits<std::size_t>::max();
        std::size_t before = 0;
        for (const std::size_t j : base.dropped) {
            if (names[j] < probe_name) ++before;
        }
        return base.selected.size() + 1 + before;
    };

    for (std::size_t s = 0; s < base.selected.size(); ++s) {
        if (p0 == 0.0 || p_sq < kResidualFloor * kResidualFloor * p0) {
            return dropped_block_rank();
        }
        const double ratio = error_reduction_ratio(p_doty, p_sq, yty);
        if (ratio > base.sel_ratio[s] ||
            (ratio == base.sel_ratio[s] && probe_name < names[base.selected[s]])) {
            return s + 1;
        }
        const double c = dot(probe, base.basis[s]) / base.basis_sq[s];
        for (std::size_t i = 0; i < probe.size(); ++i) probe[i] -= c * base.basis[s][i];
        p_sq = dot(probe, probe);
        p_doty = dot(probe, y);
    }
    if (!base.exhausted) return std::numeric_limits<std::size_t>::max();
    if (p0 == 0.0 || p_sq < kResidualFloor * kResidualFloor * p0) {
        return dropped_block_rank();
    }
    return base.selected.size() + 1;
}

inline void validate_matrix(const FeatureMatrix& m) {
    const std::size_t n = m.doc_ids.size();
    if (n < 2) throw DataError("feature matrix needs at least two documents");
    if (m.terms.empty()) throw DataError("feature matrix has no terms");
    if (m.values.size() != n * m.terms.size()) {
        throw DataError("feature matrix value shape mismatch");
    }
    if (m.target.size() != n) throw DataError("feature matrix target length mismatch");
    bool has_pos = false, has_neg = false;
    for (const double t : m.target) {
        if (t == 1.0) {
            has_pos = true;
        } else if (t == 0.0) {
            has_neg = true;
        } else {
            throw DataError("target entries must be 0 or 1");
        }
    }
    if (!has_pos || !has_neg) throw DataError("single-class training set");
    for (const double v : m.values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("feature values must lie in [0,1]");
    }
}

}  // namespace ols_detail

// Candidate vocabulary from the training documents, pruned by document
// frequency: keep terms with min_df <= df <= max_df_ratio * N that are not
// in `exclude` (normally the rule terms, so the control filter learns the
// context around the trigger pattern rather than the pattern itself).
inline FeatureMatrix build_feature_matrix(const std::vector<Document>& docs,
                                          const std::vector<int>& labels, int min_df,
                                          double max_df_ratio,
                                          const std::set<std::string>& exclude) {
    if (docs.size() != labels.size()) throw DataError("documents/labels length mismatch");
    if (docs.size() < 2) throw DataError("need at least two training documents");
    if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) {
        throw DataError("max_df_ratio must lie in (0,1]");
    }
    bool has_pos = false, has_neg = false;
    for (const int l : labels) {
        if (l == 1) has_pos = true;
        if (l == 0) has_neg = true;
    }
    if (!has_pos || !has_neg) throw DataError("single-class training set");

    std::map<std::string, std::size_t> df;
    std::vector<std::unordered_map<std::string, std::size_t>> counts;
    counts.reserve(docs.size());
    for (const auto& d : docs) {
        counts.push_back(token_counts(d.tokens));
        for (const auto& [term, c] : counts.back()) {
            (void)c;
            ++df[term];
        }
    }

    const double max_df = max_df_ratio * static_cast<double>(docs.size());
    FeatureMatrix m;
    for (const auto& [term, freq] : df) {
        if (freq < static_cast<std::size_t>(std::max(min_df, 0))) continue;
        if (static_cast<double>(freq) > max_df) continue;
        if (exclude.count(term)) continue;
        m.terms.push_back(term);  // df map iterates lexicographically
    }
    if (m.terms.empty()) throw DataError("no surviving terms after frequency pruning");

    m.values.assign(docs.size() * m.terms.size(), 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        m.doc_ids.push_back(docs[i].id);
        m.target.push_back(labels[i] == 1 ? 1.0 : 0.0);
        const double total = static_cast<double>(docs[i].tokens.size());
        if (total == 0.0) continue;
        for (std::size_t j = 0; j < m.terms.size(); ++j) {
            const auto it = counts[i].find(m.terms[j]);
            if (it != counts[i].end()) {
                m.values[i * m.terms.size() + j] = static_cast<double>(it->second) / total;
            }
        }
    }
    return m;
}

struct OlsResult {
    RankedTerms ranking;
    // Orthogonalized selected columns, in rank order (for diagnostics).
    std::vector<std::vector<double>> orthogonal_basis;
};

// Full greedy OLS ranking of every column against the original target.
// Collinear columns receive the worst ranks, ordered lexicographically,
// with a score of 0.
inline OlsResult rank_terms_ols_detailed(const FeatureMatrix& m) {
    ols_detail::validate_matrix(m);
    std::vector<std::vector<double>> cols;
    cols.reserve(m.terms.size());
    for (std::size_t j = 0; j < m.terms.size(); ++j) cols.push_back(m.column(j));
    auto base = ols_detail::greedy_ols(std::move(cols), m.terms, m.target, m.terms.size());

    OlsResult out;
    std::size_t rank = 1;
    for (std::size_t s = 0; s < base.selected.size(); ++s) {
        out.ranking.entries.push_back({m.terms[base.selected[s]], rank++, base.sel_ratio[s]});
    }
    std::sort(base.dropped.begin(), base.dropped.end(),
              [&](std::size_t a, std::size_t b) { return m.terms[a] < m.terms[b]; });
    for (const std::size_t j : base.dropped) {
        out.ranking.entries.push_back({m.terms[j], rank++, 0.0});
    }
    out.orthogonal_basis = std::move(base.basis);
    return out;
}

inline RankedTerms rank_terms_ols(const FeatureMatrix& m) {
    return rank_terms_ols_detailed(m).ranking;
}

// Random-probe stopping criterion: a Gaussian probe column is appended over
// `trials` repetitions and ranked alongside the real terms; a real rank r is
// trusted while the fraction of trials in which the probe reached rank <= r
// stays below 1 - confidence. The trusted prefix, capped at max_terms, is
// the term vector.
inline TermVector select_terms_with_probe(const FeatureMatrix& m, std::size_t trials,
                                          double confidence, std::size_t max_terms,
                                          std::uint64_t seed) {
    ols_detail::validate_matrix(m);
    if (trials < 1) throw DataError("probe trials must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw DataError("confidence must lie in (0,1)");
    }
    if (max_terms < 1) throw DataError("max_terms must be >= 1");

    const std::size_t n = m.doc_ids.size();
    const std::size_t m_cols = m.terms.size();
    std::vector<std::vector<double>> cols;
    cols.reserve(m_cols);
    for (std::size_t j = 0; j < m_cols; ++j) cols.push_back(m.column(j));
    const std::size_t steps = std::min(m_cols, max_terms + 1);
    const auto base = ols_detail::greedy_ols(std::move(cols), m.terms, m.target, steps);

    const std::string probe_name = "~probe~";  // sorts after plain ASCII terms
    std::vector<std::size_t> probe_ranks(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, t));
        std::vector<double> probe(n);
        for (auto& v : probe) v = rng.normal();
        probe_ranks[t] = ols_detail::probe_rank(base, m.terms, probe_name, m.target,
                                                std::move(probe));
    }

    // Probe-free ranking prefix, including the collinear tail when the
    // ranking is complete.
    std::vector<std::size_t> by_rank = base.selected;
    if (base.exhausted) {
        auto dropped = base.dropped;
        std::sort(dropped.begin(), dropped.end(),
                  [&](std::size_t a, std::size_t b) { return m.terms[a] < m.terms[b]; });
        by_rank.insert(by_rank.end(), dropped.begin(), dropped.end());
    }

    const double alpha = 1.0 - confidence;
    std::vector<std::size_t> kept;
    for (std::size_t r = 1; r <= std::min(max_terms, by_rank.size()); ++r) {
        std::size_t cnt = 0;
        for (const std::size_t pr : probe_ranks) {
            if (pr <= r) ++cnt;
        }
        if (static_cast<double>(cnt) / static_cast<double>(trials) >= alpha) break;
        kept.push_back(by_rank[r - 1]);
    }
    if (kept.empty()) throw DataError("no discriminant terms");

    TermVector tv;
    for (const std::size_t j : kept) {
        const auto col = m.column(j);
        double mean = 0.0;
        for (const double v : col) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        tv.terms.push_back(m.terms[j]);
        tv.means.push_back(mean);
        tv.stds.push_back(std::max(std::sqrt(var), kStdFloor));
    }
    return tv;
}

}  // namespace driftwatch
