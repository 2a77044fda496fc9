// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits non-zero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "driftwatch/cli.hpp"
#include "driftwatch/driftwatch.hpp"
#include "ols_oracle.hpp"

using namespace driftwatch;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ensure(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

std::string fmt(const char* pattern, ...) {
    char buf[256];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// --------------------------------------------------------------------------
// Shared fixtures

FeatureMatrix random_matrix(Rng& rng, std::size_t n, std::size_t m) {
    FeatureMatrix out;
    for (std::size_t j = 0; j < m; ++j) out.terms.push_back("t" + std::to_string(100 + j));
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        out.doc_ids.push_back("doc" + std::to_string(i));
        const double t = rng.below(2) ? 1.0 : 0.0;
        (t == 1.0 ? has1 : has0) = true;
        out.target.push_back(t);
        for (std::size_t j = 0; j < m; ++j) out.values.push_back(rng.uniform01() * 0.5);
    }
    if (!has1) out.target[0] = 1.0;
    if (!has0) out.target[1] = 0.0;
    return out;
}

std::vector<FeatureMatrix> criterion2_instances() {
    Rng rng(20260810);
    std::vector<FeatureMatrix> out;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 4 + rng.below(17);  // <= 20
        const std::size_t m = 1 + rng.below(10);  // <= 10
        out.push_back(random_matrix(rng, n, m));
    }
    return out;
}

std::vector<std::vector<double>> matrix_columns(const FeatureMatrix& m) {
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < m.terms.size(); ++j) cols.push_back(m.column(j));
    return cols;
}

// Drift experiment used by criteria 6-8: a 2000-document stream, the trigger
// rule, and a control filter trained on the pre-onset half.
struct Experiment {
    DriftStream stream;
    RuleSet rules;
    ControlModel model;
    std::vector<Verdict> verdicts;
    std::vector<double> scores;
    std::size_t onset = 1000;
};

Experiment run_experiment(DriftKind kind, std::uint64_t stream_seed,
                          std::uint64_t build_seed) {
    Experiment ex;
    ex.stream = generate_drift_stream(default_drift_spec(kind, 2000, stream_seed));
    ex.rules = parse_rules("topic \"acme\"\naccept when \"acme\"\n");
    TopicConfig cfg;
    cfg.max_pos = 250;
    cfg.seed = build_seed;
    cfg.window = TimeInterval{ex.stream.documents.front().ts,
                              ex.stream.documents[ex.onset - 1].ts};
    ex.model = build_control_model(ex.stream.documents, ex.rules, cfg);
    ex.verdicts = run_filter(ex.rules, ex.stream.documents);
    ex.scores.reserve(ex.stream.documents.size());
    for (const auto& d : ex.stream.documents) ex.scores.push_back(score(ex.model, d));
    return ex;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("driftwatch_acc_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        std::ofstream out(path / name, std::ios::binary);
        out << content;
        return (path / name).string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    ensure(in.good(), "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int quiet_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
}

// --------------------------------------------------------------------------
// Criteria

std::string criterion1_gradient_oracle() {
    Rng rng(11);
    double worst = 0.0;
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t dim = 1 + rng.below(8);
        ControlModel model;
        model.bias = 2.0 * rng.uniform01() - 1.0;
        model.weights.resize(dim);
        std::vector<double> x(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            model.weights[i] = 2.0 * rng.uniform01() - 1.0;
            x[i] = 2.0 * rng.uniform01() - 1.0;
        }
        const double label = rng.below(2) ? 1.0 : 0.0;
        const auto loss = [&](const std::vector<double>& w, double b) {
            double a = b;
            for (std::size_t i = 0; i < dim; ++i) a += w[i] * x[i];
            const double y = (1.0 + std::tanh(a)) / 2.0;
            return (y - label) * (y - label);
        };
        const double h = 1e-5;
        std::vector<double> fd(dim + 1);
        for (std::size_t i = 0; i < dim; ++i) {
            auto wp = model.weights, wm = model.weights;
            wp[i] += h;
            wm[i] -= h;
            fd[i] = (loss(wp, model.bias) - loss(wm, model.bias)) / (2.0 * h);
        }
        fd[dim] = (loss(model.weights, model.bias + h) -
                   loss(model.weights, model.bias - h)) / (2.0 * h);
        const auto [dw, db] = loss_gradient(model, x, label);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            num += (dw[i] - fd[i]) * (dw[i] - fd[i]);
            den += fd[i] * fd[i];
        }
        num += (db - fd[dim]) * (db - fd[dim]);
        den += fd[dim] * fd[dim];
        const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
        worst = std::max(worst, rel);
        ensure(rel <= 1e-5, fmt("draw %d: relative error %.3e > 1e-5", iter, rel));
    }
    return fmt("max relative error %.2e over 50 draws", worst);
}

std::string criterion2_ols_oracle() {
    const auto instances = criterion2_instances();
    int full_checked = 0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto& m = instances[k];
        const auto cols = matrix_columns(m);
        const auto ranking = rank_terms_ols(m);
        const std::size_t best = oracle::best_single_column(cols, m.terms, m.target);
        ensure(ranking.entries[0].term == m.terms[best],
               fmt("instance %zu: rank-1 term mismatch", k));
        if (m.terms.size() <= 5) {
            ++full_checked;
            const auto expect = oracle::rank_columns(cols, m.terms, m.target);
            ensure(ranking.entries.size() == expect.size(),
                   fmt("instance %zu: ranking size mismatch", k));
            for (std::size_t i = 0; i < expect.size(); ++i) {
                ensure(ranking.entries[i].term == expect[i].term,
                       fmt("instance %zu: rank %zu mismatch", k, i + 1));
                ensure(std::abs(ranking.entries[i].score - expect[i].score) <= 1e-10,
                       fmt("instance %zu: score %zu mismatch", k, i + 1));
            }
        }
    }
    return fmt("100 rank-1 checks, %d full-ranking checks", full_checked);
}

std::string criterion3_orthogonality() {
    const auto instances = criterion2_instances();
    double worst = 0.0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto detail = rank_terms_ols_detailed(instances[k]);
        const auto& basis = detail.orthogonal_basis;
        for (std::size_t a = 0; a < basis.size(); ++a) {
            for (std::size_t b = a + 1; b < basis.size(); ++b) {
                const double d = std::abs(oracle::dot(basis[a], basis[b]));
                const double bound = std::sqrt(oracle::dot(basis[a], basis[a])) *
                                     std::sqrt(oracle::dot(basis[b], basis[b]));
                ensure(d <= 1e-8 * bound, fmt("instance %zu: dot %.3e over bound", k, d));
                if (bound > 0.0) worst = std::max(worst, d / bound);
            }
        }
    }
    return fmt("max relative off-diagonal %.2e", worst);
}

std::string criterion4_probe_behavior() {
    // (a) one target-identical column among 9 noise columns: retained always.
    int retained = 0;
    Rng data_rng(41);
    for (int seed = 0; seed < 50; ++seed) {
        FeatureMatrix m;
        for (int j = 0; j < 10; ++j) m.terms.push_back("n" + std::to_string(j));
        m.terms[4] = "real_signal";
        for (int i = 0; i < 40; ++i) {
            m.doc_ids.push_back("d" + std::to_string(i));
            m.target.push_back(data_rng.below(2) ? 1.0 : 0.0);
        }
        m.target[0] = 1.0;
        m.target[1] = 0.0;
        for (int i = 0; i < 40; ++i) {
            for (int j = 0; j < 10; ++j) {
                m.values.push_back(j == 4 ? m.target[i] : data_rng.uniform01() * 0.5);
            }
        }
        const auto tv = select_terms_with_probe(m, 50, 0.95, 50, 5000 + seed);
        if (std::find(tv.terms.begin(), tv.terms.end(), "real_signal") != tv.terms.end()) {
            ++retained;
        }
    }
    ensure(retained == 50, fmt("signal retained in %d/50 trials", retained));

    // (b) pure noise: "no discriminant terms" in >= 90 of 100 seeds.
    Rng noise_rng(42);
    int rejected = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto m = random_matrix(noise_rng, 50, 5);
        try {
            select_terms_with_probe(m, 50, 0.95, 50, 6000 + seed);
        } catch (const DataError&) {
            ++rejected;
        }
    }
    ensure(rejected >= 90, fmt("pure noise rejected in only %d/100 seeds", rejected));
    return fmt("signal kept 50/50, noise rejected %d/100", rejected);
}

std::string criterion5_training_sanity() {
    Rng rng(51);
    std::vector<std::string> va, vb;
    for (int i = 0; i < 10; ++i) {
        va.push_back("apple" + std::to_string(i));
        vb.push_back("brick" + std::to_string(i));
    }
    std::vector<Document> docs;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        const bool positive = i < 100;
        std::string text;
        const std::size_t len = 5 + rng.below(6);
        for (std::size_t k = 0; k < len; ++k) {
            if (!text.empty()) text += ' ';
            text += (positive ? va : vb)[rng.below(10)];
        }
        docs.push_back(make_document("t" + std::to_string(i), i, "", text));
        labels.push_back(positive ? 1 : 0);
    }
    const auto matrix = build_feature_matrix(docs, labels, 1, 1.0, {});
    TermVector tv;
    for (std::size_t j = 0; j < matrix.terms.size(); ++j) {
        const auto col = matrix.column(j);
        double mean = 0.0;
        for (const double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double var = 0.0;
        for (const double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(col.size());
        tv.terms.push_back(matrix.terms[j]);
        tv.means.push_back(mean);
        tv.stds.push_back(std::max(std::sqrt(var), kStdFloor));
    }
    TrainingSet ts;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        ts.examples.push_back({docs[i].id, raw_features(docs[i], tv), labels[i]});
    }
    Hyperparams hp;
    hp.seed = 52;
    const auto model = train(ts, tv, hp, "toy");
    ensure(model.training_meta.epochs_run <= 1000,
           fmt("took %zu epochs", model.training_meta.epochs_run));
    ensure(model.training_meta.final_loss < 0.05,
           fmt("final MSE %.4f >= 0.05", model.training_meta.final_loss));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const bool hit = (score(model, docs[i]) >= 0.5) == (labels[i] == 1);
        ensure(hit, fmt("document %zu misclassified at the 0.5 cutoff", i));
    }
    return fmt("MSE %.4f, accuracy 100%% in %zu epochs", model.training_meta.final_loss,
               model.training_meta.epochs_run);
}

std::string criterion6_similarity() {
    const auto ex = run_experiment(DriftKind::kNone, 1106, 61);
    std::size_t agree = 0, total = 0;
    for (std::size_t i = ex.onset; i < ex.stream.documents.size(); ++i) {
        ++total;
        if (ex.verdicts[i].selected == (ex.scores[i] >= 0.5)) ++agree;
    }
    const double agreement = static_cast<double>(agree) / static_cast<double>(total);
    ensure(agreement >= 0.95, fmt("held-out agreement %.4f < 0.95", agreement));
    return fmt("held-out agreement %.4f over %zu documents (%zu terms)", agreement, total,
               ex.model.term_vector.terms.size());
}

std::string criterion7_polysemy() {
    const auto ex = run_experiment(DriftKind::kPolysemy, 1107, 71);
    std::vector<std::pair<double, bool>> candidates;
    for (std::size_t i = ex.onset; i < ex.stream.documents.size(); ++i) {
        if (ex.verdicts[i].selected) {
            candidates.emplace_back(ex.scores[i], ex.stream.ground_truth[i].injected);
        }
    }
    const auto q = score_detection(candidates, DriftKind::kPolysemy);
    ensure(q.auc >= 0.90, fmt("AUC %.4f < 0.90", q.auc));
    ensure(q.detection_rate >= 0.7, fmt("detection rate %.4f < 0.7", q.detection_rate));
    ensure(q.false_alert_rate <= 0.1, fmt("false-alert rate %.4f > 0.1", q.false_alert_rate));
    return fmt("AUC %.4f, detection %.4f, false alerts %.4f (%zu candidates)", q.auc,
               q.detection_rate, q.false_alert_rate, candidates.size());
}

std::string criterion8_polymorphism() {
    const auto ex = run_experiment(DriftKind::kPolymorphism, 1108, 81);
    std::vector<std::pair<double, bool>> candidates;
    for (std::size_t i = ex.onset; i < ex.stream.documents.size(); ++i) {
        if (!ex.verdicts[i].selected) {
            candidates.emplace_back(ex.scores[i], ex.stream.ground_truth[i].injected);
        }
    }
    const auto q = score_detection(candidates, DriftKind::kPolymorphism);
    ensure(q.auc >= 0.90, fmt("AUC %.4f < 0.90", q.auc));
    ensure(q.detection_rate >= 0.7, fmt("detection rate %.4f < 0.7", q.detection_rate));
    ensure(q.false_alert_rate <= 0.1, fmt("false-alert rate %.4f > 0.1", q.false_alert_rate));
    return fmt("AUC %.4f, detection %.4f, false alerts %.4f (%zu candidates)", q.auc,
               q.detection_rate, q.false_alert_rate, candidates.size());
}

std::string criterion9_threshold_monotonicity() {
    Rng rng(91);
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<SupervisedItem> items;
        const std::size_t n = rng.below(30);
        for (std::size_t i = 0; i < n; ++i) {
            SupervisedItem it;
            it.doc_id = "d" + std::to_string(i);
            it.selected = rng.below(2) == 0;
            it.control_score = rng.below(10) == 0 ? 0.2 : rng.uniform01();
            items.push_back(std::move(it));
        }
        double s1 = rng.uniform01(), s2 = rng.uniform01();
        if (s1 > s2) std::swap(s1, s2);
        const auto ids = [](const std::vector<Alert>& alerts) {
            std::set<std::string> out;
            for (const auto& a : alerts) out.insert(a.doc_id);
            return out;
        };
        const auto p1 = ids(detect_precision_loss(items, {s1, 0.8}));
        const auto p2 = ids(detect_precision_loss(items, {s2, 0.8}));
        for (const auto& id : p1) {
            ensure(p2.count(id) == 1, "precision alerts are not nested");
        }
        const auto r1 = ids(detect_recall_loss(items, {0.2, s1}));
        const auto r2 = ids(detect_recall_loss(items, {0.2, s2}));
        for (const auto& id : r2) {
            ensure(r1.count(id) == 1, "recall alerts are not nested");
        }
        const auto p = ids(detect_precision_loss(items, {s1, s2}));
        const auto r = ids(detect_recall_loss(items, {s1, s2}));
        for (const auto& id : p) {
            ensure(r.count(id) == 0, "detectors fired together on one item");
        }
    }
    return "1000 random streams: inclusion chains and exclusivity hold";
}

std::string criterion10_f_measure() {
    ensure(f_from_pr(0.75, 0.5) == 0.6, "f(0.75, 0.5) != 0.6");
    ensure(f_from_pr(0.0, 0.0) == 0.0, "p+r=0 guard failed");
    Rng rng(101);
    for (int iter = 0; iter < 1000; ++iter) {
        const double p = rng.uniform01();
        const double r = rng.uniform01();
        const double expect = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        ensure(f_from_pr(p, r) == expect, "formula mismatch");
        ensure(std::abs(f_from_pr(p, p) - p) <= 1e-15, "f(p,p) != p");
    }
    const auto rep = f_measure({3, 1, 0, 3});
    ensure(rep.f_measure == 0.6, "f from counts (3,1,0,3) != 0.6");
    return "exact identities and 1000 random (p,r) agree with 2pr/(p+r)";
}

std::string criterion11_determinism() {
    TempDir dir;
    const auto spec = dir.file("d.spec",
                               "drift_kind = polysemy\nn_docs = 300\nseed = 13\n");
    ensure(quiet_cli({"simulate", "--spec", spec, "--out", dir.at("a.jsonl"), "--truth",
                      dir.at("at.jsonl")}) == 0,
           "simulate run 1 failed");
    ensure(quiet_cli({"simulate", "--spec", spec, "--out", dir.at("b.jsonl"), "--truth",
                      dir.at("bt.jsonl")}) == 0,
           "simulate run 2 failed");
    ensure(slurp(dir.at("a.jsonl")) == slurp(dir.at("b.jsonl")), "corpora differ");
    ensure(slurp(dir.at("at.jsonl")) == slurp(dir.at("bt.jsonl")), "truth files differ");

    const auto train_spec = dir.file("t.spec",
                                     "drift_kind = none\nn_docs = 400\nseed = 5\n"
                                     "relevant_rate = 0.4\n");
    ensure(quiet_cli({"simulate", "--spec", train_spec, "--out", dir.at("c.jsonl"),
                      "--truth", dir.at("ct.jsonl")}) == 0,
           "training corpus simulation failed");
    dir.file("acme.rules", "topic \"acme\"\naccept when \"acme\"\n");
    const auto cfg = dir.file("topic.cfg",
                              "rules_path = acme.rules\nmax_pos = 100\n"
                              "probe_trials = 40\nmax_terms = 25\nseed = 2\n");
    for (const char* name : {"m1.model", "m2.model"}) {
        ensure(quiet_cli({"build-control", "--topic", cfg, "--corpus", dir.at("c.jsonl"),
                          "--out", dir.at(name)}) == 0,
               "build-control failed");
    }
    ensure(slurp(dir.at("m1.model")) == slurp(dir.at("m2.model")), "model files differ");
    return "byte-identical model files and simulation outputs";
}

std::string criterion12_worked_example() {
    const RuleSet rs = parse_rules(
        "topic \"Saint-Louis (company)\"\n"
        "assert SL when \"Saint-Louis\"\n"
        "accept when fact(SL) scope document\n"
        "reject when \"maire\" near/3 fact(SL)\n");
    const auto mayor = make_document("m", 0, "", "le maire de Saint-Louis a inauguré");
    ensure(!evaluate(rs, mayor).selected, "mayor sentence was not rejected");
    const auto results = make_document("r", 0, "", "Saint-Louis annonce ses résultats");
    const auto v = evaluate(rs, results);
    ensure(v.selected, "results sentence was not accepted");
    ensure(!v.matches.empty(), "accepted verdict has no matched spans");
    return "mayor sentence rejected, results sentence accepted";
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0 = no stated limit
    std::function<std::string()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "gradient oracle", 1.0, criterion1_gradient_oracle},
        {2, "OLS oracle equivalence", 5.0, criterion2_ols_oracle},
        {3, "orthogonality", 0.0, criterion3_orthogonality},
        {4, "random-probe criterion", 0.0, criterion4_probe_behavior},
        {5, "training sanity", 5.0, criterion5_training_sanity},
        {6, "control/initial similarity", 0.0, criterion6_similarity},
        {7, "polysemy detection", 60.0, criterion7_polysemy},
        {8, "polymorphism detection", 60.0, criterion8_polymorphism},
        {9, "threshold monotonicity", 0.0, criterion9_threshold_monotonicity},
        {10, "F-measure", 0.0, criterion10_f_measure},
        {11, "determinism", 0.0, criterion11_determinism},
        {12, "worked rule example", 0.0, criterion12_worked_example},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
            ok = false;
            detail = fmt("runtime %.2fs exceeds %.0fs budget", seconds, c.budget_seconds);
        }
        if (!ok) ++failures;
        std::printf("[%2d] %s  %-28s %s (%.2fs)\n", c.id, ok ? "PASS" : "FAIL", c.name,
                    detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("ACCEPTANCE: %zu/%zu criteria passed\n", criteria.size() - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
