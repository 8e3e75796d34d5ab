// eval.hpp -- link-prediction protocol: Hadamard edge features, an
// L2-regularized logistic regression trained by monotone gradient descent,
// and scoring of the temporal test split.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysubc/common.hpp"
#include "dysubc/matrix.hpp"
#include "dysubc/metrics.hpp"
#include "dysubc/temporal_graph.hpp"
#include "dysubc/trainer.hpp"

namespace dysubc {

struct EvalReport {
    double auc = 0.0;
    double accuracy = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::uint64_t seed = 0;
    std::string variant = "full";
};

// Elementwise product; symmetric in (u, v).
inline Vec edge_feature(const Vec& h_u, const Vec& h_v) {
    if (h_u.size() != h_v.size()) throw std::invalid_argument("edge_feature: dimension mismatch");
    Vec f(h_u.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = h_u[i] * h_v[i];
    return f;
}

struct LogRegModel {
    Vec w;
    double b = 0.0;

    double predict(const Vec& x) const { return sigmoid(dot(w, x) + b); }
};

namespace detail {

// mean logistic NLL + (l2/2)||w||^2 (bias unregularized)
inline double logreg_loss(const std::vector<Vec>& X, const std::vector<int>& y,
                          const LogRegModel& m, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double z = dot(m.w, X[i]) + m.b;
        // log(1 + exp(-yz)) in the stable form
        const double margin = y[i] != 0 ? z : -z;
        loss += margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    loss /= static_cast<double>(X.size());
    loss += 0.5 * l2 * dot(m.w, m.w);
    return loss;
}

inline void logreg_gradient(const std::vector<Vec>& X, const std::vector<int>& y,
                            const LogRegModel& m, double l2, Vec& gw, double& gb) {
    gw.assign(m.w.size(), 0.0);
    gb = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double p = m.predict(X[i]);
        const double r = p - (y[i] != 0 ? 1.0 : 0.0);
        axpy(r, X[i], gw);
        gb += r;
    }
    const double inv_m = 1.0 / static_cast<double>(X.size());
    for (std::size_t c = 0; c < gw.size(); ++c) gw[c] = gw[c] * inv_m + l2 * m.w[c];
    gb *= inv_m;
}

}  // namespace detail

// Gradient descent from zero with monotone backtracking on the step size.
// When a validation set is supplied, the weights with the best validation
// AUC along the path are returned.
inline LogRegModel fit_logreg(const std::vector<Vec>& features, const std::vector<int>& labels,
                              double l2 = 1e-4, int iters = 500,
                              const std::vector<Vec>* val_features = nullptr,
                              const std::vector<int>* val_labels = nullptr) {
    if (features.empty() || features.size() != labels.size())
        throw std::invalid_argument("fit_logreg: bad training set");
    bool has_pos = false, has_neg = false;
    for (int y : labels) (y != 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw std::invalid_argument("fit_logreg: single-class input");

    LogRegModel m;
    m.w.assign(features[0].size(), 0.0);
    double loss = detail::logreg_loss(features, labels, m, l2);
    double step = 4.0;

    LogRegModel best = m;
    double best_val = -1.0;
    auto consider = [&](const LogRegModel& cand) {
        if (!val_features) return;
        std::vector<double> scores(val_features->size());
        for (std::size_t i = 0; i < val_features->size(); ++i) scores[i] = cand.predict((*val_features)[i]);
        const double v = auc_score(scores, *val_labels);
        if (v > best_val) {
            best_val = v;
            best = cand;
        }
    };

    Vec gw;
    double gb = 0.0;
    for (int it = 0; it < iters; ++it) {
        detail::logreg_gradient(features, labels, m, l2, gw, gb);
        bool advanced = false;
        for (int half = 0; half < 60; ++half) {
            LogRegModel trial = m;
            axpy(-step, gw, trial.w);
            trial.b -= step * gb;
            const double trial_loss = detail::logreg_loss(features, labels, trial, l2);
            if (trial_loss <= loss) {
                m = std::move(trial);
                loss = trial_loss;
                step *= 1.2;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if (!advanced) break;  // no descent direction progress at any step size
        if (val_features && (it % 10 == 9 || it == iters - 1)) consider(m);
    }
    if (val_features) {
        consider(m);
        return best;
    }
    return m;
}

namespace detail {

inline Vec embedding_row(const Matrix& emb, int node) {
    if (node < 0 || node >= emb.rows)
        throw std::out_of_range("evaluation: split endpoint " + std::to_string(node) +
                                " missing from embedding table");
    return Vec(emb.row(node), emb.row(node) + emb.cols);
}

}  // namespace detail

// Trains the classifier on the train positives plus an equal number of
// seeded non-edges (distinct from the split's negatives), selects on the
// validation split, and reports AUC/accuracy on the test split.
inline EvalReport run_link_prediction(const TemporalGraph& full_graph, const Matrix& embeddings,
                                      const EdgeSplit& split, std::uint64_t seed) {
    if (split.train_pos.empty() || split.test_pos.empty())
        throw std::invalid_argument("run_link_prediction: empty split");
    if (split.val_neg.size() != split.val_pos.size() || split.test_neg.size() != split.test_pos.size())
        throw std::invalid_argument("run_link_prediction: split is missing negatives");

    std::vector<std::pair<int, int>> exclude;
    exclude.reserve(split.val_neg.size() + split.test_neg.size());
    exclude.insert(exclude.end(), split.val_neg.begin(), split.val_neg.end());
    exclude.insert(exclude.end(), split.test_neg.begin(), split.test_neg.end());
    const auto train_neg = sample_negatives(full_graph, split.train_pos.size(),
                                            derive_seed(seed, seed_tag::train_negatives), exclude);

    auto pair_feature = [&embeddings](int u, int v) {
        return edge_feature(detail::embedding_row(embeddings, u), detail::embedding_row(embeddings, v));
    };

    std::vector<Vec> train_x;
    std::vector<int> train_y;
    train_x.reserve(split.train_pos.size() + train_neg.size());
    for (const auto& e : split.train_pos) {
        train_x.push_back(pair_feature(e.u, e.v));
        train_y.push_back(1);
    }
    for (const auto& [u, v] : train_neg) {
        train_x.push_back(pair_feature(u, v));
        train_y.push_back(0);
    }

    std::vector<Vec> val_x;
    std::vector<int> val_y;
    for (const auto& e : split.val_pos) {
        val_x.push_back(pair_feature(e.u, e.v));
        val_y.push_back(1);
    }
    for (const auto& [u, v] : split.val_neg) {
        val_x.push_back(pair_feature(u, v));
        val_y.push_back(0);
    }

    const bool use_val = !val_x.empty();
    const LogRegModel model =
        fit_logreg(train_x, train_y, 1e-4, 500, use_val ? &val_x : nullptr, use_val ? &val_y : nullptr);

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(split.test_pos.size() + split.test_neg.size());
    for (const auto& e : split.test_pos) {
        scores.push_back(model.predict(pair_feature(e.u, e.v)));
        labels.push_back(1);
    }
    for (const auto& [u, v] : split.test_neg) {
        scores.push_back(model.predict(pair_feature(u, v)));
        labels.push_back(0);
    }

    EvalReport report;
    report.auc = auc_score(scores, labels);
    report.accuracy = accuracy_score(scores, labels);
    report.n_pos = split.test_pos.size();
    report.n_neg = split.test_neg.size();
    report.seed = seed;
    return report;
}

// Ablation variants of Table-style naming: -S structural-only sampling,
// -N no temporal negative, -R mean readout.
struct Variant {
    std::string label = "full";
    bool structure_only_sampling = false;
    bool no_temporal_negative = false;
    bool mean_readout = false;
};

inline Variant parse_variant(const std::string& label) {
    Variant v;
    v.label = label;
    if (label == "full") return v;
    if (label == "-R") {
        v.mean_readout = true;
        return v;
    }
    if (label == "-N-R") {
        v.no_temporal_negative = true;
        v.mean_readout = true;
        return v;
    }
    if (label == "-S-N-R") {
        v.structure_only_sampling = true;
        v.no_temporal_negative = true;
        v.mean_readout = true;
        return v;
    }
    throw std::invalid_argument("unknown variant label: " + label);
}

inline void apply_variant(TrainConfig& cfg, const Variant& v) {
    cfg.no_temporal_negative = v.no_temporal_negative;
    cfg.mean_readout = v.mean_readout;
}

}  // namespace dysubc
