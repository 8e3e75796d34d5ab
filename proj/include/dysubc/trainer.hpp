// trainer.hpp -- dual margin contrastive training with analytically derived
// gradients for both one-layer GCN encoders, updated with Adam.
//
// Per center i the loss contrasts the center representation h_i against a
// positive (its own time-weighted summary s_i), a structural negative (a
// shuffled summary s_{pi(i)}) and a temporal negative (the plain-encoder
// summary s_i'). Gradients flow through every branch, including the shuffled
// summaries, which belong to the time-weighted encoder.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dysubc/adam.hpp"
#include "dysubc/common.hpp"
#include "dysubc/encoder.hpp"
#include "dysubc/matrix.hpp"
#include "dysubc/sampler.hpp"

namespace dysubc {

struct TrainConfig {
    int k = 20;
    double alpha = 10.0;   // sampler structure/time balance
    double beta = 1.6;     // readout influence balance
    double lambda = 0.5;   // temporal loss weight
    double phi = 0.75;     // structural margin
    double varphi = 0.75;  // temporal margin
    double lr = 0.001;
    int epochs = 50;
    int batch_size = 0;    // centers per step; 0 = full batch
    int dim = 128;
    std::uint64_t seed = 42;
    int threads = 1;

    // ablations / diagnostics
    bool no_temporal_negative = false;  // -N: drop the temporal negative (lambda -> 0)
    bool mean_readout = false;          // -R: mean readout instead of influence-weighted
    bool erase_time_weights = false;    // time-blinded: E1 sees the plain adjacency
    // Alternative hinge max(margin - gap, 0) instead of the default
    // -max(gap + margin, 0); kept for comparison runs.
    bool conventional_hinge = false;

    bool early_stop = false;  // stop when validation score stalls
    int patience = 10;

    double effective_lambda() const { return no_temporal_negative ? 0.0 : lambda; }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double sigmoid_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

// -max(sigma(pos) - sigma(neg) + margin, 0) on raw scores, or the
// conventional hinge max(margin - (sigma(pos) - sigma(neg)), 0).
inline double margin_term_scores(double score_pos, double score_neg, double margin,
                                 bool conventional = false) {
    const double gap = sigmoid(score_pos) - sigmoid(score_neg);
    if (conventional) return std::max(margin - gap, 0.0);
    return -std::max(gap + margin, 0.0);
}

inline double margin_term(const Vec& h, const Vec& s_pos, const Vec& s_neg, double margin,
                          bool conventional = false) {
    if (h.size() != s_pos.size() || h.size() != s_neg.size())
        throw std::invalid_argument("margin_term: dimension mismatch");
    return margin_term_scores(dot(h, s_pos), dot(h, s_neg), margin, conventional);
}

struct LossTerms {
    double total = 0.0;
    double structural = 0.0;  // L1
    double temporal = 0.0;    // L2
};

struct ContrastSample {
    Vec h;           // center representation
    Vec s_pos;       // own time-weighted summary
    Vec s_shuffled;  // structural negative
    Vec s_plain;     // temporal negative
};

// L = L1 + lambda * L2 with L1/L2 the batch means of the two margin terms.
inline LossTerms total_loss(const std::vector<ContrastSample>& batch, double phi, double varphi,
                            double lambda, bool conventional = false) {
    if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
    LossTerms out;
    for (const auto& s : batch) {
        out.structural += margin_term(s.h, s.s_pos, s.s_shuffled, phi, conventional);
        out.temporal += margin_term(s.h, s.s_pos, s.s_plain, varphi, conventional);
    }
    out.structural /= static_cast<double>(batch.size());
    out.temporal /= static_cast<double>(batch.size());
    out.total = out.structural + lambda * out.temporal;
    return out;
}

inline std::vector<int> shuffle_permutation(std::size_t n, Rng& rng) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> d(0, i - 1);
        std::swap(perm[i - 1], perm[d(rng)]);
    }
    return perm;
}

// Uniform Fisher-Yates shuffle of the summary set (Eq. applied per epoch).
inline std::vector<Vec> shuffle_summaries(const std::vector<Vec>& summaries, std::uint64_t seed) {
    if (summaries.empty()) throw std::invalid_argument("shuffle_summaries: empty set");
    Rng rng(seed);
    const auto perm = shuffle_permutation(summaries.size(), rng);
    std::vector<Vec> out(summaries.size());
    for (std::size_t i = 0; i < summaries.size(); ++i) out[i] = summaries[perm[i]];
    return out;
}

// Everything about a subgraph that is constant across epochs: propagation
// matrices for both adjacencies and the readout weights.
struct SubgraphPack {
    const TemporalSubgraph* sub = nullptr;
    Matrix P_weighted;          // E1 propagation (plain adjacency when time-blinded)
    Matrix P_plain;             // E2 propagation (empty when lambda == 0)
    std::vector<double> omega;  // E1 readout weights, sum 1
};

inline SubgraphPack make_pack(const TemporalSubgraph& sub, const TrainConfig& cfg) {
    SubgraphPack pack;
    pack.sub = &sub;
    pack.P_weighted = propagation_matrix(cfg.erase_time_weights ? sub.A_plain : sub.A_time);
    if (cfg.effective_lambda() != 0.0) pack.P_plain = propagation_matrix(sub.A_plain);
    const int k = sub.size();
    if (cfg.mean_readout) {
        pack.omega.assign(k, 1.0 / k);
    } else {
        const auto inf = influence_scores(sub, cfg.beta);
        double total = 0.0;
        for (double v : inf) total += v;
        if (!(total > 0.0)) throw std::runtime_error("make_pack: non-positive influence sum");
        pack.omega.resize(k);
        for (int p = 0; p < k; ++p) pack.omega[p] = inf[p] / total;
    }
    return pack;
}

inline std::vector<SubgraphPack> make_packs(const std::vector<TemporalSubgraph>& subs,
                                            const TrainConfig& cfg) {
    std::vector<SubgraphPack> packs(subs.size());
    parallel_for(subs.size(), cfg.threads, [&](std::size_t i) { packs[i] = make_pack(subs[i], cfg); });
    return packs;
}

// A training step: which packs participate and the structural-negative
// assignment (s_shuffled of centers[i] is the summary of centers[perm[i]]).
struct TrainBatch {
    std::vector<int> centers;  // indices into the pack vector
    std::vector<int> perm;     // permutation of [0, centers.size())
};

struct Gradients {
    Matrix dW1, dW2;  // n x d; rows untouched by the batch stay exactly zero
    double da1 = 0.0, da2 = 0.0;
};

namespace detail {

struct CenterState {
    Matrix Z1, H1;
    Vec h, s;
    Matrix Z2, H2;
    Vec s_plain;
    // backward results
    Matrix dU1, dU2;
    double da1 = 0.0, da2 = 0.0;
};

inline void forward_center(const SubgraphPack& pack, const EncoderParams& enc1,
                           const EncoderParams& enc2, bool with_plain, CenterState& st) {
    const auto& nodes = pack.sub->nodes;
    st.H1 = gcn_forward_prepared(pack.P_weighted, nodes, enc1, &st.Z1);
    st.h = pick_out(st.H1);
    st.s.assign(st.H1.cols, 0.0);
    for (int p = 0; p < st.H1.rows; ++p) {
        const double w = pack.omega[p];
        const double* row = st.H1.row(p);
        for (int c = 0; c < st.H1.cols; ++c) st.s[c] += w * row[c];
    }
    if (with_plain) {
        st.H2 = gcn_forward_prepared(pack.P_plain, nodes, enc2, &st.Z2);
        st.s_plain = readout_mean(st.H2);
    }
}

// Backpropagates dL/dH through PReLU and the propagation matrix, returning
// dU (gradient wrt the selected W rows) and accumulating the slope gradient.
inline Matrix backward_encoder(const Matrix& P, const Matrix& Z, const Matrix& dH, double slope,
                               double& d_slope) {
    Matrix dZ(Z.rows, Z.cols);
    for (std::size_t i = 0; i < Z.a.size(); ++i) {
        if (Z.a[i] >= 0.0) {
            dZ.a[i] = dH.a[i];
        } else {
            dZ.a[i] = dH.a[i] * slope;
            d_slope += dH.a[i] * Z.a[i];
        }
    }
    return matmul(P, dZ);  // P is symmetric, so P^T dZ = P dZ
}

}  // namespace detail

// Forward pass of one batch; optionally keeps per-center state for backward.
inline LossTerms batch_forward(const std::vector<SubgraphPack>& packs, const TrainBatch& batch,
                               const EncoderParams& enc1, const EncoderParams& enc2,
                               const TrainConfig& cfg,
                               std::vector<detail::CenterState>* states_out = nullptr) {
    if (batch.centers.empty()) throw std::invalid_argument("batch_forward: empty batch");
    const double lambda = cfg.effective_lambda();
    const bool with_plain = lambda != 0.0;
    const std::size_t B = batch.centers.size();

    std::vector<detail::CenterState> local_states;
    auto& states = states_out ? *states_out : local_states;
    states.assign(B, {});
    parallel_for(B, cfg.threads, [&](std::size_t i) {
        detail::forward_center(packs[batch.centers[i]], enc1, enc2, with_plain, states[i]);
    });

    LossTerms loss;
    for (std::size_t i = 0; i < B; ++i) {
        const double d_pos = dot(states[i].h, states[i].s);
        const double d_str = dot(states[i].h, states[batch.perm[i]].s);
        loss.structural += margin_term_scores(d_pos, d_str, cfg.phi, cfg.conventional_hinge);
        if (with_plain) {
            const double d_tmp = dot(states[i].h, states[i].s_plain);
            loss.temporal += margin_term_scores(d_pos, d_tmp, cfg.varphi, cfg.conventional_hinge);
        }
    }
    loss.structural /= static_cast<double>(B);
    loss.temporal /= static_cast<double>(B);
    loss.total = loss.structural + lambda * loss.temporal;
    return loss;
}

// Exact gradients of the batch loss wrt both encoders' parameters. The
// clipped branch of either hinge contributes exactly zero.
inline Gradients compute_gradients(const std::vector<SubgraphPack>& packs, const TrainBatch& batch,
                                   const EncoderParams& enc1, const EncoderParams& enc2,
                                   const TrainConfig& cfg, LossTerms* loss_out = nullptr) {
    const double lambda = cfg.effective_lambda();
    const bool with_plain = lambda != 0.0;
    const std::size_t B = batch.centers.size();

    std::vector<detail::CenterState> states;
    const LossTerms loss = batch_forward(packs, batch, enc1, enc2, cfg, &states);
    if (loss_out) *loss_out = loss;

    // adjoints of the raw scores
    std::vector<double> g_pos(B, 0.0), g_str(B, 0.0), g_tmp(B, 0.0);
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        const double d_pos = dot(states[i].h, states[i].s);
        const double d_str = dot(states[i].h, states[batch.perm[i]].s);
        const double gap1 = sigmoid(d_pos) - sigmoid(d_str);
        const bool gate1 = cfg.conventional_hinge ? (cfg.phi - gap1 > 0.0) : (gap1 + cfg.phi > 0.0);
        if (gate1) {
            g_pos[i] -= inv_b * sigmoid_grad(d_pos);
            g_str[i] += inv_b * sigmoid_grad(d_str);
        }
        if (with_plain) {
            const double d_tmp = dot(states[i].h, states[i].s_plain);
            const double gap2 = sigmoid(d_pos) - sigmoid(d_tmp);
            const bool gate2 =
                cfg.conventional_hinge ? (cfg.varphi - gap2 > 0.0) : (gap2 + cfg.varphi > 0.0);
            if (gate2) {
                g_pos[i] -= lambda * inv_b * sigmoid_grad(d_pos);
                g_tmp[i] += lambda * inv_b * sigmoid_grad(d_tmp);
            }
        }
    }

    // perm is a bijection on the batch, so each summary serves as the
    // structural negative of exactly one center
    std::vector<int> perm_inv(B);
    for (std::size_t i = 0; i < B; ++i) perm_inv[batch.perm[i]] = static_cast<int>(i);

    parallel_for(B, cfg.threads, [&](std::size_t i) {
        auto& st = states[i];
        const auto& pack = packs[batch.centers[i]];
        const int k = st.H1.rows;
        const int d = st.H1.cols;

        // dL/dh_i collects all three score branches; dL/ds_i collects the
        // positive branch plus the center that drew s_i as its negative
        Vec dh(d, 0.0), ds(d, 0.0);
        axpy(g_pos[i], st.s, dh);
        axpy(g_str[i], states[batch.perm[i]].s, dh);
        if (with_plain) axpy(g_tmp[i], st.s_plain, dh);
        axpy(g_pos[i], st.h, ds);
        const int j = perm_inv[i];
        axpy(g_str[j], states[j].h, ds);

        Matrix dH1(k, d);
        for (int p = 0; p < k; ++p) {
            double* row = dH1.row(p);
            for (int c = 0; c < d; ++c) row[c] = pack.omega[p] * ds[c];
        }
        for (int c = 0; c < d; ++c) dH1(0, c) += dh[c];
        st.da1 = 0.0;
        st.dU1 = detail::backward_encoder(pack.P_weighted, st.Z1, dH1, enc1.prelu_slope, st.da1);

        if (with_plain) {
            Matrix dH2(k, d);
            const double inv_k = 1.0 / k;
            for (int p = 0; p < k; ++p) {
                double* row = dH2.row(p);
                for (int c = 0; c < d; ++c) row[c] = inv_k * g_tmp[i] * st.h[c];
            }
            st.da2 = 0.0;
            st.dU2 = detail::backward_encoder(pack.P_plain, st.Z2, dH2, enc2.prelu_slope, st.da2);
        }
    });

    // serial scatter in batch order keeps the floating-point reduction
    // deterministic for any thread count
    Gradients grads;
    grads.dW1 = Matrix(enc1.W.rows, enc1.W.cols);
    grads.dW2 = Matrix(enc2.W.rows, enc2.W.cols);
    for (std::size_t i = 0; i < B; ++i) {
        const auto& st = states[i];
        const auto& nodes = packs[batch.centers[i]].sub->nodes;
        for (int p = 0; p < st.dU1.rows; ++p) {
            double* dst = grads.dW1.row(nodes[p]);
            const double* src = st.dU1.row(p);
            for (int c = 0; c < st.dU1.cols; ++c) dst[c] += src[c];
        }
        grads.da1 += st.da1;
        if (with_plain) {
            for (int p = 0; p < st.dU2.rows; ++p) {
                double* dst = grads.dW2.row(nodes[p]);
                const double* src = st.dU2.row(p);
                for (int c = 0; c < st.dU2.cols; ++c) dst[c] += src[c];
            }
            grads.da2 += st.da2;
        }
    }
    return grads;
}

// Center representations from the time-weighted encoder, one row per node.
inline Matrix compute_embeddings(const std::vector<SubgraphPack>& packs, const EncoderParams& enc1,
                                 int threads) {
    Matrix emb(static_cast<int>(packs.size()), enc1.W.cols);
    parallel_for(packs.size(), threads, [&](std::size_t i) {
        const Matrix H = gcn_forward_prepared(packs[i].P_weighted, packs[i].sub->nodes, enc1);
        double* dst = emb.row(static_cast<int>(i));
        const double* src = H.row(0);
        for (int c = 0; c < emb.cols; ++c) dst[c] = src[c];
    });
    return emb;
}

struct EpochLog {
    int epoch = 0;
    LossTerms loss;
    double elapsed_ms = 0.0;
    bool has_val = false;
    double val_score = 0.0;
};

struct FitResult {
    EncoderParams enc1, enc2;
    Matrix embeddings;  // |V| x d
    std::vector<LossTerms> history;
    int epochs_run = 0;
};

using ValScoreFn = std::function<double(const Matrix& embeddings)>;
using EpochLogFn = std::function<void(const EpochLog&)>;

// Full training loop: encode all (or batched) centers, draw the epoch's
// structural-negative shuffle, update both encoders with Adam, and emit the
// final per-node representations from the time-weighted encoder.
inline FitResult fit(const TemporalGraph& g, const std::vector<TemporalSubgraph>& subs,
                     const TrainConfig& cfg, const ValScoreFn& val_score = nullptr,
                     const EpochLogFn& log = nullptr) {
    if (static_cast<int>(subs.size()) != g.n)
        throw std::invalid_argument("fit: subgraph cache does not cover all nodes");
    for (int i = 0; i < g.n; ++i)
        if (subs[i].center != i) throw std::invalid_argument("fit: subgraph cache out of order");
    if (cfg.dim < 1 || cfg.lr <= 0.0 || cfg.phi < 0.0 || cfg.varphi < 0.0 || cfg.lambda < 0.0)
        throw std::invalid_argument("fit: invalid hyperparameters");

    const auto packs = make_packs(subs, cfg);
    Rng init_rng(derive_seed(cfg.seed, seed_tag::weight_init));
    EncoderParams enc1 = init_encoder(g.n, cfg.dim, init_rng);
    EncoderParams enc2 = init_encoder(g.n, cfg.dim, init_rng);
    Rng epoch_rng(derive_seed(cfg.seed, seed_tag::epoch_shuffle));

    AdamMatrixState w1_state, w2_state;
    AdamScalarState a1_state, a2_state;
    const bool with_plain = cfg.effective_lambda() != 0.0;
    const int n = g.n;
    const int bsz = cfg.batch_size > 0 ? std::min(cfg.batch_size, n) : n;

    FitResult res;
    double best_val = -1.0;
    int best_epoch = 0;
    EncoderParams best1, best2;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        if (cfg.batch_size > 0) {
            const auto p = shuffle_permutation(static_cast<std::size_t>(n), epoch_rng);
            for (int i = 0; i < n; ++i) order[i] = p[i];
        }

        double sum_total = 0.0, sum_l1 = 0.0, sum_l2 = 0.0;
        for (int start = 0; start < n; start += bsz) {
            TrainBatch batch;
            batch.centers.assign(order.begin() + start, order.begin() + std::min(start + bsz, n));
            batch.perm = shuffle_permutation(batch.centers.size(), epoch_rng);
            LossTerms lt;
            const Gradients grads = compute_gradients(packs, batch, enc1, enc2, cfg, &lt);
            if (!std::isfinite(lt.total))
                throw std::runtime_error("fit: non-finite loss at epoch " + std::to_string(epoch));
            const double b = static_cast<double>(batch.centers.size());
            sum_total += lt.total * b;
            sum_l1 += lt.structural * b;
            sum_l2 += lt.temporal * b;
            adam_step(enc1.W, grads.dW1, w1_state, cfg.lr);
            adam_step(enc1.prelu_slope, grads.da1, a1_state, cfg.lr);
            if (with_plain) {
                adam_step(enc2.W, grads.dW2, w2_state, cfg.lr);
                adam_step(enc2.prelu_slope, grads.da2, a2_state, cfg.lr);
            }
        }
        LossTerms epoch_loss;
        epoch_loss.total = sum_total / n;
        epoch_loss.structural = sum_l1 / n;
        epoch_loss.temporal = sum_l2 / n;
        res.history.push_back(epoch_loss);
        res.epochs_run = epoch;

        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = epoch_loss;
        if (val_score) {
            const Matrix emb = compute_embeddings(packs, enc1, cfg.threads);
            entry.val_score = val_score(emb);
            entry.has_val = true;
            if (entry.val_score > best_val) {
                best_val = entry.val_score;
                best_epoch = epoch;
                best1 = enc1;
                best2 = enc2;
            }
        }
        entry.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (log) log(entry);
        if (cfg.early_stop && val_score && epoch - best_epoch >= cfg.patience) break;
    }

    if (cfg.early_stop && val_score && best_epoch > 0) {
        enc1 = std::move(best1);
        enc2 = std::move(best2);
    }
    res.embeddings = compute_embeddings(packs, enc1, cfg.threads);
    if (!res.embeddings.all_finite()) throw std::runtime_error("fit: non-finite embeddings");
    res.enc1 = std::move(enc1);
    res.enc2 = std::move(enc2);
    return res;
}

}  // namespace dysubc
