// encoder.hpp -- one-layer GCN over a subgraph with symmetric normalization,
// center pick-out, and the two readouts (influence-weighted and mean).
//
// Node features are the implicit one-hot encoding, so X*W is row selection
// of the parameter table W by global node id; no identity matrix is ever
// materialized.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dysubc/common.hpp"
#include "dysubc/matrix.hpp"
#include "dysubc/sampler.hpp"

namespace dysubc {

// Learnable state of one GCN encoder: the n x d weight table (with one-hot
// inputs this is the per-node feature table) and a shared PReLU slope.
struct EncoderParams {
    Matrix W;
    double prelu_slope = 0.25;
};

inline EncoderParams init_encoder(int n, int d, Rng& rng) {
    EncoderParams p;
    p.W = Matrix(n, d);
    const double bound = std::sqrt(6.0 / (static_cast<double>(n) + d));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : p.W.a) v = u(rng);
    p.prelu_slope = 0.25;
    return p;
}

enum class AdjacencyKind { TimeWeighted, Plain };

// P = D^{-1/2} (A + I) D^{-1/2}; row sums of A+I are >= 1, so no division
// by zero is possible.
inline Matrix propagation_matrix(const Matrix& A) {
    const int k = A.rows;
    Matrix P(k, k);
    std::vector<double> inv_sqrt_deg(k);
    for (int i = 0; i < k; ++i) {
        double deg = 1.0;  // self-loop
        for (int j = 0; j < k; ++j) deg += A(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double a_hat = A(i, j) + (i == j ? 1.0 : 0.0);
            if (a_hat != 0.0) P(i, j) = inv_sqrt_deg[i] * a_hat * inv_sqrt_deg[j];
        }
    return P;
}

inline double prelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// H = PReLU(P * W[nodes]); optionally exposes the pre-activation Z = P * W[nodes]
// so training can reuse it for the backward pass.
inline Matrix gcn_forward_prepared(const Matrix& P, const std::vector<int>& nodes,
                                   const EncoderParams& params, Matrix* z_out = nullptr) {
    const int k = static_cast<int>(nodes.size());
    const int d = params.W.cols;
    Matrix Z(k, d);
    for (int i = 0; i < k; ++i) {
        double* zrow = Z.row(i);
        for (int j = 0; j < k; ++j) {
            const double pij = P(i, j);
            if (pij == 0.0) continue;
            const double* wrow = params.W.row(nodes[j]);
            for (int c = 0; c < d; ++c) zrow[c] += pij * wrow[c];
        }
    }
    Matrix H(k, d);
    for (std::size_t i = 0; i < Z.a.size(); ++i) H.a[i] = prelu(Z.a[i], params.prelu_slope);
    if (z_out) *z_out = std::move(Z);
    return H;
}

inline Matrix gcn_forward(const TemporalSubgraph& sub, AdjacencyKind kind, const EncoderParams& params) {
    for (int id : sub.nodes)
        if (id < 0 || id >= params.W.rows) throw std::out_of_range("gcn_forward: node id outside W");
    const Matrix& A = kind == AdjacencyKind::TimeWeighted ? sub.A_time : sub.A_plain;
    return gcn_forward_prepared(propagation_matrix(A), sub.nodes, params);
}

// Center representation: the subgraph stores the center at position 0.
inline Vec pick_out(const Matrix& H) {
    if (H.rows == 0) throw std::invalid_argument("pick_out: empty representation matrix");
    return Vec(H.row(0), H.row(0) + H.cols);
}

// Inf_j = tau(i,j) + beta / Dist(i,j). The center itself participates with
// dist 1 and its own latest incident time.
inline std::vector<double> influence_scores(const TemporalSubgraph& sub, double beta) {
    std::vector<double> inf(sub.size());
    for (int p = 0; p < sub.size(); ++p) {
        const double dist = p == 0 ? 1.0 : static_cast<double>(sub.hop_dist[p]);
        inf[p] = sub.tau[p] + beta / dist;
    }
    return inf;
}

// s = sum_j (Inf_j / sum Inf) h_j
inline Vec readout_weighted(const Matrix& H, const std::vector<double>& inf) {
    if (static_cast<int>(inf.size()) != H.rows)
        throw std::invalid_argument("readout_weighted: influence size mismatch");
    double total = 0.0;
    for (double v : inf) total += v;
    if (!(total > 0.0)) throw std::runtime_error("readout_weighted: non-positive influence sum");
    Vec s(H.cols, 0.0);
    for (int p = 0; p < H.rows; ++p) {
        const double w = inf[p] / total;
        const double* hrow = H.row(p);
        for (int c = 0; c < H.cols; ++c) s[c] += w * hrow[c];
    }
    return s;
}

inline Vec readout_mean(const Matrix& H) {
    if (H.rows == 0) throw std::invalid_argument("readout_mean: empty matrix");
    Vec s(H.cols, 0.0);
    for (int p = 0; p < H.rows; ++p) {
        const double* hrow = H.row(p);
        for (int c = 0; c < H.cols; ++c) s[c] += hrow[c];
    }
    for (double& v : s) v /= H.rows;
    return s;
}

struct SubgraphEmbedding {
    Matrix H;        // all node representations from the time-weighted encoder
    Vec h_center;    // row 0 of H
    Vec s_weighted;  // influence-weighted summary of H
    Vec s_plain;     // mean summary of the plain encoder's output
};

inline SubgraphEmbedding encode_pair(const TemporalSubgraph& sub, const EncoderParams& params1,
                                     const EncoderParams& params2, double beta) {
    SubgraphEmbedding e;
    e.H = gcn_forward(sub, AdjacencyKind::TimeWeighted, params1);
    e.h_center = pick_out(e.H);
    e.s_weighted = readout_weighted(e.H, influence_scores(sub, beta));
    e.s_plain = readout_mean(gcn_forward(sub, AdjacencyKind::Plain, params2));
    return e;
}

}  // namespace dysubc
