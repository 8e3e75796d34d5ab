// adam.hpp -- standard Adam with bias correction. Moments for every entry
// decay on every step (no sparse shortcut), so the update matches the exact
// dense semantics regardless of which rows a batch touched.
#pragma once

#include <cmath>
#include <stdexcept>

#include "dysubc/matrix.hpp"

namespace dysubc {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamMatrixState {
    Matrix m, v;
    long long t = 0;
};

struct AdamScalarState {
    double m = 0.0, v = 0.0;
    long long t = 0;
};

inline void adam_step(Matrix& param, const Matrix& grad, AdamMatrixState& st, double lr,
                      const AdamConfig& cfg = {}) {
    if (param.rows != grad.rows || param.cols != grad.cols)
        throw std::invalid_argument("adam_step: parameter/gradient shape mismatch");
    if (st.t == 0) {
        st.m = Matrix(param.rows, param.cols);
        st.v = Matrix(param.rows, param.cols);
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < param.a.size(); ++i) {
        const double g = grad.a[i];
        st.m.a[i] = cfg.beta1 * st.m.a[i] + (1.0 - cfg.beta1) * g;
        st.v.a[i] = cfg.beta2 * st.v.a[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = st.m.a[i] / bc1;
        const double v_hat = st.v.a[i] / bc2;
        param.a[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

inline void adam_step(double& param, double grad, AdamScalarState& st, double lr,
                      const AdamConfig& cfg = {}) {
    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad * grad;
    param -= lr * (st.m / bc1) / (std::sqrt(st.v / bc2) + cfg.eps);
}

}  // namespace dysubc
