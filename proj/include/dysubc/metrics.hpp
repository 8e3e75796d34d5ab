// metrics.hpp -- rank-based AUC (ties count half) and thresholded accuracy.
#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dysubc {

// P(random positive outscores random negative), ties 0.5, via average ranks.
inline double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("auc_score: bad input sizes");
    const std::size_t m = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y != 0 ? 1 : 0;
    const std::size_t n_neg = m - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc_score: single-class labels");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j < m && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t p = i; p < j; ++p)
            if (labels[order[p]] != 0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(n_pos);
    const double n = static_cast<double>(n_neg);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

inline double accuracy_score(const std::vector<double>& scores, const std::vector<int>& labels,
                             double threshold = 0.5) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("accuracy_score: bad input sizes");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] >= threshold ? 1 : 0;
        if (pred == (labels[i] != 0 ? 1 : 0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace dysubc
