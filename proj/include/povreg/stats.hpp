#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace povreg::stats {

inline double mean(const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x.mean();
}

/// Sample standard deviation, n-1 denominator. Zero for fewer than two values.
inline double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() < 2) return 0.0;
    const double m = x.mean();
    return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
}

inline double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double s = sample_sd(x);
    return s * s;
}

/// Type-7 quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> values, double prob) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double quantile(const Eigen::Ref<const Eigen::VectorXd>& x, double prob) {
    return quantile(std::vector<double>(x.data(), x.data() + x.size()), prob);
}

/// Median; mean of the two central order statistics for even counts.
inline double median(const Eigen::Ref<const Eigen::VectorXd>& x) {
    return quantile(x, 0.5);
}

inline double rmse(const Eigen::Ref<const Eigen::VectorXd>& truth,
                   const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    return std::sqrt((truth - predicted).squaredNorm() / static_cast<double>(truth.size()));
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((x.array() - m).exp().sum());
}

}  // namespace povreg::stats
