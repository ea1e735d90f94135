#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace povreg {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent sub-seeds (per chain,
/// per fold, per permutation) from one master seed, so results never depend
/// on scheduling order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double draw_normal(Engine& eng) {
    return std::normal_distribution<double>(0.0, 1.0)(eng);
}

inline double draw_uniform(Engine& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

/// Gamma with shape/rate parameterization.
inline double draw_gamma(Engine& eng, double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(eng);
}

/// Inverse-gamma IG(shape, scale): density proportional to x^{-shape-1} exp(-scale/x).
inline double draw_inv_gamma(Engine& eng, double shape, double scale) {
    return scale / std::gamma_distribution<double>(shape, 1.0)(eng);
}

/// Inverse-Gaussian (Wald) with mean mu and shape lambda
/// (Michael, Schucany and Haas transformation method).
inline double draw_inv_gaussian(Engine& eng, double mu, double lambda) {
    const double nu = draw_normal(eng);
    const double y = nu * nu;
    const double x = mu + mu * mu * y / (2.0 * lambda) -
                     mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    if (draw_uniform(eng) <= mu / (mu + x)) return x;
    return mu * mu / x;
}

inline Eigen::VectorXd draw_std_normal_vector(Engine& eng, Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = draw_normal(eng);
    return z;
}

}  // namespace povreg
