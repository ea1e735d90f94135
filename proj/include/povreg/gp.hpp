#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"

namespace povreg {

/// Squared-exponential ARD kernel
/// k(a, b) = signal_variance * exp(-0.5 * sum_d ((a_d - b_d) / length_d)^2),
/// plus noise_variance on the diagonal.
struct GpConfig {
    Eigen::VectorXd length_scales;
    double signal_variance = 1.0;
    double noise_variance = 0.1;

    /// Unit length scales, unit signal variance, noise 0.1.
    static GpConfig defaults(Eigen::Index p);
    void validate(Eigen::Index p) const;
};

struct GpOptions {
    int restarts = 5;  // the first restart starts from the initial config
    bool pin_noise = false;
    bool pin_signal = false;
    double lower = 1e-3;  // box for optimized (non-pinned) parameters
    double upper = 1e3;
    int max_iterations = 500;
};

/// Log marginal likelihood of `y` given inputs `z`, with the gradient with
/// respect to (log length scales, log signal variance, log noise variance).
/// Cholesky failures retry with diagonal jitter 1e-10 .. 1e-6 and then throw
/// NumericalError.
double gp_log_marginal(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const GpConfig& config,
                       Eigen::VectorXd* gradient = nullptr);

struct GpModel {
    GpConfig config;
    Standardizer standardizer;
    Eigen::MatrixXd z_train;
    Eigen::VectorXd weights;  // K^{-1} (y - y_mean)
    double y_mean = 0.0;
    double log_marginal = 0.0;

    /// Conditional mean at original-scale rows.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Standardizes the predictors and centres the outcome (statistics from the
/// training rows), then maximizes the log marginal likelihood over log
/// hyperparameters by projected quasi-Newton ascent with analytic gradients.
/// Restart r > 0 starts from a log-uniform point drawn with mix_seed(seed, r).
GpModel fit_gp(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::optional<GpConfig>& init,
               const GpOptions& options, std::uint64_t seed);
GpModel fit_gp(const ProvincialDataset& data, const std::optional<GpConfig>& init, const GpOptions& options,
               std::uint64_t seed);

/// Fixed-hyperparameter fit (no optimization), same preprocessing.
GpModel condition_gp(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const GpConfig& config);

}  // namespace povreg
