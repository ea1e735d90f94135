#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"

namespace povreg {

struct BartConfig {
    int n_trees = 200;
    double alpha = 0.95;  // P(split at depth d) = alpha (1 + d)^-beta
    double beta = 2.0;
    double k = 2.0;  // leaf prior sd = 0.5 / (k sqrt(n_trees)) on the rescaled outcome
    double sigma_df = 3.0;
    double sigma_quantile = 0.9;
    int iterations = 1000;
    int burn_in = 500;

    void validate() const;
};

struct BartFit {
    Eigen::VectorXd train_mean;    // posterior mean fit at the training rows
    Eigen::MatrixXd test_draws;    // retained draws x rows of x_new
    Eigen::VectorXd sigma_draws;   // residual sd on the outcome scale
    Eigen::VectorXd importance;    // split-rule share per predictor, averaged over draws
    Eigen::VectorXd acceptance;    // grow, prune, change acceptance rates

    Eigen::VectorXd test_mean() const { return test_draws.colwise().mean().transpose(); }
};

/// Backfitting MCMC for a sum of regression trees with conjugate normal
/// leaves. The outcome is rescaled to [-0.5, 0.5]; every reported quantity
/// is mapped back to the original scale. `x_new` rows are predicted at each
/// retained draw.
BartFit fit_bart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const BartConfig& config, std::uint64_t seed,
                 const Eigen::MatrixXd& x_new = Eigen::MatrixXd());
BartFit fit_bart(const ProvincialDataset& data, const BartConfig& config, std::uint64_t seed,
                 const Eigen::MatrixXd& x_new = Eigen::MatrixXd());

}  // namespace povreg
