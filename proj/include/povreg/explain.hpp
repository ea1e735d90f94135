#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace povreg {

/// Batch predictor: one prediction per row of the input matrix.
using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct PermutationImportance {
    std::vector<std::string> names;
    Eigen::VectorXd mean_increase;  // mean MSE(permuted) - MSE(intact)
    Eigen::VectorXd sd_increase;
};

/// Column j, repeat r is shuffled with mix_seed(mix_seed(seed, j), r).
PermutationImportance permutation_importance(const Predictor& predict, const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y, int n_repeats, std::uint64_t seed,
                                             const std::vector<std::string>& names = {});

struct ShapleyEstimate {
    double baseline = 0.0;    // mean prediction over the background rows
    double prediction = 0.0;  // model prediction at the point
    Eigen::VectorXd values;
    Eigen::VectorXd std_errors;
};

/// Permutation-sampling Shapley values with the interventional value
/// function: each sample draws a feature order and switches features from
/// the background to the point in that order, valuing every coalition by
/// its mean prediction over all background rows.
/// Sample s uses mix_seed(seed, s).
ShapleyEstimate shapley_sampling(const Predictor& predict, const Eigen::MatrixXd& background,
                                 const Eigen::RowVectorXd& point, int n_samples, std::uint64_t seed);

struct ShapleyTable {
    double baseline = 0.0;
    Eigen::MatrixXd values;  // points x predictors
};

/// Shapley values for every row of `points`; row i uses mix_seed(seed, i).
ShapleyTable shapley_table(const Predictor& predict, const Eigen::MatrixXd& background, const Eigen::MatrixXd& points,
                           int n_samples, std::uint64_t seed);

}  // namespace povreg
