#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/coefficients.hpp"
#include "povreg/dataset.hpp"
#include "povreg/error.hpp"

namespace povreg {

/// Ordinary least squares with an intercept, solved by column-pivoted
/// Householder QR. Throws NumericalError when [1 X] is rank deficient and
/// ValidationError when n <= p + 1.
CoefficientVector fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          Scale scale = Scale::original);

/// Elastic-net penalty. alpha = 1 is the LASSO, alpha = 0 is ridge.
struct PenaltyConfig {
    double lambda = 0.0;
    double alpha = 1.0;

    void validate() const;
};

struct PenaltyOptions {
    double tolerance = 1e-7;     // on the largest coefficient change in a sweep
    long max_sweeps = 100000;
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, CoefficientVector last, long sweeps)
        : NumericalError(what), last_iterate(std::move(last)), sweeps(sweeps) {}

    CoefficientVector last_iterate;
    long sweeps;
};

/// Cyclic coordinate descent with soft-thresholding for
///
///   (1/2n) ||y - b0 - X b||^2 + lambda * (alpha ||b||_1 + (1 - alpha)/2 ||b||_2^2)
///
/// The intercept is unpenalized. With alpha = 0 the minimizer solves
/// (Xc'Xc + n lambda I) b = Xc'(y - mean y), so the classic ridge parameter
/// is n * lambda. The RSS scaling keeps lambda comparable across fold sizes.
/// `x` is expected to be standardized; the result is tagged standardized.
CoefficientVector fit_penalized(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                const PenaltyConfig& config, const PenaltyOptions& options = {},
                                const CoefficientVector* warm_start = nullptr);

/// Value of the penalized objective above.
double penalized_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                           const CoefficientVector& coefs, const PenaltyConfig& config);

/// Smallest lambda that zeroes every slope: max_j |x_j'(y - mean y)| / (n alpha).
/// alpha is floored at 1e-3 so ridge gets a finite path start.
double lambda_max(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha);

/// `count` log-spaced values from lambda_max down to lambda_max * min_ratio.
std::vector<double> default_lambda_grid(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        double alpha, std::size_t count = 100,
                                        double min_ratio = 1e-4);

/// Warm-started solutions along `grid` (in the given order).
std::vector<CoefficientVector> fit_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        double alpha, const std::vector<double>& grid,
                                        const PenaltyOptions& options = {});

struct TuningResult {
    PenaltyConfig config;
    std::vector<double> grid;
    std::vector<double> inner_rmse;  // aligned with grid
};

/// Inner leave-one-out over the rows of (y, x). Each inner training set is
/// re-standardized before fitting, mirroring the outer protocol. Returns the
/// lambda with the smallest inner LOO-RMSE; ties go to the larger lambda.
TuningResult tune_lambda_detailed(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha,
                                  std::vector<double> grid, const PenaltyOptions& options = {});

PenaltyConfig tune_lambda(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha,
                          const std::vector<double>& grid, const PenaltyOptions& options = {});

struct VifRow {
    std::string name;
    double vif = 1.0;
    double inverse = 1.0;
};

struct VifTable {
    std::vector<VifRow> rows;  // predictor order
    double mean_vif = 1.0;
};

/// 1 / (1 - R_j^2) from regressing each predictor on all others plus an
/// intercept. Perfect collinearity throws NumericalError naming the column.
VifTable vif(const ProvincialDataset& data);
VifTable vif(const Eigen::MatrixXd& x, const std::vector<std::string>& names);

}  // namespace povreg
