#pragma once

#include <Eigen/Dense>

namespace povreg {

enum class Scale { standardized, original };

/// Intercept plus slopes, tagged with the predictor scale they apply to.
struct CoefficientVector {
    double intercept = 0.0;
    Eigen::VectorXd slopes;
    Scale scale = Scale::original;

    Eigen::Index size() const { return slopes.size(); }

    /// Linear predictor for each row of `x` (x must be on the matching scale).
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
        return (x * slopes).array() + intercept;
    }
};

}  // namespace povreg
