#include "povreg/linear.hpp"

#include <algorithm>
#include <cmath>

#include "povreg/stats.hpp"

namespace povreg {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

}  // namespace

CoefficientVector fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, Scale scale) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (y.size() != n) throw ValidationError("fit_ols: outcome and design row counts differ");
    if (n <= p + 1)
        throw ValidationError("fit_ols: need n > p + 1 (n=" + std::to_string(n) +
                              ", p=" + std::to_string(p) + ")");
    const Eigen::MatrixXd a = with_intercept(x);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < a.cols())
        throw NumericalError("fit_ols: singular design (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(a.cols()) + ")");
    const Eigen::VectorXd b = qr.solve(y);
    return {b(0), b.tail(p), scale};
}

void PenaltyConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ValidationError("penalty lambda must be finite and >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("penalty alpha must lie in [0,1]");
}

CoefficientVector fit_penalized(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                const PenaltyConfig& config, const PenaltyOptions& options,
                                const CoefficientVector* warm_start) {
    config.validate();
    const auto n = x.rows();
    const auto p = x.cols();
    if (y.size() != n) throw ValidationError("fit_penalized: outcome and design row counts differ");
    const double nd = static_cast<double>(n);

    const Eigen::RowVectorXd xm = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - xm;
    const double ym = y.mean();
    const Eigen::VectorXd col_ss = xc.colwise().squaredNorm().transpose() / nd;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (warm_start != nullptr && warm_start->slopes.size() == p) beta = warm_start->slopes;
    Eigen::VectorXd r = (y.array() - ym).matrix() - xc * beta;

    const double l1 = config.lambda * config.alpha;
    const double l2 = config.lambda * (1.0 - config.alpha);

    long sweep = 0;
    for (; sweep < options.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double old = beta(j);
            if (col_ss(j) + l2 <= 0.0) continue;
            const double z = xc.col(j).dot(r) / nd + col_ss(j) * old;
            const double updated = soft_threshold(z, l1) / (col_ss(j) + l2);
            const double delta = updated - old;
            if (delta != 0.0) {
                r.noalias() -= xc.col(j) * delta;
                beta(j) = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < options.tolerance) break;
    }

    CoefficientVector out{ym - xm.dot(beta), beta, Scale::standardized};
    if (sweep >= options.max_sweeps)
        throw NonConvergenceError("coordinate descent did not converge in " +
                                      std::to_string(options.max_sweeps) + " sweeps",
                                  out, sweep);
    return out;
}

double penalized_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                           const CoefficientVector& coefs, const PenaltyConfig& config) {
    const Eigen::VectorXd r = y - coefs.predict(x);
    return r.squaredNorm() / (2.0 * static_cast<double>(y.size())) +
           config.lambda * (config.alpha * coefs.slopes.lpNorm<1>() +
                            0.5 * (1.0 - config.alpha) * coefs.slopes.squaredNorm());
}

double lambda_max(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha) {
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double top = (xc.transpose() * yc).cwiseAbs().maxCoeff();
    return top / (static_cast<double>(y.size()) * std::max(alpha, 1e-3));
}

std::vector<double> default_lambda_grid(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        double alpha, std::size_t count, double min_ratio) {
    const double top = lambda_max(y, x, alpha);
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double step = std::log(min_ratio) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) grid[k] = top * std::exp(step * static_cast<double>(k));
    return grid;
}

std::vector<CoefficientVector> fit_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        double alpha, const std::vector<double>& grid,
                                        const PenaltyOptions& options) {
    std::vector<CoefficientVector> path;
    path.reserve(grid.size());
    const CoefficientVector* warm = nullptr;
    for (double lambda : grid) {
        path.push_back(fit_penalized(y, x, {lambda, alpha}, options, warm));
        warm = &path.back();
    }
    return path;
}

TuningResult tune_lambda_detailed(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha,
                                  std::vector<double> grid, const PenaltyOptions& options) {
    const auto n = x.rows();
    if (grid.empty()) throw ValidationError("tune_lambda: empty lambda grid");
    if (n < 3) throw ValidationError("tune_lambda: need at least 3 rows");

    // Fit in decreasing-lambda order for warm starts; report in caller order.
    std::vector<std::size_t> order(grid.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
    std::vector<double> sorted;
    for (auto k : order) sorted.push_back(grid[k]);

    std::vector<double> sse(grid.size(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::MatrixXd xt(n - 1, x.cols());
        Eigen::VectorXd yt(n - 1);
        for (Eigen::Index i = 0, r = 0; i < n; ++i) {
            if (i == k) continue;
            xt.row(r) = x.row(i);
            yt(r) = y(i);
            ++r;
        }
        const auto design = standardize(xt);
        const Eigen::RowVectorXd held = design.standardizer.apply(Eigen::RowVectorXd(x.row(k)));
        const auto path = fit_path(yt, design.z, alpha, sorted, options);
        for (std::size_t s = 0; s < path.size(); ++s) {
            const double pred = path[s].intercept + held.dot(path[s].slopes);
            const double e = y(k) - pred;
            sse[order[s]] += e * e;
        }
    }

    TuningResult result;
    result.grid = grid;
    result.inner_rmse.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        result.inner_rmse[k] = std::sqrt(sse[k] / static_cast<double>(n));

    std::size_t best = order.front();
    for (auto k : order) {
        // strict improvement only, so ties keep the larger lambda seen first
        if (result.inner_rmse[k] < result.inner_rmse[best]) best = k;
    }
    result.config = {grid[best], alpha};
    return result;
}

PenaltyConfig tune_lambda(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha,
                          const std::vector<double>& grid, const PenaltyOptions& options) {
    return tune_lambda_detailed(y, x, alpha, grid, options).config;
}

VifTable vif(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
    const auto n = x.rows();
    const auto p = x.cols();
    VifTable table;
    double total = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const std::string name =
            j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                        : std::to_string(j);
        Eigen::MatrixXd a(n, p);
        a.col(0).setOnes();
        for (Eigen::Index c = 0, k = 1; c < p; ++c)
            if (c != j) a.col(k++) = x.col(c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        qr.setThreshold(1e-10);
        const Eigen::VectorXd target = x.col(j);
        const double tss = (target.array() - target.mean()).square().sum();
        const Eigen::VectorXd resid = target - a * qr.solve(target);
        const double r2 = 1.0 - resid.squaredNorm() / tss;
        if (qr.rank() < a.cols() || !(r2 < 1.0 - 1e-10))
            throw NumericalError("infinite VIF: column '" + name +
                                 "' is perfectly collinear with the other predictors");
        const double v = 1.0 / (1.0 - r2);
        table.rows.push_back({name, v, 1.0 / v});
        total += v;
    }
    table.mean_vif = total / static_cast<double>(p);
    return table;
}

VifTable vif(const ProvincialDataset& data) { return vif(data.predictors, data.predictor_names); }

}  // namespace povreg
