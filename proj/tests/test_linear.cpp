#include <doctest.h>

#include "povreg/error.hpp"
#include "povreg/linear.hpp"
#include "support.hpp"

using namespace povreg;
using povreg::testing::kkt_violation;
using povreg::testing::ridge_closed_form;

namespace {

const ProvincialDataset& corpus() {
    static const auto d = load_dataset(bundled_corpus_path());
    return d;
}

}  // namespace

TEST_CASE("OLS solves the normal equations") {
    const auto& d = corpus();
    const auto c = fit_ols(d.outcome, d.predictors);
    Eigen::MatrixXd design(d.n(), d.p() + 1);
    design << Eigen::VectorXd::Ones(d.n()), d.predictors;
    const Eigen::VectorXd ref = (design.transpose() * design).ldlt().solve(design.transpose() * d.outcome);
    CHECK(std::abs(c.intercept - ref(0)) < 1e-8);
    CHECK((c.slopes - ref.tail(d.p())).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("OLS rejects rank-deficient and underdetermined designs") {
    const auto& d = corpus();
    Eigen::MatrixXd x(d.n(), 3);
    x << d.predictors.col(0), d.predictors.col(1), 2.0 * d.predictors.col(0);
    CHECK_THROWS_AS(fit_ols(d.outcome, x), NumericalError);
    CHECK_THROWS_AS(fit_ols(d.outcome.head(5), d.predictors.topRows(5)), ValidationError);
}

TEST_CASE("coordinate descent satisfies the KKT conditions") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    for (double alpha : {1.0, 0.5, 0.2}) {
        const double top = lambda_max(y, z, alpha);
        for (double frac : {0.5, 0.1, 0.01}) {
            const PenaltyConfig cfg{frac * top, alpha};
            const auto c = fit_penalized(y, z, cfg, {1e-10, 1000000});
            CAPTURE(alpha);
            CAPTURE(frac);
            CHECK(kkt_violation(y, z, c, cfg.lambda, alpha) <= 1e-5);
        }
    }
}

TEST_CASE("alpha = 0 matches closed-form ridge") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    for (double lambda : {0.01, 0.3, 5.0}) {
        const auto c = fit_penalized(y, z, {lambda, 0.0}, {1e-12, 1000000});
        const auto ref = ridge_closed_form(y, z, lambda);
        CHECK(std::abs(c.intercept - ref.intercept) <= 1e-6);
        CHECK((c.slopes - ref.slopes).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("lambda_max zeroes every slope and nothing above it moves") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    const double top = lambda_max(y, z, 1.0);
    CHECK(fit_penalized(y, z, {top * 1.0001, 1.0}).slopes.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit_penalized(y, z, {top * 0.95, 1.0}).slopes.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("objective at the solution is no worse than nearby points") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    const PenaltyConfig cfg{0.3, 0.5};
    const auto c = fit_penalized(y, z, cfg, {1e-12, 1000000});
    const double best = penalized_objective(y, z, c, cfg);
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (double h : {-1e-3, 1e-3}) {
            auto moved = c;
            moved.slopes(j) += h;
            CHECK(penalized_objective(y, z, moved, cfg) >= best - 1e-12);
        }
}

TEST_CASE("path is ordered and warm starts agree with cold fits") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    const auto grid = default_lambda_grid(y, z, 1.0, 20);
    REQUIRE(grid.size() == 20);
    for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] < grid[k - 1]);
    const auto path = fit_path(y, z, 1.0, grid, {1e-12, 1000000});
    const auto cold = fit_penalized(y, z, {grid[12], 1.0}, {1e-12, 1000000});
    CHECK((path[12].slopes - cold.slopes).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("inner-LOO tuning returns a grid value with the smallest error") {
    const auto z = standardize(corpus()).z;
    const auto& y = corpus().outcome;
    const auto grid = default_lambda_grid(y, z, 1.0, 15);
    const auto t = tune_lambda_detailed(y, z, 1.0, grid);
    REQUIRE(t.inner_rmse.size() == grid.size());
    const auto best = std::min_element(t.inner_rmse.begin(), t.inner_rmse.end());
    CHECK(t.config.lambda == grid[static_cast<std::size_t>(best - t.inner_rmse.begin())]);
}

TEST_CASE("invalid penalty settings are rejected") {
    CHECK_THROWS_AS((PenaltyConfig{-1.0, 0.5}.validate()), ValidationError);
    CHECK_THROWS_AS((PenaltyConfig{1.0, 1.5}.validate()), ValidationError);
}

TEST_CASE("VIF equals 1/(1-R^2) from auxiliary regressions") {
    const auto& d = corpus();
    const auto v = vif(d);
    for (Eigen::Index j = 0; j < d.p(); ++j) {
        Eigen::MatrixXd others(d.n(), d.p() - 1);
        for (Eigen::Index k = 0, c = 0; k < d.p(); ++k)
            if (k != j) others.col(c++) = d.predictors.col(k);
        const auto fit = fit_ols(d.predictors.col(j), others);
        const Eigen::VectorXd r = d.predictors.col(j) - fit.predict(others);
        const double tss = (d.predictors.col(j).array() - d.predictors.col(j).mean()).square().sum();
        const double expected = 1.0 / (r.squaredNorm() / tss);
        CHECK(v.rows[static_cast<std::size_t>(j)].vif == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("perfect collinearity in VIF names the column") {
    const auto& d = corpus();
    Eigen::MatrixXd x(d.n(), 3);
    x << d.predictors.col(0), d.predictors.col(1), d.predictors.col(0) + d.predictors.col(1);
    try {
        vif(x, {"a", "b", "c"});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find('\'') != std::string::npos);
    }
}
