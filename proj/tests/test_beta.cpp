#include <doctest.h>

#include <random>

#include "povreg/beta_regression.hpp"
#include "povreg/error.hpp"
#include "support.hpp"

using namespace povreg;
namespace pt = povreg::testing;

namespace {

struct BetaSample {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
};

BetaSample simulate(int n, const Eigen::VectorXd& coefs, double phi, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal;
    BetaSample s{Eigen::VectorXd(n), Eigen::MatrixXd(n, coefs.size() - 1)};
    for (int i = 0; i < n; ++i) {
        double eta = coefs(0);
        for (Eigen::Index j = 0; j < s.x.cols(); ++j) eta += coefs(j + 1) * (s.x(i, j) = normal(eng));
        const double mu = 1.0 / (1.0 + std::exp(-eta));
        std::gamma_distribution<double> ga(mu * phi, 1.0), gb((1 - mu) * phi, 1.0);
        const double a = ga(eng), b = gb(eng);
        s.y(i) = a / (a + b);
    }
    return s;
}

}  // namespace

TEST_CASE("log-likelihood equals the sum of beta log densities") {
    Eigen::VectorXd c(3);
    c << -1.0, 0.5, -0.3;
    const auto s = simulate(20, c, 15.0, 1);
    double ref = 0;
    for (Eigen::Index i = 0; i < s.y.size(); ++i) {
        const double mu = 1.0 / (1.0 + std::exp(-(c(0) + s.x.row(i).dot(c.tail(2)))));
        const double a = mu * 15.0, b = (1 - mu) * 15.0;
        ref += std::lgamma(15.0) - std::lgamma(a) - std::lgamma(b) + (a - 1) * std::log(s.y(i)) +
               (b - 1) * std::log1p(-s.y(i));
    }
    CHECK(beta_log_likelihood(s.y, s.x, c, 15.0) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("maximum likelihood is a stationary point and recovers the truth") {
    Eigen::VectorXd c(3);
    c << -1.2, 0.6, -0.4;
    const auto s = simulate(2000, c, 30.0, 2);
    const auto mle = beta_mle(s.y, s.x);
    CHECK(mle.converged);
    CHECK_FALSE(mle.fallback);
    CHECK((mle.coefs - c).cwiseAbs().maxCoeff() < 0.05);
    CHECK(mle.phi == doctest::Approx(30.0).epsilon(0.1));

    Eigen::VectorXd theta(4);
    theta << mle.coefs, std::log(mle.phi);
    const auto g = pt::finite_difference(
        [&](const Eigen::VectorXd& v) { return beta_log_likelihood(s.y, s.x, v.head(3), std::exp(v(3))); }, theta);
    CHECK(g.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("posterior mean is close to the MLE with plenty of data") {
    Eigen::VectorXd c(2);
    c << 0.3, -0.8;
    const auto s = simulate(400, c, 20.0, 3);
    const auto fit = fit_beta(s.y, s.x, BetaRegConfig{}, {3000, 1000, 1, 2, 4});
    CHECK(fit.draws.names.back() == "phi");
    const Eigen::VectorXd m = fit.draws.draws.colwise().mean();
    CHECK(std::abs(m(0) - fit.start.coefs(0)) < 0.05);
    CHECK(std::abs(m(1) - fit.start.coefs(1)) < 0.05);
    CHECK(fit.coef_acceptance > 0.1);
    CHECK(fit.coef_acceptance < 0.6);
}

TEST_CASE("predictions are strictly inside the percentage range") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto fit = fit_beta(d, BetaRegConfig{}, {1500, 500, 1, 1, 5});
    const auto p = predict_beta(fit.draws, d.predictors);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 100.0);
    Eigen::MatrixXd extreme = d.predictors.topRows(1);
    extreme(0, 8) = -1e6;
    const auto q = predict_beta(fit.draws, extreme);
    CHECK(q(0) > 0.0);
    CHECK(q(0) < 100.0);
}

TEST_CASE("outcomes outside the open unit interval are rejected") {
    Eigen::VectorXd y(4);
    y << 0.1, 0.2, 1.0, 0.4;
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    CHECK_THROWS_AS(fit_beta(y, x, BetaRegConfig{}, {400, 100, 1, 1, 1}), ValidationError);
}
