#include <doctest.h>

#include <random>

#include "povreg/bayes_linear.hpp"
#include "povreg/error.hpp"
#include "povreg/mcmc.hpp"
#include "povreg/stats.hpp"
#include "support.hpp"

using namespace povreg;
namespace pt = povreg::testing;

namespace {

Eigen::MatrixXd chain_matrix(const PosteriorDraws& d, Eigen::Index col) {
    const Eigen::Index m = d.draws_per_chain();
    Eigen::MatrixXd out(m, d.chains);
    for (int c = 0; c < d.chains; ++c) out.col(c) = d.draws.col(col).segment(c * m, m);
    return out;
}

// Posterior mean of column `col` minus `target`, in units of its MC standard error.
double mc_z(const PosteriorDraws& d, Eigen::Index col, double target) {
    const Eigen::VectorXd v = d.draws.col(col);
    const double se = stats::sample_sd(v) / std::sqrt(bulk_ess(chain_matrix(d, col)));
    return (v.mean() - target) / se;
}

}  // namespace

TEST_CASE("conjugate Gibbs matches the closed-form normal-inverse-gamma posterior") {
    Eigen::VectorXd beta(3);
    beta << 1.5, -0.7, 0.0;
    const auto d = pt::synthetic_linear(34, beta, 2.0, 1.2, 11);
    GaussianPriorSpec prior;
    prior.prior_variances = Eigen::VectorXd::Constant(4, 4.0);
    prior.prior_variances(0) = 10.0;
    prior.ig_shape = 3.0;
    prior.ig_rate = 2.0;
    prior.scale_by_sigma2 = true;
    const auto draws = gibbs_gaussian(d.outcome, d.predictors, prior, {12000, 2000, 1, 2, 5});
    const auto ref = pt::nig_posterior(d.outcome, d.predictors, prior.prior_variances, 3.0, 2.0);
    for (Eigen::Index k = 0; k < 4; ++k) {
        CAPTURE(k);
        CHECK(std::abs(mc_z(draws, k, ref.mean(k))) <= 3.0);
        CHECK(stats::sample_sd(draws.draws.col(k)) == doctest::Approx(ref.sd(k)).epsilon(0.05));
    }
    CHECK(std::abs(mc_z(draws, 4, ref.sigma2_mean)) <= 3.0);
}

TEST_CASE("samplers are reproducible from the seed") {
    const auto d = load_dataset(bundled_corpus_path());
    const RunConfig run{600, 200, 1, 2, 99};
    const auto a = gibbs_shrinkage(d, ShrinkageFamily::horseshoe(), run);
    const auto b = gibbs_shrinkage(d, ShrinkageFamily::horseshoe(), run);
    CHECK(a.draws == b.draws);
    auto other = run;
    other.seed = 100;
    CHECK(gibbs_shrinkage(d, ShrinkageFamily::horseshoe(), other).draws != a.draws);
}

TEST_CASE("horseshoe keeps a strong signal and shrinks the nulls") {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(6);
    beta(0) = 3.0;
    const auto d = pt::synthetic_linear(34, beta, 1.0, 1.0, 3);
    const auto draws = gibbs_shrinkage(d.outcome, d.predictors, ShrinkageFamily::horseshoe(), {3000, 1000, 1, 2, 8});
    const auto s = summarize_posterior(draws);
    CHECK(s[1].mean == doctest::Approx(3.0).epsilon(0.15));
    CHECK(s[1].q025 > 0.0);
    for (int j = 2; j <= 6; ++j) CHECK(std::abs(s[static_cast<std::size_t>(j)].mean) < 0.35);
}

TEST_CASE("Bayes ridge and Bayes lasso produce finite draws with the expected columns") {
    const auto d = load_dataset(bundled_corpus_path());
    for (const auto& fam : {ShrinkageFamily::ridge(), ShrinkageFamily::lasso()}) {
        const auto draws = gibbs_shrinkage(d, fam, {800, 300, 1, 1, 4});
        CHECK(draws.names.front() == "intercept");
        CHECK(draws.index("ict") == 9);
        CHECK(draws.index("sigma2") == 10);
        CHECK(draws.draws.allFinite());
        CHECK(draws.size() == 500);
    }
}

TEST_CASE("SSVS separates a signal from nulls") {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
    beta(2) = 2.0;
    const auto d = pt::synthetic_linear(34, beta, 0.0, 1.0, 21);
    const auto r = ssvs(d.outcome, d.predictors, SsvsConfig{}, {4000, 1000, 1, 2, 6});
    const Eigen::VectorXd pip = r.inclusion.pip();
    CHECK(pip(2) > 0.95);
    for (int j : {0, 1, 3, 4}) CHECK(pip(j) < 0.4);
    CHECK(r.inclusion.indicators.rows() == r.coefficients.size());
}

TEST_CASE("invalid sampler settings are rejected") {
    const auto d = load_dataset(bundled_corpus_path());
    CHECK_THROWS_AS((RunConfig{100, 100, 1, 1, 1}.validate()), ValidationError);
    CHECK_THROWS_AS((RunConfig{100, 10, 0, 1, 1}.validate()), ValidationError);
    GaussianPriorSpec bad;
    bad.prior_variances = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(gibbs_gaussian(d, bad, {400, 100, 1, 1, 1}), ValidationError);
}

TEST_CASE("diagnostics behave on known chains") {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd iid(4000, 4);
    for (Eigen::Index i = 0; i < iid.size(); ++i) iid.data()[i] = normal(eng);
    CHECK(split_rhat(iid) < 1.01);
    CHECK(bulk_ess(iid) > 0.85 * 16000);

    // AR(1) with phi = 0.9: ESS near S (1 - phi) / (1 + phi).
    Eigen::MatrixXd ar(20000, 2);
    for (int c = 0; c < 2; ++c) {
        double v = normal(eng) / std::sqrt(1 - 0.81);
        for (int i = 0; i < 20000; ++i) ar(i, c) = v = 0.9 * v + normal(eng);
    }
    const double expected = 40000 * 0.1 / 1.9;
    CHECK(bulk_ess(ar) == doctest::Approx(expected).epsilon(0.25));

    // Chains stuck at different levels.
    Eigen::MatrixXd split = iid;
    split.col(0).array() += 3.0;
    CHECK(split_rhat(split) > 1.1);
}

TEST_CASE("posterior summary uses type-7 quantiles") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(101, 0.0, 100.0);
    const auto s = summarize_parameter("t", v);
    CHECK(s.q025 == doctest::Approx(2.5));
    CHECK(s.q975 == doctest::Approx(97.5));
    CHECK(s.mean == doctest::Approx(50.0));
    CHECK(s.prob_negative == 0.0);
}

TEST_CASE("WAIC equals the pointwise definition") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto draws = gibbs_gaussian(d, GaussianPriorSpec::weakly_informative(d.p()), {1400, 400, 1, 1, 2});
    const auto w = waic(draws, d.outcome, d.predictors);
    const Eigen::Index s = draws.size();
    double lppd = 0, pw = 0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        Eigen::VectorXd ll(s);
        for (Eigen::Index k = 0; k < s; ++k) {
            const double mu = draws.draws(k, 0) + d.predictors.row(i).dot(draws.draws.row(k).segment(1, d.p()));
            const double s2 = draws.draws(k, d.p() + 1);
            ll(k) = -0.5 * std::log(2 * M_PI * s2) - 0.5 * (d.outcome(i) - mu) * (d.outcome(i) - mu) / s2;
        }
        const double mx = ll.maxCoeff();
        lppd += mx + std::log((ll.array() - mx).exp().mean());
        pw += stats::sample_variance(ll);
    }
    CHECK(w.lppd == doctest::Approx(lppd).epsilon(1e-10));
    CHECK(w.p_waic == doctest::Approx(pw).epsilon(1e-10));
    CHECK(w.waic == doctest::Approx(-2 * (lppd - pw)).epsilon(1e-10));
}

TEST_CASE("draws survive a CSV round trip") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto draws = gibbs_gaussian(d, GaussianPriorSpec::weakly_informative(d.p()), {500, 100, 2, 2, 3});
    const auto path = std::filesystem::temp_directory_path() / "povreg_test_draws.csv";
    write_draws(draws, path);
    const auto back = read_draws(path);
    CHECK(back.draws == draws.draws);
    CHECK(back.names == draws.names);
    CHECK(back.chains == 2);
    CHECK(back.seed == 3);
}

TEST_CASE("posterior predictive replicates have the right shape and spread") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto draws = gibbs_gaussian(d, GaussianPriorSpec::weakly_informative(d.p()), {3000, 1000, 1, 1, 3});
    const auto reps = posterior_predictive(draws, d.predictors, 100, 9);
    CHECK(reps.rows() == 100);
    CHECK(reps.cols() == 34);
    CHECK(reps.mean() == doctest::Approx(d.outcome.mean()).epsilon(0.05));
}

TEST_CASE("prior sensitivity reports one row per scale") {
    const auto d = load_dataset(bundled_corpus_path());
    SensitivityOptions o;
    o.scales = {1.0, 1000.0};
    o.run = {2000, 500, 1, 1, 5};
    o.with_loo = false;
    const auto rows = prior_sensitivity(d, o);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scale == 1.0);
    CHECK(rows[0].target.name == "ict");
    CHECK(rows[1].target.mean < 0.0);
    CHECK(std::isfinite(rows[1].waic.waic));
}
