#include <doctest.h>

#include <random>

#include "povreg/bart.hpp"
#include "povreg/error.hpp"
#include "povreg/gp.hpp"
#include "povreg/trees.hpp"
#include "support.hpp"

using namespace povreg;
namespace pt = povreg::testing;

namespace {

Eigen::MatrixXd uniform_matrix(int n, int p, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(eng);
    return x;
}

}  // namespace

TEST_CASE("midpoint thresholds skip duplicates") {
    Eigen::MatrixXd x(5, 1);
    x << 3, 1, 1, 2, 5;
    const auto t = midpoint_thresholds(x, {0, 1, 2, 3, 4}, 0);
    REQUIRE(t.size() == 3);
    CHECK(t[0] == 1.5);
    CHECK(t[1] == 2.5);
    CHECK(t[2] == 4.0);
    CHECK(midpoint_thresholds(x, {1, 2}, 0).empty());
}

TEST_CASE("a single boosting stump equals the exhaustive best split") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto x = uniform_matrix(40, 4, seed);
        Eigen::VectorXd y = (x.col(2).array() > 0.1).cast<double>() * 2.0 + 0.3 * x.col(0).array();
        GbdtConfig cfg;
        cfg.n_rounds = 1;
        cfg.max_depth = 1;
        cfg.learning_rate = 1.0;
        cfg.lambda = 0.0;
        cfg.min_child_weight = 1.0;
        const auto model = fit_gbdt(y, x, cfg, seed);
        const auto ref = pt::brute_force_stump(y, x);
        REQUIRE(model.trees.size() == 1);
        const auto& root = model.trees[0].nodes[0];
        CHECK(root.feature == ref.feature);
        CHECK(root.threshold == doctest::Approx(ref.threshold));
        const Eigen::VectorXd pred = model.predict(x);
        for (Eigen::Index i = 0; i < y.size(); ++i)
            CHECK(pred(i) == doctest::Approx(x(i, ref.feature) <= ref.threshold ? ref.left_mean : ref.right_mean));
    }
}

TEST_CASE("an unrestricted CART root split is the exhaustive best split") {
    const auto x = uniform_matrix(30, 3, 9);
    const Eigen::VectorXd y = x.col(1).array().square() + 0.2 * x.col(0).array();
    std::vector<int> rows(30);
    for (int i = 0; i < 30; ++i) rows[static_cast<std::size_t>(i)] = i;
    const auto tree = grow_cart(y, x, rows, 3, 29, 1);
    const auto ref = pt::brute_force_stump(y, x);
    CHECK(tree.nodes[0].feature == ref.feature);
    CHECK(tree.nodes[0].threshold == doctest::Approx(ref.threshold));
    CHECK(tree.leaf_count() == 2);
}

TEST_CASE("node-size limit turns small nodes into leaves") {
    const auto x = uniform_matrix(50, 2, 4);
    const Eigen::VectorXd y = x.col(0) + x.col(1);
    std::vector<int> rows(50);
    for (int i = 0; i < 50; ++i) rows[static_cast<std::size_t>(i)] = i;
    const auto tree = grow_cart(y, x, rows, 2, 5, 1);
    std::vector<int> visits(tree.nodes.size(), 0);
    for (int i : rows) {
        int k = 0;
        while (true) {
            ++visits[static_cast<std::size_t>(k)];
            const auto& node = tree.nodes[static_cast<std::size_t>(k)];
            if (node.feature < 0) break;
            k = x(i, node.feature) <= node.threshold ? node.left : node.right;
        }
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (tree.nodes[k].feature >= 0) CHECK(visits[k] > 5);
        else CHECK(visits[k] >= 1);
    }
    CHECK(tree.leaf_count() > 5);
}

TEST_CASE("random forest is deterministic and fits a smooth signal") {
    const auto d = load_dataset(bundled_corpus_path());
    ForestConfig cfg;
    cfg.n_trees = 100;
    const auto a = fit_random_forest(d, cfg, 5);
    const auto b = fit_random_forest(d, cfg, 5);
    CHECK(a.predict(d.predictors) == b.predict(d.predictors));
    CHECK(a.oob_mse == b.oob_mse);
    CHECK(std::isfinite(a.oob_mse));
    CHECK(cfg.resolved_mtry(9) == 3);
    CHECK_THROWS_AS(ForestConfig{0}.validate(9), ValidationError);
}

TEST_CASE("gradient boosting drives the training error down") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto model = fit_gbdt(d, GbdtConfig{}, 1);
    const double tss = (d.outcome.array() - d.outcome.mean()).square().sum();
    const double rss = (model.predict(d.predictors) - d.outcome).squaredNorm();
    CHECK(rss < 0.05 * tss);
    CHECK(model.base_score == doctest::Approx(d.outcome.mean()));
}

TEST_CASE("BART recovers a step function and reports split shares") {
    const auto x = uniform_matrix(80, 3, 12);
    Eigen::VectorXd y = (x.col(0).array() > 0).cast<double>() * 4.0;
    std::mt19937_64 eng(3);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (auto& v : y) v += normal(eng);
    BartConfig cfg;
    cfg.n_trees = 50;
    cfg.iterations = 600;
    cfg.burn_in = 300;
    Eigen::MatrixXd probe(2, 3);
    probe << -0.5, 0, 0, 0.5, 0, 0;
    const auto fit = fit_bart(y, x, cfg, 7, probe);
    CHECK(fit.test_draws.rows() == 300);
    const auto m = fit.test_mean();
    CHECK(std::abs(m(0)) < 0.5);
    CHECK(std::abs(m(1) - 4.0) < 0.5);
    CHECK(fit.importance.sum() == doctest::Approx(1.0));
    CHECK(fit.importance(0) > fit.importance(1));
    CHECK(fit.sigma_draws.mean() == doctest::Approx(0.3).epsilon(0.35));
}

TEST_CASE("GP log-marginal gradient matches finite differences") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto z = standardize(d).z;
    const Eigen::VectorXd y = d.outcome.array() - d.outcome.mean();
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.5);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd v(11);
        for (auto& e : v) e = u(eng);
        v(9) = std::log(20.0) + u(eng);
        auto config_of = [](const Eigen::VectorXd& w) {
            GpConfig c;
            c.length_scales = w.head(9).array().exp();
            c.signal_variance = std::exp(w(9));
            c.noise_variance = std::exp(w(10));
            return c;
        };
        Eigen::VectorXd analytic;
        gp_log_marginal(z, y, config_of(v), &analytic);
        const auto numeric =
            pt::finite_difference([&](const Eigen::VectorXd& w) { return gp_log_marginal(z, y, config_of(w)); }, v);
        const double scale = numeric.cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            CAPTURE(k);
            CHECK(std::abs(analytic(k) - numeric(k)) <= 1e-4 * std::max(std::abs(numeric(k)), 1e-3 * scale));
        }
    }
}

TEST_CASE("GP optimisation increases the marginal likelihood and interpolates") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto z = standardize(d).z;
    const Eigen::VectorXd yc = d.outcome.array() - d.outcome.mean();
    GpConfig start = GpConfig::defaults(9);
    start.signal_variance = 25.0;
    start.noise_variance = 2.5;
    const auto model = fit_gp(d, start, GpOptions{}, 3);
    CHECK(model.log_marginal >= gp_log_marginal(z, yc, start) - 1e-9);

    GpConfig tight = GpConfig::defaults(9);
    tight.signal_variance = 30.0;
    tight.noise_variance = 1e-6;
    const auto exact = condition_gp(d.outcome, d.predictors, tight);
    CHECK((exact.predict(d.predictors) - d.outcome).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("GP pins keep hyperparameters fixed") {
    const auto d = load_dataset(bundled_corpus_path());
    GpConfig start = GpConfig::defaults(9);
    start.noise_variance = 3.0;
    GpOptions o;
    o.pin_noise = true;
    o.restarts = 1;
    const auto model = fit_gp(d, start, o, 1);
    CHECK(model.config.noise_variance == doctest::Approx(3.0));
}
