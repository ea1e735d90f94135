#include <doctest.h>

#include <fstream>
#include <random>

#include "povreg/bayes_linear.hpp"
#include "povreg/error.hpp"
#include "povreg/rng.hpp"
#include "povreg/spatial.hpp"
#include "povreg/stats.hpp"
#include "support.hpp"

using namespace povreg;
namespace pt = povreg::testing;

namespace {

std::vector<std::string> labels(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(pt::province_label(i));
    return out;
}

AdjacencyGraph ring(int n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    e.emplace_back(0, n - 1);
    return AdjacencyGraph::from_edges(labels(n), e);
}

const AdjacencyGraph& synthetic_graph() {
    static const auto g = load_adjacency(bundled_synthetic_adjacency_path(), labels(34));
    return g;
}

Eigen::MatrixXd chain_matrix(const Eigen::VectorXd& v, int chains) {
    const Eigen::Index m = v.size() / chains;
    Eigen::MatrixXd out(m, chains);
    for (int c = 0; c < chains; ++c) out.col(c) = v.segment(c * m, m);
    return out;
}

double mc_se(const PosteriorDraws& d, const std::string& name) {
    const Eigen::VectorXd v = d.column(name);
    return stats::sample_sd(v) / std::sqrt(bulk_ess(chain_matrix(v, d.chains)));
}

}  // namespace

TEST_CASE("Moran's I is -1 on the two-node antithetic case") {
    const auto g = AdjacencyGraph::from_edges({"a", "b"}, {{0, 1}});
    Eigen::VectorXd v(2);
    v << 1.0, -1.0;
    CHECK(morans_i(v, spatial_weights(g)) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("Moran's I matches its definition") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto w = spatial_weights(synthetic_graph());
    CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(morans_i(d.outcome, w) == doctest::Approx(pt::morans_i_reference(d.outcome, w)).epsilon(1e-12));
    CHECK_THROWS_AS(morans_i(Eigen::VectorXd::Constant(34, 2.0), w), ValidationError);
}

TEST_CASE("permutation null is centred on -1/(n-1)") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto test = morans_mc_test(d.outcome, spatial_weights(synthetic_graph()), 999, 42);
    REQUIRE(test.null_draws.size() == 999);
    CHECK(std::abs(test.null_draws.mean() - (-1.0 / 33.0)) <= 0.01);
    const double count = (test.null_draws.array() >= test.observed).count();
    CHECK(test.p_value == doctest::Approx((1.0 + count) / 1000.0));
}

TEST_CASE("pure noise is rarely flagged") {
    const auto w = spatial_weights(synthetic_graph());
    int calm = 0;
    for (int r = 0; r < 50; ++r) {
        std::mt19937_64 eng(mix_seed(2024, static_cast<std::uint64_t>(r)));
        std::normal_distribution<double> normal;
        Eigen::VectorXd v(34);
        for (auto& x : v) x = normal(eng);
        if (morans_mc_test(v, w, 999, mix_seed(7, static_cast<std::uint64_t>(r))).p_value > 0.05) ++calm;
    }
    CHECK(calm >= 45);
}

TEST_CASE("permutation test rejects too few permutations and is seeded") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto w = spatial_weights(synthetic_graph());
    CHECK_THROWS_AS(morans_mc_test(d.outcome, w, 50, 1), ValidationError);
    CHECK(morans_mc_test(d.outcome, w, 199, 3).null_draws == morans_mc_test(d.outcome, w, 199, 3).null_draws);
}

TEST_CASE("graph validation") {
    CHECK_THROWS_AS(AdjacencyGraph::from_edges({"a", "b"}, {{0, 0}}), ValidationError);
    CHECK_THROWS_AS(AdjacencyGraph::from_edges({"a", "b"}, {{0, 5}}), ValidationError);
    try {
        AdjacencyGraph::from_edges({"a", "b", "c", "d"}, {{0, 1}, {2, 3}});
        FAIL("expected a disconnected-graph error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("a") != std::string::npos);
        CHECK(msg.find("c") != std::string::npos);
    }
    const auto path = std::filesystem::temp_directory_path() / "povreg_bad_adjacency.txt";
    std::ofstream(path) << "Provinsi01 Nowhere\n";
    CHECK_THROWS_AS(load_adjacency(path, labels(34)), ValidationError);
}

TEST_CASE("alignment permutes nodes consistently") {
    const auto& g = synthetic_graph();
    auto order = g.labels;
    std::reverse(order.begin(), order.end());
    const auto h = g.aligned_to(order);
    const auto a = g.adjacency_matrix(), b = h.adjacency_matrix();
    for (std::size_t i = 0; i < 34; ++i)
        for (std::size_t j = 0; j < 34; ++j)
            CHECK(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  b(static_cast<Eigen::Index>(33 - i), static_cast<Eigen::Index>(33 - j)));
    CHECK(g.laplacian().rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scaling factor matches closed forms") {
    // Two nodes: the Laplacian pseudo-inverse is L/4.
    CHECK(bym2_scaling_factor(AdjacencyGraph::from_edges({"a", "b"}, {{0, 1}})) == doctest::Approx(0.25));
    // Cycle of n nodes: every diagonal entry of L+ equals (n^2 - 1) / (12 n).
    CHECK(bym2_scaling_factor(ring(10)) == doctest::Approx(99.0 / 120.0));
}

TEST_CASE("BYM2 structured field sums to zero at every draw") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto fit = fit_bym2(d, synthetic_graph(), Bym2Config{}, {1500, 500, 1, 1, 3});
    REQUIRE(fit.structured.rows() == 1000);
    CHECK(fit.structured.rowwise().sum().cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.draws.draws.allFinite());
    CHECK(fit.draws.column("rho").minCoeff() >= 0.0);
    CHECK(fit.draws.column("rho").maxCoeff() <= 1.0);
}

TEST_CASE("BYM2 without a spatial effect reproduces the Gaussian-prior posterior") {
    Eigen::VectorXd beta(3);
    beta << 1.0, -0.5, 0.25;
    const auto d = pt::synthetic_linear(34, beta, 3.0, 1.0, 17);
    Bym2Config cfg;
    cfg.fixed_sigma_u = 0.0;
    const RunConfig run{6000, 1000, 1, 2, 23};
    const auto spatial = fit_bym2(d.outcome, d.predictors, synthetic_graph(), cfg, run);
    const auto plain = gibbs_gaussian(d.outcome, d.predictors, GaussianPriorSpec::weakly_informative(3),
                                      {6000, 1000, 1, 2, 29});
    for (const std::string name : {"intercept", "x1", "x2", "x3", "sigma2"}) {
        CAPTURE(name);
        const double se = std::hypot(mc_se(spatial.draws, name), mc_se(plain, name));
        CHECK(std::abs(spatial.draws.column(name).mean() - plain.column(name).mean()) <= 3.0 * se);
    }
}

TEST_CASE("held-out rows leave the BYM2 likelihood") {
    const auto d = load_dataset(bundled_corpus_path());
    Bym2Config cfg;
    cfg.observed.assign(34, true);
    cfg.observed[5] = false;
    auto y = d.outcome;
    const RunConfig run{800, 300, 1, 1, 9};
    const auto a = fit_bym2(y, d.predictors, synthetic_graph(), cfg, run, d.predictor_names);
    y(5) = 1e4;
    const auto b = fit_bym2(y, d.predictors, synthetic_graph(), cfg, run, d.predictor_names);
    CHECK(a.draws.draws == b.draws.draws);
    CHECK(a.fitted_mean(5) == b.fitted_mean(5));
}
