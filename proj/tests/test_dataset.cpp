#include <doctest.h>

#include <fstream>
#include <sstream>

#include "povreg/dataset.hpp"
#include "povreg/error.hpp"
#include "povreg/stats.hpp"
#include "support.hpp"

using namespace povreg;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_temp(const std::string& name, const std::string& body) {
    const auto dir = fs::temp_directory_path() / "povreg_test_dataset";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << body;
    return p;
}

// Header plus the first `rows` data lines of the bundled corpus.
std::string corpus_prefix(int rows) {
    std::istringstream in(read_text(bundled_corpus_path()));
    std::string line, out;
    for (int k = 0; k <= rows && std::getline(in, line); ++k) out += line + "\n";
    return out;
}

}  // namespace

TEST_CASE("bundled corpus loads with 34 rows and 9 predictors") {
    const auto d = load_dataset(bundled_corpus_path());
    CHECK(d.n() == 34);
    CHECK(d.p() == 9);
    CHECK(d.ids.front() == "Provinsi01");
    CHECK(d.predictor_names.back() == "ict");
    CHECK(d.predictor_index("gini") == 3);
    CHECK_THROWS_AS(d.predictor_index("nope"), ValidationError);
}

TEST_CASE("columns are bound by header name") {
    const auto d = load_dataset(bundled_corpus_path());
    // Move the outcome column to the end.
    std::istringstream in(read_text(bundled_corpus_path()));
    std::string line, shuffled;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        std::string row = cells[0];
        for (std::size_t k = 2; k < cells.size(); ++k) row += "," + cells[k];
        shuffled += row + "," + cells[1] + "\n";
    }
    const auto e = load_dataset(write_temp("shuffled.csv", shuffled));
    CHECK(e.outcome == d.outcome);
    CHECK(e.predictors == d.predictors);
}

TEST_CASE("invalid inputs raise ValidationError") {
    const auto header = corpus_prefix(0);
    SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset("/nonexistent/x.csv"), ValidationError); }
    SUBCASE("missing column") {
        CHECK_THROWS_AS(load_dataset(write_temp("nocol.csv", "province,poverty\nA,1\nB,2\nC,3\n")), ValidationError);
    }
    SUBCASE("too few rows") { CHECK_THROWS_AS(load_dataset(write_temp("short.csv", corpus_prefix(2))), ValidationError); }
    SUBCASE("outcome out of bounds") {
        auto text = corpus_prefix(5);
        text += "Bad,120,9,70,6,0.3,80,88,95,5,70\n";
        CHECK_THROWS_AS(load_dataset(write_temp("bounds.csv", text)), ValidationError);
    }
    SUBCASE("gini outside the unit interval") {
        auto text = corpus_prefix(5);
        text += "Bad,10,9,70,6,1.3,80,88,95,5,70\n";
        CHECK_THROWS_AS(load_dataset(write_temp("gini.csv", text)), ValidationError);
    }
    SUBCASE("non-numeric cell") {
        auto text = corpus_prefix(5);
        text += "Bad,10,nine,70,6,0.3,80,88,95,5,70\n";
        CHECK_THROWS_AS(load_dataset(write_temp("text.csv", text)), ValidationError);
    }
    SUBCASE("non-finite cell") {
        auto text = corpus_prefix(5);
        text += "Bad,10,nan,70,6,0.3,80,88,95,5,70\n";
        CHECK_THROWS_AS(load_dataset(write_temp("nan.csv", text)), ValidationError);
    }
    SUBCASE("duplicate province") {
        auto text = corpus_prefix(5);
        text += corpus_prefix(1).substr(header.size());
        CHECK_THROWS_WITH_AS(load_dataset(write_temp("dup.csv", text)), doctest::Contains("already appears"),
                             ValidationError);
    }
    SUBCASE("ragged row") {
        auto text = corpus_prefix(5);
        text += "Bad,10,9,70\n";
        CHECK_THROWS_AS(load_dataset(write_temp("ragged.csv", text)), ValidationError);
    }
    SUBCASE("constant predictor") {
        std::string text = header;
        for (int i = 0; i < 5; ++i)
            text += "P" + std::to_string(i) + "," + std::to_string(5 + i) + ",9," + std::to_string(70 + i) +
                    ",6.1,0.3" + std::to_string(i) + ",8" + std::to_string(i) + ",8" + std::to_string(i) +
                    ",9" + std::to_string(i) + ",5." + std::to_string(i) + ",7" + std::to_string(i) + "\n";
        CHECK_THROWS_AS(load_dataset(write_temp("const.csv", text)), ValidationError);
    }
}

TEST_CASE("describe matches direct computation") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto rows = describe(d);
    REQUIRE(rows.size() == 10);
    CHECK(rows[0].name == "poverty");
    std::vector<double> ict(d.predictors.col(8).data(), d.predictors.col(8).data() + 34);
    std::sort(ict.begin(), ict.end());
    const auto& r = rows[9];
    CHECK(r.min == ict.front());
    CHECK(r.max == ict.back());
    CHECK(r.median == doctest::Approx(0.5 * (ict[16] + ict[17])).epsilon(1e-14));
    double s = 0, ss = 0;
    for (double v : ict) s += v;
    const double m = s / 34;
    for (double v : ict) ss += (v - m) * (v - m);
    CHECK(r.mean == doctest::Approx(m).epsilon(1e-13));
    CHECK(r.sd == doctest::Approx(std::sqrt(ss / 33)).epsilon(1e-13));
}

TEST_CASE("correlation matrix is symmetric with unit diagonal") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto c = correlation_matrix(d);
    CHECK(c.names.size() == 10);
    CHECK((c.matrix - c.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((c.matrix.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
    auto order = c.leaf_order;
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < order.size(); ++k) CHECK(order[k] == k);
    // ICT carries the strongest negative association with poverty.
    CHECK(c.matrix(0, 9) == doctest::Approx(-0.75).epsilon(0.02));
}

TEST_CASE("average linkage merges the closest pair first") {
    // Two tight pairs {0,2} and {1,3}, far apart.
    Eigen::MatrixXd dist(4, 4);
    dist << 0, 9, 1, 9,
            9, 0, 9, 2,
            1, 9, 0, 9,
            9, 2, 9, 0;
    const auto order = average_linkage_order(dist);
    REQUIRE(order.size() == 4);
    auto pos = [&](std::size_t v) { return std::find(order.begin(), order.end(), v) - order.begin(); };
    CHECK(std::abs(pos(0) - pos(2)) == 1);
    CHECK(std::abs(pos(1) - pos(3)) == 1);
}

TEST_CASE("standardize and rescale round-trip predictions") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto s = standardize(d);
    CHECK(s.z.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index j = 0; j < s.z.cols(); ++j) CHECK(stats::sample_sd(s.z.col(j)) == doctest::Approx(1.0));
    CHECK((s.standardizer.invert(s.z) - d.predictors).cwiseAbs().maxCoeff() < 1e-10);

    CoefficientVector c;
    c.intercept = 1.5;
    c.slopes = Eigen::VectorXd::LinSpaced(9, -1, 1);
    c.scale = Scale::standardized;
    const auto o = rescale_coefficients(c, s.standardizer);
    CHECK(o.scale == Scale::original);
    CHECK((o.predict(d.predictors) - c.predict(s.z)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(rescale_coefficients(o, s.standardizer), ValidationError);
}

TEST_CASE("subset and without_row keep rows aligned") {
    const auto d = load_dataset(bundled_corpus_path());
    const auto w = d.without_row(3);
    CHECK(w.n() == 33);
    CHECK(std::find(w.ids.begin(), w.ids.end(), d.ids[3]) == w.ids.end());
    CHECK(w.outcome(3) == d.outcome(4));
    CHECK(w.predictors.row(3) == d.predictors.row(4));
}
