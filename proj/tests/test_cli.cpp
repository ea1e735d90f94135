#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "povreg/report.hpp"
#include "povreg/spatial.hpp"
#include "support.hpp"

using namespace povreg;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "povreg_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// Runs the CLI with `args`; stdout and stderr go to files under work_dir().
int run(const std::string& args, std::string* err = nullptr) {
    const auto out = work_dir() / "stdout.txt";
    const auto errf = work_dir() / "stderr.txt";
    const std::string cmd =
        std::string("\"") + POVREG_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + errf.string() + "\"";
    const int status = std::system(cmd.c_str());
    if (err) {
        std::ifstream in(errf);
        std::stringstream ss;
        ss << in.rdbuf();
        *err = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string out_flag(const std::string& name) { return "--out \"" + (work_dir() / name).string() + "\""; }

}  // namespace

TEST_CASE("help exits cleanly and parse errors exit with 1") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("fit") == 1);
}

TEST_CASE("validation failures exit with 1 and say what is wrong") {
    std::string err;
    CHECK(run(out_flag("a") + " spatial moran", &err) == 1);
    CHECK(err.find("--adjacency") != std::string::npos);
    CHECK(run(out_flag("a") + " fit M99", &err) == 1);
    CHECK(err.find("M99") != std::string::npos);
    CHECK(run("--data /nonexistent.csv describe", &err) == 1);
    CHECK(err.find("--data") != std::string::npos);
    CHECK(run("--models M1,X3 loocv", &err) == 1);
}

TEST_CASE("numerical failures exit with 2") {
    // Water duplicated into sanitation: the OLS design becomes singular.
    std::istringstream in(slurp(bundled_corpus_path()));
    std::string line, text;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            text += line + "\n";
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        cells[6] = cells[7];
        std::string row = cells[0];
        for (std::size_t k = 1; k < cells.size(); ++k) row += "," + cells[k];
        text += row + "\n";
    }
    const auto path = work_dir() / "collinear.csv";
    std::ofstream(path) << text;
    std::string err;
    CHECK(run("--data \"" + path.string() + "\" " + out_flag("b") + " fit M1", &err) == 2);
    CHECK_FALSE(err.empty());
}

TEST_CASE("describe writes the tables and the heatmap") {
    REQUIRE(run(out_flag("describe") + " describe") == 0);
    const auto dir = work_dir() / "describe";
    const auto table = Table::read(dir / "tables" / "descriptives.csv");
    const auto d = load_dataset(bundled_corpus_path());
    CHECK(table == descriptive_table(describe(d)));
    CHECK(fs::exists(dir / "tables" / "correlations.csv"));
    CHECK(testing::well_formed_xml(slurp(dir / "figures" / "correlation_heatmap.svg")));
}

TEST_CASE("leaderboard CSV is byte-identical across runs") {
    REQUIRE(run(out_flag("loo1") + " --models M1,M2 loocv") == 0);
    REQUIRE(run(out_flag("loo2") + " --models M1,M2 loocv") == 0);
    const auto a = slurp(work_dir() / "loo1" / "tables" / "leaderboard.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(work_dir() / "loo2" / "tables" / "leaderboard.csv"));
    const auto j = nlohmann::json::parse(slurp(work_dir() / "loo1" / "runs" / "leaderboard.json"));
    CHECK(j.size() == 2);
    CHECK(j[0].contains("wall_seconds"));
    CHECK(j[0]["predictions"].size() == 34);
    CHECK(testing::well_formed_xml(slurp(work_dir() / "loo1" / "figures" / "loocv_rmse.svg")));
}

TEST_CASE("config file supplies defaults and flags override it") {
    const auto cfg = work_dir() / "config.json";
    std::ofstream(cfg) << R"({"models": ["M1"], "seed": 7, "out": ")" << (work_dir() / "cfg").string() << R"("})";
    REQUIRE(run("--config \"" + cfg.string() + "\" loocv") == 0);
    const auto t = Table::read(work_dir() / "cfg" / "tables" / "leaderboard.csv");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][1] == "M1");

    REQUIRE(run("--config \"" + cfg.string() + "\" --models M2 " + out_flag("cfg2") + " loocv") == 0);
    const auto u = Table::read(work_dir() / "cfg2" / "tables" / "leaderboard.csv");
    REQUIRE(u.rows.size() == 1);
    CHECK(u.rows[0][1] == "M2");

    std::ofstream(work_dir() / "broken.json") << "{not json";
    CHECK(run("--config \"" + (work_dir() / "broken.json").string() + "\" describe") == 1);
}

TEST_CASE("spatial moran runs with an adjacency file") {
    const auto adj = bundled_synthetic_adjacency_path();
    REQUIRE(run("--adjacency \"" + adj.string() + "\" " + out_flag("moran") + " spatial moran") == 0);
    const auto t = Table::read(work_dir() / "moran" / "tables" / "moran.csv");
    CHECK(t.rows.size() == 2);
    CHECK(t.number(0, "p_value") > 0.0);
    CHECK(t.number(0, "p_value") <= 1.0);
}
