#include "povreg/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"
#include "povreg/stats.hpp"

namespace povreg {

LoocvReport loocv(const ModelAdapter& adapter, const ProvincialDataset& data, std::uint64_t seed,
                  unsigned threads) {
    const auto n = data.n();
    if (n < 3) throw ValidationError("loocv needs at least 3 rows");
    if (!adapter.fit_predict) throw ValidationError("adapter '" + adapter.id + "' has no fit procedure");

    const auto start = std::chrono::steady_clock::now();
    auto fold_fn = [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        Fold fold{data.without_row(row), data.predictors.row(row), row, mix_seed(seed, i)};
        double value;
        try {
            value = adapter.fit_predict(fold);
        } catch (const ValidationError& e) {
            throw ValidationError(adapter.id + " fold " + std::to_string(i) + ": " + e.what());
        } catch (const std::exception& e) {
            throw NumericalError(adapter.id + " fold " + std::to_string(i) + ": " + e.what());
        }
        if (!std::isfinite(value))
            throw NumericalError(adapter.id + " fold " + std::to_string(i) + ": non-finite prediction");
        return value;
    };
    const auto values = parallel_map<double>(static_cast<std::size_t>(n), fold_fn, threads);

    LoocvReport report;
    report.model_id = adapter.id;
    report.label = adapter.label;
    report.predictions = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
    report.truth = data.outcome;
    report.rmse = stats::rmse(report.truth, report.predictions);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.seed = seed;
    report.approximate = adapter.approximate;
    return report;
}

double recompute_rmse(const LoocvReport& report) { return stats::rmse(report.truth, report.predictions); }

int model_number(const std::string& id) {
    if (id.size() >= 2 && (id[0] == 'M' || id[0] == 'm') &&
        std::all_of(id.begin() + 1, id.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::stoi(id.substr(1));
    return 1 << 20;
}

Leaderboard compare(std::vector<LoocvReport> reports) {
    if (reports.empty()) throw ValidationError("compare needs at least one report");
    std::set<std::string> seen;
    for (const auto& r : reports)
        if (!seen.insert(r.model_id).second) throw ValidationError("duplicate model id '" + r.model_id + "'");
    std::stable_sort(reports.begin(), reports.end(), [](const LoocvReport& a, const LoocvReport& b) {
        if (a.rmse != b.rmse) return a.rmse < b.rmse;
        return model_number(a.model_id) < model_number(b.model_id);
    });
    return Leaderboard{std::move(reports)};
}

Table Leaderboard::to_table() const {
    Table t;
    t.header = {"rank", "model", "label", "rmse_loo", "approximate"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.add_row({std::to_string(i + 1), r.model_id, r.label, format_number(r.rmse),
                   r.approximate ? "true" : "false"});
    }
    return t;
}

nlohmann::json Leaderboard::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out.push_back({{"rank", i + 1},
                       {"model", r.model_id},
                       {"label", r.label},
                       {"rmse_loo", r.rmse},
                       {"approximate", r.approximate},
                       {"seed", r.seed},
                       {"wall_seconds", r.wall_seconds},
                       {"predictions", std::vector<double>(r.predictions.data(), r.predictions.data() + r.predictions.size())},
                       {"truth", std::vector<double>(r.truth.data(), r.truth.data() + r.truth.size())}});
    }
    return out;
}

}  // namespace povreg
