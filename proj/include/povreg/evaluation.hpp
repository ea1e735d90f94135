#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "povreg/dataset.hpp"
#include "povreg/table.hpp"

namespace povreg {

/// One leave-one-out split. `train` holds every row except `held_out`;
/// `test_x` is the held-out predictor row in original units.
struct Fold {
    ProvincialDataset train;
    Eigen::RowVectorXd test_x;
    Eigen::Index held_out = 0;
    std::uint64_t seed = 0;
};

/// Fit-then-predict procedure. Everything data-dependent (standardization,
/// tuning, sampling) must happen inside the call, on `fold.train` only.
using FitPredict = std::function<double(const Fold&)>;

struct ModelAdapter {
    std::string id;     // "M1".."M15"
    std::string label;  // human-readable name
    FitPredict fit_predict;
    bool approximate = false;
};

struct LoocvReport {
    std::string model_id;
    std::string label;
    Eigen::VectorXd predictions;
    Eigen::VectorXd truth;
    double rmse = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    bool approximate = false;
};

/// Exact leave-one-out: n refits, fold i seeded with mix_seed(seed, i).
/// Folds may run on several threads; the report does not depend on it.
/// A failing fold aborts with its index in the message.
LoocvReport loocv(const ModelAdapter& adapter, const ProvincialDataset& data, std::uint64_t seed,
                  unsigned threads = 0);

/// Root mean squared error recomputed from stored predictions.
double recompute_rmse(const LoocvReport& report);

struct Leaderboard {
    std::vector<LoocvReport> rows;  // ascending RMSE

    /// rank, model, label, rmse, approximate. Wall time is left out so the
    /// CSV is byte-identical across runs.
    Table to_table() const;
    /// Full audit record including per-fold predictions and wall time.
    nlohmann::json to_json() const;
};

/// Stable sort by RMSE, ties broken by numeric model id. Throws on an empty
/// list or duplicate ids.
Leaderboard compare(std::vector<LoocvReport> reports);

/// Numeric part of an "M<k>" identifier (large value for anything else).
int model_number(const std::string& id);

}  // namespace povreg
