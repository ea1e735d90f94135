#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "povreg/bart.hpp"
#include "povreg/beta_regression.hpp"
#include "povreg/coefficients.hpp"
#include "povreg/evaluation.hpp"
#include "povreg/gp.hpp"
#include "povreg/linear.hpp"
#include "povreg/mcmc.hpp"
#include "povreg/spatial.hpp"
#include "povreg/trees.hpp"

namespace povreg {

/// Model registry:
///   M1 OLS, M2 ridge, M3 LASSO, M4 elastic net (alpha 0.5),
///   M5 Gaussian-prior Bayes, M6 Bayesian ridge, M7 Bayesian LASSO,
///   M8 horseshoe, M9 spike-and-slab, M10 beta regression, M11 BYM2,
///   M12 BART, M13 GP (ARD), M14 random forest, M15 gradient boosting.
const std::vector<std::string>& model_ids();

/// The comparison portfolio: every model except M9, which is a selection
/// device rather than a predictor.
const std::vector<std::string>& comparison_model_ids();

std::string model_label(const std::string& id);

/// Throws ValidationError for anything outside M1..M15.
void check_model_id(const std::string& id);

struct PortfolioOptions {
    /// Bayesian samplers inside each fold; the seed is replaced per fold.
    RunConfig fold_run{2000, 1000, 1, 1, 42};
    ForestConfig forest;
    GbdtConfig gbdt;
    BartConfig bart;
    GpOptions gp;
    BetaRegConfig beta;
    /// Graph for M11; nodes must match the dataset ids.
    std::optional<AdjacencyGraph> graph;
};

/// Standardize, tune lambda by inner LOO on the training rows, refit, and
/// map the coefficients back to original units.
struct PenalizedFit {
    CoefficientVector coefficients;  // original scale
    CoefficientVector standardized;
    PenaltyConfig config;
};
PenalizedFit fit_tuned_penalized(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha);

/// Mixing weight of the elastic-net member of the portfolio.
inline constexpr double kElasticNetAlpha = 0.5;

/// Leave-one-out adapter for one registry entry. `full` is only consulted
/// by M11, whose held-out row stays in the graph but leaves the likelihood.
ModelAdapter make_adapter(const std::string& id, const ProvincialDataset& full, const PortfolioOptions& options);

}  // namespace povreg
