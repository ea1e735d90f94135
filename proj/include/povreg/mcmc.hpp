#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace povreg {

/// Iteration schedule for one sampler run. Every chain runs `iterations`
/// sweeps, discards the first `burn_in`, and keeps every `thin`-th sweep
/// after that. Chain c uses the sub-seed mix_seed(seed, c).
struct RunConfig {
    int iterations = 20000;
    int burn_in = 10000;
    int thin = 5;
    int chains = 1;
    std::uint64_t seed = 42;

    int retained_per_chain() const { return (iterations - burn_in) / thin; }
    void validate() const;
};

/// Retained MCMC draws, one row per draw, one column per parameter.
/// Rows are chain-major: chain 0's draws first, then chain 1's, ...
struct PosteriorDraws {
    Eigen::MatrixXd draws;
    std::vector<std::string> names;
    int chains = 1;
    int iterations = 0;
    int burn_in = 0;
    int thin = 1;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return draws.rows(); }
    Eigen::Index draws_per_chain() const { return draws.rows() / chains; }
    Eigen::Index index(const std::string& name) const;
    Eigen::VectorXd column(const std::string& name) const { return draws.col(index(name)); }

    /// Throws NumericalError on non-finite cells or inconsistent chain layout.
    void check() const;

    /// Stacks same-named draw sets from independent chains.
    static PosteriorDraws concatenate(const std::vector<PosteriorDraws>& parts);
};

/// Posterior of binary inclusion indicators (draws x p).
struct InclusionDraws {
    Eigen::MatrixXd indicators;
    std::vector<std::string> names;

    /// Column means of the indicator matrix.
    Eigen::VectorXd pip() const;
};

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    double prob_negative = 0.0;
};

/// Mean, SD, type-7 2.5%/97.5% quantiles and P(theta < 0). Needs >= 100 draws.
std::vector<ParameterSummary> summarize_posterior(const PosteriorDraws& draws);
ParameterSummary summarize_parameter(const std::string& name, const Eigen::VectorXd& values);

struct ConvergenceReport {
    std::vector<std::string> names;
    std::vector<double> rhat;      // rank-normalized split R-hat (max of bulk and folded)
    std::vector<double> ess_bulk;  // capped at the number of retained draws
};

/// Rank-normalized split R-hat and bulk ESS. Every chain is split in half,
/// so a single chain is compared against itself. Needs >= 4 draws per split.
ConvergenceReport convergence(const PosteriorDraws& draws);

/// Per-parameter diagnostics on a (draws_per_chain x chains) matrix.
double split_rhat(const Eigen::MatrixXd& chains);
double bulk_ess(const Eigen::MatrixXd& chains);

struct WaicResult {
    double waic = 0.0;
    double p_waic = 0.0;
    double lppd = 0.0;
};

/// WAIC for a Gaussian linear model. `draws` must hold the columns
/// "intercept", one per column of `x` (in order, right after the
/// intercept), and "sigma2".
WaicResult waic(const PosteriorDraws& draws, const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

/// n_rep replicated outcome vectors (rows), each from a uniformly chosen
/// retained draw plus Gaussian noise with that draw's sigma2.
Eigen::MatrixXd posterior_predictive(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                                     int n_rep, std::uint64_t seed);

/// Posterior mean of the linear predictor at each row of `x`.
Eigen::VectorXd posterior_mean_prediction(const PosteriorDraws& draws, const Eigen::MatrixXd& x);

/// CSV with one column per parameter plus `<path>.json` carrying the run metadata.
void write_draws(const PosteriorDraws& draws, const std::filesystem::path& csv_path);
PosteriorDraws read_draws(const std::filesystem::path& csv_path);

}  // namespace povreg
