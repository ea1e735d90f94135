#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"
#include "povreg/mcmc.hpp"

namespace povreg {

/// beta ~ N(0, diag(prior_variances)) (intercept first), sigma2 ~ IG(shape, rate).
/// With `scale_by_sigma2` the coefficient prior becomes N(0, sigma2 * diag(...)),
/// i.e. the fully conjugate normal-inverse-gamma model.
struct GaussianPriorSpec {
    Eigen::VectorXd prior_variances;
    double ig_shape = 3.0;
    double ig_rate = 2.0;
    bool scale_by_sigma2 = false;

    /// Intercept variance 100, slope variances 25.
    static GaussianPriorSpec weakly_informative(Eigen::Index p);
    void validate(Eigen::Index p) const;
};

/// Default schedule for the Gaussian-prior sampler: 20,000 sweeps,
/// 10,000 burn-in, thinning by 5, one chain.
RunConfig gaussian_default_run(std::uint64_t seed = 42);

/// Conditionally conjugate Gibbs sampler: beta | sigma2 is multivariate
/// normal, sigma2 | beta is inverse-gamma. Columns: intercept, one per
/// predictor, sigma2.
PosteriorDraws gibbs_gaussian(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                              const GaussianPriorSpec& prior, const RunConfig& run,
                              const std::vector<std::string>& names = {});
PosteriorDraws gibbs_gaussian(const ProvincialDataset& data, const GaussianPriorSpec& prior,
                              const RunConfig& run);

enum class ShrinkageKind { bayes_ridge, bayes_lasso, horseshoe };

/// Global-local scale-mixture priors on the slopes. The intercept gets an
/// independent N(0, intercept_variance) prior and sigma2 the same IG(3, 2)
/// prior as the Gaussian model.
struct ShrinkageFamily {
    ShrinkageKind kind = ShrinkageKind::horseshoe;
    // bayes_ridge: slopes ~ Student-t(df, 0, scale)
    double t_df = 1.0;
    double t_scale = 1.0;
    // bayes_lasso: slopes ~ Laplace(rate), rate^2 ~ Gamma(shape, rate)
    double lasso_rate_shape = 1.0;
    double lasso_rate_rate = 1.0;
    // horseshoe: global scale ~ half-Cauchy(0, global_scale)
    double global_scale = 1.0;
    // horseshoe: add Metropolis moves on the log scales with the coefficients
    // integrated out (same posterior, much better mixing for large slopes)
    bool collapsed_scale_moves = true;

    double intercept_variance = 1e6;
    double ig_shape = 3.0;
    double ig_rate = 2.0;

    static ShrinkageFamily ridge();
    static ShrinkageFamily lasso();
    static ShrinkageFamily horseshoe();
    void validate() const;
};

std::string to_string(ShrinkageKind kind);

/// 4 chains x 4,000 sweeps with 2,000 warm-up, no thinning.
RunConfig shrinkage_default_run(std::uint64_t seed = 42);

/// Scale-mixture Gibbs sampler. Columns: intercept, slopes, sigma2, then the
/// family's global hyperparameter ("tau2" or "lasso_rate2") when it has one.
PosteriorDraws gibbs_shrinkage(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                               const ShrinkageFamily& family, const RunConfig& run,
                               const std::vector<std::string>& names = {});
PosteriorDraws gibbs_shrinkage(const ProvincialDataset& data, const ShrinkageFamily& family,
                               const RunConfig& run);

/// George-McCulloch stochastic search on standardized predictors:
/// beta_j | gamma_j, sigma2 ~ N(0, sigma2 * (gamma_j ? slab : spike)).
struct SsvsConfig {
    double spike_variance = 0.001;
    double slab_variance = 10.0;
    double prior_inclusion = 0.5;
    double intercept_variance = 1e6;
    double ig_shape = 3.0;
    double ig_rate = 2.0;

    void validate() const;
};

/// 4 chains x 20,000 sweeps with 5,000 burn-in, no thinning.
RunConfig ssvs_default_run(std::uint64_t seed = 42);

struct SsvsResult {
    PosteriorDraws coefficients;  // original predictor scale
    InclusionDraws inclusion;
};

SsvsResult ssvs(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const SsvsConfig& config,
                const RunConfig& run, const std::vector<std::string>& names = {});
SsvsResult ssvs(const ProvincialDataset& data, const SsvsConfig& config, const RunConfig& run);

struct SensitivityRow {
    double scale = 0.0;
    ParameterSummary target;
    WaicResult waic;
    double loo_rmse = 0.0;
};

struct SensitivityOptions {
    std::vector<double> scales{1.0, 10.0, 25.0, 100.0, 1000.0};
    std::string target = "ict";
    double intercept_variance = 1e6;
    RunConfig run = gaussian_default_run();
    RunConfig fold_run{2000, 1000, 1, 1, 42};
    bool with_loo = true;
};

/// Refits the Gaussian-prior model with every slope prior variance set to
/// each scale and reports the target slope, WAIC, and exact LOO-RMSE.
std::vector<SensitivityRow> prior_sensitivity(const ProvincialDataset& data,
                                              const SensitivityOptions& options = {});

}  // namespace povreg
