#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"
#include "povreg/mcmc.hpp"

namespace povreg {

/// Beta regression with a logit mean link and constant precision phi:
/// y_i ~ Beta(mu_i * phi, (1 - mu_i) * phi), logit(mu_i) = b0 + x_i' b.
/// Coefficients get independent N(0, coef_prior_sd^2) priors and phi an
/// Exponential(phi_rate) prior.
struct BetaRegConfig {
    double coef_prior_sd = 10.0;
    double phi_rate = 0.1;
    int adapt_every = 100;

    void validate() const;
};

/// 2 chains x 5,000 sweeps with 2,000 adaptive warm-up, no thinning.
RunConfig beta_default_run(std::uint64_t seed = 42);

/// Log-likelihood for outcomes in (0,1). `coefs` holds the intercept first.
double beta_log_likelihood(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& coefs, double phi);

struct BetaMle {
    Eigen::VectorXd coefs;  // intercept first
    double phi = 1.0;
    double log_likelihood = 0.0;
    Eigen::MatrixXd covariance;  // inverse Fisher information over (coefs, phi)
    int iterations = 0;
    bool converged = false;
    bool fallback = false;  // true when the OLS-on-logit start was kept
};

/// Least squares on logit(y) plus the moment-based precision estimate.
BetaMle beta_logit_ols_start(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x);

/// Fisher scoring with step halving, started from the OLS-on-logit fit.
/// Falls back to that start when scoring diverges.
BetaMle beta_mle(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x);

struct BetaRegFit {
    PosteriorDraws draws;  // intercept, slopes, phi
    BetaMle start;
    double coef_acceptance = 0.0;  // post-warm-up acceptance, averaged over chains
    double phi_acceptance = 0.0;
};

/// Random-walk Metropolis-within-Gibbs: one block for the coefficients
/// (proposal shaped by the inverse Fisher information at the MLE) and a
/// scalar walk on log(phi). Proposal scales adapt during warm-up towards a
/// 20-40% acceptance rate and are frozen afterwards.
/// Throws ValidationError when an outcome lies outside the open unit interval.
BetaRegFit fit_beta(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x, const BetaRegConfig& config,
                    const RunConfig& run, const std::vector<std::string>& names = {});

/// Dataset overload: the percentage outcome is divided by 100 first.
BetaRegFit fit_beta(const ProvincialDataset& data, const BetaRegConfig& config, const RunConfig& run);

/// Posterior mean of 100 * logistic(b0 + x' b) for each row of `x_new`.
Eigen::VectorXd predict_beta(const PosteriorDraws& draws, const Eigen::MatrixXd& x_new);

}  // namespace povreg
