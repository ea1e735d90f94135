#include "povreg/bayes_linear.hpp"

#include <cmath>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

namespace {

std::vector<std::string> coefficient_names(const std::vector<std::string>& names, Eigen::Index p) {
    std::vector<std::string> out{"intercept"};
    for (Eigen::Index j = 0; j < p; ++j)
        out.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                  : "x" + std::to_string(j + 1));
    return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

/// Draw from N(P^{-1} b, P^{-1}).
Eigen::VectorXd draw_from_precision(Engine& eng, const Eigen::MatrixXd& precision,
                                    const Eigen::VectorXd& b, int iteration, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(what) +
                             ": conditional precision not positive definite at iteration " +
                             std::to_string(iteration));
    const Eigen::VectorXd mean = llt.solve(b);
    const Eigen::VectorXd z = draw_std_normal_vector(eng, b.size());
    return mean + llt.matrixU().solve(z);
}

bool keep(const RunConfig& run, int it) {
    return it >= run.burn_in && (it - run.burn_in + 1) % run.thin == 0;
}

PosteriorDraws assemble(std::vector<Eigen::MatrixXd> chains, std::vector<std::string> names,
                        const RunConfig& run) {
    PosteriorDraws out;
    out.names = std::move(names);
    out.chains = run.chains;
    out.iterations = run.iterations;
    out.burn_in = run.burn_in;
    out.thin = run.thin;
    out.seed = run.seed;
    const auto per = chains.front().rows();
    out.draws.resize(per * run.chains, chains.front().cols());
    for (int c = 0; c < run.chains; ++c) out.draws.middleRows(c * per, per) = chains[static_cast<std::size_t>(c)];
    out.check();
    return out;
}

void check_finite(double v, const std::string& name, int iteration) {
    if (!std::isfinite(v) || v <= 0.0)
        throw NumericalError("divergent scale '" + name + "' at iteration " + std::to_string(iteration));
}

/// log p(y | prior variances, sigma2) with the coefficients integrated out,
/// dropping terms that do not depend on the prior variances.
double collapsed_log_marginal(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty, double sigma2,
                              const Eigen::VectorXd& prior_var) {
    Eigen::MatrixXd precision = xtx / sigma2;
    precision.diagonal() += prior_var.cwiseInverse();
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) return -INFINITY;
    const Eigen::VectorXd b = xty / sigma2;
    const Eigen::MatrixXd l = llt.matrixL();
    return -0.5 * prior_var.array().log().sum() - l.diagonal().array().log().sum() + 0.5 * b.dot(llt.solve(b));
}

/// Random-walk Metropolis on log lambda_j^2 and log tau^2 with the
/// coefficients integrated out. The coefficient draw that follows completes a
/// partially collapsed Gibbs sweep, so the target posterior is unchanged;
/// the point is to let large signals escape the shrunken region quickly.
void collapsed_horseshoe_scales(Engine& eng, const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty, double sigma2,
                                double intercept_variance, const Eigen::VectorXd& aux, double global_aux,
                                Eigen::VectorXd& local, double& global) {
    const auto p = local.size();
    Eigen::VectorXd prior_var(p + 1);
    prior_var(0) = intercept_variance;
    prior_var.tail(p) = local * global;
    double current = collapsed_log_marginal(xtx, xty, sigma2, prior_var);
    // Half-Cauchy scales as IG(1/2, 1/aux) on the squared scale; on the log
    // scale the density (with Jacobian) is exp(-v/2 - rate * exp(-v)).
    auto log_prior = [](double v, double rate) { return -0.5 * v - rate * std::exp(-v); };
    // Alternate local and long jumps: the shrunken and unshrunken regimes of a
    // slope sit orders of magnitude apart on the variance scale.
    auto step = [&eng] { return draw_uniform(eng) < 0.5 ? 0.7 : 3.0; };

    for (Eigen::Index j = 0; j < p; ++j) {
        const double v = std::log(local(j));
        const double v_new = v + step() * draw_normal(eng);
        const double old_var = prior_var(j + 1);
        prior_var(j + 1) = std::exp(v_new) * global;
        const double proposed = collapsed_log_marginal(xtx, xty, sigma2, prior_var);
        const double log_ratio = proposed - current + log_prior(v_new, 1.0 / aux(j)) - log_prior(v, 1.0 / aux(j));
        if (std::log(draw_uniform(eng)) < log_ratio) {
            local(j) = std::exp(v_new);
            current = proposed;
        } else {
            prior_var(j + 1) = old_var;
        }
    }

    const double v = std::log(global);
    const double v_new = v + step() * draw_normal(eng);
    Eigen::VectorXd candidate = prior_var;
    candidate.tail(p) = local * std::exp(v_new);
    const double proposed = collapsed_log_marginal(xtx, xty, sigma2, candidate);
    if (std::log(draw_uniform(eng)) < proposed - current + log_prior(v_new, 1.0 / global_aux) - log_prior(v, 1.0 / global_aux))
        global = std::exp(v_new);
}

}  // namespace

GaussianPriorSpec GaussianPriorSpec::weakly_informative(Eigen::Index p) {
    GaussianPriorSpec s;
    s.prior_variances = Eigen::VectorXd::Constant(p + 1, 25.0);
    s.prior_variances(0) = 100.0;
    return s;
}

void GaussianPriorSpec::validate(Eigen::Index p) const {
    if (prior_variances.size() != p + 1)
        throw ValidationError("Gaussian prior needs p + 1 variances (intercept first)");
    if (!(prior_variances.array() > 0.0).all()) throw ValidationError("prior variances must be > 0");
    if (!(ig_shape > 0.0) || !(ig_rate > 0.0)) throw ValidationError("inverse-gamma shape and rate must be > 0");
}

RunConfig gaussian_default_run(std::uint64_t seed) { return {20000, 10000, 5, 1, seed}; }

PosteriorDraws gibbs_gaussian(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                              const GaussianPriorSpec& prior, const RunConfig& run,
                              const std::vector<std::string>& names) {
    run.validate();
    prior.validate(x.cols());
    const Eigen::MatrixXd a = with_intercept(x);
    const auto n = a.rows();
    const auto k = a.cols();
    const Eigen::MatrixXd xtx = a.transpose() * a;
    const Eigen::VectorXd xty = a.transpose() * y;
    const Eigen::VectorXd prior_precision = prior.prior_variances.cwiseInverse();

    auto chain = [&](std::size_t c) {
        Engine eng(mix_seed(run.seed, c));
        Eigen::MatrixXd out(run.retained_per_chain(), k + 1);
        double sigma2 = (y.array() - y.mean()).square().sum() / static_cast<double>(n - 1);
        Eigen::Index row = 0;
        for (int it = 0; it < run.iterations; ++it) {
            Eigen::VectorXd beta;
            if (prior.scale_by_sigma2) {
                Eigen::MatrixXd precision = xtx;
                precision.diagonal() += prior_precision;
                beta = draw_from_precision(eng, precision / sigma2, xty / sigma2, it, "gibbs_gaussian");
            } else {
                Eigen::MatrixXd precision = xtx / sigma2;
                precision.diagonal() += prior_precision;
                beta = draw_from_precision(eng, precision, xty / sigma2, it, "gibbs_gaussian");
            }
            const double rss = (y - a * beta).squaredNorm();
            double shape = prior.ig_shape + 0.5 * static_cast<double>(n);
            double scale = prior.ig_rate + 0.5 * rss;
            if (prior.scale_by_sigma2) {
                shape += 0.5 * static_cast<double>(k);
                scale += 0.5 * beta.dot(prior_precision.cwiseProduct(beta));
            }
            sigma2 = draw_inv_gamma(eng, shape, scale);
            check_finite(sigma2, "sigma2", it);
            if (keep(run, it)) {
                out.row(row).head(k) = beta.transpose();
                out(row, k) = sigma2;
                ++row;
            }
        }
        return out;
    };

    auto chains = parallel_map<Eigen::MatrixXd>(static_cast<std::size_t>(run.chains), chain);
    auto cols = coefficient_names(names, x.cols());
    cols.push_back("sigma2");
    return assemble(std::move(chains), std::move(cols), run);
}

PosteriorDraws gibbs_gaussian(const ProvincialDataset& data, const GaussianPriorSpec& prior,
                              const RunConfig& run) {
    return gibbs_gaussian(data.outcome, data.predictors, prior, run, data.predictor_names);
}

ShrinkageFamily ShrinkageFamily::ridge() {
    ShrinkageFamily f;
    f.kind = ShrinkageKind::bayes_ridge;
    return f;
}

ShrinkageFamily ShrinkageFamily::lasso() {
    ShrinkageFamily f;
    f.kind = ShrinkageKind::bayes_lasso;
    return f;
}

ShrinkageFamily ShrinkageFamily::horseshoe() {
    ShrinkageFamily f;
    f.kind = ShrinkageKind::horseshoe;
    return f;
}

void ShrinkageFamily::validate() const {
    const bool ok = t_df > 0 && t_scale > 0 && lasso_rate_shape > 0 && lasso_rate_rate > 0 &&
                    global_scale > 0 && intercept_variance > 0 && ig_shape > 0 && ig_rate > 0;
    if (!ok) throw ValidationError("shrinkage family hyperparameters must be positive");
}

std::string to_string(ShrinkageKind kind) {
    switch (kind) {
        case ShrinkageKind::bayes_ridge: return "bayes_ridge";
        case ShrinkageKind::bayes_lasso: return "bayes_lasso";
        case ShrinkageKind::horseshoe: return "horseshoe";
    }
    return "unknown";
}

RunConfig shrinkage_default_run(std::uint64_t seed) { return {4000, 2000, 1, 4, seed}; }

PosteriorDraws gibbs_shrinkage(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                               const ShrinkageFamily& family, const RunConfig& run,
                               const std::vector<std::string>& names) {
    run.validate();
    family.validate();
    const Eigen::MatrixXd a = with_intercept(x);
    const auto n = a.rows();
    const auto p = x.cols();
    const auto k = a.cols();
    const Eigen::MatrixXd xtx = a.transpose() * a;
    const Eigen::VectorXd xty = a.transpose() * y;
    const bool has_global = family.kind != ShrinkageKind::bayes_ridge;
    const Eigen::Index width = k + 1 + (has_global ? 1 : 0);
    const double a2 = family.global_scale * family.global_scale;

    auto chain = [&](std::size_t c) {
        Engine eng(mix_seed(run.seed, c));
        Eigen::MatrixXd out(run.retained_per_chain(), width);
        double sigma2 = (y.array() - y.mean()).square().sum() / static_cast<double>(n - 1);
        Eigen::VectorXd local = Eigen::VectorXd::Ones(p);  // local variances (lambda_j^2 / tau_j^2)
        Eigen::VectorXd aux = Eigen::VectorXd::Ones(p);    // horseshoe nu_j
        double global = 1.0;                               // tau^2, or the lasso rate^2
        double global_aux = 1.0;                           // horseshoe xi
        Eigen::Index row = 0;

        for (int it = 0; it < run.iterations; ++it) {
            if (family.kind == ShrinkageKind::horseshoe && family.collapsed_scale_moves)
                collapsed_horseshoe_scales(eng, xtx, xty, sigma2, family.intercept_variance, aux, global_aux, local,
                                           global);

            Eigen::VectorXd prior_var(k);
            prior_var(0) = family.intercept_variance;
            if (family.kind == ShrinkageKind::horseshoe)
                prior_var.tail(p) = local * global;
            else
                prior_var.tail(p) = local;

            Eigen::MatrixXd precision = xtx / sigma2;
            precision.diagonal() += prior_var.cwiseInverse();
            const Eigen::VectorXd beta = draw_from_precision(eng, precision, xty / sigma2, it, "gibbs_shrinkage");
            const Eigen::VectorXd b = beta.tail(p);

            sigma2 = draw_inv_gamma(eng, family.ig_shape + 0.5 * static_cast<double>(n),
                                    family.ig_rate + 0.5 * (y - a * beta).squaredNorm());
            check_finite(sigma2, "sigma2", it);

            switch (family.kind) {
                case ShrinkageKind::bayes_ridge: {
                    const double nu = family.t_df;
                    const double s2 = family.t_scale * family.t_scale;
                    for (Eigen::Index j = 0; j < p; ++j) {
                        local(j) = draw_inv_gamma(eng, 0.5 * (nu + 1.0), 0.5 * (nu * s2 + b(j) * b(j)));
                        check_finite(local(j), "local_variance[" + std::to_string(j) + "]", it);
                    }
                    break;
                }
                case ShrinkageKind::bayes_lasso: {
                    for (Eigen::Index j = 0; j < p; ++j) {
                        const double abs_b = std::max(std::abs(b(j)), 1e-12);
                        const double inv = draw_inv_gaussian(eng, std::sqrt(global) / abs_b, global);
                        local(j) = 1.0 / inv;
                        check_finite(local(j), "local_variance[" + std::to_string(j) + "]", it);
                    }
                    global = draw_gamma(eng, family.lasso_rate_shape + static_cast<double>(p),
                                        family.lasso_rate_rate + 0.5 * local.sum());
                    check_finite(global, "lasso_rate2", it);
                    break;
                }
                case ShrinkageKind::horseshoe: {
                    for (Eigen::Index j = 0; j < p; ++j) {
                        local(j) = draw_inv_gamma(eng, 1.0, 1.0 / aux(j) + b(j) * b(j) / (2.0 * global));
                        check_finite(local(j), "lambda2[" + std::to_string(j) + "]", it);
                        aux(j) = draw_inv_gamma(eng, 1.0, 1.0 + 1.0 / local(j));
                    }
                    global = draw_inv_gamma(eng, 0.5 * static_cast<double>(p + 1),
                                            1.0 / global_aux + 0.5 * (b.array().square() / local.array()).sum());
                    check_finite(global, "tau2", it);
                    global_aux = draw_inv_gamma(eng, 1.0, 1.0 / a2 + 1.0 / global);
                    break;
                }
            }

            if (keep(run, it)) {
                out.row(row).head(k) = beta.transpose();
                out(row, k) = sigma2;
                if (has_global) out(row, k + 1) = global;
                ++row;
            }
        }
        return out;
    };

    auto chains = parallel_map<Eigen::MatrixXd>(static_cast<std::size_t>(run.chains), chain);
    auto cols = coefficient_names(names, p);
    cols.push_back("sigma2");
    if (family.kind == ShrinkageKind::horseshoe) cols.push_back("tau2");
    if (family.kind == ShrinkageKind::bayes_lasso) cols.push_back("lasso_rate2");
    return assemble(std::move(chains), std::move(cols), run);
}

PosteriorDraws gibbs_shrinkage(const ProvincialDataset& data, const ShrinkageFamily& family,
                               const RunConfig& run) {
    return gibbs_shrinkage(data.outcome, data.predictors, family, run, data.predictor_names);
}

void SsvsConfig::validate() const {
    if (!(spike_variance > 0.0) || !(slab_variance > spike_variance))
        throw ValidationError("ssvs: need 0 < spike variance < slab variance");
    if (!(prior_inclusion > 0.0 && prior_inclusion < 1.0))
        throw ValidationError("ssvs: prior inclusion must lie in (0,1)");
    if (!(intercept_variance > 0.0) || !(ig_shape > 0.0) || !(ig_rate > 0.0))
        throw ValidationError("ssvs: variance hyperparameters must be > 0");
}

RunConfig ssvs_default_run(std::uint64_t seed) { return {20000, 5000, 1, 4, seed}; }

SsvsResult ssvs(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const SsvsConfig& config,
                const RunConfig& run, const std::vector<std::string>& names) {
    run.validate();
    config.validate();
    const auto design = standardize(x);
    const Eigen::MatrixXd a = with_intercept(design.z);
    const auto n = a.rows();
    const auto p = x.cols();
    const auto k = a.cols();
    const Eigen::MatrixXd xtx = a.transpose() * a;
    const Eigen::VectorXd xty = a.transpose() * y;
    const double log_odds_prior = std::log(config.prior_inclusion / (1.0 - config.prior_inclusion));

    struct ChainOut {
        Eigen::MatrixXd coefs;
        Eigen::MatrixXd gamma;
    };

    auto chain = [&](std::size_t c) {
        Engine eng(mix_seed(run.seed, c));
        ChainOut out{Eigen::MatrixXd(run.retained_per_chain(), k + 1),
                     Eigen::MatrixXd(run.retained_per_chain(), p)};
        double sigma2 = (y.array() - y.mean()).square().sum() / static_cast<double>(n - 1);
        std::vector<bool> gamma(static_cast<std::size_t>(p), true);
        Eigen::Index row = 0;
        for (int it = 0; it < run.iterations; ++it) {
            Eigen::VectorXd v(p);
            for (Eigen::Index j = 0; j < p; ++j)
                v(j) = gamma[static_cast<std::size_t>(j)] ? config.slab_variance : config.spike_variance;

            Eigen::MatrixXd precision = xtx / sigma2;
            precision(0, 0) += 1.0 / config.intercept_variance;
            precision.diagonal().tail(p) += (v * sigma2).cwiseInverse();
            const Eigen::VectorXd beta = draw_from_precision(eng, precision, xty / sigma2, it, "ssvs");
            const Eigen::VectorXd b = beta.tail(p);

            for (Eigen::Index j = 0; j < p; ++j) {
                const double b2 = b(j) * b(j) / sigma2;
                const double log_slab = -0.5 * std::log(config.slab_variance) - 0.5 * b2 / config.slab_variance;
                const double log_spike = -0.5 * std::log(config.spike_variance) - 0.5 * b2 / config.spike_variance;
                const double log_odds = log_odds_prior + log_slab - log_spike;
                const double prob = 1.0 / (1.0 + std::exp(-log_odds));
                gamma[static_cast<std::size_t>(j)] = draw_uniform(eng) < prob;
                v(j) = gamma[static_cast<std::size_t>(j)] ? config.slab_variance : config.spike_variance;
            }

            const double rss = (y - a * beta).squaredNorm();
            sigma2 = draw_inv_gamma(eng, config.ig_shape + 0.5 * static_cast<double>(n + p),
                                    config.ig_rate + 0.5 * rss + 0.5 * (b.array().square() / v.array()).sum());
            check_finite(sigma2, "sigma2", it);

            if (keep(run, it)) {
                const Eigen::VectorXd slopes = b.array() / design.standardizer.sds.array();
                out.coefs(row, 0) = beta(0) - slopes.dot(design.standardizer.means);
                out.coefs.row(row).segment(1, p) = slopes.transpose();
                out.coefs(row, k) = sigma2;
                for (Eigen::Index j = 0; j < p; ++j) out.gamma(row, j) = gamma[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
                ++row;
            }
        }
        return out;
    };

    auto chains = parallel_map<ChainOut>(static_cast<std::size_t>(run.chains), chain);
    std::vector<Eigen::MatrixXd> coef_chains;
    for (auto& ch : chains) coef_chains.push_back(ch.coefs);
    auto cols = coefficient_names(names, p);
    cols.push_back("sigma2");

    SsvsResult result;
    result.coefficients = assemble(std::move(coef_chains), cols, run);
    const auto per = chains.front().gamma.rows();
    result.inclusion.indicators.resize(per * run.chains, p);
    for (int c = 0; c < run.chains; ++c)
        result.inclusion.indicators.middleRows(c * per, per) = chains[static_cast<std::size_t>(c)].gamma;
    result.inclusion.names.assign(cols.begin() + 1, cols.begin() + 1 + p);
    return result;
}

SsvsResult ssvs(const ProvincialDataset& data, const SsvsConfig& config, const RunConfig& run) {
    return ssvs(data.outcome, data.predictors, config, run, data.predictor_names);
}

}  // namespace povreg
