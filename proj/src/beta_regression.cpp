#include "povreg/beta_regression.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

namespace {

using boost::math::digamma;
using boost::math::trigamma;

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double loglik_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, const Eigen::VectorXd& coefs,
                     double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi)) return -INFINITY;
    const Eigen::VectorXd eta = a * coefs;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = std::clamp(logistic(eta(i)), 1e-12, 1.0 - 1e-12);
        ll += std::lgamma(phi) - std::lgamma(mu * phi) - std::lgamma((1.0 - mu) * phi) +
              (mu * phi - 1.0) * std::log(y(i)) + ((1.0 - mu) * phi - 1.0) * std::log1p(-y(i));
    }
    return std::isfinite(ll) ? ll : -INFINITY;
}

struct ScoreInfo {
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
};

ScoreInfo score_and_information(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                                const Eigen::VectorXd& coefs, double phi) {
    const auto n = a.rows();
    const auto k = a.cols();
    const Eigen::VectorXd eta = a * coefs;
    Eigen::VectorXd t(n), ystar(n), mustar(n), w(n), c(n);
    double score_phi = 0.0;
    double info_phi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = std::clamp(logistic(eta(i)), 1e-12, 1.0 - 1e-12);
        const double a1 = mu * phi;
        const double b1 = (1.0 - mu) * phi;
        t(i) = mu * (1.0 - mu);
        ystar(i) = std::log(y(i)) - std::log1p(-y(i));
        mustar(i) = digamma(a1) - digamma(b1);
        const double ta = trigamma(a1);
        const double tb = trigamma(b1);
        w(i) = phi * (ta + tb) * t(i) * t(i);
        c(i) = phi * (ta * mu - tb * (1.0 - mu));
        score_phi += mu * (ystar(i) - mustar(i)) + std::log1p(-y(i)) - digamma(b1) + digamma(phi);
        info_phi += ta * mu * mu + tb * (1.0 - mu) * (1.0 - mu) - trigamma(phi);
    }
    ScoreInfo out{Eigen::VectorXd(k + 1), Eigen::MatrixXd(k + 1, k + 1)};
    out.score.head(k) = phi * a.transpose() * (t.cwiseProduct(ystar - mustar));
    out.score(k) = score_phi;
    out.info.topLeftCorner(k, k) = phi * a.transpose() * w.asDiagonal() * a;
    const Eigen::VectorXd cross = a.transpose() * t.cwiseProduct(c);
    out.info.topRightCorner(k, 1) = cross;
    out.info.bottomLeftCorner(1, k) = cross.transpose();
    out.info(k, k) = info_phi;
    return out;
}

void check_unit_interval(const Eigen::VectorXd& y01) {
    for (Eigen::Index i = 0; i < y01.size(); ++i)
        if (!(y01(i) > 0.0 && y01(i) < 1.0))
            throw ValidationError("beta regression: outcome at row " + std::to_string(i + 1) +
                                  " is outside the open interval (0,1)");
}

Eigen::MatrixXd safe_inverse(const Eigen::MatrixXd& info) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return Eigen::MatrixXd();
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    if (!inv.allFinite()) return Eigen::MatrixXd();
    return inv;
}

}  // namespace

void BetaRegConfig::validate() const {
    if (!(coef_prior_sd > 0.0) || !(phi_rate > 0.0) || adapt_every < 1)
        throw ValidationError("beta regression: prior scales and adaptation window must be positive");
}

RunConfig beta_default_run(std::uint64_t seed) { return {5000, 2000, 1, 2, seed}; }

double beta_log_likelihood(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x, const Eigen::VectorXd& coefs,
                           double phi) {
    return loglik_design(y01, with_intercept(x), coefs, phi);
}

BetaMle beta_logit_ols_start(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x) {
    check_unit_interval(y01);
    const Eigen::MatrixXd a = with_intercept(x);
    const auto n = a.rows();
    const auto k = a.cols();
    const Eigen::VectorXd z = (y01.array() / (1.0 - y01.array())).log().matrix();
    BetaMle out;
    out.coefs = a.colPivHouseholderQr().solve(z);
    const Eigen::VectorXd resid = z - a * out.coefs;
    const double s2 = resid.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(n - k, 1));
    double acc = 0.0;
    const Eigen::VectorXd eta = a * out.coefs;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = logistic(eta(i));
        const double g = mu * (1.0 - mu);
        acc += mu * (1.0 - mu) / (s2 * g * g);
    }
    out.phi = std::max(acc / static_cast<double>(n) - 1.0, 1.0);
    out.log_likelihood = loglik_design(y01, a, out.coefs, out.phi);
    out.fallback = true;
    return out;
}

BetaMle beta_mle(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x) {
    const BetaMle start = beta_logit_ols_start(y01, x);
    const Eigen::MatrixXd a = with_intercept(x);
    const auto k = a.cols();

    Eigen::VectorXd theta(k + 1);
    theta.head(k) = start.coefs;
    theta(k) = start.phi;
    double ll = start.log_likelihood;
    bool converged = false;
    int it = 0;
    for (; it < 200; ++it) {
        const auto si = score_and_information(y01, a, theta.head(k), theta(k));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(si.info);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd step = ldlt.solve(si.score);
        if (!step.allFinite()) break;
        double t = 1.0;
        bool improved = false;
        Eigen::VectorXd next;
        double next_ll = -INFINITY;
        for (int h = 0; h < 40; ++h, t *= 0.5) {
            next = theta + t * step;
            if (next(k) <= 0.0) continue;
            next_ll = loglik_design(y01, a, next.head(k), next(k));
            if (next_ll >= ll - 1e-12) {
                improved = true;
                break;
            }
        }
        if (!improved) break;
        const double change = next_ll - ll;
        theta = next;
        ll = next_ll;
        if (std::abs(change) < 1e-10 && (t * step).lpNorm<Eigen::Infinity>() < 1e-8) {
            converged = true;
            break;
        }
    }

    if (!converged || !(ll >= start.log_likelihood) || !theta.allFinite()) {
        BetaMle fb = start;
        const auto si = score_and_information(y01, a, fb.coefs, fb.phi);
        fb.covariance = safe_inverse(si.info);
        return fb;
    }
    BetaMle out;
    out.coefs = theta.head(k);
    out.phi = theta(k);
    out.log_likelihood = ll;
    out.iterations = it + 1;
    out.converged = true;
    out.fallback = false;
    out.covariance = safe_inverse(score_and_information(y01, a, out.coefs, out.phi).info);
    return out;
}

BetaRegFit fit_beta(const Eigen::VectorXd& y01, const Eigen::MatrixXd& x, const BetaRegConfig& config,
                    const RunConfig& run, const std::vector<std::string>& names) {
    config.validate();
    run.validate();
    check_unit_interval(y01);
    const Eigen::MatrixXd a = with_intercept(x);
    const auto k = a.cols();
    const BetaMle start = beta_mle(y01, x);

    // Proposal shape for the coefficient block.
    Eigen::MatrixXd cov_beta;
    double phi_sd = 0.1;
    if (start.covariance.size() > 0) {
        cov_beta = start.covariance.topLeftCorner(k, k);
        phi_sd = std::sqrt(std::max(start.covariance(k, k), 1e-12)) / start.phi;
    } else {
        cov_beta = (a.transpose() * a).inverse() * 0.1;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov_beta);
    if (llt.info() != Eigen::Success) {
        cov_beta = Eigen::MatrixXd(cov_beta.diagonal().cwiseAbs().cwiseMax(1e-8).asDiagonal());
        llt.compute(cov_beta);
    }
    const Eigen::MatrixXd chol = llt.matrixL();
    const double prior_prec = 1.0 / (config.coef_prior_sd * config.coef_prior_sd);

    auto log_post = [&](const Eigen::VectorXd& coefs, double log_phi) {
        const double phi = std::exp(log_phi);
        return loglik_design(y01, a, coefs, phi) - 0.5 * prior_prec * coefs.squaredNorm() -
               config.phi_rate * phi + log_phi;
    };

    struct ChainOut {
        Eigen::MatrixXd draws;
        double coef_acc;
        double phi_acc;
    };

    auto chain = [&](std::size_t c) {
        Engine eng(mix_seed(run.seed, c));
        ChainOut out{Eigen::MatrixXd(run.retained_per_chain(), k + 1), 0.0, 0.0};
        Eigen::VectorXd coefs = start.coefs;
        double log_phi = std::log(start.phi);
        double lp = log_post(coefs, log_phi);
        double coef_scale = 2.38 / std::sqrt(static_cast<double>(k));
        double phi_scale = 2.38 * phi_sd;
        int window_coef = 0, window_phi = 0, window = 0;
        long frozen_coef = 0, frozen_phi = 0, frozen = 0;
        Eigen::Index row = 0;

        for (int it = 0; it < run.iterations; ++it) {
            const Eigen::VectorXd prop = coefs + coef_scale * chol * draw_std_normal_vector(eng, k);
            const double lp_prop = log_post(prop, log_phi);
            bool acc_c = std::log(draw_uniform(eng)) < lp_prop - lp;
            if (acc_c) {
                coefs = prop;
                lp = lp_prop;
            }
            const double lphi_prop = log_phi + phi_scale * draw_normal(eng);
            const double lp_phi = log_post(coefs, lphi_prop);
            bool acc_p = std::log(draw_uniform(eng)) < lp_phi - lp;
            if (acc_p) {
                log_phi = lphi_prop;
                lp = lp_phi;
            }
            if (!std::isfinite(lp))
                throw NumericalError("beta regression: non-finite log posterior at iteration " + std::to_string(it));

            if (it < run.burn_in) {
                window_coef += acc_c;
                window_phi += acc_p;
                if (++window == config.adapt_every) {
                    auto adjust = [&](double rate, double& scale) {
                        if (rate < 0.2) scale *= 0.7;
                        else if (rate > 0.4) scale *= 1.3;
                    };
                    adjust(static_cast<double>(window_coef) / window, coef_scale);
                    adjust(static_cast<double>(window_phi) / window, phi_scale);
                    window = window_coef = window_phi = 0;
                }
            } else {
                frozen_coef += acc_c;
                frozen_phi += acc_p;
                ++frozen;
                if ((it - run.burn_in + 1) % run.thin == 0) {
                    out.draws.row(row).head(k) = coefs.transpose();
                    out.draws(row, k) = std::exp(log_phi);
                    ++row;
                }
            }
        }
        out.coef_acc = frozen ? static_cast<double>(frozen_coef) / static_cast<double>(frozen) : 0.0;
        out.phi_acc = frozen ? static_cast<double>(frozen_phi) / static_cast<double>(frozen) : 0.0;
        return out;
    };

    const auto chains = parallel_map<ChainOut>(static_cast<std::size_t>(run.chains), chain);

    BetaRegFit fit;
    fit.start = start;
    const auto per = run.retained_per_chain();
    fit.draws.draws.resize(per * run.chains, k + 1);
    for (int c = 0; c < run.chains; ++c) {
        fit.draws.draws.middleRows(c * per, per) = chains[static_cast<std::size_t>(c)].draws;
        fit.coef_acceptance += chains[static_cast<std::size_t>(c)].coef_acc / run.chains;
        fit.phi_acceptance += chains[static_cast<std::size_t>(c)].phi_acc / run.chains;
    }
    fit.draws.names = {"intercept"};
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        fit.draws.names.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                               : "x" + std::to_string(j + 1));
    fit.draws.names.push_back("phi");
    fit.draws.chains = run.chains;
    fit.draws.iterations = run.iterations;
    fit.draws.burn_in = run.burn_in;
    fit.draws.thin = run.thin;
    fit.draws.seed = run.seed;
    fit.draws.check();
    return fit;
}

BetaRegFit fit_beta(const ProvincialDataset& data, const BetaRegConfig& config, const RunConfig& run) {
    return fit_beta(data.outcome / 100.0, data.predictors, config, run, data.predictor_names);
}

Eigen::VectorXd predict_beta(const PosteriorDraws& draws, const Eigen::MatrixXd& x_new) {
    const auto k = x_new.cols() + 1;
    if (draws.draws.cols() < k) throw ValidationError("predict_beta: predictor count does not match the draws");
    const Eigen::MatrixXd coefs = draws.draws.leftCols(k);
    const Eigen::MatrixXd eta = (with_intercept(x_new) * coefs.transpose());
    Eigen::VectorXd out(x_new.rows());
    for (Eigen::Index i = 0; i < x_new.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index d = 0; d < eta.cols(); ++d) s += logistic(eta(i, d));
        // Keep the open interval even when the logistic saturates in double precision.
        out(i) = std::clamp(100.0 * s / static_cast<double>(eta.cols()), std::nextafter(0.0, 1.0),
                            std::nextafter(100.0, 0.0));
    }
    return out;
}

}  // namespace povreg
