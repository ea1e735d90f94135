#include "povreg/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

GpConfig GpConfig::defaults(Eigen::Index p) {
    GpConfig c;
    c.length_scales = Eigen::VectorXd::Ones(p);
    return c;
}

void GpConfig::validate(Eigen::Index p) const {
    if (length_scales.size() != p) throw ValidationError("GP: need one length scale per predictor");
    if (!(length_scales.array() > 0.0).all() || !(signal_variance > 0.0) || !(noise_variance > 0.0))
        throw ValidationError("GP hyperparameters must be positive");
}

namespace {

Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GpConfig& c) {
    const Eigen::MatrixXd sa = a * c.length_scales.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd sb = b * c.length_scales.cwiseInverse().asDiagonal();
    Eigen::MatrixXd d2 = (-2.0 * sa * sb.transpose()).colwise() + sa.rowwise().squaredNorm();
    d2.rowwise() += sb.rowwise().squaredNorm().transpose();
    return c.signal_variance * (-0.5 * d2.array().max(0.0)).exp().matrix();
}

Eigen::LLT<Eigen::MatrixXd> robust_cholesky(Eigen::MatrixXd k) {
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return llt;
    for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw NumericalError("GP: kernel matrix is not positive definite even with 1e-6 jitter");
}

struct Packing {
    Eigen::Index p;
    bool pin_signal, pin_noise;

    Eigen::Index size() const { return p + (pin_signal ? 0 : 1) + (pin_noise ? 0 : 1); }

    Eigen::VectorXd pack(const GpConfig& c) const {
        Eigen::VectorXd t(size());
        t.head(p) = c.length_scales.array().log();
        Eigen::Index k = p;
        if (!pin_signal) t(k++) = std::log(c.signal_variance);
        if (!pin_noise) t(k++) = std::log(c.noise_variance);
        return t;
    }

    GpConfig unpack(const Eigen::VectorXd& t, const GpConfig& base) const {
        GpConfig c = base;
        c.length_scales = t.head(p).array().exp();
        Eigen::Index k = p;
        if (!pin_signal) c.signal_variance = std::exp(t(k++));
        if (!pin_noise) c.noise_variance = std::exp(t(k++));
        return c;
    }

    Eigen::VectorXd reduce(const Eigen::VectorXd& full_grad) const {
        Eigen::VectorXd g(size());
        g.head(p) = full_grad.head(p);
        Eigen::Index k = p;
        if (!pin_signal) g(k++) = full_grad(p);
        if (!pin_noise) g(k++) = full_grad(p + 1);
        return g;
    }
};

struct OptResult {
    GpConfig config;
    double value = -INFINITY;
};

/// Projected BFGS on f = -log marginal within [lo, hi] per coordinate.
OptResult maximize(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const GpConfig& start, const Packing& pk,
                   double lo, double hi, int max_iter) {
    auto objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd* grad) {
        Eigen::VectorXd full;
        const double v = gp_log_marginal(z, y, pk.unpack(t, start), grad ? &full : nullptr);
        if (grad) *grad = -pk.reduce(full);
        return -v;
    };
    auto project = [&](Eigen::VectorXd t) { return Eigen::VectorXd(t.cwiseMax(lo).cwiseMin(hi)); };

    const auto m = pk.size();
    Eigen::VectorXd t = project(pk.pack(start));
    Eigen::VectorXd g;
    double f;
    try {
        f = objective(t, &g);
    } catch (const NumericalError&) {
        return {};
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m);

    for (int it = 0; it < max_iter; ++it) {
        // Projected-gradient stationarity check.
        if ((project(t - g) - t).lpNorm<Eigen::Infinity>() < 1e-7) break;
        Eigen::VectorXd dir = -h * g;
        if (g.dot(dir) >= 0.0) {
            h.setIdentity();
            dir = -g;
        }
        bool moved = false;
        for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
            double step = 1.0;
            for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
                const Eigen::VectorXd cand = project(t + step * dir);
                const Eigen::VectorXd s = cand - t;
                if (s.lpNorm<Eigen::Infinity>() < 1e-14) break;
                Eigen::VectorXd g_new;
                double f_new;
                try {
                    f_new = objective(cand, &g_new);
                } catch (const NumericalError&) {
                    continue;
                }
                if (f_new <= f + 1e-4 * g.dot(s)) {
                    const Eigen::VectorXd yv = g_new - g;
                    const double sy = s.dot(yv);
                    if (sy > 1e-12) {
                        const double rho = 1.0 / sy;
                        const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(m, m);
                        h = (i - rho * s * yv.transpose()) * h * (i - rho * yv * s.transpose()) + rho * s * s.transpose();
                    }
                    const double change = f - f_new;
                    t = cand;
                    f = f_new;
                    g = g_new;
                    moved = true;
                    if (change < 1e-10 * (1.0 + std::abs(f))) it = max_iter;
                    break;
                }
            }
            if (!moved) {
                h.setIdentity();
                dir = -g;
            }
        }
        if (!moved) break;
    }
    return {pk.unpack(t, start), -f};
}

GpModel finish(const Eigen::VectorXd& y, const GpConfig& config, double lml, const StandardizedDesign& design) {
    GpModel model;
    model.config = config;
    model.standardizer = design.standardizer;
    model.z_train = design.z;
    model.y_mean = y.mean();
    Eigen::MatrixXd k = se_kernel(design.z, design.z, config);
    k.diagonal().array() += config.noise_variance;
    model.weights = robust_cholesky(k).solve(Eigen::VectorXd(y.array() - model.y_mean));
    model.log_marginal = lml;
    return model;
}

}  // namespace

double gp_log_marginal(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const GpConfig& config,
                       Eigen::VectorXd* gradient) {
    config.validate(z.cols());
    const auto n = z.rows();
    const Eigen::MatrixXd kse = se_kernel(z, z, config);
    Eigen::MatrixXd k = kse;
    k.diagonal().array() += config.noise_variance;
    const auto llt = robust_cholesky(k);
    const Eigen::VectorXd alpha = llt.solve(y);
    const Eigen::MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const double value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(value)) throw NumericalError("GP: non-finite log marginal likelihood");

    if (gradient) {
        const auto p = z.cols();
        const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;  // dL/dK = w / 2
        gradient->resize(p + 2);
        for (Eigen::Index d = 0; d < p; ++d) {
            const double inv_l2 = 1.0 / (config.length_scales(d) * config.length_scales(d));
            double acc = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double diff = z(i, d) - z(j, d);
                    acc += w(i, j) * kse(i, j) * diff * diff * inv_l2;
                }
            (*gradient)(d) = 0.5 * acc;
        }
        (*gradient)(p) = 0.5 * (w.array() * kse.array()).sum();
        (*gradient)(p + 1) = 0.5 * config.noise_variance * w.trace();
    }
    return value;
}

Eigen::VectorXd GpModel::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = standardizer.apply(x);
    return (se_kernel(z, z_train, config) * weights).array() + y_mean;
}

GpModel condition_gp(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const GpConfig& config) {
    const auto design = standardize(x);
    const Eigen::VectorXd yc = y.array() - y.mean();
    return finish(y, config, gp_log_marginal(design.z, yc, config), design);
}

GpModel fit_gp(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::optional<GpConfig>& init,
               const GpOptions& options, std::uint64_t seed) {
    if (options.restarts < 1) throw ValidationError("GP needs at least one restart");
    if (!(options.lower > 0.0 && options.upper > options.lower)) throw ValidationError("GP: invalid hyperparameter box");
    const auto design = standardize(x);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const auto p = x.cols();

    GpConfig start = init.value_or(GpConfig::defaults(p));
    if (!init) {
        const double v = yc.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, yc.size() - 1));
        start.signal_variance = std::max(v, 1e-6);
        start.noise_variance = std::max(0.1 * v, 1e-6);
    }
    start.validate(p);
    const Packing pk{p, options.pin_signal, options.pin_noise};
    const double lo = std::log(options.lower);
    const double hi = std::log(options.upper);

    const auto results = parallel_map<OptResult>(static_cast<std::size_t>(options.restarts), [&](std::size_t r) {
        GpConfig s = start;
        if (r > 0) {
            Engine eng(mix_seed(seed, r));
            Eigen::VectorXd t = pk.pack(start);
            for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = lo + (hi - lo) * draw_uniform(eng);
            s = pk.unpack(t, start);
        }
        return maximize(design.z, yc, s, pk, lo, hi, options.max_iterations);
    });

    const OptResult* best = nullptr;
    for (const auto& r : results)
        if (std::isfinite(r.value) && (!best || r.value > best->value)) best = &r;
    if (!best) throw NumericalError("GP: every restart failed");
    return finish(y, best->config, best->value, design);
}

GpModel fit_gp(const ProvincialDataset& data, const std::optional<GpConfig>& init, const GpOptions& options,
               std::uint64_t seed) {
    return fit_gp(data.outcome, data.predictors, init, options, seed);
}

}  // namespace povreg
