#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the estimator it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"
#include "povreg/linear.hpp"

namespace povreg::testing {

inline std::filesystem::path source_dir() { return POVREG_SOURCE_DIR; }

inline std::string province_label(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "Provinsi%02d", i + 1);
    return buf;
}

/// y = intercept + x * beta + N(0, noise_sd^2), with x iid N(0, 1).
/// Outcome bounds are not enforced, so this is not run through validate().
inline ProvincialDataset synthetic_linear(int n, const Eigen::VectorXd& beta, double intercept, double noise_sd,
                                          std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal;
    ProvincialDataset d;
    d.predictors.resize(n, beta.size());
    d.outcome.resize(n);
    for (int i = 0; i < n; ++i) {
        d.ids.push_back(province_label(i));
        for (Eigen::Index j = 0; j < beta.size(); ++j) d.predictors(i, j) = normal(eng);
    }
    d.outcome = (d.predictors * beta).array() + intercept;
    for (int i = 0; i < n; ++i) d.outcome(i) += noise_sd * normal(eng);
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        d.predictor_names.push_back("x" + std::to_string(j + 1));
        d.predictor_units.push_back("");
    }
    return d;
}

/// Largest violation of the elastic-net optimality conditions for
/// (1/2n)||y - b0 - Xb||^2 + lambda (alpha |b|_1 + (1-alpha)/2 |b|^2).
inline double kkt_violation(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const CoefficientVector& c,
                            double lambda, double alpha) {
    const double n = static_cast<double>(y.size());
    const Eigen::VectorXd r = y - ((x * c.slopes).array() + c.intercept).matrix();
    double worst = std::abs(r.mean());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double smooth = -x.col(j).dot(r) / n + lambda * (1.0 - alpha) * c.slopes(j);
        const double l1 = lambda * alpha;
        const double v = c.slopes(j) != 0.0 ? std::abs(smooth + l1 * (c.slopes(j) > 0 ? 1.0 : -1.0))
                                            : std::max(0.0, std::abs(smooth) - l1);
        worst = std::max(worst, v);
    }
    return worst;
}

/// Closed-form ridge for the same objective with alpha = 0:
/// (Xc'Xc + n lambda I) b = Xc'(y - ybar).
inline CoefficientVector ridge_closed_form(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double lambda) {
    const double n = static_cast<double>(y.size());
    const Eigen::RowVectorXd mx = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - mx;
    const Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::MatrixXd a = xc.transpose() * xc;
    a.diagonal().array() += n * lambda;
    CoefficientVector c;
    c.slopes = a.ldlt().solve(xc.transpose() * yc);
    c.intercept = y.mean() - mx.dot(c.slopes);
    c.scale = Scale::standardized;
    return c;
}

/// Normal-inverse-gamma posterior for y = [1 X] b + e, b | s2 ~ N(0, s2 V0),
/// s2 ~ IG(a0, b0).
struct NigPosterior {
    Eigen::VectorXd mean;     // E[b | y]
    Eigen::VectorXd sd;       // marginal SD of b (Student-t)
    double sigma2_mean = 0.0;
    double sigma2_sd = 0.0;
};

inline NigPosterior nig_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& v0,
                                  double a0, double b0) {
    const Eigen::Index n = y.size();
    Eigen::MatrixXd design(n, x.cols() + 1);
    design << Eigen::VectorXd::Ones(n), x;
    Eigen::MatrixXd precision = design.transpose() * design;
    precision.diagonal() += v0.cwiseInverse();
    const Eigen::MatrixXd vn = precision.inverse();
    const Eigen::VectorXd mn = vn * design.transpose() * y;
    const double an = a0 + 0.5 * static_cast<double>(n);
    const double bn = b0 + 0.5 * (y.squaredNorm() - mn.dot(precision * mn));
    NigPosterior out;
    out.mean = mn;
    out.sd = (bn / (an - 1.0) * vn.diagonal().array()).sqrt();
    out.sigma2_mean = bn / (an - 1.0);
    out.sigma2_sd = out.sigma2_mean / std::sqrt(an - 2.0);
    return out;
}

/// Central finite difference of f at v, coordinate by coordinate.
template <class F>
Eigen::VectorXd finite_difference(F&& f, const Eigen::VectorXd& v, double step = 1e-5) {
    Eigen::VectorXd g(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        Eigen::VectorXd up = v, down = v;
        up(k) += step;
        down(k) -= step;
        g(k) = (f(up) - f(down)) / (2.0 * step);
    }
    return g;
}

/// Exhaustive best single split under squared error: every column, every
/// midpoint between consecutive distinct values. Ties keep the first found.
struct Stump {
    Eigen::Index feature = -1;
    double threshold = 0.0;
    double left_mean = 0.0;
    double right_mean = 0.0;
    double sse = 0.0;
};

inline Stump brute_force_stump(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    Stump best;
    best.sse = (y.array() - y.mean()).square().sum();
    best.left_mean = best.right_mean = y.mean();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> v(x.col(j).data(), x.col(j).data() + x.rows());
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double t = 0.5 * (v[k] + v[k + 1]);
            double sl = 0, sr = 0;
            int nl = 0, nr = 0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                if (x(i, j) <= t) sl += y(i), ++nl;
                else sr += y(i), ++nr;
            }
            const double ml = sl / nl, mr = sr / nr;
            double sse = 0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double d = y(i) - (x(i, j) <= t ? ml : mr);
                sse += d * d;
            }
            if (sse < best.sse - 1e-12) best = {j, t, ml, mr, sse};
        }
    }
    return best;
}

/// Exact interventional Shapley values of a linear model against a
/// background sample: beta_j (x_j - mean of background column j).
inline Eigen::VectorXd linear_shapley(const Eigen::VectorXd& beta, const Eigen::RowVectorXd& point,
                                      const Eigen::MatrixXd& background) {
    return beta.cwiseProduct((point - background.colwise().mean()).transpose());
}

/// Moran's I straight from its definition.
inline double morans_i_reference(const Eigen::VectorXd& v, const Eigen::MatrixXd& w) {
    const Eigen::VectorXd z = v.array() - v.mean();
    double cross = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        for (Eigen::Index j = 0; j < v.size(); ++j) cross += w(i, j) * z(i) * z(j);
    return static_cast<double>(v.size()) / w.sum() * cross / z.squaredNorm();
}

/// Minimal XML well-formedness check: balanced, properly nested tags,
/// quoted attributes, and no raw '&' outside an entity.
inline bool well_formed_xml(const std::string& text, std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool root_seen = false;
    while (i < text.size()) {
        if (text[i] == '&') {
            const auto semi = text.find(';', i);
            if (semi == std::string::npos || semi - i > 8) return fail("bare ampersand at " + std::to_string(i));
            i = semi + 1;
            continue;
        }
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const auto close = text.find('>', i);
        if (close == std::string::npos) return fail("unterminated tag");
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return fail("empty tag");
        if (tag.front() == '?' || tag.front() == '!') continue;
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return fail("unbalanced quotes in <" + tag + ">");
        if (tag.front() == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
        if (stack.empty()) {
            if (root_seen) return fail("second root element");
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
    if (!root_seen) return fail("no root element");
    return true;
}

}  // namespace povreg::testing
