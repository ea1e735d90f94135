#include "povreg/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

PermutationImportance permutation_importance(const Predictor& predict, const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y, int n_repeats, std::uint64_t seed,
                                             const std::vector<std::string>& names) {
    if (n_repeats < 1) throw ValidationError("permutation importance needs at least one repeat");
    if (x.rows() != y.size()) throw ValidationError("permutation importance: X and y row counts differ");
    const auto p = x.cols();
    const double base = (predict(x) - y).squaredNorm() / static_cast<double>(y.size());

    const auto per_var = parallel_map<Eigen::VectorXd>(static_cast<std::size_t>(p), [&](std::size_t j) {
        Eigen::VectorXd inc(n_repeats);
        const auto col = static_cast<Eigen::Index>(j);
        for (int r = 0; r < n_repeats; ++r) {
            Engine eng(mix_seed(mix_seed(seed, j), static_cast<std::uint64_t>(r)));
            Eigen::MatrixXd xp = x;
            std::vector<double> v(x.col(col).data(), x.col(col).data() + x.rows());
            std::shuffle(v.begin(), v.end(), eng);
            xp.col(col) = Eigen::Map<const Eigen::VectorXd>(v.data(), x.rows());
            inc(r) = (predict(xp) - y).squaredNorm() / static_cast<double>(y.size()) - base;
        }
        return inc;
    });

    PermutationImportance out;
    out.mean_increase.resize(p);
    out.sd_increase.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& inc = per_var[static_cast<std::size_t>(j)];
        out.mean_increase(j) = inc.mean();
        out.sd_increase(j) =
            n_repeats > 1 ? std::sqrt((inc.array() - inc.mean()).square().sum() / (n_repeats - 1)) : 0.0;
        out.names.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                        : "x" + std::to_string(j + 1));
    }
    return out;
}

ShapleyEstimate shapley_sampling(const Predictor& predict, const Eigen::MatrixXd& background,
                                 const Eigen::RowVectorXd& point, int n_samples, std::uint64_t seed) {
    if (background.rows() < 1) throw ValidationError("Shapley sampling needs a non-empty background set");
    if (background.cols() != point.size()) throw ValidationError("Shapley sampling: point and background widths differ");
    if (n_samples < 2) throw ValidationError("Shapley sampling needs at least two samples");
    const auto p = background.cols();

    const auto samples = parallel_map<Eigen::VectorXd>(static_cast<std::size_t>(n_samples), [&](std::size_t s) {
        Engine eng(mix_seed(seed, s));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), eng);
        // Each coalition is valued by averaging over every background row, so
        // a sample contributes f(point) - baseline in total. Block k of the
        // stacked matrix has the first k features of `order` set to the point.
        const auto n = background.rows();
        Eigen::MatrixXd stacked(n * (p + 1), p);
        Eigen::MatrixXd mixed = background;
        stacked.topRows(n) = mixed;
        for (Eigen::Index k = 0; k < p; ++k) {
            const auto j = order[static_cast<std::size_t>(k)];
            mixed.col(j).setConstant(point(j));
            stacked.middleRows(n * (k + 1), n) = mixed;
        }
        const Eigen::VectorXd f = predict(stacked);
        Eigen::VectorXd contrib(p);
        for (Eigen::Index k = 0; k < p; ++k)
            contrib(order[static_cast<std::size_t>(k)]) =
                f.segment(n * (k + 1), n).mean() - f.segment(n * k, n).mean();
        return contrib;
    });

    Eigen::MatrixXd m(n_samples, p);
    for (int s = 0; s < n_samples; ++s) m.row(s) = samples[static_cast<std::size_t>(s)].transpose();
    ShapleyEstimate out;
    out.values = m.colwise().mean().transpose();
    const Eigen::MatrixXd centered = m.rowwise() - out.values.transpose();
    out.std_errors = (centered.colwise().squaredNorm().transpose() / (n_samples - 1.0)).cwiseSqrt() / std::sqrt(static_cast<double>(n_samples));
    out.baseline = predict(background).mean();
    out.prediction = predict(Eigen::MatrixXd(point))(0);
    return out;
}

ShapleyTable shapley_table(const Predictor& predict, const Eigen::MatrixXd& background, const Eigen::MatrixXd& points,
                           int n_samples, std::uint64_t seed) {
    ShapleyTable out;
    out.values.resize(points.rows(), points.cols());
    out.baseline = predict(background).mean();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out.values.row(i) =
            shapley_sampling(predict, background, points.row(i), n_samples, mix_seed(seed, static_cast<std::uint64_t>(i)))
                .values.transpose();
    return out;
}

}  // namespace povreg
