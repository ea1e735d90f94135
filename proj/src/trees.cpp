#include "povreg/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        k = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return k;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return nodes[static_cast<std::size_t>(leaf_of(row))].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
    return out;
}

int RegressionTree::leaf_count() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        best = std::max(best, d[k]);
        if (nodes[k].feature >= 0) {
            d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
            d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
        }
    }
    return best;
}

std::vector<double> midpoint_thresholds(const Eigen::MatrixXd& x, const std::vector<int>& rows, Eigen::Index col) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (int r : rows) v.push_back(x(r, col));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<double> out;
    for (std::size_t i = 1; i < v.size(); ++i) out.push_back(0.5 * (v[i - 1] + v[i]));
    return out;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

bool better(const Split& cand, const Split& best) {
    if (cand.gain > best.gain) return true;
    return cand.gain == best.gain && best.feature >= 0 && cand.feature < best.feature;
}

/// Sorted sweep over one feature. `score(sum_left, weight_left, sum_right,
/// weight_right)` returns the gain of a cut; `allowed(weight_left,
/// weight_right)` filters cuts. Returns the first best cut (lowest threshold).
template <class Score, class Allowed>
Split sweep_feature(const Eigen::MatrixXd& x, const std::vector<int>& rows, const Eigen::VectorXd& target,
                    Eigen::Index feature, Score score, Allowed allowed) {
    std::vector<int> order = rows;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, feature) < x(b, feature); });
    double total = 0.0;
    for (int r : order) total += target(r);
    Split best;
    best.gain = -INFINITY;
    double left = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left += target(order[i]);
        const double lo = x(order[i], feature);
        const double hi = x(order[i + 1], feature);
        if (!(hi > lo)) continue;
        const double wl = static_cast<double>(i + 1);
        const double wr = static_cast<double>(order.size()) - wl;
        if (!allowed(wl, wr)) continue;
        const double g = score(left, wl, total - left, wr);
        if (g > best.gain) {
            best.gain = g;
            best.feature = static_cast<int>(feature);
            best.threshold = 0.5 * (lo + hi);
        }
    }
    return best;
}

void partition(const Eigen::MatrixXd& x, const std::vector<int>& rows, const Split& s, std::vector<int>& left,
               std::vector<int>& right) {
    for (int r : rows) (x(r, s.feature) <= s.threshold ? left : right).push_back(r);
}

}  // namespace

RegressionTree grow_cart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<int>& rows, int mtry,
                         int min_node_size, std::uint64_t seed) {
    if (rows.empty()) throw ValidationError("cannot grow a tree on zero rows");
    const auto p = static_cast<int>(x.cols());
    mtry = std::clamp(mtry, 1, p);
    Engine eng(seed);
    RegressionTree tree;
    std::vector<int> features(static_cast<std::size_t>(p));

    struct Pending {
        int node;
        std::vector<int> rows;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, rows});
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        double sum = 0.0;
        for (int r : cur.rows) sum += y(r);
        const double n = static_cast<double>(cur.rows.size());
        const double mean = sum / n;
        tree.nodes[static_cast<std::size_t>(cur.node)].value = mean;

        double sse = 0.0;
        for (int r : cur.rows) sse += (y(r) - mean) * (y(r) - mean);
        if (static_cast<int>(cur.rows.size()) <= min_node_size || sse <= 1e-12 * (1.0 + mean * mean) * n) continue;

        // Partial Fisher-Yates: the first mtry entries become the candidate set.
        std::iota(features.begin(), features.end(), 0);
        for (int j = 0; j < mtry; ++j) {
            std::uniform_int_distribution<int> pick(j, p - 1);
            std::swap(features[static_cast<std::size_t>(j)], features[static_cast<std::size_t>(pick(eng))]);
        }
        Split best;
        best.gain = -INFINITY;
        for (int j = 0; j < mtry; ++j) {
            const int f = features[static_cast<std::size_t>(j)];
            auto cand = sweep_feature(
                x, cur.rows, y, f,
                [&](double sl, double wl, double sr, double wr) { return sl * sl / wl + sr * sr / wr - sum * sum / n; },
                [](double, double) { return true; });
            if (cand.feature >= 0 && (best.feature < 0 || better(cand, best))) best = cand;
        }
        if (best.feature < 0 || !(best.gain > 1e-12 * sse)) continue;

        std::vector<int> left, right;
        partition(x, cur.rows, best, left, right);
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(cur.node)];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.left = li;
        nd.right = li + 1;
        stack.push_back({li + 1, std::move(right)});
        stack.push_back({li, std::move(left)});
    }
    return tree;
}

int ForestConfig::resolved_mtry(Eigen::Index p) const {
    return mtry > 0 ? mtry : static_cast<int>((p + 2) / 3);
}

void ForestConfig::validate(Eigen::Index p) const {
    if (n_trees < 1) throw ValidationError("forest needs at least one tree");
    const int m = resolved_mtry(p);
    if (m < 1 || m > p) throw ValidationError("mtry must lie in [1, p]");
    if (min_node_size < 1) throw ValidationError("minimum node size must be >= 1");
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (const auto& t : trees) out += t.predict(x);
    return out / static_cast<double>(trees.size());
}

RandomForest fit_random_forest(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const ForestConfig& config,
                               std::uint64_t seed) {
    config.validate(x.cols());
    const auto n = static_cast<int>(y.size());
    if (n < 2) throw ValidationError("forest needs at least 2 rows");
    const int mtry = config.resolved_mtry(x.cols());

    struct Grown {
        RegressionTree tree;
        std::vector<int> in_bag;
    };
    auto grow = [&](std::size_t t) {
        Engine eng(mix_seed(seed, t));
        std::vector<int> rows(static_cast<std::size_t>(n));
        std::vector<int> counts(static_cast<std::size_t>(n), 0);
        if (config.bootstrap) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            for (auto& r : rows) {
                r = pick(eng);
                ++counts[static_cast<std::size_t>(r)];
            }
        } else {
            std::iota(rows.begin(), rows.end(), 0);
            std::fill(counts.begin(), counts.end(), 1);
        }
        return Grown{grow_cart(y, x, rows, mtry, config.min_node_size, eng()), counts};
    };
    auto grown = parallel_map<Grown>(static_cast<std::size_t>(config.n_trees), grow);

    RandomForest forest;
    Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi oob_n = Eigen::VectorXi::Zero(n);
    for (auto& g : grown) {
        for (int i = 0; i < n; ++i)
            if (g.in_bag[static_cast<std::size_t>(i)] == 0) {
                oob_sum(i) += g.tree.predict_row(x.row(i));
                ++oob_n(i);
            }
        forest.trees.push_back(std::move(g.tree));
    }
    double se = 0.0;
    int counted = 0;
    for (int i = 0; i < n; ++i)
        if (oob_n(i) > 0) {
            const double d = y(i) - oob_sum(i) / oob_n(i);
            se += d * d;
            ++counted;
        }
    forest.oob_mse = counted ? se / counted : std::nan("");
    return forest;
}

RandomForest fit_random_forest(const ProvincialDataset& data, const ForestConfig& config, std::uint64_t seed) {
    return fit_random_forest(data.outcome, data.predictors, config, seed);
}

void GbdtConfig::validate() const {
    if (n_rounds < 0) throw ValidationError("boosting rounds must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning rate must lie in (0,1]");
    if (max_depth < 1) throw ValidationError("tree depth must be >= 1");
    if (lambda < 0.0 || min_child_weight < 0.0) throw ValidationError("leaf penalty and child weight must be >= 0");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ValidationError("subsample must lie in (0,1]");
}

Eigen::VectorXd GbdtModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), base_score);
    for (const auto& t : trees) out += t.predict(x);
    return out;
}

namespace {

/// One boosting tree on residuals r = y - f (negative gradients, unit hessians).
RegressionTree grow_boosting_tree(const Eigen::VectorXd& resid, const Eigen::MatrixXd& x, const std::vector<int>& rows,
                                  const GbdtConfig& cfg) {
    RegressionTree tree;
    struct Pending {
        int node;
        int depth;
        std::vector<int> rows;
    };
    const double lambda = cfg.lambda;
    auto term = [lambda](double g, double h) { return h + lambda > 0.0 ? g * g / (h + lambda) : 0.0; };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, rows});
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        double g = 0.0;
        for (int r : cur.rows) g += resid(r);
        const double h = static_cast<double>(cur.rows.size());
        tree.nodes[static_cast<std::size_t>(cur.node)].value = h + lambda > 0.0 ? cfg.learning_rate * g / (h + lambda) : 0.0;
        if (cur.depth >= cfg.max_depth || cur.rows.size() < 2) continue;

        const double parent = term(g, h);
        Split best;
        best.gain = -INFINITY;
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
            auto cand = sweep_feature(
                x, cur.rows, resid, f,
                [&](double gl, double hl, double gr, double hr) { return 0.5 * (term(gl, hl) + term(gr, hr) - parent); },
                [&](double hl, double hr) { return hl >= cfg.min_child_weight && hr >= cfg.min_child_weight; });
            if (cand.feature >= 0 && (best.feature < 0 || better(cand, best))) best = cand;
        }
        if (best.feature < 0 || !(best.gain > 1e-12 * (1.0 + parent))) continue;

        std::vector<int> left, right;
        partition(x, cur.rows, best, left, right);
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(cur.node)];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.left = li;
        nd.right = li + 1;
        stack.push_back({li + 1, cur.depth + 1, std::move(right)});
        stack.push_back({li, cur.depth + 1, std::move(left)});
    }
    return tree;
}

}  // namespace

GbdtModel fit_gbdt(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const GbdtConfig& config, std::uint64_t seed) {
    config.validate();
    const auto n = static_cast<int>(y.size());
    if (n < 2) throw ValidationError("boosting needs at least 2 rows");
    GbdtModel model;
    model.base_score = y.mean();
    model.learning_rate = config.learning_rate;
    Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, model.base_score);
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int round = 0; round < config.n_rounds; ++round) {
        std::vector<int> rows = all;
        if (config.subsample < 1.0) {
            Engine eng(mix_seed(seed, static_cast<std::uint64_t>(round)));
            std::shuffle(rows.begin(), rows.end(), eng);
            rows.resize(static_cast<std::size_t>(std::max(1, static_cast<int>(std::lround(config.subsample * n)))));
            std::sort(rows.begin(), rows.end());
        }
        const Eigen::VectorXd resid = y - fitted;
        RegressionTree tree = grow_boosting_tree(resid, x, rows, config);
        fitted += tree.predict(x);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

GbdtModel fit_gbdt(const ProvincialDataset& data, const GbdtConfig& config, std::uint64_t seed) {
    return fit_gbdt(data.outcome, data.predictors, config, seed);
}

}  // namespace povreg
