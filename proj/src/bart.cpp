#include "povreg/bart.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "povreg/error.hpp"
#include "povreg/rng.hpp"

namespace povreg {

void BartConfig::validate() const {
    if (n_trees < 1) throw ValidationError("BART needs at least one tree");
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0)) throw ValidationError("BART tree prior needs 0 < alpha < 1, beta > 0");
    if (!(k > 0.0) || !(sigma_df > 0.0) || !(sigma_quantile > 0.0 && sigma_quantile < 1.0))
        throw ValidationError("BART leaf and sigma priors must be positive with quantile in (0,1)");
    if (iterations <= burn_in || burn_in < 0) throw ValidationError("BART needs iterations > burn-in >= 0");
}

namespace {

struct Node {
    int var = -1;
    double cut = 0.0;
    int left = -1;
    int right = -1;
    int parent = -1;
    int depth = 0;
    double mu = 0.0;
    bool alive = true;

    bool leaf() const { return var < 0; }
};

struct Tree {
    std::vector<Node> nodes{Node{}};
    std::vector<int> leaf_of;  // training row -> leaf node

    int add(const Node& nd) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (!nodes[k].alive) {
                nodes[k] = nd;
                return static_cast<int>(k);
            }
        nodes.push_back(nd);
        return static_cast<int>(nodes.size() - 1);
    }

    bool is_nog(int k) const {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        return nd.alive && !nd.leaf() && nodes[static_cast<std::size_t>(nd.left)].leaf() &&
               nodes[static_cast<std::size_t>(nd.right)].leaf();
    }

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
        int k = 0;
        while (!nodes[static_cast<std::size_t>(k)].leaf()) {
            const auto& nd = nodes[static_cast<std::size_t>(k)];
            k = row(nd.var) <= nd.cut ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(k)].mu;
    }
};

class Sampler {
public:
    Sampler(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const BartConfig& cfg, std::uint64_t seed)
        : x_(x), cfg_(cfg), eng_(seed), n_(static_cast<int>(y.size())), p_(static_cast<int>(x.cols())) {
        ymin_ = y.minCoeff();
        range_ = y.maxCoeff() - ymin_;
        ys_ = range_ > 0.0 ? Eigen::VectorXd((y.array() - ymin_) / range_ - 0.5) : Eigen::VectorXd::Zero(n_);

        cuts_.resize(static_cast<std::size_t>(p_));
        for (int v = 0; v < p_; ++v) {
            std::vector<double> vals(x.col(v).data(), x.col(v).data() + n_);
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t i = 1; i < vals.size(); ++i) cuts_[static_cast<std::size_t>(v)].push_back(0.5 * (vals[i - 1] + vals[i]));
        }

        sigma_mu_ = 0.5 / (cfg.k * std::sqrt(static_cast<double>(cfg.n_trees)));
        const double sigma_hat = std::max(initial_sigma(), 1e-8);
        const boost::math::chi_squared chi(cfg.sigma_df);
        lambda_ = sigma_hat * sigma_hat * boost::math::quantile(chi, 1.0 - cfg.sigma_quantile) / cfg.sigma_df;
        sigma2_ = sigma_hat * sigma_hat;

        trees_.resize(static_cast<std::size_t>(cfg.n_trees));
        const double init_mu = ys_.mean() / cfg.n_trees;
        for (auto& t : trees_) {
            t.nodes[0].mu = init_mu;
            t.leaf_of.assign(static_cast<std::size_t>(n_), 0);
        }
        fit_ = Eigen::VectorXd::Constant(n_, init_mu * cfg.n_trees);
    }

    void sweep() {
        for (auto& t : trees_) {
            // Partial residual without this tree.
            for (int i = 0; i < n_; ++i) fit_(i) -= t.nodes[static_cast<std::size_t>(t.leaf_of[static_cast<std::size_t>(i)])].mu;
            resid_ = ys_ - fit_;
            update_tree(t);
            draw_leaves(t);
            for (int i = 0; i < n_; ++i) fit_(i) += t.nodes[static_cast<std::size_t>(t.leaf_of[static_cast<std::size_t>(i)])].mu;
        }
        const double sse = (ys_ - fit_).squaredNorm();
        sigma2_ = draw_inv_gamma(eng_, 0.5 * (cfg_.sigma_df + n_), 0.5 * (cfg_.sigma_df * lambda_ + sse));
        if (!std::isfinite(sigma2_) || sigma2_ <= 0.0) throw NumericalError("BART: non-finite residual variance");
    }

    double unscale(double v) const { return (v + 0.5) * range_ + ymin_; }
    double sigma() const { return std::sqrt(sigma2_) * range_; }
    const Eigen::VectorXd& fit() const { return fit_; }

    double predict_scaled(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
        double s = 0.0;
        for (const auto& t : trees_) s += t.predict(row);
        return s;
    }

    Eigen::VectorXd split_shares() const {
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(p_);
        for (const auto& t : trees_)
            for (const auto& nd : t.nodes)
                if (nd.alive && !nd.leaf()) counts(nd.var) += 1.0;
        const double total = counts.sum();
        return total > 0.0 ? Eigen::VectorXd(counts / total) : counts;
    }

    Eigen::Vector3d accepted = Eigen::Vector3d::Zero();
    Eigen::Vector3d proposed = Eigen::Vector3d::Zero();

private:
    double initial_sigma() const {
        if (n_ > p_ + 1) {
            Eigen::MatrixXd a(n_, p_ + 1);
            a.col(0).setOnes();
            a.rightCols(p_) = x_;
            const Eigen::VectorXd b = a.colPivHouseholderQr().solve(ys_);
            const double rss = (ys_ - a * b).squaredNorm();
            if (std::isfinite(rss)) return std::sqrt(rss / (n_ - p_ - 1));
        }
        const double m = ys_.mean();
        return std::sqrt((ys_.array() - m).square().sum() / std::max(1, n_ - 1));
    }

    double split_prob(int depth) const { return cfg_.alpha * std::pow(1.0 + depth, -cfg_.beta); }

    /// Log marginal likelihood of one leaf holding `count` residuals summing to `sum`.
    double leaf_loglik(int count, double sum) const {
        const double sm2 = sigma_mu_ * sigma_mu_;
        const double denom = sigma2_ + count * sm2;
        const double v = -0.5 * std::log(denom / sigma2_) + sm2 * sum * sum / (2.0 * sigma2_ * denom);
        if (!std::isfinite(v)) throw NumericalError("BART: non-finite leaf marginal likelihood");
        return v;
    }

    std::vector<int> rows_in(const Tree& t, int node) const {
        std::vector<int> out;
        // A row belongs to `node` when its leaf lies in node's subtree.
        for (int i = 0; i < n_; ++i) {
            int k = t.leaf_of[static_cast<std::size_t>(i)];
            while (k != -1 && k != node) k = t.nodes[static_cast<std::size_t>(k)].parent;
            if (k == node) out.push_back(i);
        }
        return out;
    }

    /// Valid cut indices for variable v on the given rows (both sides non-empty).
    std::pair<int, int> valid_cut_span(int v, const std::vector<int>& rows) const {
        double lo = INFINITY, hi = -INFINITY;
        for (int i : rows) {
            lo = std::min(lo, x_(i, v));
            hi = std::max(hi, x_(i, v));
        }
        const auto& c = cuts_[static_cast<std::size_t>(v)];
        const int first = static_cast<int>(std::upper_bound(c.begin(), c.end(), lo) - c.begin());
        const int last = static_cast<int>(std::lower_bound(c.begin(), c.end(), hi) - c.begin());
        return {first, last};  // valid indices in [first, last)
    }

    std::vector<int> splittable_vars(const std::vector<int>& rows) const {
        std::vector<int> out;
        for (int v = 0; v < p_; ++v) {
            const auto [a, b] = valid_cut_span(v, rows);
            if (b > a) out.push_back(v);
        }
        return out;
    }

    struct Moves {
        std::vector<int> growable;
        std::vector<int> nogs;
        double p_grow = 0.0, p_prune = 0.0, p_change = 0.0;
    };

    Moves moves(const Tree& t) const {
        Moves m;
        for (std::size_t k = 0; k < t.nodes.size(); ++k) {
            const auto& nd = t.nodes[k];
            if (!nd.alive) continue;
            if (nd.leaf()) {
                if (!splittable_vars(rows_in(t, static_cast<int>(k))).empty()) m.growable.push_back(static_cast<int>(k));
            } else if (t.is_nog(static_cast<int>(k))) {
                m.nogs.push_back(static_cast<int>(k));
            }
        }
        const double g = m.growable.empty() ? 0.0 : 0.25;
        const double pr = m.nogs.empty() ? 0.0 : 0.25;
        const double ch = m.nogs.empty() ? 0.0 : 0.5;
        const double total = g + pr + ch;
        if (total > 0.0) {
            m.p_grow = g / total;
            m.p_prune = pr / total;
            m.p_change = ch / total;
        }
        return m;
    }

    int side_sums(const std::vector<int>& rows, int v, double cut, double& left_sum, double& right_sum) const {
        left_sum = right_sum = 0.0;
        int nl = 0;
        for (int i : rows) {
            if (x_(i, v) <= cut) {
                left_sum += resid_(i);
                ++nl;
            } else {
                right_sum += resid_(i);
            }
        }
        return nl;
    }

    void update_tree(Tree& t) {
        const Moves m = moves(t);
        if (m.p_grow + m.p_prune + m.p_change <= 0.0) return;
        const double u = draw_uniform(eng_);
        if (u < m.p_grow) grow(t, m);
        else if (u < m.p_grow + m.p_prune) prune(t, m);
        else change(t, m);
    }

    int pick(std::size_t count) {
        return std::uniform_int_distribution<int>(0, static_cast<int>(count) - 1)(eng_);
    }

    void grow(Tree& t, const Moves& m) {
        proposed(0) += 1;
        const int leaf = m.growable[static_cast<std::size_t>(pick(m.growable.size()))];
        const auto rows = rows_in(t, leaf);
        const auto vars = splittable_vars(rows);
        const int v = vars[static_cast<std::size_t>(pick(vars.size()))];
        const auto [first, last] = valid_cut_span(v, rows);
        const double cut = cuts_[static_cast<std::size_t>(v)][static_cast<std::size_t>(first + pick(static_cast<std::size_t>(last - first)))];

        double sl, sr;
        const int nl = side_sums(rows, v, cut, sl, sr);
        const int nr = static_cast<int>(rows.size()) - nl;
        const double lik = leaf_loglik(nl, sl) + leaf_loglik(nr, sr) - leaf_loglik(static_cast<int>(rows.size()), sl + sr);

        const int d = t.nodes[static_cast<std::size_t>(leaf)].depth;
        const double pd = split_prob(d);
        const double pd1 = split_prob(d + 1);
        const double prior = std::log(pd) + 2.0 * std::log1p(-pd1) - std::log1p(-pd);

        // Reverse move statistics on the proposed tree.
        Tree proposal = t;
        apply_split(proposal, leaf, v, cut, rows);
        const Moves mp = moves(proposal);
        const double log_q = std::log(mp.p_prune) - std::log(static_cast<double>(mp.nogs.size())) -
                             (std::log(m.p_grow) - std::log(static_cast<double>(m.growable.size())));
        if (std::log(draw_uniform(eng_)) < lik + prior + log_q) {
            t = std::move(proposal);
            accepted(0) += 1;
        }
    }

    void prune(Tree& t, const Moves& m) {
        proposed(1) += 1;
        const int node = m.nogs[static_cast<std::size_t>(pick(m.nogs.size()))];
        const auto rows = rows_in(t, node);
        const auto& nd = t.nodes[static_cast<std::size_t>(node)];
        double sl, sr;
        const int nl = side_sums(rows, nd.var, nd.cut, sl, sr);
        const int nr = static_cast<int>(rows.size()) - nl;
        const double lik = leaf_loglik(static_cast<int>(rows.size()), sl + sr) - leaf_loglik(nl, sl) - leaf_loglik(nr, sr);

        const double pd = split_prob(nd.depth);
        const double pd1 = split_prob(nd.depth + 1);
        const double prior = std::log1p(-pd) - std::log(pd) - 2.0 * std::log1p(-pd1);

        Tree proposal = t;
        collapse(proposal, node, rows);
        const Moves mp = moves(proposal);
        const double log_q = std::log(mp.p_grow) - std::log(static_cast<double>(mp.growable.size())) -
                             (std::log(m.p_prune) - std::log(static_cast<double>(m.nogs.size())));
        if (std::log(draw_uniform(eng_)) < lik + prior + log_q) {
            t = std::move(proposal);
            accepted(1) += 1;
        }
    }

    void change(Tree& t, const Moves& m) {
        proposed(2) += 1;
        const int node = m.nogs[static_cast<std::size_t>(pick(m.nogs.size()))];
        const auto rows = rows_in(t, node);
        const auto vars = splittable_vars(rows);
        if (vars.empty()) return;
        const int v = vars[static_cast<std::size_t>(pick(vars.size()))];
        const auto [first, last] = valid_cut_span(v, rows);
        const double cut = cuts_[static_cast<std::size_t>(v)][static_cast<std::size_t>(first + pick(static_cast<std::size_t>(last - first)))];
        const auto& nd = t.nodes[static_cast<std::size_t>(node)];

        double ol, orr, nl_s, nr_s;
        const int onl = side_sums(rows, nd.var, nd.cut, ol, orr);
        const int nnl = side_sums(rows, v, cut, nl_s, nr_s);
        const int total = static_cast<int>(rows.size());
        const double lik = leaf_loglik(nnl, nl_s) + leaf_loglik(total - nnl, nr_s) - leaf_loglik(onl, ol) -
                           leaf_loglik(total - onl, orr);
        if (std::log(draw_uniform(eng_)) < lik) {
            auto& target = t.nodes[static_cast<std::size_t>(node)];
            target.var = v;
            target.cut = cut;
            for (int i : rows)
                t.leaf_of[static_cast<std::size_t>(i)] = x_(i, v) <= cut ? target.left : target.right;
            accepted(2) += 1;
        }
    }

    void apply_split(Tree& t, int leaf, int v, double cut, const std::vector<int>& rows) {
        Node child;
        child.parent = leaf;
        child.depth = t.nodes[static_cast<std::size_t>(leaf)].depth + 1;
        const int l = t.add(child);
        const int r = t.add(child);
        auto& nd = t.nodes[static_cast<std::size_t>(leaf)];
        nd.var = v;
        nd.cut = cut;
        nd.left = l;
        nd.right = r;
        for (int i : rows) t.leaf_of[static_cast<std::size_t>(i)] = x_(i, v) <= cut ? l : r;
    }

    void collapse(Tree& t, int node, const std::vector<int>& rows) {
        auto& nd = t.nodes[static_cast<std::size_t>(node)];
        t.nodes[static_cast<std::size_t>(nd.left)].alive = false;
        t.nodes[static_cast<std::size_t>(nd.right)].alive = false;
        nd.var = -1;
        nd.left = nd.right = -1;
        for (int i : rows) t.leaf_of[static_cast<std::size_t>(i)] = node;
    }

    void draw_leaves(Tree& t) {
        std::vector<double> sums(t.nodes.size(), 0.0);
        std::vector<int> counts(t.nodes.size(), 0);
        for (int i = 0; i < n_; ++i) {
            const auto k = static_cast<std::size_t>(t.leaf_of[static_cast<std::size_t>(i)]);
            sums[k] += resid_(i);
            ++counts[k];
        }
        const double sm2 = sigma_mu_ * sigma_mu_;
        for (std::size_t k = 0; k < t.nodes.size(); ++k) {
            auto& nd = t.nodes[k];
            if (!nd.alive || !nd.leaf()) continue;
            const double denom = sigma2_ + counts[k] * sm2;
            const double mean = sm2 * sums[k] / denom;
            const double sd = std::sqrt(sigma2_ * sm2 / denom);
            nd.mu = mean + sd * draw_normal(eng_);
        }
    }

    const Eigen::MatrixXd& x_;
    BartConfig cfg_;
    Engine eng_;
    int n_, p_;
    double ymin_ = 0.0, range_ = 1.0;
    Eigen::VectorXd ys_, fit_, resid_;
    std::vector<std::vector<double>> cuts_;
    double sigma_mu_ = 0.0, lambda_ = 0.0, sigma2_ = 1.0;
    std::vector<Tree> trees_;
};

}  // namespace

BartFit fit_bart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const BartConfig& config, std::uint64_t seed,
                 const Eigen::MatrixXd& x_new) {
    config.validate();
    if (y.size() < 2 || x.rows() != y.size()) throw ValidationError("BART needs matching X and y with n >= 2");
    if (x_new.size() > 0 && x_new.cols() != x.cols()) throw ValidationError("BART: x_new column count mismatch");

    Sampler s(y, x, config, seed);
    const int kept = config.iterations - config.burn_in;
    BartFit fit;
    fit.train_mean = Eigen::VectorXd::Zero(y.size());
    fit.test_draws.resize(kept, x_new.size() > 0 ? x_new.rows() : 0);
    fit.sigma_draws.resize(kept);
    fit.importance = Eigen::VectorXd::Zero(x.cols());
    for (int it = 0; it < config.iterations; ++it) {
        s.sweep();
        if (it < config.burn_in) continue;
        const int r = it - config.burn_in;
        for (Eigen::Index i = 0; i < y.size(); ++i) fit.train_mean(i) += s.unscale(s.fit()(i));
        for (Eigen::Index j = 0; j < fit.test_draws.cols(); ++j) fit.test_draws(r, j) = s.unscale(s.predict_scaled(x_new.row(j)));
        fit.sigma_draws(r) = s.sigma();
        fit.importance += s.split_shares();
    }
    fit.train_mean /= kept;
    fit.importance /= kept;
    fit.acceptance = s.accepted.cwiseQuotient(s.proposed.cwiseMax(1.0));
    return fit;
}

BartFit fit_bart(const ProvincialDataset& data, const BartConfig& config, std::uint64_t seed, const Eigen::MatrixXd& x_new) {
    return fit_bart(data.outcome, data.predictors, config, seed, x_new);
}

}  // namespace povreg
