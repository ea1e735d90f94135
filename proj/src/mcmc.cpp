#include "povreg/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "povreg/error.hpp"
#include "povreg/rng.hpp"
#include "povreg/stats.hpp"
#include "povreg/table.hpp"

namespace povreg {

void RunConfig::validate() const {
    if (iterations < 1 || burn_in < 0 || burn_in >= iterations)
        throw ValidationError("run config: need 0 <= burn_in < iterations");
    if (thin < 1) throw ValidationError("run config: thin must be >= 1");
    if (chains < 1) throw ValidationError("run config: chains must be >= 1");
    if (retained_per_chain() < 1) throw ValidationError("run config: no draws retained");
}

Eigen::Index PosteriorDraws::index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("posterior draws have no parameter '" + name + "'");
    return static_cast<Eigen::Index>(it - names.begin());
}

void PosteriorDraws::check() const {
    if (draws.rows() < 1) throw NumericalError("posterior draws are empty");
    if (chains < 1 || draws.rows() % chains != 0)
        throw NumericalError("posterior draws: row count not divisible by chain count");
    if (static_cast<Eigen::Index>(names.size()) != draws.cols())
        throw NumericalError("posterior draws: name count does not match columns");
    if (!draws.allFinite()) throw NumericalError("posterior draws contain non-finite values");
}

PosteriorDraws PosteriorDraws::concatenate(const std::vector<PosteriorDraws>& parts) {
    if (parts.empty()) throw ValidationError("concatenate: no draw sets");
    PosteriorDraws out = parts.front();
    Eigen::Index rows = 0;
    int chains = 0;
    for (const auto& p : parts) {
        if (p.names != out.names) throw ValidationError("concatenate: parameter names differ");
        rows += p.draws.rows();
        chains += p.chains;
    }
    out.draws.resize(rows, out.draws.cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.draws.middleRows(at, p.draws.rows()) = p.draws;
        at += p.draws.rows();
    }
    out.chains = chains;
    return out;
}

Eigen::VectorXd InclusionDraws::pip() const { return indicators.colwise().mean().transpose(); }

ParameterSummary summarize_parameter(const std::string& name, const Eigen::VectorXd& values) {
    ParameterSummary s;
    s.name = name;
    s.mean = values.mean();
    s.sd = stats::sample_sd(values);
    std::vector<double> v(values.data(), values.data() + values.size());
    s.q025 = stats::quantile(v, 0.025);
    s.q975 = stats::quantile(v, 0.975);
    s.prob_negative = static_cast<double>((values.array() < 0.0).count()) /
                      static_cast<double>(values.size());
    return s;
}

std::vector<ParameterSummary> summarize_posterior(const PosteriorDraws& draws) {
    if (draws.size() < 100)
        throw ValidationError("summarize_posterior needs at least 100 draws, got " +
                              std::to_string(draws.size()));
    std::vector<ParameterSummary> out;
    for (Eigen::Index k = 0; k < draws.draws.cols(); ++k)
        out.push_back(summarize_parameter(draws.names[static_cast<std::size_t>(k)], draws.draws.col(k)));
    return out;
}

namespace {

Eigen::MatrixXd split_chains(const Eigen::MatrixXd& chains) {
    const auto n = chains.rows();
    const auto half = n / 2;
    Eigen::MatrixXd out(half, 2 * chains.cols());
    for (Eigen::Index c = 0; c < chains.cols(); ++c) {
        out.col(2 * c) = chains.col(c).head(half);
        out.col(2 * c + 1) = chains.col(c).tail(half);
    }
    return out;
}

Eigen::MatrixXd rank_normalize(const Eigen::MatrixXd& m) {
    const auto total = m.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    const double* data = m.data();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return data[a] < data[b]; });
    Eigen::MatrixXd out(m.rows(), m.cols());
    double* z = out.data();
    const double s = static_cast<double>(total);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && data[order[j + 1]] == data[order[i]]) ++j;
        const double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        const double prob = (rank - 0.375) / (s + 0.25);
        const double value = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * prob);
        for (std::size_t k = i; k <= j; ++k) z[order[k]] = value;
        i = j + 1;
    }
    return out;
}

double rhat_basic(const Eigen::MatrixXd& m) {
    const double n = static_cast<double>(m.rows());
    const Eigen::RowVectorXd means = m.colwise().mean();
    double w = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        w += (m.col(c).array() - means(c)).square().sum() / (n - 1.0);
    w /= static_cast<double>(m.cols());
    const double b_over_n = m.cols() > 1 ? stats::sample_variance(means.transpose()) : 0.0;
    const double var_plus = (n - 1.0) / n * w + b_over_n;
    return std::sqrt(var_plus / w);
}

double ess_basic(const Eigen::MatrixXd& m) {
    const auto n = m.rows();
    const auto chains = m.cols();
    const double nd = static_cast<double>(n);
    const Eigen::RowVectorXd means = m.colwise().mean();
    const Eigen::MatrixXd centered = m.rowwise() - means;

    auto acov = [&](Eigen::Index c, Eigen::Index lag) {
        return centered.col(c).head(n - lag).dot(centered.col(c).tail(n - lag)) / nd;
    };
    Eigen::VectorXd acov0(chains);
    for (Eigen::Index c = 0; c < chains; ++c) acov0(c) = acov(c, 0);
    const double w = acov0.mean() * nd / (nd - 1.0);
    const double b_over_n = chains > 1 ? stats::sample_variance(means.transpose()) : 0.0;
    const double var_plus = w * (nd - 1.0) / nd + b_over_n;

    auto rho = [&](Eigen::Index lag) {
        double mean_acov = 0.0;
        for (Eigen::Index c = 0; c < chains; ++c) mean_acov += acov(c, lag);
        mean_acov /= static_cast<double>(chains);
        return 1.0 - (w - mean_acov) / var_plus;
    };

    // Geyer's initial positive sequence with the monotone adjustment.
    double sum_pairs = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    Eigen::Index t = 0;
    while (t + 1 < n) {
        const double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
        if (!(pair > 0.0)) break;
        const double bounded = std::min(pair, prev_pair);
        sum_pairs += bounded;
        prev_pair = bounded;
        t += 2;
    }
    const double total = nd * static_cast<double>(chains);
    double tau = -1.0 + 2.0 * sum_pairs;
    tau = std::max(tau, 1.0 / std::log10(total));
    return std::min(total / tau, total);
}

bool is_constant(const Eigen::MatrixXd& m) {
    return (m.array() == m(0, 0)).all();
}

}  // namespace

double split_rhat(const Eigen::MatrixXd& chains) {
    if (chains.rows() / 2 < 4) throw ValidationError("convergence: fewer than 4 draws per split");
    const Eigen::MatrixXd split = split_chains(chains);
    if (is_constant(split)) return 1.0;
    const double bulk = rhat_basic(rank_normalize(split));
    std::vector<double> all(split.data(), split.data() + split.size());
    const double med = stats::quantile(all, 0.5);
    const Eigen::MatrixXd folded = (split.array() - med).abs();
    const double tail = is_constant(folded) ? 1.0 : rhat_basic(rank_normalize(folded));
    return std::max(bulk, tail);
}

double bulk_ess(const Eigen::MatrixXd& chains) {
    if (chains.rows() / 2 < 4) throw ValidationError("convergence: fewer than 4 draws per split");
    const Eigen::MatrixXd split = split_chains(chains);
    if (is_constant(split)) return static_cast<double>(split.size());
    return ess_basic(rank_normalize(split));
}

ConvergenceReport convergence(const PosteriorDraws& draws) {
    draws.check();
    const auto per_chain = draws.draws_per_chain();
    if (per_chain / 2 < 4) throw ValidationError("convergence: fewer than 4 draws per split");
    ConvergenceReport report;
    for (Eigen::Index k = 0; k < draws.draws.cols(); ++k) {
        Eigen::MatrixXd chains(per_chain, draws.chains);
        for (int c = 0; c < draws.chains; ++c)
            chains.col(c) = draws.draws.col(k).segment(c * per_chain, per_chain);
        report.names.push_back(draws.names[static_cast<std::size_t>(k)]);
        report.rhat.push_back(split_rhat(chains));
        report.ess_bulk.push_back(bulk_ess(chains));
    }
    return report;
}

namespace {

Eigen::MatrixXd coefficient_block(const PosteriorDraws& draws, Eigen::Index p) {
    const auto first = draws.index("intercept");
    if (first + p + 1 > draws.draws.cols())
        throw ValidationError("posterior draws have fewer coefficient columns than predictors");
    return draws.draws.middleCols(first, p + 1);
}

}  // namespace

WaicResult waic(const PosteriorDraws& draws, const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd coefs = coefficient_block(draws, x.cols());
    const Eigen::VectorXd sigma2 = draws.column("sigma2");
    const auto s = draws.size();
    const auto n = y.size();

    // loglik(s, i)
    Eigen::MatrixXd mu = coefs.rightCols(x.cols()) * x.transpose();
    mu.colwise() += coefs.col(0);
    Eigen::MatrixXd ll(s, n);
    for (Eigen::Index d = 0; d < s; ++d)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = y(i) - mu(d, i);
            ll(d, i) = -0.5 * std::log(2.0 * M_PI * sigma2(d)) - 0.5 * e * e / sigma2(d);
        }

    WaicResult r;
    for (Eigen::Index i = 0; i < n; ++i) {
        r.lppd += stats::log_sum_exp(ll.col(i)) - std::log(static_cast<double>(s));
        r.p_waic += s > 1 ? stats::sample_variance(ll.col(i)) : 0.0;
    }
    r.waic = -2.0 * (r.lppd - r.p_waic);
    return r;
}

Eigen::MatrixXd posterior_predictive(const PosteriorDraws& draws, const Eigen::MatrixXd& x, int n_rep,
                                     std::uint64_t seed) {
    if (n_rep < 1) throw ValidationError("posterior_predictive: n_rep must be >= 1");
    const Eigen::MatrixXd coefs = coefficient_block(draws, x.cols());
    const Eigen::VectorXd sigma2 = draws.column("sigma2");
    Engine eng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, draws.size() - 1);
    Eigen::MatrixXd reps(n_rep, x.rows());
    for (int r = 0; r < n_rep; ++r) {
        const auto s = pick(eng);
        const double sd = std::sqrt(sigma2(s));
        const Eigen::VectorXd fitted = (x * coefs.row(s).tail(x.cols()).transpose()).array() + coefs(s, 0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) reps(r, i) = fitted(i) + sd * draw_normal(eng);
    }
    return reps;
}

Eigen::VectorXd posterior_mean_prediction(const PosteriorDraws& draws, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd coefs = coefficient_block(draws, x.cols());
    const Eigen::VectorXd mean = coefs.colwise().mean().transpose();
    return (x * mean.tail(x.cols())).array() + mean(0);
}

void write_draws(const PosteriorDraws& draws, const std::filesystem::path& csv_path) {
    Table t;
    t.header = draws.names;
    for (Eigen::Index d = 0; d < draws.size(); ++d) {
        std::vector<std::string> row;
        for (Eigen::Index k = 0; k < draws.draws.cols(); ++k) row.push_back(format_number(draws.draws(d, k)));
        t.add_row(std::move(row));
    }
    t.write(csv_path);
    nlohmann::json meta = {{"chains", draws.chains},       {"iterations", draws.iterations},
                           {"burn_in", draws.burn_in},     {"thin", draws.thin},
                           {"seed", draws.seed},           {"draws", draws.size()},
                           {"parameters", draws.names}};
    std::ofstream out(csv_path.string() + ".json");
    out << meta.dump(2) << '\n';
}

PosteriorDraws read_draws(const std::filesystem::path& csv_path) {
    const Table t = Table::read(csv_path);
    std::ifstream in(csv_path.string() + ".json");
    if (!in) throw ValidationError("missing metadata sidecar for '" + csv_path.string() + "'");
    const auto meta = nlohmann::json::parse(in);
    PosteriorDraws d;
    d.names = t.header;
    d.draws.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.header.size(); ++c)
            d.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number(t.rows[r][c]);
    d.chains = meta.at("chains").get<int>();
    d.iterations = meta.at("iterations").get<int>();
    d.burn_in = meta.at("burn_in").get<int>();
    d.thin = meta.at("thin").get<int>();
    d.seed = meta.at("seed").get<std::uint64_t>();
    return d;
}

}  // namespace povreg
