#include "povreg/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "povreg/error.hpp"
#include "povreg/parallel.hpp"
#include "povreg/rng.hpp"

namespace povreg {

std::size_t AdjacencyGraph::index(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ValidationError("unknown node label '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

Eigen::MatrixXd AdjacencyGraph::adjacency_matrix() const {
    const auto m = static_cast<Eigen::Index>(n());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [i, j] : edges) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return a;
}

Eigen::MatrixXd AdjacencyGraph::laplacian() const {
    const Eigen::MatrixXd a = adjacency_matrix();
    Eigen::MatrixXd q = -a;
    q.diagonal() = a.rowwise().sum();
    return q;
}

std::vector<std::vector<std::string>> AdjacencyGraph::components() const {
    std::vector<std::vector<std::size_t>> nbr(n());
    for (const auto& [i, j] : edges) {
        nbr[i].push_back(j);
        nbr[j].push_back(i);
    }
    std::vector<bool> seen(n(), false);
    std::vector<std::vector<std::string>> out;
    for (std::size_t s = 0; s < n(); ++s) {
        if (seen[s]) continue;
        std::vector<std::string> comp;
        std::vector<std::size_t> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            comp.push_back(labels[v]);
            for (auto w : nbr[v])
                if (!seen[w]) {
                    seen[w] = true;
                    stack.push_back(w);
                }
        }
        out.push_back(std::move(comp));
    }
    return out;
}

AdjacencyGraph AdjacencyGraph::from_edges(std::vector<std::string> labels,
                                          const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (labels.size() < 2) throw ValidationError("adjacency graph needs at least two nodes");
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() != labels.size()) throw ValidationError("adjacency graph has duplicate node labels");
    AdjacencyGraph g;
    g.labels = std::move(labels);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [i, j] : edges) {
        if (i >= g.n() || j >= g.n()) throw ValidationError("edge refers to a node index out of range");
        if (i == j) throw ValidationError("self-loop on node '" + g.labels[i] + "'");
        if (i > j) std::swap(i, j);
        if (seen.insert({i, j}).second) g.edges.emplace_back(i, j);
    }
    const auto comps = g.components();
    if (comps.size() > 1) {
        std::ostringstream msg;
        msg << "adjacency graph is disconnected (" << comps.size() << " components):";
        for (std::size_t c = 0; c < comps.size(); ++c) {
            msg << (c ? "; " : " ") << "{";
            for (std::size_t k = 0; k < comps[c].size(); ++k) msg << (k ? ", " : "") << comps[c][k];
            msg << "}";
        }
        throw ValidationError(msg.str());
    }
    return g;
}

AdjacencyGraph AdjacencyGraph::aligned_to(const std::vector<std::string>& order) const {
    if (order.size() != n())
        throw ValidationError("adjacency graph has " + std::to_string(n()) + " nodes but the data has " +
                              std::to_string(order.size()) + " rows");
    std::vector<std::size_t> new_index(n());
    for (std::size_t k = 0; k < order.size(); ++k) new_index[index(order[k])] = k;
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (const auto& [i, j] : edges) e.emplace_back(new_index[i], new_index[j]);
    return from_edges(order, e);
}

namespace {

std::vector<std::pair<std::string, std::string>> read_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open adjacency file '" + path.string() + "'");
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a)) continue;
        if (!(ss >> b) || (ss >> extra))
            throw ValidationError("adjacency file line " + std::to_string(line_no) + ": expected 'labelA labelB'");
        pairs.emplace_back(a, b);
    }
    return pairs;
}

AdjacencyGraph build(const std::vector<std::pair<std::string, std::string>>& pairs,
                     std::vector<std::string> labels) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t k = 0; k < labels.size(); ++k) pos[labels[k]] = k;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& [a, b] : pairs) {
        for (const auto* l : {&a, &b})
            if (!pos.count(*l)) throw ValidationError("unknown node label '" + *l + "' in adjacency file");
        edges.emplace_back(pos[a], pos[b]);
    }
    return AdjacencyGraph::from_edges(std::move(labels), edges);
}

}  // namespace

AdjacencyGraph load_adjacency(const std::filesystem::path& path) {
    const auto pairs = read_edge_list(path);
    std::vector<std::string> labels;
    std::set<std::string> seen;
    for (const auto& [a, b] : pairs)
        for (const auto* l : {&a, &b})
            if (seen.insert(*l).second) labels.push_back(*l);
    return build(pairs, std::move(labels));
}

AdjacencyGraph load_adjacency(const std::filesystem::path& path, const std::vector<std::string>& labels) {
    return build(read_edge_list(path), labels);
}

std::filesystem::path bundled_synthetic_adjacency_path() {
    return std::filesystem::path(POVREG_SOURCE_DIR) / "data" / "synthetic_adjacency_34.txt";
}

Eigen::MatrixXd row_standardize(const Eigen::MatrixXd& w) {
    Eigen::MatrixXd out = w;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double s = w.row(i).sum();
        if (s != 0.0) out.row(i) /= s;
    }
    return out;
}

Eigen::MatrixXd spatial_weights(const AdjacencyGraph& graph) { return row_standardize(graph.adjacency_matrix()); }

double morans_i(const Eigen::VectorXd& values, const Eigen::MatrixXd& w) {
    if (w.rows() != values.size() || w.cols() != values.size())
        throw ValidationError("Moran's I: weight matrix does not match the value vector");
    const Eigen::VectorXd z = values.array() - values.mean();
    const double denom = z.squaredNorm();
    if (!(denom > 0.0)) throw ValidationError("Moran's I is undefined for a constant vector");
    const double s0 = w.sum();
    return static_cast<double>(values.size()) / s0 * z.dot(w * z) / denom;
}

MoranTest morans_mc_test(const Eigen::VectorXd& values, const Eigen::MatrixXd& w, int n_perm, std::uint64_t seed) {
    if (n_perm < 99) throw ValidationError("Moran permutation test needs at least 99 permutations");
    MoranTest out;
    out.observed = morans_i(values, w);
    const auto null = parallel_map<double>(static_cast<std::size_t>(n_perm), [&](std::size_t r) {
        Engine eng(mix_seed(seed, r));
        std::vector<double> v(values.data(), values.data() + values.size());
        std::shuffle(v.begin(), v.end(), eng);
        return morans_i(Eigen::Map<const Eigen::VectorXd>(v.data(), values.size()), w);
    });
    out.null_draws = Eigen::Map<const Eigen::VectorXd>(null.data(), n_perm);
    // Small tolerance so permutations that reproduce the observed arrangement count as ties.
    const double tol = 1e-12 * std::max(1.0, std::abs(out.observed));
    const auto count = std::count_if(null.begin(), null.end(), [&](double v) { return v >= out.observed - tol; });
    out.p_value = (1.0 + static_cast<double>(count)) / (1.0 + n_perm);
    return out;
}

double bym2_scaling_factor(const AdjacencyGraph& graph) {
    const Eigen::MatrixXd q = graph.laplacian();
    const auto n = q.rows();
    const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    // For a connected graph the pseudo-inverse is (Q + J/n)^{-1} - J/n.
    const Eigen::MatrixXd pinv = (q + j).ldlt().solve(Eigen::MatrixXd::Identity(n, n)) - j;
    const double mean_log = pinv.diagonal().array().log().mean();
    if (!std::isfinite(mean_log)) throw NumericalError("BYM2 scaling factor is not finite");
    return std::exp(mean_log);
}

Bym2Fit fit_bym2(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const AdjacencyGraph& graph,
                 const Bym2Config& config, const RunConfig& run, const std::vector<std::string>& names) {
    run.validate();
    const auto n = y.size();
    const auto p = x.cols();
    if (static_cast<Eigen::Index>(graph.n()) != n)
        throw ValidationError("BYM2: graph has " + std::to_string(graph.n()) + " nodes, data has " +
                              std::to_string(n) + " rows");
    if (graph.components().size() != 1) throw ValidationError("BYM2 needs a connected graph");
    GaussianPriorSpec prior = config.prior;
    if (prior.prior_variances.size() == 0)
        prior.prior_variances = GaussianPriorSpec::weakly_informative(p).prior_variances;
    prior.validate(p);
    if (!(config.sigma_u_prior_sd > 0.0) || config.rho_grid < 2)
        throw ValidationError("BYM2: sigma_u prior sd must be > 0 and the rho grid needs >= 2 points");
    if (config.fixed_rho && !(*config.fixed_rho >= 0.0 && *config.fixed_rho <= 1.0))
        throw ValidationError("BYM2: fixed rho must lie in [0,1]");
    if (!config.observed.empty() && static_cast<Eigen::Index>(config.observed.size()) != n)
        throw ValidationError("BYM2: observation mask length does not match the data");

    Eigen::VectorXd obs = Eigen::VectorXd::Ones(n);
    for (std::size_t i = 0; i < config.observed.size(); ++i) obs(static_cast<Eigen::Index>(i)) = config.observed[i] ? 1.0 : 0.0;
    const double n_obs = obs.sum();
    if (n_obs < static_cast<double>(p + 2)) throw ValidationError("BYM2: too few observed rows");

    Eigen::MatrixXd a(n, p + 1);
    a.col(0).setOnes();
    a.rightCols(p) = x;
    const auto k = a.cols();
    const Eigen::MatrixXd a_obs = obs.asDiagonal() * a;
    const Eigen::MatrixXd ata = a_obs.transpose() * a;
    const Eigen::VectorXd prior_precision = prior.prior_variances.cwiseInverse();

    const double s = bym2_scaling_factor(graph);
    const Eigen::MatrixXd sq = s * graph.laplacian();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::MatrixXd base_precision = sq + ones * ones.transpose();
    const double u_prior_prec = 1.0 / (config.sigma_u_prior_sd * config.sigma_u_prior_sd);

    struct ChainOut {
        Eigen::MatrixXd params, phi, theta;
        Eigen::VectorXd fitted_sum;
    };

    auto chain = [&](std::size_t c) {
        Engine eng(mix_seed(run.seed, c));
        const auto keep_n = run.retained_per_chain();
        ChainOut out{Eigen::MatrixXd(keep_n, k + 3), Eigen::MatrixXd(keep_n, n), Eigen::MatrixXd(keep_n, n),
                     Eigen::VectorXd::Zero(n)};

        double ybar = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ybar += obs(i) * y(i);
        ybar /= n_obs;
        double sigma2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) sigma2 += obs(i) * (y(i) - ybar) * (y(i) - ybar);
        sigma2 /= (n_obs - 1.0);
        double sigma_u = config.fixed_sigma_u.value_or(1.0);
        double rho = config.fixed_rho.value_or(0.5);
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
        Eigen::Index row = 0;

        auto draw_gaussian = [&](const Eigen::MatrixXd& precision, const Eigen::VectorXd& b, int it, const char* what) {
            Eigen::LLT<Eigen::MatrixXd> llt(precision);
            if (llt.info() != Eigen::Success || !precision.allFinite())
                throw NumericalError(std::string("BYM2: non-finite or indefinite precision for ") + what +
                                     " at iteration " + std::to_string(it));
            Eigen::VectorXd mean = llt.solve(b);
            return std::make_pair(Eigen::VectorXd(mean + llt.matrixU().solve(draw_std_normal_vector(eng, b.size()))),
                                  llt);
        };

        for (int it = 0; it < run.iterations; ++it) {
            const double sr = std::sqrt(rho);
            const double sr1 = std::sqrt(1.0 - rho);
            Eigen::VectorXd u = sigma_u * (sr * phi + sr1 * theta);

            // Coefficients.
            {
                Eigen::MatrixXd precision = ata / sigma2;
                precision.diagonal() += prior_precision;
                const Eigen::VectorXd b = a_obs.transpose() * (y - u) / sigma2;
                beta = draw_gaussian(precision, b, it, "coefficients").first;
            }
            const Eigen::VectorXd mean_part = a * beta;

            // Structured field: exact draw under the sum-to-zero constraint
            // (conditioning by kriging), then recentred against rounding.
            {
                const double c_phi = sigma_u * sigma_u * rho / sigma2;
                Eigen::MatrixXd precision = base_precision;
                precision.diagonal() += c_phi * obs;
                const Eigen::VectorXd e = y - mean_part - sigma_u * sr1 * theta;
                const Eigen::VectorXd b = (sigma_u * sr / sigma2) * obs.cwiseProduct(e);
                auto [draw, llt] = draw_gaussian(precision, b, it, "structured effect");
                const Eigen::VectorXd v = llt.solve(ones);
                draw -= v * (draw.sum() / v.sum());
                phi = draw.array() - draw.mean();
            }

            // Unstructured effect (diagonal conditional).
            {
                const double c_theta = sigma_u * sigma_u * (1.0 - rho) / sigma2;
                const Eigen::VectorXd e = y - mean_part - sigma_u * sr * phi;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double prec = 1.0 + obs(i) * c_theta;
                    const double m = obs(i) * sigma_u * sr1 * e(i) / sigma2 / prec;
                    theta(i) = m + draw_normal(eng) / std::sqrt(prec);
                }
            }

            const Eigen::VectorXd g = sr * phi + sr1 * theta;
            const Eigen::VectorXd e = y - mean_part;

            if (!config.fixed_sigma_u) {
                const double prec = obs.dot(g.cwiseProduct(g)) / sigma2 + u_prior_prec;
                const double m = obs.dot(g.cwiseProduct(e)) / sigma2 / prec;
                sigma_u = m + draw_normal(eng) / std::sqrt(prec);
            }

            {
                const Eigen::VectorXd r = e - sigma_u * g;
                const double rss = obs.dot(r.cwiseProduct(r));
                sigma2 = draw_inv_gamma(eng, prior.ig_shape + 0.5 * n_obs, prior.ig_rate + 0.5 * rss);
                if (!std::isfinite(sigma2) || sigma2 <= 0.0)
                    throw NumericalError("BYM2: divergent error variance at iteration " + std::to_string(it));
            }

            if (!config.fixed_rho) {
                Eigen::VectorXd logp(config.rho_grid);
                for (int gi = 0; gi < config.rho_grid; ++gi) {
                    const double r = static_cast<double>(gi) / (config.rho_grid - 1);
                    const Eigen::VectorXd res = e - sigma_u * (std::sqrt(r) * phi + std::sqrt(1.0 - r) * theta);
                    logp(gi) = -0.5 * obs.dot(res.cwiseProduct(res)) / sigma2;
                }
                const double mx = logp.maxCoeff();
                Eigen::VectorXd w = (logp.array() - mx).exp();
                double pick = draw_uniform(eng) * w.sum();
                int gi = 0;
                for (; gi < config.rho_grid - 1; ++gi) {
                    pick -= w(gi);
                    if (pick <= 0.0) break;
                }
                rho = static_cast<double>(gi) / (config.rho_grid - 1);
            }

            if (it >= run.burn_in && (it - run.burn_in + 1) % run.thin == 0) {
                out.params.row(row).head(k) = beta.transpose();
                out.params(row, k) = sigma2;
                out.params(row, k + 1) = std::abs(sigma_u);
                out.params(row, k + 2) = rho;
                out.phi.row(row) = phi.transpose();
                out.theta.row(row) = theta.transpose();
                out.fitted_sum += a * beta + sigma_u * (std::sqrt(rho) * phi + std::sqrt(1.0 - rho) * theta);
                ++row;
            }
        }
        return out;
    };

    const auto chains = parallel_map<ChainOut>(static_cast<std::size_t>(run.chains), chain);
    const auto per = run.retained_per_chain();
    Bym2Fit fit;
    fit.scaling = s;
    fit.draws.draws.resize(per * run.chains, k + 3);
    fit.structured.resize(per * run.chains, n);
    fit.unstructured.resize(per * run.chains, n);
    fit.fitted_mean = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < run.chains; ++c) {
        const auto& ch = chains[static_cast<std::size_t>(c)];
        fit.draws.draws.middleRows(c * per, per) = ch.params;
        fit.structured.middleRows(c * per, per) = ch.phi;
        fit.unstructured.middleRows(c * per, per) = ch.theta;
        fit.fitted_mean += ch.fitted_sum;
    }
    fit.fitted_mean /= static_cast<double>(per * run.chains);
    fit.draws.names = {"intercept"};
    for (Eigen::Index j = 0; j < p; ++j)
        fit.draws.names.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                               : "x" + std::to_string(j + 1));
    for (const char* nm : {"sigma2", "sigma_u", "rho"}) fit.draws.names.emplace_back(nm);
    fit.draws.chains = run.chains;
    fit.draws.iterations = run.iterations;
    fit.draws.burn_in = run.burn_in;
    fit.draws.thin = run.thin;
    fit.draws.seed = run.seed;
    fit.draws.check();
    return fit;
}

Bym2Fit fit_bym2(const ProvincialDataset& data, const AdjacencyGraph& graph, const Bym2Config& config,
                 const RunConfig& run) {
    return fit_bym2(data.outcome, data.predictors, graph.aligned_to(data.ids), config, run, data.predictor_names);
}

}  // namespace povreg
