#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "povreg/bayes_linear.hpp"
#include "povreg/dataset.hpp"
#include "povreg/mcmc.hpp"

namespace povreg {

/// Undirected, connected, loop-free graph over labeled nodes.
struct AdjacencyGraph {
    std::vector<std::string> labels;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, no duplicates

    std::size_t n() const { return labels.size(); }
    std::size_t index(const std::string& label) const;
    Eigen::MatrixXd adjacency_matrix() const;
    /// Graph Laplacian D - A.
    Eigen::MatrixXd laplacian() const;
    /// Connected components as lists of labels, in first-label order.
    std::vector<std::vector<std::string>> components() const;

    /// Builds and validates a graph. Throws ValidationError on self-loops,
    /// unknown indices, or a disconnected graph (the message lists components).
    static AdjacencyGraph from_edges(std::vector<std::string> labels,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& edges);

    /// Same graph with nodes reordered to `order` (e.g. the dataset ids).
    /// Throws ValidationError when a label is unknown or missing.
    AdjacencyGraph aligned_to(const std::vector<std::string>& order) const;
};

/// Edge-list text: one "labelA labelB" pair per line, '#' starts a comment.
/// Nodes are numbered in order of first appearance.
AdjacencyGraph load_adjacency(const std::filesystem::path& path);

/// As above, but the node set is fixed to `labels`; any other label in the
/// file is an error and nodes without edges make the graph disconnected.
AdjacencyGraph load_adjacency(const std::filesystem::path& path, const std::vector<std::string>& labels);

std::filesystem::path bundled_synthetic_adjacency_path();

/// Row-standardized weights: each row of the adjacency divided by its sum.
/// Rows that sum to zero stay zero.
Eigen::MatrixXd row_standardize(const Eigen::MatrixXd& w);
Eigen::MatrixXd spatial_weights(const AdjacencyGraph& graph);

/// I = (n / S0) * (z' W z) / (z' z), z = values - mean(values).
/// Throws ValidationError for a constant vector.
double morans_i(const Eigen::VectorXd& values, const Eigen::MatrixXd& w);

struct MoranTest {
    double observed = 0.0;
    double p_value = 1.0;  // one-sided upper, (1 + #{I_perm >= I_obs}) / (1 + n_perm)
    Eigen::VectorXd null_draws;
};

/// Monte Carlo permutation test; replicate r uses the sub-seed mix_seed(seed, r).
MoranTest morans_mc_test(const Eigen::VectorXd& values, const Eigen::MatrixXd& w, int n_perm = 999,
                         std::uint64_t seed = 42);

/// Geometric mean of the diagonal of the generalized inverse of the graph
/// Laplacian (the usual BYM2 scaling constant).
double bym2_scaling_factor(const AdjacencyGraph& graph);

/// y = b0 + X b + u + e with u = sigma_u (sqrt(rho) phi + sqrt(1 - rho) theta),
/// phi a scaled intrinsic CAR field constrained to sum to zero and theta iid
/// standard normal. Coefficient and error-variance priors follow the
/// Gaussian-prior model; sigma_u ~ N(0, sigma_u_prior_sd^2) on the real line
/// (its sign is not identified and |sigma_u| is reported); rho ~ U(0,1).
struct Bym2Config {
    GaussianPriorSpec prior;  // empty variances -> weakly_informative(p)
    double sigma_u_prior_sd = 5.0;
    int rho_grid = 101;
    std::optional<double> fixed_rho;
    std::optional<double> fixed_sigma_u;
    /// Rows excluded from the likelihood (held out); empty = all observed.
    std::vector<bool> observed;
};

struct Bym2Fit {
    PosteriorDraws draws;       // intercept, slopes, sigma2, sigma_u, rho
    Eigen::MatrixXd structured;  // draws x n, the scaled ICAR field phi
    Eigen::MatrixXd unstructured;
    Eigen::VectorXd fitted_mean;  // posterior mean of b0 + x'b + u per node
    double scaling = 1.0;
};

Bym2Fit fit_bym2(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const AdjacencyGraph& graph,
                 const Bym2Config& config, const RunConfig& run, const std::vector<std::string>& names = {});

/// Dataset overload: the graph is aligned to the dataset ids first.
Bym2Fit fit_bym2(const ProvincialDataset& data, const AdjacencyGraph& graph, const Bym2Config& config,
                 const RunConfig& run);

}  // namespace povreg
