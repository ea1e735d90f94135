#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "povreg/dataset.hpp"

namespace povreg {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf prediction
};

/// Binary regression tree stored as a flat node array (root at 0).
struct RegressionTree {
    std::vector<TreeNode> nodes;

    int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    int leaf_count() const;
    int depth() const;
};

/// Candidate thresholds for one column restricted to `rows`: midpoints
/// between consecutive sorted unique values.
std::vector<double> midpoint_thresholds(const Eigen::MatrixXd& x, const std::vector<int>& rows, Eigen::Index col);

struct ForestConfig {
    int n_trees = 500;
    int mtry = 0;            // 0 -> ceil(p / 3)
    int min_node_size = 5;   // nodes holding this many rows or fewer become leaves
    bool bootstrap = true;

    int resolved_mtry(Eigen::Index p) const;
    void validate(Eigen::Index p) const;
};

struct RandomForest {
    std::vector<RegressionTree> trees;
    double oob_mse = 0.0;  // NaN when no row was ever out of bag

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Variance-reduction CART grown on the given rows. At each node `mtry`
/// predictors are drawn without replacement; ties in gain go to the lower
/// predictor index. A node becomes a leaf when it holds <= min_node_size
/// rows, is pure, or no candidate split reduces the squared error.
RegressionTree grow_cart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<int>& rows,
                         int mtry, int min_node_size, std::uint64_t seed);

/// Tree t is grown from the sub-seed mix_seed(seed, t).
RandomForest fit_random_forest(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const ForestConfig& config,
                               std::uint64_t seed);
RandomForest fit_random_forest(const ProvincialDataset& data, const ForestConfig& config, std::uint64_t seed);

/// Squared-loss gradient boosting with second-order leaf weights. The
/// defaults follow the usual XGBoost package settings.
struct GbdtConfig {
    int n_rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double lambda = 1.0;            // L2 penalty on leaf weights
    double min_child_weight = 1.0;  // minimum hessian sum (= row count) per child
    double subsample = 1.0;

    void validate() const;
};

struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 0.3;
    std::vector<RegressionTree> trees;  // leaf values already include the learning rate

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Round r draws its row subsample (if any) from mix_seed(seed, r).
GbdtModel fit_gbdt(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const GbdtConfig& config, std::uint64_t seed);
GbdtModel fit_gbdt(const ProvincialDataset& data, const GbdtConfig& config, std::uint64_t seed);

}  // namespace povreg
