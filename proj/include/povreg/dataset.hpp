#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/coefficients.hpp"

namespace povreg {

/// One bound-checked column of the input CSV. Bounds are open intervals;
/// NaN means unbounded on that side.
struct ColumnSpec {
    std::string name;
    std::string unit;
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
};

/// Header-name binding for the CSV loader. Columns are located by name, so
/// reordered exports load identically.
struct DatasetSchema {
    std::string id_column = "province";
    ColumnSpec outcome{"poverty", "%", 0.0, 100.0};
    std::vector<ColumnSpec> predictors;

    /// The provincial layout: schooling .. ict, with Gini bounded in (0,1).
    static DatasetSchema provincial();
};

/// Cross-section of provinces: outcome vector plus an n x p predictor matrix
/// in original units.
struct ProvincialDataset {
    std::vector<std::string> ids;
    std::string outcome_name = "poverty";
    Eigen::VectorXd outcome;
    Eigen::MatrixXd predictors;
    std::vector<std::string> predictor_names;
    std::vector<std::string> predictor_units;

    Eigen::Index n() const { return outcome.size(); }
    Eigen::Index p() const { return predictors.cols(); }

    /// Index of a predictor by name; throws ValidationError when absent.
    Eigen::Index predictor_index(const std::string& name) const;

    /// Rows in the given order. No validation: a subset of a valid dataset
    /// is used as a training fold.
    ProvincialDataset subset(const std::vector<Eigen::Index>& rows) const;

    /// All rows except `row`.
    ProvincialDataset without_row(Eigen::Index row) const;
};

/// Checks the dataset invariants (n >= 3, finite cells, bounds from
/// `schema`, non-constant predictors). Throws ValidationError.
void validate(const ProvincialDataset& data, const DatasetSchema& schema);

ProvincialDataset load_dataset(const std::filesystem::path& path,
                               const DatasetSchema& schema = DatasetSchema::provincial());

/// Path of the bundled 34-province corpus inside the source tree.
std::filesystem::path bundled_corpus_path();

struct DescriptiveRow {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

using DescriptiveTable = std::vector<DescriptiveRow>;

/// Outcome first, then every predictor, in original units.
DescriptiveTable describe(const ProvincialDataset& data);

struct CorrelationResult {
    std::vector<std::string> names;  // outcome first, then predictors
    Eigen::MatrixXd matrix;
    std::vector<std::size_t> leaf_order;  // average linkage on 1 - |r|
};

CorrelationResult correlation_matrix(const ProvincialDataset& data);

/// Pearson correlation of the columns of `m`; throws on constant columns.
Eigen::MatrixXd pearson(const Eigen::MatrixXd& m, const std::vector<std::string>& names = {});

/// Leaf order of an average-linkage agglomerative clustering of a
/// symmetric distance matrix. Merges break ties toward the lowest indices.
std::vector<std::size_t> average_linkage_order(const Eigen::MatrixXd& distance);

struct Standardizer {
    Eigen::VectorXd means;
    Eigen::VectorXd sds;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::RowVectorXd apply(const Eigen::RowVectorXd& x) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;

    static Standardizer identity(Eigen::Index p);
};

struct StandardizedDesign {
    Eigen::MatrixXd z;
    Standardizer standardizer;
};

/// Column-wise centering and scaling by the sample SD. The outcome is not
/// touched.
StandardizedDesign standardize(const Eigen::MatrixXd& x);
StandardizedDesign standardize(const ProvincialDataset& data);

/// slope_j / sd_j and intercept - sum_j slope_j mean_j / sd_j.
CoefficientVector rescale_coefficients(const CoefficientVector& coefs, const Standardizer& std);

}  // namespace povreg
