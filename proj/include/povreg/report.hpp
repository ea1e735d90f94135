#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povreg/bayes_linear.hpp"
#include "povreg/coefficients.hpp"
#include "povreg/dataset.hpp"
#include "povreg/explain.hpp"
#include "povreg/linear.hpp"
#include "povreg/mcmc.hpp"
#include "povreg/table.hpp"

namespace povreg {

// Tables. Statistics are written with full round-trip precision.

Table descriptive_table(const DescriptiveTable& rows);
Table correlation_table(const CorrelationResult& corr);
Table vif_table(const VifTable& vif);
Table coefficient_table(const std::vector<std::string>& names, const CoefficientVector& coefs);
Table posterior_table(const std::vector<ParameterSummary>& rows);
Table convergence_table(const ConvergenceReport& report);
Table sensitivity_table(const std::vector<SensitivityRow>& rows);
Table importance_table(const std::vector<std::string>& names, const std::vector<std::string>& columns,
                       const std::vector<Eigen::VectorXd>& values);
Table shapley_csv(const std::vector<std::string>& ids, const std::vector<std::string>& names,
                  const Eigen::MatrixXd& values, double baseline);
Table matrix_table(const std::vector<std::string>& names, const Eigen::MatrixXd& m);

// Static SVG figures. Output depends only on the inputs.

std::string xml_escape(const std::string& text);

/// Correlation heatmap with rows/columns in `corr.leaf_order`.
std::string heatmap_svg(const CorrelationResult& corr, const std::string& title);

/// Point estimate plus 95% interval per parameter, with a zero reference line.
std::string forest_plot_svg(const std::vector<ParameterSummary>& rows, const std::string& title);

/// Horizontal bars, drawn in the given order.
std::string bar_chart_svg(const std::vector<std::string>& labels, const std::vector<double>& values,
                          const std::string& title, const std::string& axis_label);

/// One row per predictor; points placed at their Shapley value with a
/// deterministic vertical jitter and colored by the standardized feature value.
std::string beeswarm_svg(const std::vector<std::string>& names, const Eigen::MatrixXd& shap,
                         const Eigen::MatrixXd& features, const std::string& title);

/// Kernel density of the observed outcome over densities of each replicate.
std::string ppc_density_svg(const Eigen::VectorXd& observed, const Eigen::MatrixXd& replicates,
                            const std::string& title);

/// Target posterior mean and 95% interval against log10 prior scale.
std::string sensitivity_svg(const std::vector<SensitivityRow>& rows, const std::string& title);

}  // namespace povreg
