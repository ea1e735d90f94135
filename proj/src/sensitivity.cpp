#include "povreg/bayes_linear.hpp"
#include "povreg/error.hpp"
#include "povreg/evaluation.hpp"

namespace povreg {

namespace {

GaussianPriorSpec prior_for_scale(double scale, double intercept_variance, Eigen::Index p) {
    GaussianPriorSpec prior;
    prior.prior_variances = Eigen::VectorXd::Constant(p + 1, scale);
    prior.prior_variances(0) = intercept_variance;
    return prior;
}

}  // namespace

std::vector<SensitivityRow> prior_sensitivity(const ProvincialDataset& data, const SensitivityOptions& options) {
    if (options.scales.empty()) throw ValidationError("sensitivity needs at least one prior scale");
    for (double s : options.scales)
        if (!(s > 0.0)) throw ValidationError("prior scales must be positive");
    const auto target = data.predictor_index(options.target);

    std::vector<SensitivityRow> rows;
    for (double scale : options.scales) {
        const auto prior = prior_for_scale(scale, options.intercept_variance, data.p());
        const auto draws = gibbs_gaussian(data, prior, options.run);

        SensitivityRow row;
        row.scale = scale;
        row.target = summarize_parameter(options.target, draws.draws.col(target + 1));
        row.waic = waic(draws, data.outcome, data.predictors);
        if (options.with_loo) {
            ModelAdapter adapter{"M5", "gaussian prior", [&](const Fold& fold) {
                                     RunConfig run = options.fold_run;
                                     run.seed = fold.seed;
                                     const auto d = gibbs_gaussian(fold.train, prior, run);
                                     return posterior_mean_prediction(d, fold.test_x)(0);
                                 }};
            row.loo_rmse = loocv(adapter, data, options.fold_run.seed).rmse;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace povreg
