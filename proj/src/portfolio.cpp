#include "povreg/portfolio.hpp"

#include <algorithm>
#include <map>

#include "povreg/bayes_linear.hpp"
#include "povreg/error.hpp"

namespace povreg {

const std::vector<std::string>& model_ids() {
    static const std::vector<std::string> ids{"M1", "M2",  "M3",  "M4",  "M5",  "M6",  "M7", "M8",
                                              "M9", "M10", "M11", "M12", "M13", "M14", "M15"};
    return ids;
}

const std::vector<std::string>& comparison_model_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> out;
        for (const auto& id : model_ids())
            if (id != "M9") out.push_back(id);
        return out;
    }();
    return ids;
}

std::string model_label(const std::string& id) {
    static const std::map<std::string, std::string> labels{
        {"M1", "OLS"},
        {"M2", "Ridge"},
        {"M3", "LASSO"},
        {"M4", "Elastic net"},
        {"M5", "Bayesian linear (Gaussian prior)"},
        {"M6", "Bayesian ridge"},
        {"M7", "Bayesian LASSO"},
        {"M8", "Horseshoe"},
        {"M9", "Spike-and-slab"},
        {"M10", "Beta regression"},
        {"M11", "BYM2 spatial"},
        {"M12", "BART"},
        {"M13", "Gaussian process (ARD)"},
        {"M14", "Random forest"},
        {"M15", "Gradient boosting"},
    };
    check_model_id(id);
    return labels.at(id);
}

void check_model_id(const std::string& id) {
    const auto& ids = model_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end())
        throw ValidationError("unknown model id '" + id + "' (expected M1..M15)");
}

PenalizedFit fit_tuned_penalized(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, double alpha) {
    const auto design = standardize(x);
    const auto grid = default_lambda_grid(y, design.z, alpha);
    PenalizedFit fit;
    fit.config = tune_lambda(y, x, alpha, grid);
    fit.standardized = fit_penalized(y, design.z, fit.config);
    fit.coefficients = rescale_coefficients(fit.standardized, design.standardizer);
    return fit;
}

namespace {

RunConfig fold_run(const PortfolioOptions& options, const Fold& fold) {
    RunConfig run = options.fold_run;
    run.seed = fold.seed;
    return run;
}

double linear_at(const PosteriorDraws& draws, const Eigen::RowVectorXd& x) {
    return posterior_mean_prediction(draws, Eigen::MatrixXd(x))(0);
}

}  // namespace

ModelAdapter make_adapter(const std::string& id, const ProvincialDataset& full, const PortfolioOptions& options) {
    check_model_id(id);
    ModelAdapter a;
    a.id = id;
    a.label = model_label(id);

    if (id == "M1") {
        a.fit_predict = [](const Fold& f) {
            const auto c = fit_ols(f.train.outcome, f.train.predictors);
            return c.intercept + f.test_x.dot(c.slopes);
        };
    } else if (id == "M2" || id == "M3" || id == "M4") {
        const double alpha = id == "M2" ? 0.0 : id == "M3" ? 1.0 : kElasticNetAlpha;
        a.fit_predict = [alpha](const Fold& f) {
            const auto fit = fit_tuned_penalized(f.train.outcome, f.train.predictors, alpha);
            return fit.coefficients.intercept + f.test_x.dot(fit.coefficients.slopes);
        };
    } else if (id == "M5") {
        a.fit_predict = [options](const Fold& f) {
            const auto prior = GaussianPriorSpec::weakly_informative(f.train.p());
            return linear_at(gibbs_gaussian(f.train, prior, fold_run(options, f)), f.test_x);
        };
    } else if (id == "M6" || id == "M7" || id == "M8") {
        const auto family = id == "M6" ? ShrinkageFamily::ridge() : id == "M7" ? ShrinkageFamily::lasso()
                                                                                : ShrinkageFamily::horseshoe();
        a.fit_predict = [options, family](const Fold& f) {
            return linear_at(gibbs_shrinkage(f.train, family, fold_run(options, f)), f.test_x);
        };
    } else if (id == "M9") {
        a.fit_predict = [options](const Fold& f) {
            return linear_at(ssvs(f.train, SsvsConfig{}, fold_run(options, f)).coefficients, f.test_x);
        };
    } else if (id == "M10") {
        a.fit_predict = [options](const Fold& f) {
            const auto fit = fit_beta(f.train, options.beta, fold_run(options, f));
            return predict_beta(fit.draws, Eigen::MatrixXd(f.test_x))(0);
        };
    } else if (id == "M11") {
        a.approximate = true;
        const AdjacencyGraph graph = options.graph ? options.graph->aligned_to(full.ids)
                                                   : load_adjacency(bundled_synthetic_adjacency_path(), full.ids)
                                                         .aligned_to(full.ids);
        a.fit_predict = [options, graph, full](const Fold& f) {
            Bym2Config cfg;
            cfg.observed.assign(static_cast<std::size_t>(full.n()), true);
            cfg.observed[static_cast<std::size_t>(f.held_out)] = false;
            // The held-out outcome is masked out of the likelihood; blank it as well.
            Eigen::VectorXd y = full.outcome;
            y(f.held_out) = 0.0;
            const auto fit = fit_bym2(y, full.predictors, graph, cfg, fold_run(options, f));
            return fit.fitted_mean(f.held_out);
        };
    } else if (id == "M12") {
        a.fit_predict = [options](const Fold& f) {
            return fit_bart(f.train, options.bart, f.seed, Eigen::MatrixXd(f.test_x)).test_mean()(0);
        };
    } else if (id == "M13") {
        a.fit_predict = [options](const Fold& f) {
            return fit_gp(f.train, std::nullopt, options.gp, f.seed).predict(Eigen::MatrixXd(f.test_x))(0);
        };
    } else if (id == "M14") {
        a.fit_predict = [options](const Fold& f) {
            return fit_random_forest(f.train, options.forest, f.seed).predict(Eigen::MatrixXd(f.test_x))(0);
        };
    } else {
        a.fit_predict = [options](const Fold& f) {
            return fit_gbdt(f.train, options.gbdt, f.seed).predict(Eigen::MatrixXd(f.test_x))(0);
        };
    }
    return a;
}

}  // namespace povreg
