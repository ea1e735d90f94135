#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "povreg/bart.hpp"
#include "povreg/bayes_linear.hpp"
#include "povreg/beta_regression.hpp"
#include "povreg/error.hpp"
#include "povreg/evaluation.hpp"
#include "povreg/explain.hpp"
#include "povreg/gp.hpp"
#include "povreg/linear.hpp"
#include "povreg/portfolio.hpp"
#include "povreg/report.hpp"
#include "povreg/spatial.hpp"
#include "povreg/trees.hpp"

namespace fs = std::filesystem;
using namespace povreg;

namespace {

// Settings shared by every subcommand. Values come from the JSON config
// file first; flags given on the command line override them.
struct Settings {
    fs::path data = bundled_corpus_path();
    std::optional<fs::path> adjacency;
    std::vector<std::string> models;
    std::uint64_t seed = 42;
    fs::path out = "povreg_out";
    RunConfig fold_run{2000, 1000, 1, 1, 42};
};

std::vector<std::string> split_models(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void apply_config_file(const fs::path& path, Settings& s) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.contains("data")) s.data = j["data"].get<std::string>();
        if (j.contains("adjacency")) s.adjacency = fs::path(j["adjacency"].get<std::string>());
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) s.out = j["out"].get<std::string>();
        if (j.contains("models")) {
            if (j["models"].is_string()) s.models = split_models(j["models"].get<std::string>());
            else s.models = j["models"].get<std::vector<std::string>>();
        }
        if (j.contains("fold_iterations")) s.fold_run.iterations = j["fold_iterations"].get<int>();
        if (j.contains("fold_burn_in")) s.fold_run.burn_in = j["fold_burn_in"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file '" + path.string() + "': " + e.what());
    }
}

void validate_settings(const Settings& s) {
    if (!fs::exists(s.data)) throw ValidationError("data file '" + s.data.string() + "' does not exist (--data)");
    if (s.adjacency && !fs::exists(*s.adjacency))
        throw ValidationError("adjacency file '" + s.adjacency->string() + "' does not exist (--adjacency)");
    for (const auto& m : s.models) check_model_id(m);
    s.fold_run.validate();
}

class Output {
public:
    explicit Output(fs::path root) : root_(std::move(root)) {}

    void table(const std::string& name, const Table& t) const {
        const auto path = dir("tables") / (name + ".csv");
        t.write(path);
        std::cout << "wrote " << path.string() << "\n";
    }
    void figure(const std::string& name, const std::string& svg) const { text(dir("figures") / (name + ".svg"), svg); }
    void run(const std::string& name, const nlohmann::json& j) const { text(dir("runs") / (name + ".json"), j.dump(2) + "\n"); }
    fs::path path(const std::string& sub, const std::string& file) const { return dir(sub) / file; }

private:
    fs::path dir(const std::string& sub) const {
        const auto d = root_ / sub;
        fs::create_directories(d);
        return d;
    }
    static void text(const fs::path& path, const std::string& body) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write '" + path.string() + "'");
        out << body;
        std::cout << "wrote " << path.string() << "\n";
    }

    fs::path root_;
};

AdjacencyGraph graph_for(const Settings& s, const ProvincialDataset& data, bool required) {
    if (!s.adjacency) {
        if (required) throw ValidationError("missing required flag --adjacency PATH");
        std::cerr << "note: no --adjacency given; using the bundled synthetic test graph\n";
        return load_adjacency(bundled_synthetic_adjacency_path(), data.ids);
    }
    return load_adjacency(*s.adjacency, data.ids);
}

PortfolioOptions portfolio_options(const Settings& s, const ProvincialDataset& data) {
    PortfolioOptions o;
    o.fold_run = s.fold_run;
    o.graph = graph_for(s, data, false);
    return o;
}

std::vector<std::string> slope_names(const ProvincialDataset& data) { return data.predictor_names; }

/// Full-data predictor for the explanation commands.
Predictor fitted_predictor(const std::string& id, const ProvincialDataset& data, std::uint64_t seed) {
    if (id == "M1") {
        const auto c = fit_ols(data.outcome, data.predictors);
        return [c](const Eigen::MatrixXd& x) { return c.predict(x); };
    }
    if (id == "M2" || id == "M3" || id == "M4") {
        const double alpha = id == "M2" ? 0.0 : id == "M3" ? 1.0 : kElasticNetAlpha;
        const auto c = fit_tuned_penalized(data.outcome, data.predictors, alpha).coefficients;
        return [c](const Eigen::MatrixXd& x) { return c.predict(x); };
    }
    if (id == "M13") {
        const auto gp = fit_gp(data, std::nullopt, GpOptions{}, seed);
        return [gp](const Eigen::MatrixXd& x) { return gp.predict(x); };
    }
    if (id == "M14") {
        const auto rf = fit_random_forest(data, ForestConfig{}, seed);
        return [rf](const Eigen::MatrixXd& x) { return rf.predict(x); };
    }
    if (id == "M15") {
        const auto gb = fit_gbdt(data, GbdtConfig{}, seed);
        return [gb](const Eigen::MatrixXd& x) { return gb.predict(x); };
    }
    throw ValidationError("model " + id + " has no point predictor for this command (use M1-M4, M13, M14 or M15)");
}

/// Posterior draws for the linear-predictor Bayesian models.
PosteriorDraws bayes_draws(const std::string& id, const ProvincialDataset& data, std::uint64_t seed) {
    if (id == "M5") return gibbs_gaussian(data, GaussianPriorSpec::weakly_informative(data.p()), gaussian_default_run(seed));
    if (id == "M6") return gibbs_shrinkage(data, ShrinkageFamily::ridge(), shrinkage_default_run(seed));
    if (id == "M7") return gibbs_shrinkage(data, ShrinkageFamily::lasso(), shrinkage_default_run(seed));
    if (id == "M8") return gibbs_shrinkage(data, ShrinkageFamily::horseshoe(), shrinkage_default_run(seed));
    if (id == "M9") return ssvs(data, SsvsConfig{}, ssvs_default_run(seed)).coefficients;
    throw ValidationError("model " + id + " is not a Bayesian linear model (use M5-M9)");
}

std::vector<ParameterSummary> slope_summaries(const PosteriorDraws& draws, const ProvincialDataset& data) {
    std::vector<ParameterSummary> out;
    for (const auto& name : data.predictor_names) out.push_back(summarize_parameter(name, draws.column(name)));
    return out;
}

void write_posterior(const Output& out, const std::string& id, const PosteriorDraws& draws) {
    out.table("fit_" + id, posterior_table(summarize_posterior(draws)));
    out.table("convergence_" + id, convergence_table(convergence(draws)));
    const auto path = out.path("runs", "draws_" + id + ".csv");
    write_draws(draws, path);
    std::cout << "wrote " << path.string() << "\n";
}

int cmd_describe(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    const auto table = descriptive_table(describe(data));
    std::cout << table.to_csv();
    out.table("descriptives", table);
    const auto corr = correlation_matrix(data);
    out.table("correlations", correlation_table(corr));
    out.figure("correlation_heatmap", heatmap_svg(corr, "Pearson correlations (average-linkage order)"));
    return 0;
}

int cmd_vif(const Settings& s, const Output& out) {
    const auto table = vif_table(vif(load_dataset(s.data)));
    std::cout << table.to_csv();
    out.table("vif", table);
    return 0;
}

int cmd_fit(const Settings& s, const Output& out, const std::string& id) {
    check_model_id(id);
    const auto data = load_dataset(s.data);
    if (id == "M1") {
        const auto c = fit_ols(data.outcome, data.predictors);
        const auto t = coefficient_table(slope_names(data), c);
        std::cout << t.to_csv();
        out.table("fit_M1", t);
    } else if (id == "M2" || id == "M3" || id == "M4") {
        const double alpha = id == "M2" ? 0.0 : id == "M3" ? 1.0 : kElasticNetAlpha;
        const auto fit = fit_tuned_penalized(data.outcome, data.predictors, alpha);
        Table t;
        t.header = {"term", "standardized", "original"};
        t.add_row({"intercept", format_number(fit.standardized.intercept), format_number(fit.coefficients.intercept)});
        for (Eigen::Index j = 0; j < data.p(); ++j)
            t.add_row({data.predictor_names[static_cast<std::size_t>(j)], format_number(fit.standardized.slopes(j)),
                       format_number(fit.coefficients.slopes(j))});
        t.add_row({"lambda", format_number(fit.config.lambda), ""});
        t.add_row({"alpha", format_number(fit.config.alpha), ""});
        std::cout << t.to_csv();
        out.table("fit_" + id, t);
    } else if (id == "M9") {
        const auto r = ssvs(data, SsvsConfig{}, ssvs_default_run(s.seed));
        write_posterior(out, id, r.coefficients);
        Table t;
        t.header = {"variable", "pip"};
        const Eigen::VectorXd pip = r.inclusion.pip();
        for (Eigen::Index j = 0; j < pip.size(); ++j)
            t.add_row({r.inclusion.names[static_cast<std::size_t>(j)], format_number(pip(j))});
        std::cout << t.to_csv();
        out.table("pip_M9", t);
    } else if (id == "M5" || id == "M6" || id == "M7" || id == "M8") {
        const auto draws = bayes_draws(id, data, s.seed);
        std::cout << posterior_table(summarize_posterior(draws)).to_csv();
        write_posterior(out, id, draws);
    } else if (id == "M10") {
        const auto fit = fit_beta(data, BetaRegConfig{}, beta_default_run(s.seed));
        std::cout << posterior_table(summarize_posterior(fit.draws)).to_csv();
        std::cout << "acceptance: coefficients " << fit.coef_acceptance << ", precision " << fit.phi_acceptance << "\n";
        write_posterior(out, id, fit.draws);
    } else if (id == "M11") {
        const auto graph = graph_for(s, data, false);
        const auto fit = fit_bym2(data, graph, Bym2Config{}, gaussian_default_run(s.seed));
        std::cout << posterior_table(summarize_posterior(fit.draws)).to_csv();
        write_posterior(out, id, fit.draws);
    } else if (id == "M12") {
        const auto fit = fit_bart(data, BartConfig{}, s.seed);
        const auto t = importance_table(data.predictor_names, {"split_share"}, {fit.importance});
        std::cout << t.to_csv();
        out.table("fit_M12", t);
    } else if (id == "M13") {
        const auto gp = fit_gp(data, std::nullopt, GpOptions{}, s.seed);
        Table t;
        t.header = {"hyperparameter", "value"};
        for (Eigen::Index j = 0; j < data.p(); ++j)
            t.add_row({"length_scale_" + data.predictor_names[static_cast<std::size_t>(j)],
                       format_number(gp.config.length_scales(j))});
        t.add_row({"signal_variance", format_number(gp.config.signal_variance)});
        t.add_row({"noise_variance", format_number(gp.config.noise_variance)});
        t.add_row({"log_marginal_likelihood", format_number(gp.log_marginal)});
        std::cout << t.to_csv();
        out.table("fit_M13", t);
    } else {
        const auto predict = fitted_predictor(id, data, s.seed);
        const auto imp = permutation_importance(predict, data.predictors, data.outcome, 20, s.seed, data.predictor_names);
        const auto t = importance_table(imp.names, {"mse_increase", "sd"}, {imp.mean_increase, imp.sd_increase});
        std::cout << t.to_csv();
        out.table("fit_" + id, t);
    }
    return 0;
}

int cmd_loocv(const Settings& s, const Output& out, bool all, const std::string& single) {
    const auto data = load_dataset(s.data);
    std::vector<std::string> ids;
    if (all) ids = comparison_model_ids();
    else if (!single.empty()) ids = {single};
    else ids = s.models;
    if (ids.empty()) throw ValidationError("loocv needs --all, a model id, or --models");
    for (const auto& id : ids) check_model_id(id);

    const auto options = portfolio_options(s, data);
    std::vector<LoocvReport> reports;
    for (const auto& id : ids) {
        reports.push_back(loocv(make_adapter(id, data, options), data, s.seed));
        std::cerr << id << " rmse " << reports.back().rmse << " (" << reports.back().wall_seconds << " s)\n";
    }
    const auto board = compare(std::move(reports));
    const auto table = board.to_table();
    std::cout << table.to_csv();
    out.table("leaderboard", table);
    out.run("leaderboard", board.to_json());
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& r : board.rows) {
        labels.push_back(r.model_id + " " + r.label + (r.approximate ? " *" : ""));
        values.push_back(r.rmse);
    }
    out.figure("loocv_rmse", bar_chart_svg(labels, values, "Exact leave-one-out RMSE", "RMSE (percentage points)"));
    return 0;
}

int cmd_spatial(const Settings& s, const Output& out, const std::string& mode) {
    if (mode != "moran" && mode != "bym2") throw ValidationError("spatial mode must be 'moran' or 'bym2'");
    const auto data = load_dataset(s.data);
    const auto graph = graph_for(s, data, true).aligned_to(data.ids);
    if (mode == "moran") {
        const auto w = spatial_weights(graph);
        const auto ols = fit_ols(data.outcome, data.predictors);
        const Eigen::VectorXd resid = data.outcome - ols.predict(data.predictors);
        Table t;
        t.header = {"series", "morans_i", "expected", "p_value", "permutations"};
        const double expected = -1.0 / static_cast<double>(data.n() - 1);
        for (const auto& [name, values] : {std::pair<std::string, Eigen::VectorXd>{"poverty", data.outcome},
                                           std::pair<std::string, Eigen::VectorXd>{"ols_residuals", resid}}) {
            const auto test = morans_mc_test(values, w, 999, s.seed);
            t.add_row({name, format_number(test.observed), format_number(expected), format_number(test.p_value), "999"});
        }
        std::cout << t.to_csv();
        out.table("moran", t);
    } else {
        const auto fit = fit_bym2(data.outcome, data.predictors, graph, Bym2Config{}, gaussian_default_run(s.seed),
                                  data.predictor_names);
        const auto t = posterior_table(summarize_posterior(fit.draws));
        std::cout << t.to_csv() << "scaling factor " << fit.scaling << "\n";
        out.table("bym2_posterior", t);
    }
    return 0;
}

int cmd_sensitivity(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    SensitivityOptions o;
    o.run = gaussian_default_run(s.seed);
    o.fold_run = s.fold_run;
    o.fold_run.seed = s.seed;
    const auto rows = prior_sensitivity(data, o);
    const auto t = sensitivity_table(rows);
    std::cout << t.to_csv();
    out.table("sensitivity", t);
    out.figure("prior_sensitivity", sensitivity_svg(rows, "ICT coefficient across prior variances"));
    return 0;
}

int cmd_importance(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    const auto bart = fit_bart(data, BartConfig{}, s.seed);
    const auto rf = fitted_predictor("M14", data, s.seed);
    const auto imp = permutation_importance(rf, data.predictors, data.outcome, 20, s.seed, data.predictor_names);
    const Eigen::VectorXd bart_pct = 100.0 * bart.importance;
    const auto t = importance_table(data.predictor_names, {"bart_split_share_pct", "rf_mse_increase"},
                                    {bart_pct, imp.mean_increase});
    std::cout << t.to_csv();
    out.table("importance", t);
    auto sorted_bars = [&](const Eigen::VectorXd& v) {
        std::vector<std::size_t> order(static_cast<std::size_t>(v.size()));
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return v(static_cast<Eigen::Index>(a)) > v(static_cast<Eigen::Index>(b));
        });
        std::pair<std::vector<std::string>, std::vector<double>> bars;
        for (auto k : order) {
            bars.first.push_back(data.predictor_names[k]);
            bars.second.push_back(v(static_cast<Eigen::Index>(k)));
        }
        return bars;
    };
    const auto b = sorted_bars(bart_pct);
    out.figure("importance_bart", bar_chart_svg(b.first, b.second, "BART split-rule share", "share of splits (%)"));
    const auto r = sorted_bars(imp.mean_increase);
    out.figure("importance_rf", bar_chart_svg(r.first, r.second, "Random forest permutation importance",
                                              "increase in MSE when permuted"));
    return 0;
}

int cmd_shap(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    const std::string id = s.models.empty() ? "M15" : s.models.front();
    const auto predict = fitted_predictor(id, data, s.seed);
    const auto shap = shapley_table(predict, data.predictors, data.predictors, 500, s.seed);
    out.table("shap_" + id, shapley_csv(data.ids, data.predictor_names, shap.values, shap.baseline));
    const auto z = standardize(data.predictors).z;
    out.figure("shap_beeswarm", beeswarm_svg(data.predictor_names, shap.values, z, "Shapley values, " + model_label(id)));
    return 0;
}

int cmd_ppc(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    const std::string id = s.models.empty() ? "M8" : s.models.front();
    const auto draws = bayes_draws(id, data, s.seed);
    const auto reps = posterior_predictive(draws, data.predictors, 100, s.seed);
    std::vector<std::string> cols(data.ids.begin(), data.ids.end());
    Table t;
    t.header = cols;
    for (Eigen::Index r = 0; r < reps.rows(); ++r) {
        std::vector<std::string> row;
        for (Eigen::Index i = 0; i < reps.cols(); ++i) row.push_back(format_number(reps(r, i)));
        t.add_row(std::move(row));
    }
    out.table("ppc_replicates_" + id, t);
    out.figure("ppc", ppc_density_svg(data.outcome, reps, "Posterior predictive check, " + model_label(id)));
    std::cout << "mean of replicate means " << reps.rowwise().mean().mean() << " (observed " << data.outcome.mean()
              << ")\n";
    return 0;
}

int cmd_forest_plot(const Settings& s, const Output& out) {
    const auto data = load_dataset(s.data);
    const std::string id = s.models.empty() ? "M8" : s.models.front();
    const auto draws = bayes_draws(id, data, s.seed);
    const auto rows = slope_summaries(draws, data);
    const auto t = posterior_table(rows);
    std::cout << t.to_csv();
    out.table("forest_" + id, t);
    out.figure("forest_" + id, forest_plot_svg(rows, model_label(id) + ": posterior means and 95% intervals"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"povreg: small-sample regression and model comparison for provincial poverty data"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string data_flag, adjacency_flag, out_flag, models_flag, config_flag;
    std::uint64_t seed_flag = 42;
    auto* data_opt = app.add_option("--data", data_flag, "CSV dataset (defaults to the bundled corpus)");
    auto* adj_opt = app.add_option("--adjacency", adjacency_flag, "edge-list adjacency file");
    auto* seed_opt = app.add_option("--seed", seed_flag, "master RNG seed");
    auto* out_opt = app.add_option("--out", out_flag, "output directory");
    auto* models_opt = app.add_option("--models", models_flag, "comma-separated model ids, e.g. M1,M2");
    app.add_option("--config", config_flag, "JSON config file; command-line flags take precedence");

    auto* describe = app.add_subcommand("describe", "descriptive statistics, correlations, heatmap");
    auto* vif_cmd = app.add_subcommand("vif", "variance inflation factors");
    auto* fit = app.add_subcommand("fit", "fit one model on the full data");
    std::string fit_model;
    fit->add_option("model", fit_model, "model id M1..M15")->required();
    auto* loo = app.add_subcommand("loocv", "exact leave-one-out comparison");
    bool loo_all = false;
    std::string loo_model;
    loo->add_flag("--all", loo_all, "every model of the comparison portfolio");
    loo->add_option("model", loo_model, "single model id");
    auto* spatial = app.add_subcommand("spatial", "Moran's I test or BYM2 fit (needs --adjacency)");
    std::string spatial_mode;
    spatial->add_option("mode", spatial_mode, "moran or bym2")->required();
    auto* sens = app.add_subcommand("sensitivity", "prior-scale sensitivity of the Gaussian-prior model");
    auto* imp = app.add_subcommand("importance", "BART split shares and random-forest permutation importance");
    auto* shap = app.add_subcommand("shap", "Monte Carlo Shapley values (default model M15)");
    auto* ppc = app.add_subcommand("ppc", "posterior predictive check (default model M8)");
    auto* forest = app.add_subcommand("forest-plot", "posterior forest plot (default model M8)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        Settings s;
        if (!config_flag.empty()) apply_config_file(config_flag, s);
        if (data_opt->count()) s.data = data_flag;
        if (adj_opt->count()) s.adjacency = fs::path(adjacency_flag);
        if (seed_opt->count()) s.seed = seed_flag;
        if (out_opt->count()) s.out = out_flag;
        if (models_opt->count()) s.models = split_models(models_flag);
        validate_settings(s);
        const Output out(s.out);

        if (describe->parsed()) return cmd_describe(s, out);
        if (vif_cmd->parsed()) return cmd_vif(s, out);
        if (fit->parsed()) return cmd_fit(s, out, fit_model);
        if (loo->parsed()) return cmd_loocv(s, out, loo_all, loo_model);
        if (spatial->parsed()) return cmd_spatial(s, out, spatial_mode);
        if (sens->parsed()) return cmd_sensitivity(s, out);
        if (imp->parsed()) return cmd_importance(s, out);
        if (shap->parsed()) return cmd_shap(s, out);
        if (ppc->parsed()) return cmd_ppc(s, out);
        if (forest->parsed()) return cmd_forest_plot(s, out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
