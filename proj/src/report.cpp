#include "povreg/report.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "povreg/error.hpp"

namespace povreg {

Table descriptive_table(const DescriptiveTable& rows) {
    Table t;
    t.header = {"variable", "mean", "sd", "min", "median", "max"};
    for (const auto& r : rows)
        t.add_row({r.name, format_number(r.mean), format_number(r.sd), format_number(r.min), format_number(r.median),
                   format_number(r.max)});
    return t;
}

Table correlation_table(const CorrelationResult& corr) { return matrix_table(corr.names, corr.matrix); }

Table matrix_table(const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
    Table t;
    t.header = {"variable"};
    t.header.insert(t.header.end(), names.begin(), names.end());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_number(m(i, j)));
        t.add_row(std::move(row));
    }
    return t;
}

Table vif_table(const VifTable& vif) {
    Table t;
    t.header = {"variable", "vif", "inverse_vif"};
    for (const auto& r : vif.rows) t.add_row({r.name, format_number(r.vif), format_number(r.inverse)});
    t.add_row({"mean", format_number(vif.mean_vif), ""});
    return t;
}

Table coefficient_table(const std::vector<std::string>& names, const CoefficientVector& coefs) {
    Table t;
    t.header = {"term", "estimate"};
    t.add_row({"intercept", format_number(coefs.intercept)});
    for (Eigen::Index j = 0; j < coefs.size(); ++j)
        t.add_row({names[static_cast<std::size_t>(j)], format_number(coefs.slopes(j))});
    return t;
}

Table posterior_table(const std::vector<ParameterSummary>& rows) {
    Table t;
    t.header = {"parameter", "mean", "sd", "q2.5", "q97.5", "p_negative"};
    for (const auto& r : rows)
        t.add_row({r.name, format_number(r.mean), format_number(r.sd), format_number(r.q025), format_number(r.q975),
                   format_number(r.prob_negative)});
    return t;
}

Table convergence_table(const ConvergenceReport& report) {
    Table t;
    t.header = {"parameter", "rhat", "ess_bulk"};
    for (std::size_t k = 0; k < report.names.size(); ++k)
        t.add_row({report.names[k], format_number(report.rhat[k]), format_number(report.ess_bulk[k])});
    return t;
}

Table sensitivity_table(const std::vector<SensitivityRow>& rows) {
    Table t;
    t.header = {"prior_scale", "mean", "q2.5", "q97.5", "p_negative", "waic", "p_waic", "loo_rmse"};
    for (const auto& r : rows)
        t.add_row({format_number(r.scale), format_number(r.target.mean), format_number(r.target.q025),
                   format_number(r.target.q975), format_number(r.target.prob_negative), format_number(r.waic.waic),
                   format_number(r.waic.p_waic), format_number(r.loo_rmse)});
    return t;
}

Table importance_table(const std::vector<std::string>& names, const std::vector<std::string>& columns,
                       const std::vector<Eigen::VectorXd>& values) {
    if (columns.size() != values.size()) throw ValidationError("importance table: column/value count mismatch");
    Table t;
    t.header = {"variable"};
    t.header.insert(t.header.end(), columns.begin(), columns.end());
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<std::string> row{names[j]};
        for (const auto& v : values) row.push_back(format_number(v(static_cast<Eigen::Index>(j))));
        t.add_row(std::move(row));
    }
    return t;
}

Table shapley_csv(const std::vector<std::string>& ids, const std::vector<std::string>& names,
                  const Eigen::MatrixXd& values, double baseline) {
    Table t;
    t.header = {"id", "baseline"};
    t.header.insert(t.header.end(), names.begin(), names.end());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        std::vector<std::string> row{ids[static_cast<std::size_t>(i)], format_number(baseline)};
        for (Eigen::Index j = 0; j < values.cols(); ++j) row.push_back(format_number(values(i, j)));
        t.add_row(std::move(row));
    }
    return t;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace {

std::string num(double v) { return format_fixed(v, 2); }

class Svg {
public:
    Svg(double width, double height) : w_(width), h_(height) {
        s_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\"" << num(h_)
           << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_) << "\" font-family=\"Helvetica, Arial, sans-serif\">\n"
           << "<rect x=\"0\" y=\"0\" width=\"" << num(w_) << "\" height=\"" << num(h_) << "\" fill=\"white\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = "") {
        s_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
           << "\" fill=\"" << fill << "\"" << extra << "/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
              const std::string& extra = "") {
        s_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
           << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"" << extra << "/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill, const std::string& extra = "") {
        s_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\"" << fill << "\""
           << extra << "/>\n";
    }
    void text(double x, double y, const std::string& t, const std::string& anchor = "start", double size = 12.0,
              const std::string& extra = "") {
        s_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size) << "\" text-anchor=\""
           << anchor << "\"" << extra << ">" << xml_escape(t) << "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width,
                  const std::string& extra = "") {
        s_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"" << extra
           << " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) s_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
        s_ << "\"/>\n";
    }
    std::string finish() {
        s_ << "</svg>\n";
        return s_.str();
    }

private:
    double w_, h_;
    std::ostringstream s_;
};

/// Blue-white-red ramp on [-1, 1].
std::string diverging(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r, g, b;
    if (v < 0) {
        const double t = -v;
        r = static_cast<int>(std::lround(255 - t * (255 - 33)));
        g = static_cast<int>(std::lround(255 - t * (255 - 102)));
        b = static_cast<int>(std::lround(255 - t * (255 - 172)));
    } else {
        r = static_cast<int>(std::lround(255 - v * (255 - 178)));
        g = static_cast<int>(std::lround(255 - v * (255 - 24)));
        b = static_cast<int>(std::lround(255 - v * (255 - 43)));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

struct Axis {
    double lo, hi, px_lo, px_hi;
    double map(double v) const { return hi > lo ? px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo) : 0.5 * (px_lo + px_hi); }
};

/// Round-number ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 5) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
    return out;
}

void x_axis(Svg& svg, const Axis& ax, double y, const std::string& label) {
    svg.line(ax.px_lo, y, ax.px_hi, y, "#333");
    for (double t : ticks(ax.lo, ax.hi)) {
        const double x = ax.map(t);
        svg.line(x, y, x, y + 4, "#333");
        std::ostringstream s;
        s << t;
        svg.text(x, y + 16, s.str(), "middle", 10);
    }
    svg.text(0.5 * (ax.px_lo + ax.px_hi), y + 32, label, "middle", 11);
}

void padded(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

Eigen::VectorXd kde(const Eigen::VectorXd& data, const Eigen::VectorXd& grid) {
    const double n = static_cast<double>(data.size());
    const double mean = data.mean();
    const double sd = std::sqrt((data.array() - mean).square().sum() / std::max(1.0, n - 1.0));
    const double h = std::max(1.06 * sd * std::pow(n, -0.2), 1e-6);
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g)
        out(g) = ((-0.5 * ((data.array() - grid(g)) / h).square()).exp().sum()) / (n * h * std::sqrt(2.0 * std::numbers::pi));
    return out;
}

}  // namespace

std::string heatmap_svg(const CorrelationResult& corr, const std::string& title) {
    const auto k = corr.names.size();
    const double cell = 44.0, left = 120.0, top = 60.0;
    Svg svg(left + cell * k + 90.0, top + cell * k + 110.0);
    svg.text(left, 30, title, "start", 15, " font-weight=\"bold\"");
    for (std::size_t a = 0; a < k; ++a) {
        const auto i = static_cast<Eigen::Index>(corr.leaf_order[a]);
        svg.text(left - 6, top + cell * a + cell * 0.6, corr.names[static_cast<std::size_t>(i)], "end", 11);
        const double cx = left + cell * a + cell * 0.5;
        const double cy = top + cell * k + 8;
        svg.text(cx, cy, corr.names[static_cast<std::size_t>(i)], "end", 11,
                 " transform=\"rotate(-45 " + num(cx) + ' ' + num(cy) + ")\"");
        for (std::size_t b = 0; b < k; ++b) {
            const auto j = static_cast<Eigen::Index>(corr.leaf_order[b]);
            const double v = corr.matrix(i, j);
            svg.rect(left + cell * b, top + cell * a, cell, cell, diverging(v), " stroke=\"white\"");
            svg.text(left + cell * b + cell * 0.5, top + cell * a + cell * 0.58, format_fixed(v, 2), "middle", 10,
                     std::abs(v) > 0.6 ? " fill=\"white\"" : "");
        }
    }
    // Color legend.
    const double lx = left + cell * k + 30.0;
    for (int s = 0; s < 20; ++s) {
        const double v = 1.0 - s / 9.5;
        svg.rect(lx, top + s * cell * k / 20.0, 16, cell * k / 20.0 + 0.5, diverging(v));
    }
    svg.text(lx + 20, top + 10, "+1", "start", 10);
    svg.text(lx + 20, top + cell * k, "-1", "start", 10);
    return svg.finish();
}

std::string forest_plot_svg(const std::vector<ParameterSummary>& rows, const std::string& title) {
    const double left = 140.0, right = 40.0, top = 50.0, row_h = 28.0, width = 640.0;
    const double height = top + row_h * static_cast<double>(rows.size()) + 60.0;
    double lo = 0.0, hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.q025);
        hi = std::max(hi, r.q975);
    }
    padded(lo, hi);
    const Axis ax{lo, hi, left, width - right};
    Svg svg(width, height);
    svg.text(left, 28, title, "start", 15, " font-weight=\"bold\"");
    const double bottom = top + row_h * static_cast<double>(rows.size());
    svg.line(ax.map(0.0), top - 8, ax.map(0.0), bottom, "#999", 1.0, " stroke-dasharray=\"4 3\"");
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        const double y = top + row_h * (static_cast<double>(k) + 0.5);
        const bool excludes_zero = r.q025 > 0.0 || r.q975 < 0.0;
        const std::string color = excludes_zero ? "#b2182b" : "#2c3e50";
        svg.text(left - 8, y + 4, r.name, "end", 11);
        svg.line(ax.map(r.q025), y, ax.map(r.q975), y, color, 2.0);
        svg.circle(ax.map(r.mean), y, 4.0, color);
    }
    x_axis(svg, ax, bottom + 6, "posterior mean and 95% interval");
    return svg.finish();
}

std::string bar_chart_svg(const std::vector<std::string>& labels, const std::vector<double>& values,
                          const std::string& title, const std::string& axis_label) {
    if (labels.size() != values.size()) throw ValidationError("bar chart: label/value count mismatch");
    const double left = 200.0, right = 60.0, top = 50.0, row_h = 26.0, width = 680.0;
    const double height = top + row_h * static_cast<double>(values.size()) + 60.0;
    double lo = 0.0, hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    hi += 0.05 * (hi - lo);
    const Axis ax{lo, hi, left, width - right};
    Svg svg(width, height);
    svg.text(left, 28, title, "start", 15, " font-weight=\"bold\"");
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double y = top + row_h * static_cast<double>(k);
        const double x0 = ax.map(std::min(0.0, values[k]));
        const double x1 = ax.map(std::max(0.0, values[k]));
        svg.text(left - 8, y + row_h * 0.62, labels[k], "end", 11);
        svg.rect(x0, y + 4, std::max(x1 - x0, 0.5), row_h - 8, "#4682b4");
        svg.text(x1 + 4, y + row_h * 0.62, format_fixed(values[k], 2), "start", 10);
    }
    x_axis(svg, ax, top + row_h * static_cast<double>(values.size()) + 4, axis_label);
    return svg.finish();
}

std::string beeswarm_svg(const std::vector<std::string>& names, const Eigen::MatrixXd& shap,
                         const Eigen::MatrixXd& features, const std::string& title) {
    const auto p = shap.cols();
    const double left = 150.0, right = 40.0, top = 50.0, row_h = 34.0, width = 700.0;
    const double height = top + row_h * static_cast<double>(p) + 60.0;
    double lo = std::min(0.0, shap.minCoeff()), hi = std::max(0.0, shap.maxCoeff());
    padded(lo, hi);
    const Axis ax{lo, hi, left, width - right};
    Svg svg(width, height);
    svg.text(left, 28, title, "start", 15, " font-weight=\"bold\"");
    svg.line(ax.map(0.0), top, ax.map(0.0), top + row_h * static_cast<double>(p), "#999", 1.0, " stroke-dasharray=\"4 3\"");
    for (Eigen::Index j = 0; j < p; ++j) {
        const double yc = top + row_h * (static_cast<double>(j) + 0.5);
        svg.text(left - 8, yc + 4, names[static_cast<std::size_t>(j)], "end", 11);
        const double fmin = features.col(j).minCoeff(), fmax = features.col(j).maxCoeff();
        // Stack points that land in the same horizontal bin, alternating above and below the row centre.
        std::vector<int> bins(200, 0);
        for (Eigen::Index i = 0; i < shap.rows(); ++i) {
            const double x = ax.map(shap(i, j));
            const int b = std::clamp(static_cast<int>((x - left) / (width - left - right) * 199.0), 0, 199);
            const int k = bins[static_cast<std::size_t>(b)]++;
            const double offset = (k % 2 ? 1.0 : -1.0) * 3.0 * ((k + 1) / 2);
            const double t = fmax > fmin ? (features(i, j) - fmin) / (fmax - fmin) : 0.5;
            svg.circle(x, yc + std::clamp(offset, -row_h * 0.45, row_h * 0.45), 3.0, diverging(2.0 * t - 1.0),
                       " stroke=\"#555\" stroke-width=\"0.3\"");
        }
    }
    x_axis(svg, ax, top + row_h * static_cast<double>(p) + 4, "Shapley value (contribution to prediction)");
    return svg.finish();
}

std::string ppc_density_svg(const Eigen::VectorXd& observed, const Eigen::MatrixXd& replicates, const std::string& title) {
    double lo = std::min(observed.minCoeff(), replicates.minCoeff());
    double hi = std::max(observed.maxCoeff(), replicates.maxCoeff());
    padded(lo, hi);
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(120, lo, hi);
    std::vector<Eigen::VectorXd> dens;
    for (Eigen::Index r = 0; r < replicates.rows(); ++r) dens.push_back(kde(replicates.row(r).transpose(), grid));
    const Eigen::VectorXd obs = kde(observed, grid);
    double top_density = obs.maxCoeff();
    for (const auto& d : dens) top_density = std::max(top_density, d.maxCoeff());

    const double width = 640.0, height = 400.0, left = 50.0, right = 30.0, top = 50.0, bottom = 330.0;
    const Axis ax{lo, hi, left, width - right};
    const Axis ay{0.0, top_density * 1.05, bottom, top};
    Svg svg(width, height);
    svg.text(left, 28, title, "start", 15, " font-weight=\"bold\"");
    auto curve = [&](const Eigen::VectorXd& d) {
        std::vector<std::pair<double, double>> pts;
        for (Eigen::Index g = 0; g < grid.size(); ++g) pts.emplace_back(ax.map(grid(g)), ay.map(d(g)));
        return pts;
    };
    for (const auto& d : dens) svg.polyline(curve(d), "#9ecae1", 0.8, " stroke-opacity=\"0.6\"");
    svg.polyline(curve(obs), "#08306b", 2.5);
    x_axis(svg, ax, bottom + 4, "outcome");
    svg.text(width - right, top + 10, "observed (dark), replicates (light)", "end", 10);
    return svg.finish();
}

std::string sensitivity_svg(const std::vector<SensitivityRow>& rows, const std::string& title) {
    if (rows.empty()) throw ValidationError("sensitivity plot needs at least one row");
    double xlo = INFINITY, xhi = -INFINITY, ylo = 0.0, yhi = 0.0;
    for (const auto& r : rows) {
        xlo = std::min(xlo, std::log10(r.scale));
        xhi = std::max(xhi, std::log10(r.scale));
        ylo = std::min(ylo, r.target.q025);
        yhi = std::max(yhi, r.target.q975);
    }
    padded(xlo, xhi);
    padded(ylo, yhi);
    const double width = 640.0, height = 400.0, left = 70.0, right = 30.0, top = 50.0, bottom = 330.0;
    const Axis ax{xlo, xhi, left, width - right};
    const Axis ay{ylo, yhi, bottom, top};
    Svg svg(width, height);
    svg.text(left, 28, title, "start", 15, " font-weight=\"bold\"");
    svg.line(left, ay.map(0.0), width - right, ay.map(0.0), "#999", 1.0, " stroke-dasharray=\"4 3\"");
    std::vector<std::pair<double, double>> path;
    for (const auto& r : rows) {
        const double x = ax.map(std::log10(r.scale));
        svg.line(x, ay.map(r.target.q025), x, ay.map(r.target.q975), "#2c3e50", 2.0);
        svg.circle(x, ay.map(r.target.mean), 4.5, "#b2182b");
        path.emplace_back(x, ay.map(r.target.mean));
    }
    svg.polyline(path, "#b2182b", 1.2);
    svg.line(left, top, left, bottom, "#333");
    for (double t : ticks(ylo, yhi)) {
        std::ostringstream s;
        s << t;
        svg.line(left - 4, ay.map(t), left, ay.map(t), "#333");
        svg.text(left - 6, ay.map(t) + 3, s.str(), "end", 10);
    }
    x_axis(svg, ax, bottom + 4, "log10 prior variance");
    return svg.finish();
}

}  // namespace povreg
