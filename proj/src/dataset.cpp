#include "povreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "povreg/error.hpp"
#include "povreg/stats.hpp"

namespace povreg {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string describe_bounds(const ColumnSpec& spec) {
    std::ostringstream os;
    os << "(" << (std::isnan(spec.lower) ? std::string("-inf") : std::to_string(spec.lower)) << ", "
       << (std::isnan(spec.upper) ? std::string("inf") : std::to_string(spec.upper)) << ")";
    return os.str();
}

bool within(const ColumnSpec& spec, double v) {
    if (!std::isnan(spec.lower) && !(v > spec.lower)) return false;
    if (!std::isnan(spec.upper) && !(v < spec.upper)) return false;
    return true;
}

}  // namespace

DatasetSchema DatasetSchema::provincial() {
    DatasetSchema s;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.predictors = {
        {"schooling", "years", nan, nan},
        {"life_exp", "years", nan, nan},
        {"unmet_health", "%", nan, nan},
        {"gini", "ratio", 0.0, 1.0},
        {"sanitation", "%", nan, nan},
        {"water", "%", nan, nan},
        {"electricity", "%", nan, nan},
        {"unemployment", "%", nan, nan},
        {"ict", "%", nan, nan},
    };
    return s;
}

Eigen::Index ProvincialDataset::predictor_index(const std::string& name) const {
    const auto it = std::find(predictor_names.begin(), predictor_names.end(), name);
    if (it == predictor_names.end()) throw ValidationError("unknown predictor '" + name + "'");
    return static_cast<Eigen::Index>(it - predictor_names.begin());
}

ProvincialDataset ProvincialDataset::subset(const std::vector<Eigen::Index>& rows) const {
    ProvincialDataset out;
    out.outcome_name = outcome_name;
    out.predictor_names = predictor_names;
    out.predictor_units = predictor_units;
    out.outcome.resize(static_cast<Eigen::Index>(rows.size()));
    out.predictors.resize(static_cast<Eigen::Index>(rows.size()), p());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = rows[k];
        const auto i = static_cast<Eigen::Index>(k);
        if (!ids.empty()) out.ids.push_back(ids[static_cast<std::size_t>(r)]);
        out.outcome(i) = outcome(r);
        out.predictors.row(i) = predictors.row(r);
    }
    return out;
}

ProvincialDataset ProvincialDataset::without_row(Eigen::Index row) const {
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(n()));
    for (Eigen::Index i = 0; i < n(); ++i)
        if (i != row) rows.push_back(i);
    return subset(rows);
}

void validate(const ProvincialDataset& data, const DatasetSchema& schema) {
    const auto n = data.n();
    if (n < 3) throw ValidationError("dataset needs at least 3 rows, got " + std::to_string(n));
    if (data.predictors.rows() != n)
        throw ValidationError("predictor matrix has " + std::to_string(data.predictors.rows()) +
                              " rows but outcome has " + std::to_string(n));
    if (static_cast<Eigen::Index>(data.predictor_names.size()) != data.p())
        throw ValidationError("predictor name count does not match predictor columns");
    std::map<std::string, std::size_t> first_row;
    for (std::size_t i = 0; i < data.ids.size(); ++i) {
        const auto [it, fresh] = first_row.emplace(data.ids[i], i);
        if (!fresh)
            throw ValidationError("row " + std::to_string(i + 1) + ": province '" + data.ids[i] +
                                  "' already appears in row " + std::to_string(it->second + 1));
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = data.outcome(i);
        if (!std::isfinite(y) || !within(schema.outcome, y))
            throw ValidationError("row " + std::to_string(i + 1) + ", column '" + data.outcome_name +
                                  "': value " + std::to_string(y) + " outside " +
                                  describe_bounds(schema.outcome));
    }
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        const auto& name = data.predictor_names[static_cast<std::size_t>(j)];
        const auto spec = std::find_if(schema.predictors.begin(), schema.predictors.end(),
                                       [&](const ColumnSpec& c) { return c.name == name; });
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = data.predictors(i, j);
            if (!std::isfinite(v))
                throw ValidationError("row " + std::to_string(i + 1) + ", column '" + name +
                                      "': non-finite value");
            if (spec != schema.predictors.end() && !within(*spec, v))
                throw ValidationError("row " + std::to_string(i + 1) + ", column '" + name +
                                      "': value " + std::to_string(v) + " outside " +
                                      describe_bounds(*spec));
        }
        if (stats::sample_sd(data.predictors.col(j)) <= 0.0)
            throw ValidationError("column '" + name + "' is constant (sample SD 0)");
    }
}

ProvincialDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("data file '" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);

    std::map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) position[header[c]] = c;
    auto locate = [&](const std::string& name) {
        const auto it = position.find(name);
        if (it == position.end()) throw ValidationError("missing column '" + name + "' in header");
        return it->second;
    };

    const auto id_col = locate(schema.id_column);
    const auto y_col = locate(schema.outcome.name);
    std::vector<std::size_t> x_cols;
    for (const auto& spec : schema.predictors) x_cols.push_back(locate(spec.name));

    std::vector<std::string> ids;
    std::vector<double> y;
    std::vector<std::vector<double>> x;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() < header.size())
            throw ValidationError("row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " cells, found " +
                                  std::to_string(cells.size()));
        auto number = [&](std::size_t col) {
            double v = 0.0;
            if (!parse_double(cells[col], v))
                throw ValidationError("row " + std::to_string(row) + ", column '" + header[col] +
                                      "': non-numeric cell '" + cells[col] + "'");
            return v;
        };
        ids.push_back(cells[id_col]);
        y.push_back(number(y_col));
        std::vector<double> xr;
        for (auto c : x_cols) xr.push_back(number(c));
        x.push_back(std::move(xr));
    }

    ProvincialDataset data;
    data.ids = std::move(ids);
    data.outcome_name = schema.outcome.name;
    data.outcome = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    data.predictors.resize(static_cast<Eigen::Index>(x.size()),
                           static_cast<Eigen::Index>(schema.predictors.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x_cols.size(); ++j)
            data.predictors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
    for (const auto& spec : schema.predictors) {
        data.predictor_names.push_back(spec.name);
        data.predictor_units.push_back(spec.unit);
    }
    validate(data, schema);
    return data;
}

std::filesystem::path bundled_corpus_path() {
    return std::filesystem::path(POVREG_SOURCE_DIR) / "data" / "provinces.csv";
}

DescriptiveTable describe(const ProvincialDataset& data) {
    DescriptiveTable table;
    auto row = [](const std::string& name, const Eigen::VectorXd& v) {
        return DescriptiveRow{name, v.mean(), stats::sample_sd(v), v.minCoeff(), stats::median(v),
                              v.maxCoeff()};
    };
    table.push_back(row(data.outcome_name, data.outcome));
    for (Eigen::Index j = 0; j < data.p(); ++j)
        table.push_back(row(data.predictor_names[static_cast<std::size_t>(j)], data.predictors.col(j)));
    return table;
}

Eigen::MatrixXd pearson(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    const auto k = m.cols();
    Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(norms(j) > 0.0)) {
            const std::string label = j < static_cast<Eigen::Index>(names.size())
                                          ? names[static_cast<std::size_t>(j)]
                                          : std::to_string(j);
            throw ValidationError("correlation undefined: column '" + label + "' is constant");
        }
    }
    Eigen::MatrixXd r = centered.transpose() * centered;
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) r(a, b) /= norms(a) * norms(b);
        r(a, a) = 1.0;
    }
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    return 0.5 * (r + r.transpose());
}

std::vector<std::size_t> average_linkage_order(const Eigen::MatrixXd& distance) {
    const auto k = static_cast<std::size_t>(distance.rows());
    struct Cluster {
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < k; ++i) clusters.push_back({{i}});

    auto linkage = [&](const Cluster& a, const Cluster& b) {
        double total = 0.0;
        for (auto i : a.members)
            for (auto j : b.members)
                total += distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return total / static_cast<double>(a.members.size() * b.members.size());
    };

    while (clusters.size() > 1) {
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a)
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double d = linkage(clusters[a], clusters[b]);
                if (d < best - 1e-15) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        auto merged = clusters[best_a].members;
        merged.insert(merged.end(), clusters[best_b].members.begin(), clusters[best_b].members.end());
        clusters[best_a].members = std::move(merged);
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
    }
    return clusters.front().members;
}

CorrelationResult correlation_matrix(const ProvincialDataset& data) {
    CorrelationResult out;
    out.names.push_back(data.outcome_name);
    out.names.insert(out.names.end(), data.predictor_names.begin(), data.predictor_names.end());
    Eigen::MatrixXd all(data.n(), data.p() + 1);
    all.col(0) = data.outcome;
    all.rightCols(data.p()) = data.predictors;
    out.matrix = pearson(all, out.names);
    const Eigen::MatrixXd dist = 1.0 - out.matrix.array().abs();
    out.leaf_order = average_linkage_order(dist);
    return out;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
}

Eigen::RowVectorXd Standardizer::apply(const Eigen::RowVectorXd& x) const {
    return (x - means.transpose()).array() / sds.transpose().array();
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& z) const {
    return (z.array().rowwise() * sds.transpose().array()).matrix().rowwise() + means.transpose();
}

Standardizer Standardizer::identity(Eigen::Index p) {
    return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
}

StandardizedDesign standardize(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.means = x.colwise().mean().transpose();
    s.sds.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        s.sds(j) = stats::sample_sd(x.col(j));
        if (!(s.sds(j) > 0.0))
            throw ValidationError("cannot standardize constant column " + std::to_string(j));
    }
    return {s.apply(x), s};
}

StandardizedDesign standardize(const ProvincialDataset& data) {
    try {
        return standardize(data.predictors);
    } catch (const ValidationError&) {
        for (Eigen::Index j = 0; j < data.p(); ++j)
            if (!(stats::sample_sd(data.predictors.col(j)) > 0.0))
                throw ValidationError("cannot standardize constant column '" +
                                      data.predictor_names[static_cast<std::size_t>(j)] + "'");
        throw;
    }
}

CoefficientVector rescale_coefficients(const CoefficientVector& coefs, const Standardizer& std) {
    if (coefs.scale != Scale::standardized)
        throw ValidationError("rescale_coefficients expects standardized-scale coefficients");
    if (coefs.slopes.size() != std.sds.size())
        throw ValidationError("coefficient count does not match the standardizer");
    CoefficientVector out;
    out.scale = Scale::original;
    out.slopes = coefs.slopes.array() / std.sds.array();
    out.intercept = coefs.intercept - out.slopes.dot(std.means);
    return out;
}

}  // namespace povreg
