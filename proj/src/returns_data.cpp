#include "prl/returns_data.hpp"

#include "prl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace prl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(first, last - first + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delimiter)) fields.push_back(trim(field));
    // getline drops a trailing empty field
    if (!line.empty() && line.back() == delimiter) fields.emplace_back();
    return fields;
}

bool is_skippable(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

void check_dates(const std::vector<std::string>& dates, const char* what) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] == dates[i - 1]) {
            throw DataError(std::string(what) + ": duplicate date '" + dates[i] + "'");
        }
        if (dates[i] < dates[i - 1]) {
            throw DataError(std::string(what) + ": dates not increasing at '" + dates[i] +
                            "' (after '" + dates[i - 1] + "')");
        }
    }
}

/// Raw delimited table: date column plus the selected numeric columns.
struct Table {
    std::vector<std::string> dates;
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};

/// Reads `path`, keeping the columns for which `keep(name)` is true.
template <class Keep>
Table read_table(const std::string& path, const ParseOptions& options, Keep keep) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        header = split(line, options.delimiter);
        break;
    }
    if (header.size() < 2) {
        throw DataError(path + ": missing header row with a date column and at least one value column");
    }

    std::vector<std::size_t> selected;
    Table table;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (keep(header[j])) {
            selected.push_back(j);
            table.columns.push_back(header[j]);
        }
    }
    if (selected.empty()) throw DataError(path + ": no value columns selected");

    std::vector<double> flat;
    const double scale = options.percent_units ? 0.01 : 1.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        const auto fields = split(line, options.delimiter);
        if (fields.size() != header.size()) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        if (fields[0].empty()) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": empty date");
        }
        table.dates.push_back(fields[0]);
        for (std::size_t j : selected) {
            const std::string& cell = fields[j];
            const std::string where = path + ": line " + std::to_string(line_no) + ", column '" +
                                      header[j] + "'";
            if (cell.empty()) throw DataError(where + ": empty cell");
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
                throw DataError(where + ": not a finite number: '" + cell + "'");
            }
            flat.push_back(v * scale);
        }
    }

    const auto T = static_cast<Eigen::Index>(table.dates.size());
    const auto K = static_cast<Eigen::Index>(selected.size());
    table.values.resize(T, K);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index k = 0; k < K; ++k) table.values(t, k) = flat[t * K + k];
    }
    check_dates(table.dates, path.c_str());
    return table;
}

bool is_excluded(const std::string& name, const ParseOptions& options) {
    if (options.riskfree_column && *options.riskfree_column == name) return true;
    return std::find(options.excluded_columns.begin(), options.excluded_columns.end(), name) !=
           options.excluded_columns.end();
}

std::vector<std::string> row_labels(Eigen::Index T) {
    std::vector<std::string> dates;
    const int width = static_cast<int>(std::to_string(T).size());
    for (Eigen::Index t = 0; t < T; ++t) {
        std::ostringstream s;
        s << std::setw(width) << std::setfill('0') << t + 1;
        dates.push_back(s.str());
    }
    return dates;
}

std::vector<std::string> column_labels(const char* prefix, Eigen::Index n) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
    return names;
}

}  // namespace

namespace detail {

LabeledPanel::LabeledPanel(std::vector<std::string> dates, std::vector<std::string> columns,
                           Eigen::MatrixXd values)
    : dates_(std::move(dates)), columns_(std::move(columns)), values_(std::move(values)) {
    if (static_cast<Eigen::Index>(dates_.size()) != values_.rows()) {
        throw DataError("panel: " + std::to_string(dates_.size()) + " dates for " +
                        std::to_string(values_.rows()) + " rows");
    }
    if (static_cast<Eigen::Index>(columns_.size()) != values_.cols()) {
        throw DataError("panel: " + std::to_string(columns_.size()) + " labels for " +
                        std::to_string(values_.cols()) + " columns");
    }
    if (!values_.allFinite()) throw DataError("panel: non-finite entries");
    check_dates(dates_, "panel");
}

}  // namespace detail

ReturnsPanel::ReturnsPanel(std::vector<std::string> dates, std::vector<std::string> assets,
                           Eigen::MatrixXd values)
    : LabeledPanel(std::move(dates), std::move(assets), std::move(values)) {
    if (T() < 2) throw DataError("returns panel: need T >= 2, got " + std::to_string(T()));
    if (N() < 1) throw DataError("returns panel: need at least one asset");
}

ReturnsPanel ReturnsPanel::from_matrix(Eigen::MatrixXd values) {
    auto dates = row_labels(values.rows());
    auto assets = column_labels("a", values.cols());
    return ReturnsPanel(std::move(dates), std::move(assets), std::move(values));
}

FactorPanel::FactorPanel(std::vector<std::string> dates, std::vector<std::string> factor_names,
                         Eigen::MatrixXd values)
    : LabeledPanel(std::move(dates), std::move(factor_names), std::move(values)) {
    if (K() < 1) throw DataError("factor panel: need at least one factor");
}

FactorPanel FactorPanel::from_matrix(Eigen::MatrixXd values) {
    auto dates = row_labels(values.rows());
    auto names = column_labels("f", values.cols());
    return FactorPanel(std::move(dates), std::move(names), std::move(values));
}

ReturnsPanel load_returns_csv(const std::string& path, const ParseOptions& options) {
    auto table = read_table(path, options,
                            [&](const std::string& name) { return !is_excluded(name, options); });
    return ReturnsPanel(std::move(table.dates), std::move(table.columns), std::move(table.values));
}

FactorPanel load_factors_csv(const std::string& path, const ParseOptions& options) {
    auto table = read_table(path, options,
                            [&](const std::string& name) { return !is_excluded(name, options); });
    return FactorPanel(std::move(table.dates), std::move(table.columns), std::move(table.values));
}

DatedSeries load_column_csv(const std::string& path, const std::string& column,
                            const ParseOptions& options) {
    auto table = read_table(path, options, [&](const std::string& name) { return name == column; });
    if (table.columns.size() != 1) {
        throw DataError(path + ": expected exactly one column named '" + column + "'");
    }
    return DatedSeries{std::move(table.dates), table.values.col(0)};
}

void write_panel_csv(const detail::LabeledPanel& panel, const std::string& path, char delimiter,
                     const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "date";
    for (const auto& name : panel.columns()) out << delimiter << name;
    out << '\n';
    char buf[32];
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
        out << panel.dates()[t];
        for (Eigen::Index j = 0; j < panel.width(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", panel.values()(t, j));
            out << delimiter << buf;
        }
        out << '\n';
    }
}

ReturnsPanel compute_excess_returns(const ReturnsPanel& returns, const DatedSeries& riskfree) {
    if (static_cast<Eigen::Index>(riskfree.dates.size()) != returns.T() ||
        riskfree.values.size() != returns.T()) {
        throw DataError("compute_excess_returns: risk-free series has " +
                        std::to_string(riskfree.values.size()) + " entries for T=" +
                        std::to_string(returns.T()));
    }
    for (Eigen::Index t = 0; t < returns.T(); ++t) {
        if (riskfree.dates[t] != returns.dates()[t]) {
            throw DataError("compute_excess_returns: date mismatch at row " + std::to_string(t + 1) +
                            ": '" + returns.dates()[t] + "' vs '" + riskfree.dates[t] + "'");
        }
    }
    Eigen::MatrixXd excess = returns.values().colwise() - riskfree.values;
    return ReturnsPanel(returns.dates(), returns.assets(), std::move(excess));
}

std::pair<ReturnsPanel, FactorPanel> align_panels(const ReturnsPanel& returns,
                                                  const FactorPanel& factors) {
    std::vector<Eigen::Index> rows_r;
    std::vector<Eigen::Index> rows_f;
    const auto& dr = returns.dates();
    const auto& df = factors.dates();
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < dr.size() && j < df.size()) {
        if (dr[i] == df[j]) {
            rows_r.push_back(static_cast<Eigen::Index>(i++));
            rows_f.push_back(static_cast<Eigen::Index>(j++));
        } else if (dr[i] < df[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    if (rows_r.size() < 2) {
        throw DataError("align_panels: only " + std::to_string(rows_r.size()) +
                        " common dates; need at least 2");
    }
    std::vector<std::string> dates;
    for (auto r : rows_r) dates.push_back(dr[r]);
    Eigen::MatrixXd rv = returns.values()(rows_r, Eigen::all);
    Eigen::MatrixXd fv = factors.values()(rows_f, Eigen::all);
    return {ReturnsPanel(dates, returns.assets(), std::move(rv)),
            FactorPanel(dates, factors.factor_names(), std::move(fv))};
}

Eigen::MatrixXd demean_columns(const Eigen::MatrixXd& values) {
    const Eigen::RowVectorXd mean = values.colwise().mean();
    return values.rowwise() - mean;
}

ReturnsPanel demean(const ReturnsPanel& panel) {
    return ReturnsPanel(panel.dates(), panel.assets(), demean_columns(panel.values()));
}

}  // namespace prl
