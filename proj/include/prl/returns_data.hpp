#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prl {

/// Parse options shared by the return and factor loaders.
struct ParseOptions {
    char delimiter = ',';
    /// Values in the file are percentages (Ken French convention); divide by 100.
    bool percent_units = false;
    /// Column holding the per-period risk-free rate. It is never treated as an
    /// asset or factor column.
    std::optional<std::string> riskfree_column;
    std::vector<std::string> excluded_columns;
};

namespace detail {

/// Dated, labelled T x K matrix. Validates its invariants on construction and
/// is immutable afterwards.
class LabeledPanel {
public:
    LabeledPanel(std::vector<std::string> dates, std::vector<std::string> columns,
                 Eigen::MatrixXd values);

    const std::vector<std::string>& dates() const { return dates_; }
    const std::vector<std::string>& columns() const { return columns_; }
    const Eigen::MatrixXd& values() const { return values_; }

    Eigen::Index periods() const { return values_.rows(); }
    Eigen::Index width() const { return values_.cols(); }

private:
    std::vector<std::string> dates_;
    std::vector<std::string> columns_;
    Eigen::MatrixXd values_;
};

}  // namespace detail

/// T x N panel of per-period returns (decimal units). T >= 2, N >= 1, finite,
/// dates strictly increasing.
class ReturnsPanel : public detail::LabeledPanel {
public:
    ReturnsPanel(std::vector<std::string> dates, std::vector<std::string> assets,
                 Eigen::MatrixXd values);

    /// Unlabelled panel; dates are zero-padded row numbers and assets "a1".."aN".
    static ReturnsPanel from_matrix(Eigen::MatrixXd values);

    const std::vector<std::string>& assets() const { return columns(); }
    Eigen::Index T() const { return periods(); }
    Eigen::Index N() const { return width(); }
};

/// T x K panel of factor observations.
class FactorPanel : public detail::LabeledPanel {
public:
    FactorPanel(std::vector<std::string> dates, std::vector<std::string> factor_names,
                Eigen::MatrixXd values);

    static FactorPanel from_matrix(Eigen::MatrixXd values);

    const std::vector<std::string>& factor_names() const { return columns(); }
    Eigen::Index T() const { return periods(); }
    Eigen::Index K() const { return width(); }
};

/// Dated scalar series, e.g. the risk-free rate.
struct DatedSeries {
    std::vector<std::string> dates;
    Eigen::VectorXd values;
};

ReturnsPanel load_returns_csv(const std::string& path, const ParseOptions& options = {});
FactorPanel load_factors_csv(const std::string& path, const ParseOptions& options = {});

/// Reads a single named column (typically the risk-free rate) with the same
/// parsing rules as the panel loaders.
DatedSeries load_column_csv(const std::string& path, const std::string& column,
                            const ParseOptions& options = {});

/// Writes a panel with 17 significant digits so that a reload is bit-exact.
void write_panel_csv(const detail::LabeledPanel& panel, const std::string& path,
                     char delimiter = ',', const std::string& header_comment = {});

ReturnsPanel compute_excess_returns(const ReturnsPanel& returns, const DatedSeries& riskfree);

/// Restricts both panels to their common dates (in order). Throws DataError if
/// fewer than two dates are shared.
std::pair<ReturnsPanel, FactorPanel> align_panels(const ReturnsPanel& returns,
                                                  const FactorPanel& factors);

ReturnsPanel demean(const ReturnsPanel& panel);

/// Column-centred copy of a raw T x K matrix.
Eigen::MatrixXd demean_columns(const Eigen::MatrixXd& values);

}  // namespace prl
