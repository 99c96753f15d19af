#pragma once

#include "prl/covariance.hpp"
#include "prl/monte_carlo.hpp"
#include "prl/returns_data.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace prl {

/// Rolling estimate-then-hold backtest settings.
struct EmpiricalConfig {
    Eigen::Index estimation_window = 252;
    Eigen::Index holding_window = 21;
    std::vector<EstimatorKind> estimators{EstimatorKind::sample, EstimatorKind::factor,
                                          EstimatorKind::poet};
    bool include_equal_weight = true;
    /// Gross exposures of the minimum-variance strategies.
    std::vector<double> min_variance_cs{1.0, 1.6};
    double tau = 0.01;
    bool paper_z = true;
    int L = 5;
    ThresholdRule factor_rule = ThresholdRule::hard();
    double factor_C = 0.3;
    ThresholdRule poet_rule = ThresholdRule::soft();
    double poet_C = 0.5;
    int poet_K = 3;
    double periods_per_year = 252.0;

    void validate() const;
};

/// One strategy under one estimator over one holding window. Variances are
/// per period; risks are per-period standard deviations.
struct BacktestRecord {
    std::string date;  ///< last date of the estimation window
    std::string strategy;
    EstimatorKind estimator = EstimatorKind::sample;
    double estimated_variance = 0.0;
    double actual_variance = 0.0;  ///< w' (1/h sum y y') w over the holding window
    double delta = 0.0;
    double u = 0.0;                ///< H-CLUB on the variance scale
    double true_risk_error = 0.0;  ///< |sqrt(actual) - sqrt(estimated)|
    double estimated_risk_error = 0.0;  ///< u / sqrt(4 estimated)
    bool clamped = false;
};

struct BacktestAverage {
    std::string strategy;
    EstimatorKind estimator = EstimatorKind::sample;
    long windows = 0;
    double delta = 0.0;
    double u = 0.0;
    double estimated_risk = 0.0;
    double actual_risk = 0.0;
    double true_risk_error = 0.0;
    double estimated_risk_error = 0.0;
};

struct BacktestReport {
    std::vector<BacktestRecord> records;
    std::vector<BacktestAverage> averages;  ///< estimator, then strategy order
    std::vector<std::string> warnings;
    Eigen::Index rebalances = 0;

    const BacktestAverage& find(const std::string& strategy, EstimatorKind kind) const;
};

/// Number of full estimate-then-hold windows in a panel of T rows.
Eigen::Index rebalance_count(Eigen::Index T, Eigen::Index estimation_window,
                             Eigen::Index holding_window);

/// Strategy labels in report order: "equal" then "minvar_c=<c>".
std::vector<std::string> strategy_names(const EmpiricalConfig& config);

/// Rolling backtest. `factors` must share the panel's dates when the factor
/// estimator is requested. Windows where an estimator fails are skipped for
/// that estimator with a warning.
BacktestReport run_empirical_study(const ReturnsPanel& returns, const FactorPanel* factors,
                                   const EmpiricalConfig& config);

/// Averages recomputed from records in order.
std::vector<BacktestAverage> average_records(const std::vector<BacktestRecord>& records,
                                             const EmpiricalConfig& config);
/// Averages grouped by estimator and strategy in order of first appearance;
/// groups without records are dropped.
std::vector<BacktestAverage> average_records(const std::vector<BacktestRecord>& records);

/// Reads a file written by write_backtest_records_csv and recomputes the
/// averages. The rebalance count is the number of distinct dates.
BacktestReport read_backtest_records_csv(std::istream& in, const std::string& source);

/// Stationary synthetic market in decimal units drawn from the calibrated
/// factor model: returns plus the factor panel that generated them.
std::pair<ReturnsPanel, FactorPanel> synthetic_market(const CalibrationParams& params,
                                                      Eigen::Index N, Eigen::Index T,
                                                      std::uint64_t seed);

void write_backtest_records_csv(std::ostream& out, const BacktestReport& report);
/// Averages with risks annualized in percent and variances scaled by 1e4.
void write_backtest_averages_csv(std::ostream& out, const BacktestReport& report,
                                 double periods_per_year = 252.0);
void write_backtest_markdown(std::ostream& out, const BacktestReport& report,
                             double periods_per_year = 252.0);

}  // namespace prl
