#pragma once

#include "prl/covariance.hpp"
#include "prl/monte_carlo.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace prl {

/// Simulation grid and protocol settings.
struct ExperimentConfig {
    std::vector<Eigen::Index> Ns{100};
    std::vector<Eigen::Index> Ts{300};
    std::vector<double> cs{1.0};
    std::vector<EstimatorKind> estimators{EstimatorKind::sample, EstimatorKind::factor,
                                          EstimatorKind::poet};
    int L = 5;
    double tau = 0.05;
    int portfolios_per_rep = 200;
    int replications = 50;
    std::uint64_t base_seed = 20120629;
    bool paper_z = false;

    /// Factor estimator: hard threshold 0.1 K sqrt(log N / T) on residual correlations.
    ThresholdRule factor_rule = ThresholdRule::hard();
    double factor_C = 0.3;
    /// POET: soft threshold with C = 0.5 and K = 3 principal components.
    ThresholdRule poet_rule = ThresholdRule::soft();
    double poet_C = 0.5;
    int poet_K = 3;

    CalibrationParams calibration = default_calibration();

    /// Throws std::invalid_argument naming the offending setting.
    void validate() const;
};

/// One (N, T) grid point; every gross exposure in the config is evaluated on
/// the same simulated market.
struct Cell {
    Eigen::Index N = 0;
    Eigen::Index T = 0;
};

/// Cells in N-major order.
std::vector<Cell> grid_cells(const ExperimentConfig& config);

/// Seed of replication `r` in `cell`: a hash of (base_seed, N, T, r).
std::uint64_t replication_seed(std::uint64_t base_seed, const Cell& cell, int replication);

struct EstimatorOutcome {
    double delta = 0.0;
    double xi = 0.0;
    double u = 0.0;
    /// NaN when the H-CLUB is zero.
    double re1 = 0.0;
    double re2 = 0.0;
    bool covered = false;
    bool clamped = false;
};

struct PortfolioOutcome {
    double gross_exposure = 1.0;
    double true_variance = 0.0;
    std::vector<EstimatorOutcome> by_estimator;  ///< config.estimators order
};

struct ReplicationRecord {
    Cell cell;
    int replication = 0;
    std::uint64_t seed = 0;
    double error_threshold = 0.0;
    double min_true_eigenvalue = 0.0;
    std::vector<std::vector<PortfolioOutcome>> by_c;  ///< [c index][portfolio]
};

/// Simulates one market and panel, fits every configured estimator and scores
/// `portfolios_per_rep` random portfolios at each gross exposure.
ReplicationRecord run_replication(const ExperimentConfig& config, const Cell& cell,
                                  int replication);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    long n = 0;
};

/// Mean and (n-1) standard deviation over the finite entries, in order.
Summary summarize(const std::vector<double>& values);

struct CellReport {
    Eigen::Index N = 0;
    Eigen::Index T = 0;
    double c = 1.0;
    EstimatorKind estimator = EstimatorKind::sample;
    int replications = 0;
    long portfolios = 0;
    Summary delta;
    Summary xi;
    Summary u;
    Summary re1;
    Summary re2;
    Summary risk;  ///< true risk sqrt(w' Sigma w) per period
    double coverage = 0.0;
    long clamped = 0;
};

struct ExperimentReport {
    std::vector<CellReport> rows;  ///< cell, then c, then estimator order
    std::vector<ReplicationRecord> records;
    double min_true_eigenvalue = 0.0;  ///< over all simulated markets
    /// Pairs with xi < delta; the bound is exact, so this must stay zero.
    long bound_violations = 0;
    long pairs = 0;

    const CellReport& find(Eigen::Index N, Eigen::Index T, double c, EstimatorKind kind) const;
};

/// Runs every replication of every cell on `workers` threads. Records are
/// reduced in (cell, replication) order, so the report does not depend on the
/// number of workers. The first failing replication's exception is rethrown.
ExperimentReport run_experiment(const ExperimentConfig& config, int workers);

/// Aggregates finished records (ordered as run_experiment produces them).
ExperimentReport aggregate(const ExperimentConfig& config, std::vector<ReplicationRecord> records);

/// Worker count from PRL_THREADS, else hardware concurrency (at least 1).
int default_worker_count();

/// Variance of the sum of squared portfolio returns split into its systematic,
/// idiosyncratic and cross parts, over independent panels of one market.
struct DecompositionResult {
    double var_total = 0.0;
    double var_systematic = 0.0;
    double var_idiosyncratic = 0.0;
    double var_cross = 0.0;
    double se_total = 0.0;
    double se_systematic = 0.0;
    double se_idiosyncratic = 0.0;
    double se_cross = 0.0;
    long replications = 0;
    /// Largest |(w'y)^2 - (w'Bf)^2 - 2(w'Bf)(w'u) - (w'u)^2| seen.
    double max_identity_gap = 0.0;
};

DecompositionResult variance_decomposition_study(const CalibrationParams& params, Eigen::Index N,
                                                 Eigen::Index T, long replications,
                                                 std::uint64_t seed);

/// Annualized risk in percent from a per-period variance in decimal units.
double annualized_risk_percent(double variance, double periods_per_year = 252.0);

const std::vector<std::string>& cell_csv_columns();
void write_cell_csv(std::ostream& out, const ExperimentReport& report, Eigen::Index N,
                    Eigen::Index T);
/// Every row of the report under one header.
void write_cells_csv(std::ostream& out, const ExperimentReport& report);
void write_markdown_summary(std::ostream& out, const ExperimentConfig& config,
                            const ExperimentReport& report);
/// Curves of mean risk against N for each c (one row per N, T, c).
void write_risk_curve_csv(std::ostream& out, const ExperimentReport& report);
/// Mean delta, H-CLUB, crude bound and true risk against N for one estimator.
void write_bounds_curve_csv(std::ostream& out, const ExperimentReport& report, EstimatorKind kind);

}  // namespace prl
