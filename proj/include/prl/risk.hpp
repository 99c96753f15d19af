#pragma once

#include "prl/covariance.hpp"
#include "prl/returns_data.hpp"
#include "prl/weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace prl {

/// Truncated long-run variance of the squared portfolio return series.
struct LongRunVariance {
    std::vector<double> gammas;  ///< gamma_hat(h), h = 0..L
    int L = 0;
    /// gamma(0) + 2 sum_{h=1..L} gamma(h), clamped at zero.
    double sigma2 = 0.0;
    /// True when the truncated sum was negative and sigma2 was set to zero.
    bool clamped = false;
};

/// How the normal quantile z_{tau/2} is obtained.
enum class ZConvention {
    exact,
    /// 2 at tau = 0.05 and 2.58 at tau = 0.01 (rounded values used for the
    /// published tables); exact elsewhere.
    paper
};

struct HclubResult {
    double tau = 0.05;
    double z = 0.0;
    double u_variance = 0.0;  ///< z sqrt(sigma2 / T)
    double u_risk = 0.0;      ///< u_variance / sqrt(4 w' Sigma_hat w)
    EstimatorKind estimator_kind = EstimatorKind::sample;
};

struct CrudeBound {
    double xi = 0.0;     ///< ||w||_1^2 ||Sigma_hat - Sigma||_max
    double delta = 0.0;  ///< |w' (Sigma_hat - Sigma) w|
};

struct ErrorRatios {
    double re1 = 0.0;  ///< xi / U
    double re2 = 0.0;  ///< U / (4 w' Sigma w)
};

/// z with P(Z > z) = p for 0 < p < 0.5.
double normal_upper_quantile(double p);

/// z_{tau/2} under the given convention.
double hclub_z(double tau, ZConvention convention = ZConvention::exact);

/// Builds the truncated estimate from a portfolio return series x_t and the
/// centring value v: gamma(h) = T^-1 sum_{t<=T-h} (x_t^2 - v)(x_{t+h}^2 - v).
LongRunVariance long_run_variance(const Eigen::VectorXd& series, double centre, int L);

/// Sample-covariance version: x_t = w' R_t, centred at w' S w.
LongRunVariance autocov_sample(const ReturnsPanel& panel, const Portfolio& w, int L,
                               bool demean_rows = true);
/// Observed-factor version: x_t = w' B f_t, centred at w' B cov(f) B' w.
LongRunVariance autocov_factor(const FactorModelFit& fit, const Portfolio& w, int L);
/// PCA version: x_t = w' B f_t, centred at w' B B' w.
LongRunVariance autocov_poet(const FactorModelFit& fit, const Portfolio& w, int L);

/// Lag rule floor(T^(1/4)); the default elsewhere is L = 5.
int rate_based_lags(Eigen::Index T);

HclubResult hclub(const LongRunVariance& lrv, Eigen::Index T, double tau,
                  double variance_estimate, EstimatorKind kind,
                  ZConvention convention = ZConvention::exact);

CrudeBound crude_bound(const Portfolio& w, const CovarianceEstimate& estimate,
                       const CovarianceEstimate& truth);

ErrorRatios re_ratios(double xi, const HclubResult& u, double true_variance);

/// One flat assessment record; truth-dependent fields are empty without a
/// reference covariance.
struct AssessmentRow {
    EstimatorKind estimator = EstimatorKind::sample;
    Eigen::Index N = 0;
    Eigen::Index T = 0;
    double c = 1.0;
    int L = 5;
    double tau = 0.05;
    double variance_hat = 0.0;
    double risk_hat = 0.0;
    double sigma2_hat = 0.0;
    double u_variance = 0.0;
    double u_risk = 0.0;
    std::optional<double> xi;
    std::optional<double> delta;
    std::optional<double> re1;
    std::optional<double> re2;
    bool clamped = false;
};

/// Estimates the risk of `w` under `estimate` and attaches its H-CLUB.
/// `fit` must be the factor fit behind a factor or POET estimate.
AssessmentRow assess_portfolio(const ReturnsPanel& panel, const CovarianceEstimate& estimate,
                               const FactorModelFit* fit, const Portfolio& w, int L, double tau,
                               ZConvention convention = ZConvention::exact,
                               const CovarianceEstimate* truth = nullptr);

const std::vector<std::string>& assessment_csv_columns();
void write_assessment_header(std::ostream& out);
void write_assessment_row(std::ostream& out, const AssessmentRow& row);

}  // namespace prl
