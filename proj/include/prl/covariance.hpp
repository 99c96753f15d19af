#pragma once

#include "prl/returns_data.hpp"
#include "prl/weights.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prl {

enum class EstimatorKind { sample, factor, poet };

std::string to_string(EstimatorKind kind);
/// Accepts "sample", "factor" and "poet"; throws std::invalid_argument otherwise.
EstimatorKind parse_estimator_kind(const std::string& name);

/// Entry-wise thresholding function s(z) with cut-off tau.
///
/// Every rule satisfies s(z) = 0 for |z| <= tau and |s(z) - z| <= tau.
///   hard: z * 1{|z| > tau}
///   soft: sign(z) (|z| - tau)_+
///   scad: soft below 2 tau, linear interpolation up to a * tau, identity above.
struct ThresholdRule {
    enum class Kind { hard, soft, scad };

    Kind kind = Kind::soft;
    double scad_a = 3.7;

    static ThresholdRule hard() { return {Kind::hard, 3.7}; }
    static ThresholdRule soft() { return {Kind::soft, 3.7}; }
    static ThresholdRule scad(double a = 3.7) { return {Kind::scad, a}; }

    /// Throws std::invalid_argument when scad_a <= 2 for the SCAD rule.
    void validate() const;
};

std::string to_string(ThresholdRule::Kind kind);
ThresholdRule::Kind parse_threshold_kind(const std::string& name);

double apply_threshold(double value, double tau, const ThresholdRule& rule);

/// Tuning used to produce an estimate.
struct Tuning {
    double C = 0.0;
    ThresholdRule rule{};
    std::optional<int> K;
};

namespace detail {
struct ThresholdParts;
struct SpectrumCache;
}  // namespace detail

/// Symmetric N x N covariance estimate with its provenance.
///
/// Factor and POET estimates keep their low-rank part and unthresholded
/// residual covariance so they can be re-thresholded at another constant.
/// The extreme eigenvalues are computed on first use and shared between
/// copies; concurrent readers are safe.
class CovarianceEstimate {
public:
    CovarianceEstimate(Eigen::MatrixXd matrix, EstimatorKind kind, Tuning tuning = {},
                       std::vector<std::string> assets = {});

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    EstimatorKind kind() const { return kind_; }
    const Tuning& tuning() const { return tuning_; }
    /// Asset labels; empty when the estimate was built from an unlabelled matrix.
    const std::vector<std::string>& assets() const { return assets_; }
    Eigen::Index N() const { return matrix_.rows(); }

    double min_eigenvalue() const;
    double max_eigenvalue() const;

    /// True for factor and POET estimates.
    bool has_threshold_parts() const { return parts_ != nullptr; }
    /// Low-rank (systematic) part; throws std::logic_error for a sample estimate.
    const Eigen::MatrixXd& low_rank_part() const;
    /// Residual covariance before thresholding (S_u, or the orthogonal complement).
    const Eigen::MatrixXd& raw_residual() const;
    /// Thresholded residual covariance (Sigma_u hat, or Omega).
    Eigen::MatrixXd residual_part() const;

    /// Same low-rank part and residual, thresholded with another constant/rule.
    CovarianceEstimate with_threshold(double C, const ThresholdRule& rule) const;

private:
    friend CovarianceEstimate make_thresholded_estimate(
        std::shared_ptr<const detail::ThresholdParts> parts, EstimatorKind kind, Tuning tuning,
        std::vector<std::string> assets);

    Eigen::MatrixXd matrix_;
    EstimatorKind kind_;
    Tuning tuning_;
    std::vector<std::string> assets_;
    std::shared_ptr<const detail::ThresholdParts> parts_;
    std::shared_ptr<detail::SpectrumCache> spectrum_;
};

enum class FactorSource { observed, pca };

/// R_t = B f_t + u_t fitted on a demeaned panel.
struct FactorModelFit {
    Eigen::MatrixXd loadings;    ///< N x K
    Eigen::MatrixXd factors;     ///< T x K (demeaned observed factors, or PCA factors)
    Eigen::MatrixXd residuals;   ///< T x N
    Eigen::MatrixXd factor_cov;  ///< K x K; identity for a PCA fit
    FactorSource source = FactorSource::observed;
    /// PCA only: top-K eigenvalues of the sample covariance, descending.
    Eigen::VectorXd eigenvalues;
    std::vector<std::string> assets;

    Eigen::Index T() const { return factors.rows(); }
    Eigen::Index N() const { return loadings.rows(); }
    Eigen::Index K() const { return loadings.cols(); }
};

/// S = T^-1 sum_t r_t r_t' over the (optionally demeaned) rows.
CovarianceEstimate sample_covariance(const ReturnsPanel& panel, bool demean_rows = true);

/// Least-squares loadings of each asset on the observed factors, intercept
/// absorbed by demeaning both panels. Panels must share dates.
FactorModelFit ols_factor_fit(const ReturnsPanel& returns, const FactorPanel& factors);

/// B cov(f) B' + Sigma_u, where Sigma_u keeps the diagonal of the residual
/// covariance S_u and thresholds its off-diagonals at
/// C sqrt(S_u,ii S_u,jj) sqrt(log N / T).
CovarianceEstimate factor_covariance(const FactorModelFit& fit, const ThresholdRule& rule,
                                     double C);

/// Principal-components fit with T^-1 F'F = I_K and B = R'F / T.
FactorModelFit pca_factor_fit(const ReturnsPanel& panel, int K, bool demean_rows = true);

/// Keeps the top-K spectral part of S and thresholds the off-diagonals of the
/// orthogonal complement Omega at C sqrt(Omega_ii Omega_jj) (sqrt(log N/T) + 1/sqrt(N)).
CovarianceEstimate poet_covariance(const ReturnsPanel& panel, int K, const ThresholdRule& rule,
                                   double C, bool demean_rows = true);
/// Same estimate from an existing PCA fit and the sample covariance of the
/// panel it was fitted on.
CovarianceEstimate poet_covariance(const FactorModelFit& fit, const CovarianceEstimate& sample,
                                   const ThresholdRule& rule, double C);

/// Bai-Ng information criterion: minimises
/// log V(k) + k (N+T)/(NT) log(NT/(N+T)) over k = 1..k_max.
int select_num_factors(const ReturnsPanel& panel, int k_max, bool demean_rows = true);

double portfolio_variance(const CovarianceEstimate& estimate, const Portfolio& w);

/// Re-thresholds a factor or POET estimate with C doubled until its minimum
/// eigenvalue exceeds 1e-8 (at most `max_doublings` times).
CovarianceEstimate ensure_positive_definite(const CovarianceEstimate& estimate,
                                            const ThresholdRule& rule, double C_start,
                                            int max_doublings = 20);

/// Full symmetric matrix with a header row of asset names.
void write_covariance_csv(const CovarianceEstimate& estimate, const std::string& path,
                          const std::string& header_comment = {});
/// Reads a matrix written by write_covariance_csv; the result has kind `sample`
/// unless `kind` is given.
CovarianceEstimate read_covariance_csv(const std::string& path,
                                       EstimatorKind kind = EstimatorKind::sample);

/// "PRL1", little-endian u32 N, then the N(N+1)/2 lower-triangle doubles row by row.
void write_covariance_binary(const CovarianceEstimate& estimate, const std::string& path);
CovarianceEstimate read_covariance_binary(const std::string& path,
                                          EstimatorKind kind = EstimatorKind::sample);

}  // namespace prl
