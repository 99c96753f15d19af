#pragma once

#include "prl/rng.hpp"

#include <Eigen/Dense>

namespace prl {

/// Parameters of the three-factor market model.
///
/// Loadings are dimensionless. Factor parameters are quoted in percent per
/// period and converted with `factor_unit`, so simulated returns come out in
/// decimal units. Error standard deviations are in decimal units.
struct CalibrationParams {
    Eigen::Vector3d mu_B;
    Eigen::Matrix3d Sigma_B;
    Eigen::Vector3d mu_f;   ///< VAR intercept
    Eigen::Matrix3d Phi;
    Eigen::Matrix3d cov_f;  ///< stationary factor covariance
    /// Multiplier taking factor values to decimal returns (0.01 for percent).
    double factor_unit = 0.01;

    double gamma_shape = 4.0;
    double gamma_rate = 250.0;
    double sd_min = 0.005;
    double sd_max = 0.05;
    double corr_mean = 0.0;
    double corr_sd = 0.1;
    double corr_cap = 0.95;

    int burn_in = 500;

    /// Throws std::invalid_argument when an invariant fails.
    void validate() const;
};

/// Daily Fama-French calibration (loading moments, VAR(1) factors).
CalibrationParams default_calibration();

/// Sigma_eps = cov_f - Phi cov_f Phi'. Eigenvalues in [-1e-8, 0) are clipped
/// to zero; anything more negative throws NumericalError.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& cov_f);

/// Stationary mean (I - Phi)^-1 mu of the VAR(1) process.
Eigen::VectorXd stationary_mean(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& mu);

/// N x 3 loadings with i.i.d. rows from N(mu_B, Sigma_B).
Eigen::MatrixXd generate_loadings(const CalibrationParams& params, Eigen::Index N, Rng& rng);

struct ErrorCovariance {
    Eigen::MatrixXd sigma_u;      ///< D Sigma_0 D
    Eigen::VectorXd sds;          ///< diagonal of D
    Eigen::MatrixXd correlation;  ///< thresholded Sigma_0
    double threshold = 0.0;       ///< smallest hard threshold found to make Sigma_0 PD
};

/// Hard-thresholds the off-diagonals of a unit-diagonal matrix: entries with
/// |r| <= threshold are set to zero.
Eigen::MatrixXd threshold_correlation(const Eigen::MatrixXd& raw, double threshold);

/// Sparse error covariance: Gamma standard deviations accepted within
/// [sd_min, sd_max], Gaussian correlations capped at corr_cap, and the
/// smallest hard threshold keeping the correlation matrix positive definite
/// (bisection to 1e-6, upper end returned).
ErrorCovariance generate_error_cov(const CalibrationParams& params, Eigen::Index N, Rng& rng);

/// T x 3 factor path in decimal units after `burn_in` steps started at the
/// stationary mean.
Eigen::MatrixXd generate_var1_factors(const CalibrationParams& params, Eigen::Index T, Rng& rng);

/// One simulated market.
struct ModelInstance {
    Eigen::MatrixXd B;           ///< N x 3
    Eigen::MatrixXd Sigma_u;
    Eigen::MatrixXd Sigma_true;  ///< B cov(f) B' + Sigma_u, decimal units
    Eigen::MatrixXd Sigma_eps;   ///< VAR innovation covariance, factor units
    Eigen::MatrixXd error_chol;  ///< lower Cholesky factor of Sigma_u
    double threshold = 0.0;
};

ModelInstance generate_model(const CalibrationParams& params, Eigen::Index N, Rng& rng);

/// Simulated factors (T x 3) and errors (T x N); returns are
/// factors * B' + errors.
struct SimulatedPanel {
    Eigen::MatrixXd factors;
    Eigen::MatrixXd errors;
    Eigen::MatrixXd returns;
};

SimulatedPanel simulate_panel(const CalibrationParams& params, const ModelInstance& model,
                              Eigen::Index T, Rng& rng);

}  // namespace prl
