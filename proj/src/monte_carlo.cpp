#include "prl/monte_carlo.hpp"

#include "prl/errors.hpp"
#include "prl/linalg.hpp"

#include <boost/random/gamma_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace prl {

namespace {

bool symmetric_pd(const Eigen::Matrix3d& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 && is_positive_definite(m);
}

}  // namespace

void CalibrationParams::validate() const {
    if (!symmetric_pd(Sigma_B)) {
        // a zero loading covariance is allowed: every row equals mu_B
        if (!Sigma_B.isZero(0.0)) throw std::invalid_argument("Sigma_B must be symmetric PD");
    }
    if (!symmetric_pd(cov_f)) throw std::invalid_argument("cov_f must be symmetric PD");
    const Eigen::VectorXcd ev = Phi.eigenvalues();
    if (!(ev.cwiseAbs().maxCoeff() < 1.0)) {
        throw std::invalid_argument("Phi must have spectral radius below 1");
    }
    if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) {
        throw std::invalid_argument("gamma_shape and gamma_rate must be positive");
    }
    if (!(sd_min > 0.0) || !(sd_max > sd_min)) {
        throw std::invalid_argument("need 0 < sd_min < sd_max");
    }
    if (!(corr_sd >= 0.0)) throw std::invalid_argument("corr_sd must be non-negative");
    if (!(corr_cap > 0.0 && corr_cap < 1.0)) throw std::invalid_argument("corr_cap must lie in (0, 1)");
    if (!(factor_unit > 0.0)) throw std::invalid_argument("factor_unit must be positive");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
}

CalibrationParams default_calibration() {
    CalibrationParams p;
    p.mu_B << 0.9833, -0.1233, 0.0839;
    p.Sigma_B << 0.0921, -0.0178, 0.0436,
                 -0.0178, 0.0862, -0.0211,
                 0.0436, -0.0211, 0.7624;
    p.mu_f << 0.0260, 0.0211, -0.0043;
    p.Phi << -0.1006, 0.2803, -0.0365,
             -0.0191, -0.0944, 0.0186,
             0.0116, -0.0272, 0.0272;
    p.cov_f << 3.2351, 0.1783, 0.7783,
               0.1783, 0.5069, 0.0102,
               0.7783, 0.0102, 0.6586;
    return p;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& cov_f) {
    if (Phi.rows() != Phi.cols() || cov_f.rows() != cov_f.cols() || Phi.rows() != cov_f.rows()) {
        throw std::invalid_argument("solve_lyapunov: dimension mismatch");
    }
    Eigen::MatrixXd eps = symmetrize(cov_f - Phi * cov_f * Phi.transpose());
    const SymmetricEigen eig = sym_eigen(eps);
    const double smallest = eig.values(eig.values.size() - 1);
    if (smallest < -1e-8) {
        throw NumericalError("solve_lyapunov: innovation covariance has eigenvalue " +
                             std::to_string(smallest));
    }
    if (smallest < 0.0) {
        eps = symmetrize(eig.vectors * eig.values.cwiseMax(0.0).asDiagonal() *
                         eig.vectors.transpose());
    }
    return eps;
}

Eigen::VectorXd stationary_mean(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& mu) {
    const Eigen::Index k = Phi.rows();
    return (Eigen::MatrixXd::Identity(k, k) - Phi).partialPivLu().solve(mu);
}

Eigen::MatrixXd generate_loadings(const CalibrationParams& params, Eigen::Index N, Rng& rng) {
    if (N < 1) throw std::invalid_argument("generate_loadings: N must be at least 1");
    const Eigen::MatrixXd root = psd_factor(params.Sigma_B);
    const Eigen::MatrixXd z = standard_normal(3, N, rng);
    Eigen::MatrixXd B = (root * z).transpose();
    B.rowwise() += params.mu_B.transpose();
    return B;
}

Eigen::MatrixXd threshold_correlation(const Eigen::MatrixXd& raw, double threshold) {
    Eigen::MatrixXd out = raw;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        for (Eigen::Index i = 0; i < raw.rows(); ++i) {
            if (i != j && std::abs(raw(i, j)) <= threshold) out(i, j) = 0.0;
        }
    }
    return out;
}

ErrorCovariance generate_error_cov(const CalibrationParams& params, Eigen::Index N, Rng& rng) {
    if (N < 1) throw std::invalid_argument("generate_error_cov: N must be at least 1");
    ErrorCovariance out;
    out.sds.resize(N);
    boost::random::gamma_distribution<double> gamma(params.gamma_shape, 1.0 / params.gamma_rate);
    long attempts = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
        double s = 0.0;
        do {
            if (++attempts > 100000) {
                throw NumericalError("generate_error_cov: more than 1e5 rejected standard "
                                     "deviations; check gamma_shape, gamma_rate, sd_min, sd_max");
            }
            s = gamma(rng);
        } while (s < params.sd_min || s > params.sd_max);
        out.sds(i) = s;
    }

    Eigen::MatrixXd raw = Eigen::MatrixXd::Identity(N, N);
    const Eigen::VectorXd z = standard_normal(N * (N - 1) / 2, rng);
    Eigen::Index next = 0;
    for (Eigen::Index j = 0; j < N; ++j) {
        for (Eigen::Index i = j + 1; i < N; ++i) {
            const double r = std::clamp(params.corr_mean + params.corr_sd * z(next++),
                                        -params.corr_cap, params.corr_cap);
            raw(i, j) = r;
            raw(j, i) = r;
        }
    }

    if (is_positive_definite(raw)) {
        out.threshold = 0.0;
    } else {
        double lo = 0.0;
        double hi = params.corr_cap;  // everything removed: identity
        while (hi - lo > 1e-6) {
            const double mid = 0.5 * (lo + hi);
            if (is_positive_definite(threshold_correlation(raw, mid))) hi = mid;
            else lo = mid;
        }
        out.threshold = hi;
    }
    out.correlation = threshold_correlation(raw, out.threshold);
    out.sigma_u = out.sds.asDiagonal() * out.correlation * out.sds.asDiagonal();
    return out;
}

Eigen::MatrixXd generate_var1_factors(const CalibrationParams& params, Eigen::Index T, Rng& rng) {
    if (T < 1) throw std::invalid_argument("generate_var1_factors: T must be at least 1");
    const Eigen::MatrixXd eps_root = psd_factor(solve_lyapunov(params.Phi, params.cov_f));
    Eigen::Vector3d f = stationary_mean(params.Phi, params.mu_f);
    for (int s = 0; s < params.burn_in; ++s) {
        f = params.mu_f + params.Phi * f + eps_root * standard_normal(3, rng);
    }
    Eigen::MatrixXd out(T, 3);
    for (Eigen::Index t = 0; t < T; ++t) {
        f = params.mu_f + params.Phi * f + eps_root * standard_normal(3, rng);
        out.row(t) = params.factor_unit * f.transpose();
    }
    return out;
}

ModelInstance generate_model(const CalibrationParams& params, Eigen::Index N, Rng& rng) {
    ModelInstance m;
    m.B = generate_loadings(params, N, rng);
    ErrorCovariance err = generate_error_cov(params, N, rng);
    m.Sigma_u = std::move(err.sigma_u);
    m.threshold = err.threshold;
    const double unit2 = params.factor_unit * params.factor_unit;
    m.Sigma_true = symmetrize(unit2 * m.B * params.cov_f * m.B.transpose() + m.Sigma_u);
    m.Sigma_eps = solve_lyapunov(params.Phi, params.cov_f);
    Eigen::LLT<Eigen::MatrixXd> llt(m.Sigma_u);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("generate_model: error covariance is not positive definite");
    }
    m.error_chol = llt.matrixL();
    return m;
}

SimulatedPanel simulate_panel(const CalibrationParams& params, const ModelInstance& model,
                              Eigen::Index T, Rng& rng) {
    SimulatedPanel p;
    p.factors = generate_var1_factors(params, T, rng);
    p.errors = standard_normal(T, model.B.rows(), rng) * model.error_chol.transpose();
    p.returns = p.factors * model.B.transpose() + p.errors;
    return p;
}

}  // namespace prl
