#include "doctest.h"

#include "prl/linalg.hpp"
#include "prl/monte_carlo.hpp"

#include <boost/random/gamma_distribution.hpp>

#include <algorithm>
#include <cmath>

using namespace prl;

TEST_CASE("calibration table values") {
    const CalibrationParams p = default_calibration();
    CHECK(p.mu_B(0) == 0.9833);
    CHECK(p.cov_f(0, 0) == 3.2351);
    CHECK(p.Phi.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("calibration validation") {
    CalibrationParams p = default_calibration();
    p.Phi = 1.1 * Eigen::Matrix3d::Identity();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = default_calibration();
    p.sd_max = p.sd_min;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = default_calibration();
    p.corr_cap = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("Lyapunov innovation covariance") {
    const Eigen::Matrix3d cov = default_calibration().cov_f;
    CHECK(solve_lyapunov(Eigen::Matrix3d::Zero(), cov) == Eigen::MatrixXd(cov));

    const Eigen::MatrixXd scalar =
        solve_lyapunov(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0));
    CHECK(scalar(0, 0) == doctest::Approx(0.75).epsilon(1e-15));

    const CalibrationParams p = default_calibration();
    const Eigen::MatrixXd eps = solve_lyapunov(p.Phi, p.cov_f);
    CHECK(sym_eigenvalues(eps).minCoeff() >= 0.0);
    // Regression value of the leading entry (cov_f - Phi cov_f Phi')(0, 0).
    const double expect = p.cov_f(0, 0) - (p.Phi * p.cov_f * p.Phi.transpose())(0, 0);
    CHECK(eps(0, 0) == doctest::Approx(expect).epsilon(1e-14));
    MESSAGE("innovation covariance:\n" << eps);

    // Phi with |phi| = 2 makes cov - Phi cov Phi' strongly indefinite.
    CHECK_THROWS(solve_lyapunov(Eigen::MatrixXd::Constant(1, 1, 2.0),
                                Eigen::MatrixXd::Constant(1, 1, 1.0)));
}

TEST_CASE("loadings match the calibrated moments") {
    const CalibrationParams p = default_calibration();
    Rng rng = make_rng(1);
    const Eigen::Index n = 100000;
    const Eigen::MatrixXd B = generate_loadings(p, n, rng);
    const Eigen::RowVector3d mean = B.colwise().mean();
    for (int k = 0; k < 3; ++k) {
        const double se = std::sqrt(p.Sigma_B(k, k) / static_cast<double>(n));
        CHECK(std::abs(mean(k) - p.mu_B(k)) <= 3.0 * se);
    }
    const Eigen::MatrixXd centred = B.rowwise() - mean;
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n - 1);
    CHECK((cov - p.Sigma_B).norm() <= 0.05 * p.Sigma_B.norm());

    CalibrationParams flat = p;
    flat.Sigma_B.setZero();
    const Eigen::MatrixXd same = generate_loadings(flat, 5, rng);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(same.row(i) == p.mu_B.transpose());
}

TEST_CASE("uncorrelated errors give a diagonal covariance") {
    CalibrationParams p = default_calibration();
    p.corr_sd = 0.0;
    p.corr_mean = 0.0;
    Rng rng = make_rng(2);
    const ErrorCovariance e = generate_error_cov(p, 30, rng);
    CHECK(e.correlation == Eigen::MatrixXd::Identity(30, 30));
    CHECK(e.threshold == 0.0);
    CHECK(e.sigma_u.diagonal() == e.sds.array().square().matrix());
    CHECK(e.sds.minCoeff() >= p.sd_min);
    CHECK(e.sds.maxCoeff() <= p.sd_max);
}

TEST_CASE("error covariance at N = 100 is PD with a minimal threshold") {
    const CalibrationParams p = default_calibration();
    const std::uint64_t seed = 3;
    Rng rng = make_rng(seed);
    const ErrorCovariance e = generate_error_cov(p, 100, rng);
    CHECK(sym_eigenvalues(e.sigma_u).minCoeff() > 0.0);
    MESSAGE("threshold at N = 100: " << e.threshold);

    // Replay the same draws to recover the unthresholded correlations.
    Rng replay = make_rng(seed);
    boost::random::gamma_distribution<double> gamma(p.gamma_shape, 1.0 / p.gamma_rate);
    for (int i = 0; i < 100; ++i) {
        double s = 0.0;
        do s = gamma(replay);
        while (s < p.sd_min || s > p.sd_max);
        REQUIRE(s == e.sds(i));
    }
    const Eigen::VectorXd z = standard_normal(100 * 99 / 2, replay);
    Eigen::MatrixXd raw = Eigen::MatrixXd::Identity(100, 100);
    Eigen::Index next = 0;
    for (Eigen::Index j = 0; j < 100; ++j) {
        for (Eigen::Index i = j + 1; i < 100; ++i) {
            raw(i, j) = raw(j, i) = std::clamp(p.corr_sd * z(next++), -p.corr_cap, p.corr_cap);
        }
    }
    REQUIRE(!is_positive_definite(raw));
    REQUIRE(e.threshold > 0.0);
    CHECK(threshold_correlation(raw, e.threshold) == e.correlation);
    CHECK(is_positive_definite(e.correlation));
    CHECK(!is_positive_definite(threshold_correlation(raw, e.threshold / 2.0)));
    CHECK(!is_positive_definite(threshold_correlation(raw, e.threshold - 2e-6)));
}

TEST_CASE("degenerate VAR gives the constant intercept") {
    CalibrationParams p = default_calibration();
    p.Phi.setZero();
    p.cov_f.setZero();
    Rng rng = make_rng(4);
    const Eigen::MatrixXd f = generate_var1_factors(p, 10, rng);
    for (Eigen::Index t = 0; t < 10; ++t) {
        CHECK((f.row(t).transpose() - p.factor_unit * p.mu_f).cwiseAbs().maxCoeff() <= 1e-18);
    }
}

TEST_CASE("VAR path moments") {
    const CalibrationParams p = default_calibration();
    Rng rng = make_rng(5);
    const Eigen::Index T = 400000;
    const Eigen::MatrixXd f = generate_var1_factors(p, T, rng) / p.factor_unit;

    // Batch means give a standard error that accounts for autocorrelation.
    const Eigen::Index batches = 200;
    const Eigen::Index size = T / batches;
    Eigen::MatrixXd means(batches, 3);
    for (Eigen::Index b = 0; b < batches; ++b) {
        means.row(b) = f.middleRows(b * size, size).colwise().mean();
    }
    const Eigen::RowVector3d grand = means.colwise().mean();
    const Eigen::RowVectorXd se =
        ((means.rowwise() - grand).array().square().colwise().sum() / (batches - 1)).sqrt() /
        std::sqrt(static_cast<double>(batches));
    const Eigen::VectorXd target = stationary_mean(p.Phi, p.mu_f);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(grand(k) - target(k)) <= 3.0 * se(k));

    const Eigen::MatrixXd c = f.rowwise() - f.colwise().mean();
    const Eigen::MatrixXd lag1 =
        c.bottomRows(T - 1).transpose() * c.topRows(T - 1) / static_cast<double>(T - 1);
    const Eigen::MatrixXd want = p.Phi * p.cov_f;
    CHECK((lag1 - want).norm() <= 0.05 * want.norm());

    const Eigen::MatrixXd lag0 = c.transpose() * c / static_cast<double>(T);
    CHECK((lag0 - p.cov_f).norm() <= 0.02 * p.cov_f.norm());
}

TEST_CASE("generated model is consistent") {
    const CalibrationParams p = default_calibration();
    Rng rng = make_rng(6);
    const ModelInstance m = generate_model(p, 50, rng);
    const Eigen::MatrixXd expect =
        p.factor_unit * p.factor_unit * m.B * p.cov_f * m.B.transpose() + m.Sigma_u;
    CHECK((m.Sigma_true - expect).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(sym_eigenvalues(m.Sigma_true).minCoeff() > 0.0);
    CHECK((m.error_chol * m.error_chol.transpose() - m.Sigma_u).cwiseAbs().maxCoeff() <= 1e-15);

    const SimulatedPanel panel = simulate_panel(p, m, 30, rng);
    CHECK((panel.returns - panel.factors * m.B.transpose() - panel.errors).cwiseAbs().maxCoeff() <=
          1e-15);
}

TEST_CASE("same seed gives the same market") {
    const CalibrationParams p = default_calibration();
    Rng a = make_rng(7);
    Rng b = make_rng(7);
    const ModelInstance ma = generate_model(p, 20, a);
    const ModelInstance mb = generate_model(p, 20, b);
    CHECK(ma.Sigma_true == mb.Sigma_true);
    CHECK(simulate_panel(p, ma, 15, a).returns == simulate_panel(p, mb, 15, b).returns);
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    Rng rng = make_rng(8);
    const Eigen::VectorXd z = standard_normal(100000, rng);
    CHECK(std::abs(z.mean()) < 0.015);
    CHECK(std::abs((z.array() - z.mean()).square().mean() - 1.0) < 0.02);
}
