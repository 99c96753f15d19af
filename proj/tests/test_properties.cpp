#include "doctest.h"

#include "oracles.hpp"
#include "prl/covariance.hpp"
#include "prl/linalg.hpp"
#include "prl/portfolio.hpp"
#include "prl/risk.hpp"
#include "support.hpp"

#include <boost/random/uniform_real_distribution.hpp>

#include <cfloat>
#include <cmath>

using namespace prl;
using testing_support::simulate_market;

TEST_CASE("threshold contract for every rule") {
    Rng rng = make_rng(101);
    boost::random::uniform_real_distribution<double> value(-3.0, 3.0);
    boost::random::uniform_real_distribution<double> cut(0.0, 2.0);
    for (const ThresholdRule& rule :
         {ThresholdRule::hard(), ThresholdRule::soft(), ThresholdRule::scad(), ThresholdRule::scad(2.5)}) {
        for (int i = 0; i < 100000; ++i) {
            const double z = value(rng);
            const double tau = cut(rng);
            const double s = apply_threshold(z, tau, rule);
            if (std::abs(z) <= tau) REQUIRE(s == 0.0);
            // One rounding in the SCAD branch can land just past tau.
            REQUIRE(std::abs(s - z) <= tau + 4.0 * DBL_EPSILON * std::abs(z));
            REQUIRE(apply_threshold(-z, tau, rule) == -s);
        }
    }
}

TEST_CASE("thresholding leaves diagonals alone and shrinks with C") {
    const auto m = simulate_market(40, 100, 102);
    const auto p = ReturnsPanel::from_matrix(m.panel.returns);
    const FactorModelFit fit = ols_factor_fit(p, FactorPanel::from_matrix(m.panel.factors));
    for (const ThresholdRule& rule : {ThresholdRule::hard(), ThresholdRule::soft()}) {
        Eigen::MatrixXd prev_f = factor_covariance(fit, rule, 0.0).residual_part();
        Eigen::MatrixXd prev_p = poet_covariance(p, 3, rule, 0.0).residual_part();
        for (double C : {0.1, 0.3, 0.5, 1.0, 2.0, 5.0}) {
            const auto f = factor_covariance(fit, rule, C);
            const auto q = poet_covariance(p, 3, rule, C);
            const Eigen::MatrixXd rf = f.residual_part();
            const Eigen::MatrixXd rp = q.residual_part();
            CHECK(rf.diagonal() == f.raw_residual().diagonal());
            CHECK(rp.diagonal() == q.raw_residual().diagonal());
            CHECK((rf.cwiseAbs().array() <= prev_f.cwiseAbs().array()).all());
            CHECK((rp.cwiseAbs().array() <= prev_p.cwiseAbs().array()).all());
            prev_f = rf;
            prev_p = rp;
        }
    }
}

TEST_CASE("spectral reconstruction of S") {
    for (auto [T, N] : {std::pair<Eigen::Index, Eigen::Index>{50, 20}, {20, 50}}) {
        const auto m = simulate_market(N, T, 103 + N);
        const Eigen::MatrixXd S = sample_covariance(ReturnsPanel::from_matrix(m.panel.returns)).matrix();
        const SymmetricEigen eig = sym_eigen(S);
        const Eigen::MatrixXd back = eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
        CHECK((back - S).norm() <= 1e-10 * S.norm());
        for (Eigen::Index k = 1; k < eig.values.size(); ++k) CHECK(eig.values(k) <= eig.values(k - 1));
    }
}

TEST_CASE("eigenvector sign convention") {
    Rng rng = make_rng(104);
    const Eigen::MatrixXd a = standard_normal(6, 6, rng);
    const SymmetricEigen eig = sym_eigen(a + a.transpose());
    for (Eigen::Index k = 0; k < 6; ++k) {
        Eigen::Index idx = 0;
        eig.vectors.col(k).cwiseAbs().maxCoeff(&idx);
        CHECK(eig.vectors(idx, k) > 0.0);
    }
}

TEST_CASE("portfolio variance under S is the sample variance of the portfolio series") {
    Rng rng = make_rng(105);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = ReturnsPanel::from_matrix(0.01 * standard_normal(30 + trial, 7, rng));
        const Portfolio w = sample_random_portfolio(7, 1.0 + trial % 3, rng);
        const Eigen::VectorXd x = p.values() * w.weights();
        const double direct = (x.array() - x.mean()).square().sum() / static_cast<double>(x.size());
        CHECK(portfolio_variance(sample_covariance(p), w) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("sampler identities") {
    Rng rng = make_rng(106);
    for (int i = 0; i < 20000; ++i) {
        const double c = 1.0 + 0.25 * (i % 13);
        const Portfolio w = sample_random_portfolio(3 + i % 50, c, rng);
        REQUIRE(std::abs(w.weights().sum() - 1.0) <= 1e-12);
        REQUIRE(std::abs(w.weights().lpNorm<1>() - c) <= 1e-12 * c);
    }
}

TEST_CASE("autocovariance oracles on random short panels") {
    Rng rng = make_rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index T = 20 + 8 * trial;
        const auto m = simulate_market(8, T, 200 + trial);
        const auto p = ReturnsPanel::from_matrix(m.panel.returns);
        const Portfolio w = sample_random_portfolio(8, 1.0 + trial % 3, rng);
        const int L = 1 + trial % 6;
        double centre = 0.0;
        const auto x = oracle::sample_series(p.values(), w.weights(), centre);
        const auto want = oracle::gammas(x, centre, L);
        const LongRunVariance got = autocov_sample(p, w, L);
        for (int h = 0; h <= L; ++h) {
            CHECK(std::abs(got.gammas[h] - want[h]) <= 1e-12 * std::abs(want[0]));
        }
    }
}

TEST_CASE("hclub is monotone in tau and in T") {
    LongRunVariance lrv;
    lrv.sigma2 = 3.0;
    for (double tau = 0.01; tau < 0.9; tau += 0.05) {
        CHECK(hclub(lrv, 100, tau, 1.0, EstimatorKind::sample).u_variance >
              hclub(lrv, 100, tau + 0.05, 1.0, EstimatorKind::sample).u_variance);
        CHECK(hclub(lrv, 100, tau, 1.0, EstimatorKind::sample).u_variance >
              hclub(lrv, 400, tau, 1.0, EstimatorKind::sample).u_variance);
    }
}

TEST_CASE("projection is idempotent and feasible points are fixed") {
    Rng rng = make_rng(108);
    for (int i = 0; i < 200; ++i) {
        const double c = 1.0 + (i % 4);
        const Portfolio w = sample_random_portfolio(9, c, rng);
        CHECK((project_exposure_set(w.weights(), c) - w.weights()).cwiseAbs().maxCoeff() <= 1e-12);
        const Eigen::VectorXd once = project_exposure_set(5.0 * standard_normal(9, rng), c);
        CHECK((project_exposure_set(once, c) - once).cwiseAbs().maxCoeff() <= 1e-12);
    }
}
