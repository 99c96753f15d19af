#include "doctest.h"

#include "oracles.hpp"
#include "prl/covariance.hpp"
#include "prl/portfolio.hpp"
#include "prl/risk.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace prl;
using testing_support::simulate_market;

namespace {

double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

void check_lrv_matches(const LongRunVariance& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.gammas.size() == want.size());
    double scale = 0.0;
    for (double g : want) scale = std::max(scale, std::abs(g));
    for (std::size_t h = 0; h < want.size(); ++h) {
        CHECK(std::abs(got.gammas[h] - want[h]) <= tol * scale);
    }
    const double lr = oracle::long_run(want);
    CHECK(got.sigma2 == doctest::Approx(std::max(lr, 0.0)).epsilon(tol));
}

}  // namespace

TEST_CASE("normal quantile examples") {
    CHECK(normal_upper_quantile(0.025) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_upper_quantile(0.005) == doctest::Approx(2.575829).epsilon(1e-6));
    CHECK(normal_upper_quantile(0.25) == doctest::Approx(0.674490).epsilon(1e-6));
    CHECK_THROWS_AS(normal_upper_quantile(0.5), std::invalid_argument);
    CHECK_THROWS_AS(normal_upper_quantile(0.0), std::invalid_argument);
}

TEST_CASE("z conventions") {
    CHECK(hclub_z(0.05) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(hclub_z(0.05, ZConvention::paper) == 2.0);
    CHECK(hclub_z(0.01, ZConvention::paper) == 2.58);
    CHECK(hclub_z(0.10, ZConvention::paper) == hclub_z(0.10));
    CHECK_THROWS_AS(hclub_z(1.5), std::invalid_argument);
}

TEST_CASE("constant portfolio series has zero long-run variance") {
    Eigen::MatrixXd v(6, 2);
    v.col(0).setConstant(0.03);
    v.col(1).setConstant(-0.01);
    const auto p = ReturnsPanel::from_matrix(v);
    const LongRunVariance lrv = autocov_sample(p, equal_weight(2), 3, false);
    // x^4 is 1e-8 here; what survives is rounding in the centring.
    for (double g : lrv.gammas) CHECK(std::abs(g) <= 1e-24);
    CHECK(std::abs(lrv.sigma2) <= 1e-23);
}

TEST_CASE("i.i.d. series: higher lags vanish") {
    Rng rng = make_rng(71);
    const auto p = ReturnsPanel::from_matrix(standard_normal(10000, 1, rng));
    const LongRunVariance lrv = autocov_sample(p, equal_weight(1), 5);
    // gamma(0) is about 2 for N(0,1); lag covariances have sd about 2/sqrt(T).
    CHECK(lrv.gammas[0] == doctest::Approx(2.0).epsilon(0.1));
    for (int h = 1; h <= 5; ++h) CHECK(std::abs(lrv.gammas[h]) < 0.1);
    CHECK(lrv.sigma2 == doctest::Approx(lrv.gammas[0]).epsilon(0.25));
}

TEST_CASE("sample autocovariance matches the loop oracle at T = 50") {
    const auto m = simulate_market(12, 50, 73);
    const auto p = ReturnsPanel::from_matrix(m.panel.returns);
    Rng rng = make_rng(74);
    const Portfolio w = sample_random_portfolio(12, 1.5, rng);
    double centre = 0.0;
    const auto x = oracle::sample_series(p.values(), w.weights(), centre);
    check_lrv_matches(autocov_sample(p, w, 5), oracle::gammas(x, centre, 5), 1e-12);
}

TEST_CASE("factor autocovariance") {
    const auto m = simulate_market(12, 50, 75);
    const FactorPanel f = FactorPanel::from_matrix(m.panel.factors);
    const Portfolio w = equal_weight(12);

    SUBCASE("oracle at T = 50") {
        const FactorModelFit fit = ols_factor_fit(ReturnsPanel::from_matrix(m.panel.returns), f);
        const auto x = oracle::systematic_series(fit.loadings, fit.factors, w.weights());
        const double centre = oracle::quad_form(fit.loadings, fit.factor_cov, w.weights());
        check_lrv_matches(autocov_factor(fit, w, 5), oracle::gammas(x, centre, 5), 1e-12);
    }
    SUBCASE("residual-free panel equals the sample version") {
        const Eigen::MatrixXd exact = m.panel.factors * m.model.B.transpose();
        const auto p = ReturnsPanel::from_matrix(exact);
        const FactorModelFit fit = ols_factor_fit(p, f);
        const LongRunVariance a = autocov_factor(fit, w, 5);
        const LongRunVariance b = autocov_sample(p, w, 5);
        for (int h = 0; h <= 5; ++h) {
            CHECK(std::abs(a.gammas[h] - b.gammas[h]) <= 1e-10 * std::abs(b.gammas[0]));
        }
    }
    SUBCASE("zero loadings") {
        FactorModelFit fit = ols_factor_fit(ReturnsPanel::from_matrix(m.panel.returns), f);
        fit.loadings.setZero();
        for (double g : autocov_factor(fit, w, 5).gammas) CHECK(g == 0.0);
    }
}

TEST_CASE("POET autocovariance") {
    SUBCASE("oracle at T = 50") {
        const auto m = simulate_market(15, 50, 77);
        const FactorModelFit fit = pca_factor_fit(ReturnsPanel::from_matrix(m.panel.returns), 3);
        const Portfolio w = equal_weight(15);
        const auto x = oracle::systematic_series(fit.loadings, fit.factors, w.weights());
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
        const double centre = oracle::quad_form(fit.loadings, eye, w.weights());
        check_lrv_matches(autocov_poet(fit, w, 5), oracle::gammas(x, centre, 5), 1e-12);
    }
    SUBCASE("full reconstruction equals the sample version") {
        const auto m = simulate_market(6, 40, 79);
        const auto p = ReturnsPanel::from_matrix(m.panel.returns);
        const Portfolio w = equal_weight(6);
        const LongRunVariance a = autocov_poet(pca_factor_fit(p, 6), w, 5);
        const LongRunVariance b = autocov_sample(p, w, 5);
        CHECK(rel_diff(a.sigma2, b.sigma2) <= 1e-8);
    }
    SUBCASE("rank-1 noiseless panel") {
        Rng rng = make_rng(80);
        const Eigen::VectorXd b = standard_normal(7, rng).array() + 1.0;
        const Eigen::VectorXd f = standard_normal(60, rng);
        const auto p = ReturnsPanel::from_matrix(0.01 * f * b.transpose());
        const Portfolio w = equal_weight(7);
        const LongRunVariance a = autocov_poet(pca_factor_fit(p, 1), w, 5);
        const LongRunVariance s = autocov_sample(p, w, 5);
        for (int h = 0; h <= 5; ++h) {
            CHECK(std::abs(a.gammas[h] - s.gammas[h]) <= 1e-10 * std::abs(s.gammas[0]));
        }
    }
}

TEST_CASE("POET and factor long-run variances agree on large panels") {
    std::vector<double> ratios;
    for (int r = 0; r < 15; ++r) {
        const auto m = simulate_market(200, 300, 900 + r);
        const auto p = ReturnsPanel::from_matrix(m.panel.returns);
        const Portfolio w = equal_weight(200);
        const double sf =
            autocov_factor(ols_factor_fit(p, FactorPanel::from_matrix(m.panel.factors)), w, 5)
                .sigma2;
        const double sp = autocov_poet(pca_factor_fit(p, 3), w, 5).sigma2;
        ratios.push_back(std::abs(sp / sf - 1.0));
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(ratios[ratios.size() / 2] < 0.05);
}

TEST_CASE("long_run_variance clamps negative sums") {
    // Alternating squares give gamma(1) = -gamma(0).
    Eigen::VectorXd x(8);
    x << 1, 0, 1, 0, 1, 0, 1, 0;
    const LongRunVariance lrv = long_run_variance(x, 0.5, 1);
    CHECK(lrv.gammas[0] + 2 * lrv.gammas[1] < 0.0);
    CHECK(lrv.clamped);
    CHECK(lrv.sigma2 == 0.0);
    CHECK_THROWS_AS(long_run_variance(x, 0.5, 8), std::invalid_argument);
}

TEST_CASE("hclub arithmetic") {
    LongRunVariance lrv;
    lrv.sigma2 = 4.0;
    const HclubResult u = hclub(lrv, 400, 0.05, 0.01, EstimatorKind::sample);
    CHECK(u.u_variance == doctest::Approx(hclub_z(0.05) * 0.1).epsilon(1e-14));
    CHECK(u.u_variance == doctest::Approx(0.196).epsilon(1e-4));
    CHECK(u.u_risk == doctest::Approx(0.98).epsilon(1e-4));

    const HclubResult paper = hclub(lrv, 400, 0.05, 0.01, EstimatorKind::sample, ZConvention::paper);
    CHECK(paper.u_variance == doctest::Approx(0.2).epsilon(1e-14));

    lrv.sigma2 = 0.0;
    const HclubResult zero = hclub(lrv, 400, 0.05, 0.01, EstimatorKind::sample);
    CHECK(zero.u_variance == 0.0);
    CHECK(zero.u_risk == 0.0);
}

TEST_CASE("hclub shrinks as tau grows") {
    LongRunVariance lrv;
    lrv.sigma2 = 1.0;
    double prev = hclub(lrv, 100, 0.001, 1.0, EstimatorKind::sample).u_variance;
    for (double tau : {0.01, 0.05, 0.1, 0.3, 0.9}) {
        const double u = hclub(lrv, 100, tau, 1.0, EstimatorKind::sample).u_variance;
        CHECK(u < prev);
        prev = u;
    }
}

TEST_CASE("crude bound on the worked three-asset draw") {
    const CovarianceEstimate truth(0.04 * Eigen::MatrixXd::Identity(3, 3), EstimatorKind::sample);
    Eigen::Matrix3d hat = 0.04 * Eigen::Matrix3d::Identity();
    hat(0, 0) -= 0.0248;
    hat(1, 2) = hat(2, 1) = 0.003;
    const CovarianceEstimate est(hat, EstimatorKind::sample);
    const Portfolio w = equal_weight(3);
    const CrudeBound cb = crude_bound(w, est, truth);
    CHECK(cb.xi == doctest::Approx(0.0248).epsilon(1e-12));
    const double upper = 0.0131 + cb.xi;
    CHECK(upper == doctest::Approx(0.0379).epsilon(1e-12));
    CHECK(100.0 * std::sqrt(upper) == doctest::Approx(19.46).epsilon(1e-3));

    const CrudeBound same = crude_bound(w, truth, truth);
    CHECK(same.xi == 0.0);
    CHECK(same.delta == 0.0);
}

TEST_CASE("crude bound dominates delta on random 5x5 instances") {
    Rng rng = make_rng(81);
    for (int i = 0; i < 10000; ++i) {
        const Eigen::MatrixXd a = standard_normal(5, 5, rng);
        const Eigen::MatrixXd b = standard_normal(5, 5, rng);
        const CovarianceEstimate truth(a * a.transpose() + Eigen::MatrixXd::Identity(5, 5),
                                       EstimatorKind::sample);
        const CovarianceEstimate est(b * b.transpose() + Eigen::MatrixXd::Identity(5, 5),
                                     EstimatorKind::sample);
        const Portfolio w = sample_random_portfolio(5, 1.0 + 3.0 * (i % 4), rng);
        const CrudeBound cb = crude_bound(w, est, truth);
        const Eigen::VectorXd wv = w.weights();
        double direct = 0.0;
        for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 5; ++c) {
                direct += wv(r) * (est.matrix()(r, c) - truth.matrix()(r, c)) * wv(c);
            }
        }
        REQUIRE(cb.delta == doctest::Approx(std::abs(direct)).epsilon(1e-10));
        REQUIRE(cb.xi >= cb.delta);
    }
}

TEST_CASE("error ratios") {
    HclubResult u;
    u.u_variance = 0.02;
    const ErrorRatios re = re_ratios(0.02, u, 0.5);
    CHECK(re.re1 == 1.0);
    CHECK(re.re2 == doctest::Approx(0.01));
    u.u_variance = 0.0;
    CHECK_THROWS_AS(re_ratios(0.02, u, 0.5), std::invalid_argument);
}

TEST_CASE("scale equivariance at s = 100") {
    const auto m = simulate_market(20, 120, 83);
    const double s = 100.0;
    const auto p = ReturnsPanel::from_matrix(m.panel.returns);
    const auto ps = ReturnsPanel::from_matrix(s * m.panel.returns);
    const FactorPanel f = FactorPanel::from_matrix(m.panel.factors);
    Rng rng = make_rng(84);
    const Portfolio w = sample_random_portfolio(20, 2.0, rng);
    const CovarianceEstimate truth(m.model.Sigma_true, EstimatorKind::sample);
    const CovarianceEstimate truth_s(s * s * m.model.Sigma_true, EstimatorKind::sample);

    const AssessmentRow a = assess_portfolio(p, sample_covariance(p), nullptr, w, 5, 0.05,
                                             ZConvention::exact, &truth);
    const AssessmentRow b = assess_portfolio(ps, sample_covariance(ps), nullptr, w, 5, 0.05,
                                             ZConvention::exact, &truth_s);
    CHECK(rel_diff(b.variance_hat, s * s * a.variance_hat) <= 1e-8);
    CHECK(rel_diff(b.sigma2_hat, std::pow(s, 4) * a.sigma2_hat) <= 1e-8);
    CHECK(rel_diff(b.u_variance, s * s * a.u_variance) <= 1e-8);
    CHECK(rel_diff(*b.re1, *a.re1) <= 1e-8);
    CHECK(rel_diff(*b.re2, *a.re2) <= 1e-8);

    const FactorModelFit fa = ols_factor_fit(p, f);
    const FactorModelFit fb = ols_factor_fit(ps, FactorPanel::from_matrix(s * m.panel.factors));
    CHECK(rel_diff(autocov_factor(fb, w, 5).sigma2, std::pow(s, 4) * autocov_factor(fa, w, 5).sigma2) <=
          1e-8);
}

TEST_CASE("assessment row and CSV") {
    const auto m = simulate_market(10, 80, 85);
    const auto p = ReturnsPanel::from_matrix(m.panel.returns);
    const FactorModelFit fit = pca_factor_fit(p, 3);
    const auto est = poet_covariance(fit, sample_covariance(p), ThresholdRule::soft(), 0.5);
    const AssessmentRow row = assess_portfolio(p, est, &fit, equal_weight(10), 5, 0.05);
    CHECK(row.estimator == EstimatorKind::poet);
    CHECK(row.T == 80);
    CHECK(!row.xi.has_value());
    CHECK(row.u_risk == doctest::Approx(row.u_variance / std::sqrt(4.0 * row.variance_hat)));
    CHECK_THROWS_AS(assess_portfolio(p, est, nullptr, equal_weight(10), 5, 0.05),
                    std::invalid_argument);

    std::ostringstream out;
    write_assessment_header(out);
    write_assessment_row(out, row);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("estimator", 0) == 0);
    CHECK(rate_based_lags(300) == 4);
}
