#include "prl/risk.hpp"

#include "prl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace prl {

namespace {

/// Lower-tail standard normal quantile: Acklam's rational approximation
/// (relative error ~1e-9) followed by one Halley step on erfc.
double normal_lower_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

void check_dimension(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw DataError(std::string(what) + ": weights have dimension " + std::to_string(got) +
                        ", expected " + std::to_string(want));
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

}  // namespace

double normal_upper_quantile(double p) {
    if (!(p > 0.0 && p < 0.5)) {
        throw std::invalid_argument("normal_upper_quantile: p must lie in (0, 0.5), got " +
                                    std::to_string(p));
    }
    return -normal_lower_quantile(p);
}

double hclub_z(double tau, ZConvention convention) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("tau must lie in (0, 1), got " + std::to_string(tau));
    }
    if (convention == ZConvention::paper) {
        if (std::abs(tau - 0.05) < 1e-12) return 2.0;
        if (std::abs(tau - 0.01) < 1e-12) return 2.58;
    }
    return normal_upper_quantile(tau / 2.0);
}

LongRunVariance long_run_variance(const Eigen::VectorXd& series, double centre, int L) {
    const Eigen::Index T = series.size();
    if (L < 0 || L >= T) {
        throw std::invalid_argument("long_run_variance: need 0 <= L < T (L=" + std::to_string(L) +
                                    ", T=" + std::to_string(T) + ")");
    }
    const Eigen::ArrayXd z = series.array().square() - centre;
    LongRunVariance out;
    out.L = L;
    out.gammas.resize(static_cast<std::size_t>(L) + 1);
    const double t = static_cast<double>(T);
    for (int h = 0; h <= L; ++h) {
        const Eigen::Index n = T - h;
        out.gammas[h] = (z.head(n) * z.segment(h, n)).sum() / t;
    }
    double s = out.gammas[0];
    for (int h = 1; h <= L; ++h) s += 2.0 * out.gammas[h];
    if (s < 0.0) {
        out.sigma2 = 0.0;
        out.clamped = true;
    } else {
        out.sigma2 = s;
    }
    return out;
}

LongRunVariance autocov_sample(const ReturnsPanel& panel, const Portfolio& w, int L,
                               bool demean_rows) {
    check_dimension(w.size(), panel.N(), "autocov_sample");
    const Eigen::MatrixXd x = demean_rows ? demean_columns(panel.values()) : panel.values();
    const Eigen::VectorXd series = x * w.weights();
    const double centre = series.squaredNorm() / static_cast<double>(series.size());
    return long_run_variance(series, centre, L);
}

LongRunVariance autocov_factor(const FactorModelFit& fit, const Portfolio& w, int L) {
    if (fit.source != FactorSource::observed) {
        throw std::invalid_argument("autocov_factor: requires a fit on observed factors");
    }
    check_dimension(w.size(), fit.N(), "autocov_factor");
    const Eigen::VectorXd exposure = fit.loadings.transpose() * w.weights();
    const Eigen::VectorXd series = fit.factors * exposure;
    const double centre = exposure.dot(fit.factor_cov * exposure);
    return long_run_variance(series, centre, L);
}

LongRunVariance autocov_poet(const FactorModelFit& fit, const Portfolio& w, int L) {
    if (fit.source != FactorSource::pca) {
        throw std::invalid_argument("autocov_poet: requires a principal-components fit");
    }
    check_dimension(w.size(), fit.N(), "autocov_poet");
    const Eigen::VectorXd exposure = fit.loadings.transpose() * w.weights();
    const Eigen::VectorXd series = fit.factors * exposure;
    return long_run_variance(series, exposure.squaredNorm(), L);
}

int rate_based_lags(Eigen::Index T) {
    return static_cast<int>(std::floor(std::pow(static_cast<double>(T), 0.25)));
}

HclubResult hclub(const LongRunVariance& lrv, Eigen::Index T, double tau,
                  double variance_estimate, EstimatorKind kind, ZConvention convention) {
    if (!(variance_estimate > 0.0)) {
        throw std::invalid_argument("hclub: estimated portfolio variance must be positive");
    }
    if (!(lrv.sigma2 >= 0.0)) throw std::invalid_argument("hclub: negative long-run variance");
    if (T < 1) throw std::invalid_argument("hclub: T must be positive");
    HclubResult out;
    out.tau = tau;
    out.z = hclub_z(tau, convention);
    out.u_variance = out.z * std::sqrt(lrv.sigma2 / static_cast<double>(T));
    out.u_risk = out.u_variance / std::sqrt(4.0 * variance_estimate);
    out.estimator_kind = kind;
    return out;
}

CrudeBound crude_bound(const Portfolio& w, const CovarianceEstimate& estimate,
                       const CovarianceEstimate& truth) {
    if (estimate.N() != truth.N()) {
        throw DataError("crude_bound: estimate has N=" + std::to_string(estimate.N()) +
                        ", truth has N=" + std::to_string(truth.N()));
    }
    check_dimension(w.size(), estimate.N(), "crude_bound");
    const Eigen::MatrixXd diff = estimate.matrix() - truth.matrix();
    const double l1 = w.weights().lpNorm<1>();
    CrudeBound out;
    out.xi = l1 * l1 * diff.cwiseAbs().maxCoeff();
    out.delta = std::abs(w.weights().dot(diff * w.weights()));
    return out;
}

ErrorRatios re_ratios(double xi, const HclubResult& u, double true_variance) {
    if (!(u.u_variance > 0.0)) throw std::invalid_argument("re_ratios: H-CLUB is zero");
    if (!(true_variance > 0.0)) throw std::invalid_argument("re_ratios: true variance is not positive");
    return {xi / u.u_variance, u.u_variance / (4.0 * true_variance)};
}

AssessmentRow assess_portfolio(const ReturnsPanel& panel, const CovarianceEstimate& estimate,
                               const FactorModelFit* fit, const Portfolio& w, int L, double tau,
                               ZConvention convention, const CovarianceEstimate* truth) {
    AssessmentRow row;
    row.estimator = estimate.kind();
    row.N = estimate.N();
    row.T = panel.T();
    row.c = w.gross_exposure();
    row.L = L;
    row.tau = tau;
    row.variance_hat = portfolio_variance(estimate, w);
    row.risk_hat = std::sqrt(std::max(row.variance_hat, 0.0));

    LongRunVariance lrv;
    switch (estimate.kind()) {
        case EstimatorKind::sample:
            lrv = autocov_sample(panel, w, L);
            break;
        case EstimatorKind::factor:
            if (!fit) throw std::invalid_argument("assess_portfolio: factor estimate needs its fit");
            lrv = autocov_factor(*fit, w, L);
            break;
        case EstimatorKind::poet:
            if (!fit) throw std::invalid_argument("assess_portfolio: POET estimate needs its fit");
            lrv = autocov_poet(*fit, w, L);
            break;
    }
    row.sigma2_hat = lrv.sigma2;
    row.clamped = lrv.clamped;
    const HclubResult u = hclub(lrv, panel.T(), tau, row.variance_hat, estimate.kind(), convention);
    row.u_variance = u.u_variance;
    row.u_risk = u.u_risk;

    if (truth) {
        const CrudeBound cb = crude_bound(w, estimate, *truth);
        row.xi = cb.xi;
        row.delta = cb.delta;
        const double true_variance = portfolio_variance(*truth, w);
        if (u.u_variance > 0.0 && true_variance > 0.0) {
            const ErrorRatios re = re_ratios(cb.xi, u, true_variance);
            row.re1 = re.re1;
            row.re2 = re.re2;
        }
    }
    return row;
}

const std::vector<std::string>& assessment_csv_columns() {
    static const std::vector<std::string> columns = {
        "estimator", "N",          "T",      "c",  "L",     "tau", "variance_hat", "risk_hat",
        "sigma2_hat", "u_variance", "u_risk", "xi", "delta", "re1", "re2",          "clamped"};
    return columns;
}

void write_assessment_header(std::ostream& out) {
    const auto& cols = assessment_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

void write_assessment_row(std::ostream& out, const AssessmentRow& row) {
    out << to_string(row.estimator) << ',' << row.N << ',' << row.T << ',' << format_double(row.c)
        << ',' << row.L << ',' << format_double(row.tau) << ',' << format_double(row.variance_hat)
        << ',' << format_double(row.risk_hat) << ',' << format_double(row.sigma2_hat) << ','
        << format_double(row.u_variance) << ',' << format_double(row.u_risk) << ','
        << format_optional(row.xi) << ',' << format_optional(row.delta) << ','
        << format_optional(row.re1) << ',' << format_optional(row.re2) << ','
        << (row.clamped ? "true" : "false") << '\n';
}

}  // namespace prl
