#include "prl/covariance.hpp"

#include "prl/errors.hpp"
#include "prl/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace prl {

namespace detail {

struct ThresholdParts {
    Eigen::MatrixXd low_rank;
    Eigen::MatrixXd raw_residual;
    /// Cut-off for entry (i, j) is C * rate * sqrt(raw_ii raw_jj).
    double rate = 0.0;
    /// POET: the estimate is S + (thresholded - raw) so that C = 0 returns S bit-for-bit.
    std::optional<Eigen::MatrixXd> base;
};

struct SpectrumCache {
    std::once_flag once;
    double min = 0.0;
    double max = 0.0;
};

}  // namespace detail

CovarianceEstimate make_thresholded_estimate(std::shared_ptr<const detail::ThresholdParts> parts,
                                             EstimatorKind kind, Tuning tuning,
                                             std::vector<std::string> assets);

namespace {

constexpr double kPdFloor = 1e-8;

Eigen::MatrixXd threshold_offdiagonal(const Eigen::MatrixXd& raw, double scaled_C,
                                      const ThresholdRule& rule) {
    const Eigen::Index n = raw.rows();
    const Eigen::VectorXd scale = raw.diagonal().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out(j, j) = raw(j, j);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double tau = scaled_C * scale(i) * scale(j);
            const double v = apply_threshold(raw(i, j), tau, rule);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

Eigen::MatrixXd centred(const ReturnsPanel& panel, bool demean_rows) {
    return demean_rows ? demean_columns(panel.values()) : panel.values();
}

void check_same_dates(const ReturnsPanel& returns, const FactorPanel& factors) {
    if (returns.T() != factors.T() || returns.dates() != factors.dates()) {
        throw DataError("ols_factor_fit: returns and factors are not aligned (T=" +
                        std::to_string(returns.T()) + " vs " + std::to_string(factors.T()) +
                        "); call align_panels first");
    }
}

}  // namespace

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::sample: return "sample";
        case EstimatorKind::factor: return "factor";
        case EstimatorKind::poet: return "poet";
    }
    return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
    if (name == "sample") return EstimatorKind::sample;
    if (name == "factor") return EstimatorKind::factor;
    if (name == "poet") return EstimatorKind::poet;
    throw std::invalid_argument("unknown estimator '" + name + "' (expected sample, factor or poet)");
}

void ThresholdRule::validate() const {
    if (kind == Kind::scad && !(scad_a > 2.0)) {
        throw std::invalid_argument("SCAD threshold requires a > 2, got " + std::to_string(scad_a));
    }
}

std::string to_string(ThresholdRule::Kind kind) {
    switch (kind) {
        case ThresholdRule::Kind::hard: return "hard";
        case ThresholdRule::Kind::soft: return "soft";
        case ThresholdRule::Kind::scad: return "scad";
    }
    return "unknown";
}

ThresholdRule::Kind parse_threshold_kind(const std::string& name) {
    if (name == "hard") return ThresholdRule::Kind::hard;
    if (name == "soft") return ThresholdRule::Kind::soft;
    if (name == "scad") return ThresholdRule::Kind::scad;
    throw std::invalid_argument("unknown threshold rule '" + name + "' (expected hard, soft or scad)");
}

double apply_threshold(double value, double tau, const ThresholdRule& rule) {
    if (!(tau >= 0.0)) throw std::invalid_argument("apply_threshold: negative cut-off");
    const double mag = std::abs(value);
    if (mag <= tau) return 0.0;
    const double sign = value > 0.0 ? 1.0 : -1.0;
    switch (rule.kind) {
        case ThresholdRule::Kind::hard:
            return value;
        case ThresholdRule::Kind::soft:
            return sign * (mag - tau);
        case ThresholdRule::Kind::scad: {
            const double a = rule.scad_a;
            if (mag <= 2.0 * tau) return sign * (mag - tau);
            if (mag <= a * tau) return ((a - 1.0) * value - sign * a * tau) / (a - 2.0);
            return value;
        }
    }
    return value;
}

CovarianceEstimate::CovarianceEstimate(Eigen::MatrixXd matrix, EstimatorKind kind, Tuning tuning,
                                       std::vector<std::string> assets)
    : matrix_(std::move(matrix)),
      kind_(kind),
      tuning_(tuning),
      assets_(std::move(assets)),
      spectrum_(std::make_shared<detail::SpectrumCache>()) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
        throw DataError("CovarianceEstimate: matrix must be square and non-empty");
    }
    if (!assets_.empty() && static_cast<Eigen::Index>(assets_.size()) != matrix_.rows()) {
        throw DataError("CovarianceEstimate: " + std::to_string(assets_.size()) +
                        " asset labels for N=" + std::to_string(matrix_.rows()));
    }
    if (!matrix_.allFinite()) throw NumericalError("CovarianceEstimate: non-finite entries");
    const double scale = matrix_.cwiseAbs().maxCoeff();
    const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw DataError("CovarianceEstimate: matrix is not symmetric (max asymmetry " +
                        std::to_string(asym) + ")");
    }
    matrix_ = symmetrize(matrix_);
    const double min_diag = matrix_.diagonal().minCoeff();
    if (min_diag < 0.0 || (kind_ != EstimatorKind::sample && min_diag <= 0.0)) {
        throw NumericalError("CovarianceEstimate: non-positive diagonal entry");
    }
}

double CovarianceEstimate::min_eigenvalue() const {
    std::call_once(spectrum_->once, [this] {
        const Eigen::VectorXd ev = sym_eigenvalues(matrix_);
        spectrum_->max = ev(0);
        spectrum_->min = ev(ev.size() - 1);
    });
    return spectrum_->min;
}

double CovarianceEstimate::max_eigenvalue() const {
    min_eigenvalue();
    return spectrum_->max;
}

const Eigen::MatrixXd& CovarianceEstimate::low_rank_part() const {
    if (!parts_) throw std::logic_error("low_rank_part: sample estimate has no factor structure");
    return parts_->low_rank;
}

const Eigen::MatrixXd& CovarianceEstimate::raw_residual() const {
    if (!parts_) throw std::logic_error("raw_residual: sample estimate has no factor structure");
    return parts_->raw_residual;
}

Eigen::MatrixXd CovarianceEstimate::residual_part() const {
    if (!parts_) throw std::logic_error("residual_part: sample estimate has no factor structure");
    return threshold_offdiagonal(parts_->raw_residual, tuning_.C * parts_->rate, tuning_.rule);
}

CovarianceEstimate CovarianceEstimate::with_threshold(double C, const ThresholdRule& rule) const {
    if (!parts_) throw std::invalid_argument("with_threshold: sample estimate cannot be re-thresholded");
    Tuning tuning = tuning_;
    tuning.C = C;
    tuning.rule = rule;
    return make_thresholded_estimate(parts_, kind_, tuning, assets_);
}

CovarianceEstimate make_thresholded_estimate(std::shared_ptr<const detail::ThresholdParts> parts,
                                             EstimatorKind kind, Tuning tuning,
                                             std::vector<std::string> assets) {
    if (!(tuning.C >= 0.0)) throw std::invalid_argument("threshold constant C must be >= 0");
    tuning.rule.validate();
    const Eigen::MatrixXd thresholded =
        threshold_offdiagonal(parts->raw_residual, tuning.C * parts->rate, tuning.rule);
    Eigen::MatrixXd matrix;
    if (parts->base) {
        matrix = *parts->base + (thresholded - parts->raw_residual);
    } else {
        matrix = parts->low_rank + thresholded;
    }
    CovarianceEstimate est(std::move(matrix), kind, tuning, std::move(assets));
    est.parts_ = std::move(parts);
    return est;
}

CovarianceEstimate sample_covariance(const ReturnsPanel& panel, bool demean_rows) {
    const Eigen::MatrixXd x = centred(panel, demean_rows);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
    s = s.selfadjointView<Eigen::Lower>();
    return CovarianceEstimate(std::move(s), EstimatorKind::sample, Tuning{}, panel.assets());
}

FactorModelFit ols_factor_fit(const ReturnsPanel& returns, const FactorPanel& factors) {
    check_same_dates(returns, factors);
    const Eigen::Index T = returns.T();
    const Eigen::Index K = factors.K();
    if (T <= K) {
        throw DataError("ols_factor_fit: need T > K (T=" + std::to_string(T) +
                        ", K=" + std::to_string(K) + ")");
    }
    const Eigen::MatrixXd x = demean_columns(returns.values());
    const Eigen::MatrixXd f = demean_columns(factors.values());
    const Eigen::MatrixXd gram = f.transpose() * f;

    const Eigen::VectorXd gram_ev = sym_eigenvalues(gram);
    if (!(gram_ev(K - 1) > 1e-12 * gram_ev(0))) {
        throw NumericalError("ols_factor_fit: singular factor Gram matrix");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("ols_factor_fit: singular factor Gram matrix");
    }

    FactorModelFit fit;
    // B' = (F'F)^-1 F'X
    fit.loadings = llt.solve(f.transpose() * x).transpose();
    fit.residuals = x - f * fit.loadings.transpose();
    fit.factor_cov = symmetrize(gram / static_cast<double>(T));
    fit.factors = f;
    fit.source = FactorSource::observed;
    fit.assets = returns.assets();
    return fit;
}

CovarianceEstimate factor_covariance(const FactorModelFit& fit, const ThresholdRule& rule,
                                     double C) {
    if (fit.source != FactorSource::observed) {
        throw std::invalid_argument("factor_covariance: requires a fit on observed factors");
    }
    if (!(C >= 0.0)) throw std::invalid_argument("factor_covariance: C must be >= 0");
    const auto T = static_cast<double>(fit.T());
    const auto N = static_cast<double>(fit.N());

    auto parts = std::make_shared<detail::ThresholdParts>();
    Eigen::MatrixXd su = Eigen::MatrixXd::Zero(fit.N(), fit.N());
    su.selfadjointView<Eigen::Lower>().rankUpdate(fit.residuals.transpose(), 1.0 / T);
    parts->raw_residual = su.selfadjointView<Eigen::Lower>();
    if (!(parts->raw_residual.diagonal().minCoeff() > 0.0)) {
        throw NumericalError("factor_covariance: non-positive residual variance on the diagonal");
    }
    parts->low_rank = symmetrize(fit.loadings * fit.factor_cov * fit.loadings.transpose());
    parts->rate = std::sqrt(std::log(N) / T);

    Tuning tuning{C, rule, static_cast<int>(fit.K())};
    return make_thresholded_estimate(std::move(parts), EstimatorKind::factor, tuning, fit.assets);
}

FactorModelFit pca_factor_fit(const ReturnsPanel& panel, int K, bool demean_rows) {
    const Eigen::Index T = panel.T();
    const Eigen::Index N = panel.N();
    if (K < 1 || K > std::min(N, T)) {
        throw std::invalid_argument("pca_factor_fit: K=" + std::to_string(K) +
                                    " outside [1, min(N, T)=" + std::to_string(std::min(N, T)) + "]");
    }
    const Eigen::MatrixXd x = centred(panel, demean_rows);
    const double t = static_cast<double>(T);

    FactorModelFit fit;
    fit.factors.resize(T, K);
    fit.eigenvalues.resize(K);
    if (N < T) {
        // N x N route: T x T eigenvectors are X u / sqrt(lambda).
        const SymmetricEigen eig = sym_eigen(symmetrize(x.transpose() * x));
        for (int k = 0; k < K; ++k) {
            const double lambda = eig.values(k);
            if (!(lambda > 0.0)) {
                throw NumericalError("pca_factor_fit: zero eigenvalue among the top " +
                                     std::to_string(K) + "; panel rank is below K");
            }
            fit.factors.col(k) = x * eig.vectors.col(k) * std::sqrt(t / lambda);
            fit.eigenvalues(k) = lambda / t;
        }
    } else {
        const SymmetricEigen eig = sym_eigen(symmetrize(x * x.transpose()));
        for (int k = 0; k < K; ++k) {
            fit.factors.col(k) = eig.vectors.col(k) * std::sqrt(t);
            fit.eigenvalues(k) = std::max(eig.values(k), 0.0) / t;
        }
    }
    normalize_signs(fit.factors);
    fit.loadings = x.transpose() * fit.factors / t;
    fit.residuals = x - fit.factors * fit.loadings.transpose();
    fit.factor_cov = Eigen::MatrixXd::Identity(K, K);
    fit.source = FactorSource::pca;
    fit.assets = panel.assets();
    return fit;
}

CovarianceEstimate poet_covariance(const ReturnsPanel& panel, int K, const ThresholdRule& rule,
                                   double C, bool demean_rows) {
    const Eigen::Index T = panel.T();
    const Eigen::Index N = panel.N();
    if (K < 1 || K >= std::min(N, T)) {
        throw std::invalid_argument("poet_covariance: K=" + std::to_string(K) +
                                    " outside [1, min(N, T))");
    }
    if (!(C >= 0.0)) throw std::invalid_argument("poet_covariance: C must be >= 0");
    return poet_covariance(pca_factor_fit(panel, K, demean_rows),
                           sample_covariance(panel, demean_rows), rule, C);
}

CovarianceEstimate poet_covariance(const FactorModelFit& fit, const CovarianceEstimate& sample,
                                   const ThresholdRule& rule, double C) {
    if (fit.source != FactorSource::pca) {
        throw std::invalid_argument("poet_covariance: requires a principal-components fit");
    }
    if (sample.N() != fit.N()) {
        throw DataError("poet_covariance: fit has N=" + std::to_string(fit.N()) +
                        ", sample covariance has N=" + std::to_string(sample.N()));
    }
    if (!(C >= 0.0)) throw std::invalid_argument("poet_covariance: C must be >= 0");
    const auto T = static_cast<double>(fit.T());
    const auto N = static_cast<double>(fit.N());

    auto parts = std::make_shared<detail::ThresholdParts>();
    // sum_{j<=K} lambda_j xi_j xi_j' = B B' under the PCA normalisation
    parts->low_rank = symmetrize(fit.loadings * fit.loadings.transpose());
    parts->raw_residual = symmetrize(sample.matrix() - parts->low_rank);
    parts->rate = std::sqrt(std::log(N) / T) + 1.0 / std::sqrt(N);
    parts->base = sample.matrix();

    Tuning tuning{C, rule, static_cast<int>(fit.K())};
    return make_thresholded_estimate(std::move(parts), EstimatorKind::poet, tuning, fit.assets);
}

int select_num_factors(const ReturnsPanel& panel, int k_max, bool demean_rows) {
    const Eigen::Index T = panel.T();
    const Eigen::Index N = panel.N();
    if (k_max < 1 || k_max >= std::min(N, T)) {
        throw std::invalid_argument("select_num_factors: k_max=" + std::to_string(k_max) +
                                    " outside [1, min(N, T))");
    }
    const Eigen::MatrixXd x = centred(panel, demean_rows);
    const Eigen::MatrixXd gram = N < T ? Eigen::MatrixXd(x.transpose() * x)
                                       : Eigen::MatrixXd(x * x.transpose());
    const Eigen::VectorXd ev = sym_eigenvalues(symmetrize(gram)).cwiseMax(0.0);

    const double nt = static_cast<double>(N) * static_cast<double>(T);
    const double n_plus_t = static_cast<double>(N + T);
    const double penalty = n_plus_t / nt * std::log(nt / n_plus_t);
    const double total = x.squaredNorm() / nt;  // V(0)
    // residual mean squares below this floor are rounding noise
    const double floor = std::max(total * 1e-14, std::numeric_limits<double>::min());

    int best_k = 1;
    double best_ic = std::numeric_limits<double>::infinity();
    double explained = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        explained += ev(k - 1);
        const double v = std::max(total - explained / nt, floor);
        const double ic = std::log(v) + k * penalty;
        if (ic < best_ic) {
            best_ic = ic;
            best_k = k;
        }
    }
    return best_k;
}

double portfolio_variance(const CovarianceEstimate& estimate, const Portfolio& w) {
    if (w.size() != estimate.N()) {
        throw DataError("portfolio_variance: weights have dimension " + std::to_string(w.size()) +
                        ", covariance has N=" + std::to_string(estimate.N()));
    }
    return w.weights().dot(estimate.matrix() * w.weights());
}

CovarianceEstimate ensure_positive_definite(const CovarianceEstimate& estimate,
                                            const ThresholdRule& rule, double C_start,
                                            int max_doublings) {
    if (!estimate.has_threshold_parts()) {
        throw std::invalid_argument("ensure_positive_definite: requires a factor or POET estimate");
    }
    if (estimate.min_eigenvalue() > kPdFloor) return estimate;
    double C = C_start;
    for (int i = 0; i <= max_doublings; ++i) {
        CovarianceEstimate candidate = estimate.with_threshold(C, rule);
        if (candidate.min_eigenvalue() > kPdFloor) return candidate;
        C = C > 0.0 ? 2.0 * C : 0.1;
    }
    throw NumericalError("ensure_positive_definite: estimate still not positive definite after " +
                         std::to_string(max_doublings) + " doublings of C");
}

void write_covariance_csv(const CovarianceEstimate& estimate, const std::string& path,
                          const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    const Eigen::Index n = estimate.N();
    std::vector<std::string> names = estimate.assets();
    if (names.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) names.push_back("a" + std::to_string(i + 1));
    }
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "asset";
    for (const auto& name : names) out << ',' << name;
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < n; ++i) {
        out << names[i];
        for (Eigen::Index j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", estimate.matrix()(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

CovarianceEstimate read_covariance_csv(const std::string& path, EstimatorKind kind) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!header_seen) {
            names.assign(fields.begin() + 1, fields.end());
            header_seen = true;
            continue;
        }
        if (fields.size() != names.size() + 1) {
            throw DataError(path + ": ragged covariance row");
        }
        std::vector<double> row;
        for (std::size_t j = 1; j < fields.size(); ++j) {
            try {
                row.push_back(std::stod(fields[j]));
            } catch (const std::exception&) {
                throw DataError(path + ": non-numeric entry '" + fields[j] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(names.size());
    if (static_cast<Eigen::Index>(rows.size()) != n || n == 0) {
        throw DataError(path + ": covariance file is not square");
    }
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    return CovarianceEstimate(std::move(m), kind, Tuning{}, std::move(names));
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary covariance format assumes a little-endian host");

}  // namespace

void write_covariance_binary(const CovarianceEstimate& estimate, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    const Eigen::Index n = estimate.N();
    if (n > static_cast<Eigen::Index>(std::numeric_limits<std::uint32_t>::max())) {
        throw DataError("write_covariance_binary: N too large");
    }
    out.write("PRL1", 4);
    const auto n32 = static_cast<std::uint32_t>(n);
    out.write(reinterpret_cast<const char*>(&n32), sizeof n32);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = estimate.matrix()(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

CovarianceEstimate read_covariance_binary(const std::string& path, EstimatorKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t n32 = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, "PRL1", 4) != 0) {
        throw DataError(path + ": bad magic bytes (expected PRL1)");
    }
    if (!in.read(reinterpret_cast<char*>(&n32), sizeof n32) || n32 == 0) {
        throw DataError(path + ": missing dimension");
    }
    const auto n = static_cast<Eigen::Index>(n32);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = 0.0;
            if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
                throw DataError(path + ": truncated lower triangle");
            }
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return CovarianceEstimate(std::move(m), kind);
}

}  // namespace prl
