#include "prl/portfolio.hpp"

#include "prl/errors.hpp"

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

namespace prl {

namespace {

Eigen::VectorXd normalized_exponentials(Eigen::Index n, double total, Rng& rng) {
    boost::random::exponential_distribution<double> exp1(1.0);
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = exp1(rng);
    return e * (total / e.sum());
}

/// a with sum_i (v_i - a)_+ = s, for s > 0.
double upper_level(const Eigen::VectorXd& v, double s) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0;
    double level = u[0] - s;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double a = (cum - s) / static_cast<double>(k + 1);
        if (u[k] > a) level = a;
        else break;
    }
    return level;
}

double objective(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& w) {
    return w.dot(sigma * w);
}

/// Solves the equality-constrained problem on a fixed long/short support and
/// checks the full KKT conditions. Returns nothing unless the point is optimal.
std::optional<Eigen::VectorXd> polish(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& w,
                                      double c, double cutoff) {
    const Eigen::Index N = w.size();
    const bool long_only = c - 1.0 <= 1e-12;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < N; ++i) {
        if (std::abs(w(i)) > cutoff) support.push_back(i);
    }
    if (support.empty()) return std::nullopt;
    const auto n = static_cast<Eigen::Index>(support.size());
    Eigen::VectorXd sign(n);
    bool any_short = false;
    for (Eigen::Index k = 0; k < n; ++k) {
        sign(k) = w(support[k]) > 0.0 ? 1.0 : -1.0;
        any_short = any_short || sign(k) < 0.0;
    }
    if (long_only == any_short) return std::nullopt;

    const Eigen::MatrixXd sub = sigma(support, support);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd x1 = llt.solve(Eigen::VectorXd::Ones(n));

    Eigen::VectorXd ws;
    double lo = 0.0;  // gradient level on long positions
    double hi = 0.0;  // gradient level on short positions
    if (long_only) {
        ws = x1 / x1.sum();
        lo = 2.0 / x1.sum();
        hi = std::numeric_limits<double>::infinity();
    } else {
        // 2 Sigma_SS w_S = alpha 1 - lambda s, with 1'w = 1 and s'w = c.
        const Eigen::VectorXd xs = llt.solve(sign);
        Eigen::Matrix2d m;
        m << x1.sum(), -xs.sum(), sign.dot(x1), -sign.dot(xs);
        const Eigen::Vector2d rhs(2.0, 2.0 * c);
        const Eigen::Vector2d sol = m.fullPivLu().solve(rhs);
        if (!sol.allFinite()) return std::nullopt;
        const double alpha = sol(0);
        const double lambda = sol(1);
        if (lambda < -1e-12 * std::abs(alpha)) return std::nullopt;
        ws = 0.5 * (alpha * x1 - lambda * xs);
        lo = alpha - lambda;
        hi = alpha + lambda;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(sign(k) * ws(k) > 0.0)) return std::nullopt;
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    out(support) = ws;
    const Eigen::VectorXd g = 2.0 * (sigma * out);
    const double slack = 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff());
    std::vector<bool> in_support(static_cast<std::size_t>(N), false);
    for (auto i : support) in_support[static_cast<std::size_t>(i)] = true;
    for (Eigen::Index i = 0; i < N; ++i) {
        if (in_support[static_cast<std::size_t>(i)]) continue;
        if (g(i) < lo - slack || g(i) > hi + slack) return std::nullopt;
    }
    return out;
}

void write_comment(std::ofstream& out, const std::string& header_comment) {
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
}

std::string format_weight(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Portfolio sample_random_portfolio(Eigen::Index N, double c, Rng& rng) {
    if (N < 1) throw std::invalid_argument("sample_random_portfolio: N must be at least 1");
    if (!(c >= 1.0) || !std::isfinite(c)) {
        throw std::invalid_argument("sample_random_portfolio: gross exposure must be >= 1");
    }
    if (c == 1.0) {
        return Portfolio(normalized_exponentials(N, 1.0, rng));
    }
    if (N < 2) {
        throw std::invalid_argument("sample_random_portfolio: c > 1 needs at least two assets");
    }
    const double p = (c + 1.0) / (2.0 * c);
    boost::random::binomial_distribution<Eigen::Index, double> count(N, p);
    Eigen::Index k = 0;
    int attempts = 0;
    do {
        if (++attempts > 100) {
            throw NumericalError("sample_random_portfolio: 100 degenerate long/short splits");
        }
        k = count(rng);
    } while (k == 0 || k == N);

    Eigen::VectorXd w(N);
    w.head(k) = normalized_exponentials(k, 0.5 * (c + 1.0), rng);
    w.tail(N - k) = -normalized_exponentials(N - k, 0.5 * (c - 1.0), rng);
    // Fisher-Yates with a Boost distribution; std::shuffle is not portable.
    for (Eigen::Index i = N - 1; i > 0; --i) {
        boost::random::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(w(i), w(pick(rng)));
    }
    return Portfolio(std::move(w));
}

Portfolio equal_weight(Eigen::Index N) {
    if (N < 1) throw std::invalid_argument("equal_weight: N must be at least 1");
    return Portfolio(Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N)));
}

double gross_exposure(const Portfolio& w) { return w.gross_exposure(); }

Eigen::VectorXd project_exposure_set(const Eigen::VectorXd& v, double c) {
    if (!(c >= 1.0)) throw std::invalid_argument("project_exposure_set: c must be >= 1");
    const Eigen::Index N = v.size();
    const double shift = (v.sum() - 1.0) / static_cast<double>(N);
    Eigen::VectorXd w = v.array() - shift;
    if (w.lpNorm<1>() <= c) return w;

    // The l1 constraint binds: long side sums to (1+c)/2, short side to (c-1)/2.
    const double a = upper_level(v, 0.5 * (1.0 + c));
    w = (v.array() - a).cwiseMax(0.0);
    const double short_total = 0.5 * (c - 1.0);
    if (short_total > 0.0) {
        const double b = -upper_level(-v, short_total);
        w.array() -= (b - v.array()).cwiseMax(0.0);
    }
    return w;
}

Portfolio min_variance(const CovarianceEstimate& estimate, double c,
                       const MinVarianceOptions& opts) {
    if (!(c >= 1.0) || !std::isfinite(c)) {
        throw std::invalid_argument("min_variance: gross exposure must be >= 1");
    }
    if (!(opts.tol > 0.0) || opts.max_iter < 1) {
        throw std::invalid_argument("min_variance: tol must be positive and max_iter >= 1");
    }
    if (!(estimate.min_eigenvalue() > 1e-10)) {
        throw NumericalError("min_variance: covariance estimate is not positive definite "
                             "(min eigenvalue " + std::to_string(estimate.min_eigenvalue()) + ")");
    }
    const Eigen::MatrixXd& sigma = estimate.matrix();
    const Eigen::Index N = estimate.N();

    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    const Eigen::VectorXd x1 = llt.solve(Eigen::VectorXd::Ones(N));
    const Eigen::VectorXd gmv = x1 / x1.sum();
    if (gmv.lpNorm<1>() <= c) return Portfolio(gmv);

    const double lipschitz = 2.0 * estimate.max_eigenvalue();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
    Eigen::VectorXd y = w;
    double t = 1.0;
    bool converged = false;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const Eigen::VectorXd step = y - (2.0 / lipschitz) * (sigma * y);
        const Eigen::VectorXd next = project_exposure_set(step, c);
        const Eigen::VectorXd mapping = lipschitz * (y - next);
        const double f = objective(sigma, next);
        converged = mapping.norm() * 2.0 * c <= opts.tol * f;

        if ((y - next).dot(next - w) > 0.0) {
            // momentum points uphill: restart
            t = 1.0;
            y = next;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / t_next) * (next - w);
            t = t_next;
        }
        w = next;

        if (converged || it % 200 == 0) {
            const double largest = w.cwiseAbs().maxCoeff();
            for (double cutoff : {0.0, 1e-9 * largest}) {
                if (auto exact = polish(sigma, w, c, cutoff)) {
                    if (objective(sigma, *exact) <= f * (1.0 + 1e-12)) return Portfolio(*exact);
                }
            }
        }
        if (converged) return Portfolio(w);
    }
    throw NumericalError("min_variance: no convergence within " + std::to_string(opts.max_iter) +
                         " iterations");
}

void write_portfolio_csv(const Portfolio& w, const std::vector<std::string>& assets,
                         const std::string& path, const std::string& header_comment) {
    if (static_cast<Eigen::Index>(assets.size()) != w.size()) {
        throw DataError("write_portfolio_csv: " + std::to_string(assets.size()) +
                        " labels for " + std::to_string(w.size()) + " weights");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_comment(out, header_comment);
    out << "asset,weight\n";
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        out << assets[static_cast<std::size_t>(i)] << ',' << format_weight(w.weights()(i)) << '\n';
    }
}

std::pair<std::vector<std::string>, Portfolio> read_portfolio_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::string> assets;
    std::vector<double> weights;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line != "asset,weight") {
                throw DataError(path + ": expected header 'asset,weight'");
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": expected 2 fields");
        }
        const std::string cell = line.substr(comma + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ", column 'weight': not a finite number: '" + cell + "'");
        }
        assets.push_back(line.substr(0, comma));
        weights.push_back(v);
    }
    if (weights.empty()) throw DataError(path + ": no weights");
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                          static_cast<Eigen::Index>(weights.size()));
    try {
        return {std::move(assets), Portfolio(std::move(w))};
    } catch (const std::invalid_argument& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_portfolio_batch_csv(const std::vector<Portfolio>& batch,
                               const std::vector<std::string>& assets, const std::string& path,
                               const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_comment(out, header_comment);
    out << "portfolio,asset,weight\n";
    for (std::size_t p = 0; p < batch.size(); ++p) {
        const Portfolio& w = batch[p];
        if (static_cast<Eigen::Index>(assets.size()) != w.size()) {
            throw DataError("write_portfolio_batch_csv: label count does not match portfolio size");
        }
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            out << p + 1 << ',' << assets[static_cast<std::size_t>(i)] << ','
                << format_weight(w.weights()(i)) << '\n';
        }
    }
}

}  // namespace prl
