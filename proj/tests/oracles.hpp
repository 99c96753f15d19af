#pragma once

// Reference implementations used only by the tests. They are written with
// plain loops and share no code with the library.

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline double normal_upper_quantile(double p) {
    return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// T^-1 sum_t (r_t - rbar)(r_t - rbar)' (or uncentred), entry by entry.
inline Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& R, bool demean) {
    const long T = R.rows();
    const long N = R.cols();
    std::vector<double> mean(N, 0.0);
    if (demean) {
        for (long i = 0; i < N; ++i) {
            for (long t = 0; t < T; ++t) mean[i] += R(t, i);
            mean[i] /= static_cast<double>(T);
        }
    }
    Eigen::MatrixXd S(N, N);
    for (long i = 0; i < N; ++i) {
        for (long j = 0; j < N; ++j) {
            double s = 0.0;
            for (long t = 0; t < T; ++t) s += (R(t, i) - mean[i]) * (R(t, j) - mean[j]);
            S(i, j) = s / static_cast<double>(T);
        }
    }
    return S;
}

/// gamma(h) = T^-1 sum_{t=1}^{T-h} (x_t^2 - v)(x_{t+h}^2 - v), h = 0..L.
inline std::vector<double> gammas(const std::vector<double>& x, double v, int L) {
    const std::size_t T = x.size();
    std::vector<double> g;
    for (int h = 0; h <= L; ++h) {
        double s = 0.0;
        for (std::size_t t = 0; t + static_cast<std::size_t>(h) < T; ++t) {
            s += (x[t] * x[t] - v) * (x[t + h] * x[t + h] - v);
        }
        g.push_back(s / static_cast<double>(T));
    }
    return g;
}

inline double long_run(const std::vector<double>& g) {
    double s = g[0];
    for (std::size_t h = 1; h < g.size(); ++h) s += 2.0 * g[h];
    return s;
}

/// Portfolio return series of a demeaned panel and w'Sw.
inline std::vector<double> sample_series(const Eigen::MatrixXd& R, const Eigen::VectorXd& w,
                                         double& centre) {
    const Eigen::MatrixXd S = sample_cov(R, true);
    const long T = R.rows();
    const long N = R.cols();
    std::vector<double> mean(N, 0.0);
    for (long i = 0; i < N; ++i) {
        for (long t = 0; t < T; ++t) mean[i] += R(t, i);
        mean[i] /= static_cast<double>(T);
    }
    std::vector<double> x(T, 0.0);
    for (long t = 0; t < T; ++t) {
        for (long i = 0; i < N; ++i) x[t] += w(i) * (R(t, i) - mean[i]);
    }
    centre = 0.0;
    for (long i = 0; i < N; ++i) {
        for (long j = 0; j < N; ++j) centre += w(i) * S(i, j) * w(j);
    }
    return x;
}

/// x_t = w' B f_t, entry by entry.
inline std::vector<double> systematic_series(const Eigen::MatrixXd& B, const Eigen::MatrixXd& F,
                                             const Eigen::VectorXd& w) {
    std::vector<double> x(F.rows(), 0.0);
    for (long t = 0; t < F.rows(); ++t) {
        for (long i = 0; i < B.rows(); ++i) {
            for (long k = 0; k < B.cols(); ++k) x[t] += w(i) * B(i, k) * F(t, k);
        }
    }
    return x;
}

/// w' B C B' w by quadruple loop.
inline double quad_form(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                        const Eigen::VectorXd& w) {
    double s = 0.0;
    for (long i = 0; i < B.rows(); ++i) {
        for (long j = 0; j < B.rows(); ++j) {
            for (long k = 0; k < B.cols(); ++k) {
                for (long l = 0; l < B.cols(); ++l) s += w(i) * B(i, k) * C(k, l) * B(j, l) * w(j);
            }
        }
    }
    return s;
}

/// min w' S w s.t. sum(w) = 1, ||w||_1 <= c by enumerating every sign pattern
/// in {-, 0, +}^N and solving the equality-constrained problem on each face.
inline double min_variance_brute_force(const Eigen::MatrixXd& S, double c) {
    const int N = static_cast<int>(S.rows());
    long patterns = 1;
    for (int i = 0; i < N; ++i) patterns *= 3;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> sign(N);
    for (long code = 0; code < patterns; ++code) {
        long rest = code;
        std::vector<int> support;
        for (int i = 0; i < N; ++i) {
            sign[i] = static_cast<int>(rest % 3) - 1;
            rest /= 3;
            if (sign[i] != 0) support.push_back(i);
        }
        if (support.empty()) continue;
        const int n = static_cast<int>(support.size());
        for (int binding = 0; binding < 2; ++binding) {
            const int m = binding ? 2 : 1;
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) K(a, b) = 2.0 * S(support[a], support[b]);
                K(a, n) = K(n, a) = 1.0;
                if (binding) K(a, n + 1) = K(n + 1, a) = sign[support[a]];
            }
            rhs(n) = 1.0;
            if (binding) rhs(n + 1) = c;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
            if (!lu.isInvertible()) continue;
            const Eigen::VectorXd sol = lu.solve(rhs);
            Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
            bool ok = true;
            double gross = 0.0;
            for (int a = 0; a < n; ++a) {
                const double v = sol(a);
                if (v * sign[support[a]] < -1e-12) ok = false;
                w(support[a]) = v;
                gross += std::abs(v);
            }
            if (!ok || gross > c + 1e-10) continue;
            best = std::min(best, w.dot(S * w));
        }
    }
    return best;
}

}  // namespace oracle
