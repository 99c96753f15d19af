#pragma once

#include "prl/covariance.hpp"
#include "prl/rng.hpp"
#include "prl/weights.hpp"

#include <string>
#include <utility>
#include <vector>

namespace prl {

/// Random portfolio with sum(w) = 1 and ||w||_1 = c.
///
/// The number of long positions is Binomial(N, (c+1)/(2c)); long weights are
/// normalized exponentials summing to (c+1)/2, short weights sum to -(c-1)/2,
/// and the positions are randomly permuted. For c > 1 a draw leaving one side
/// empty is redrawn (at most 100 times).
Portfolio sample_random_portfolio(Eigen::Index N, double c, Rng& rng);

Portfolio equal_weight(Eigen::Index N);

double gross_exposure(const Portfolio& w);

struct MinVarianceOptions {
    /// Relative objective tolerance for the first-order iterations.
    double tol = 1e-8;
    int max_iter = 100000;
};

/// argmin w' Sigma w subject to sum(w) = 1 and ||w||_1 <= c.
///
/// Returns the closed-form global minimum-variance portfolio when it already
/// satisfies the exposure limit. Otherwise runs accelerated projected gradient
/// with an exact projection onto the feasible set, then re-solves the KKT
/// system on the detected long/short support.
Portfolio min_variance(const CovarianceEstimate& estimate, double c,
                       const MinVarianceOptions& opts = {});

/// Euclidean projection of v onto {w : sum(w) = 1, ||w||_1 <= c}.
Eigen::VectorXd project_exposure_set(const Eigen::VectorXd& v, double c);

/// Two-column CSV "asset,weight".
void write_portfolio_csv(const Portfolio& w, const std::vector<std::string>& assets,
                         const std::string& path, const std::string& header_comment = {});
/// Reads a file written by write_portfolio_csv, returning labels and weights.
std::pair<std::vector<std::string>, Portfolio> read_portfolio_csv(const std::string& path);

/// Long format "portfolio,asset,weight" for a batch of portfolios.
void write_portfolio_batch_csv(const std::vector<Portfolio>& batch,
                               const std::vector<std::string>& assets, const std::string& path,
                               const std::string& header_comment = {});

}  // namespace prl
