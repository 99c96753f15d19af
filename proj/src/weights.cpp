#include "prl/weights.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace prl {

namespace {
// Budget tolerance for externally supplied weights; generated portfolios are
// normalised far more tightly than this.
constexpr double kBudgetTolerance = 1e-9;
}  // namespace

Portfolio::Portfolio(Eigen::VectorXd weights)
    : weights_(std::move(weights)), gross_exposure_(weights_.lpNorm<1>()) {
    if (weights_.size() == 0) throw std::invalid_argument("Portfolio: empty weight vector");
    if (!weights_.allFinite()) throw std::invalid_argument("Portfolio: non-finite weight");
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > kBudgetTolerance) {
        throw std::invalid_argument("Portfolio: weights sum to " + std::to_string(total) +
                                    ", expected 1");
    }
}

}  // namespace prl
