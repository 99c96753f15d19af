#pragma once

#include <Eigen/Dense>

namespace prl {

/// Portfolio allocation vector: decimal fractions of wealth summing to one.
/// The gross exposure ||w||_1 is cached on construction.
class Portfolio {
public:
    explicit Portfolio(Eigen::VectorXd weights);

    const Eigen::VectorXd& weights() const { return weights_; }
    double gross_exposure() const { return gross_exposure_; }
    Eigen::Index size() const { return weights_.size(); }

private:
    Eigen::VectorXd weights_;
    double gross_exposure_;
};

}  // namespace prl
