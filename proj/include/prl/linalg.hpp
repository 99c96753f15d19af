#pragma once

#include <Eigen/Dense>

namespace prl {

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
/// Each eigenvector has its largest-magnitude entry positive (ties resolved at
/// the lowest index) so results do not depend on the backend's sign choice.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

SymmetricEigen sym_eigen(const Eigen::MatrixXd& a);

/// Eigenvalues only, descending.
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a);

/// Applies the sign convention above to every column.
void normalize_signs(Eigen::MatrixXd& vectors);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Cholesky-based positive-definiteness test.
bool is_positive_definite(const Eigen::MatrixXd& a);

/// F with F F' = A for a symmetric PSD A (negative eigenvalues are clipped).
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a);

}  // namespace prl
