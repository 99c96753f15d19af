#include "prl/linalg.hpp"

#include "prl/errors.hpp"

namespace prl {

void normalize_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            const double m = std::abs(vectors(i, k));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (vectors(arg, k) < 0.0) vectors.col(k) = -vectors.col(k);
    }
}

SymmetricEigen sym_eigen(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("sym_eigen: eigen-decomposition did not converge");
    }
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    normalize_signs(out.vectors);
    return out;
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("sym_eigenvalues: eigen-decomposition did not converge");
    }
    return solver.eigenvalues().reverse();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

bool is_positive_definite(const Eigen::MatrixXd& a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    return llt.info() == Eigen::Success;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("psd_factor: eigen-decomposition did not converge");
    }
    const Eigen::VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * root.asDiagonal();
}

}  // namespace prl
