#pragma once

#include <iostream>

#include <Eigen/Dense>

#include "mmrisk/errors.hpp"

namespace mmrisk::detail {

// Partial-pivot LU solve with a cheap conditioning check: singular systems
// throw, merely ill-conditioned ones solve but warn on stderr. "what" names
// the system for the message.
template <typename RhsT>
auto solve_checked(const Eigen::MatrixXd& A, const RhsT& b, const char* what) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double det = lu.determinant();
    if (det == 0.0 || !std::isfinite(det)) {
        throw NumericError(std::string(what) + ": singular linear system");
    }
    const double norm_a = A.template lpNorm<1>();
    const double norm_inv = lu.inverse().template lpNorm<1>();
    const double cond = norm_a * norm_inv;
    if (!std::isfinite(cond)) {
        throw NumericError(std::string(what) + ": non-finite condition number");
    }
    if (cond > 1e12) {
        std::cerr << "mmrisk: warning: " << what << " has condition estimate "
                  << cond << "; results may lose precision\n";
    }
    return lu.solve(b).eval();
}

template <typename RhsT>
auto solve_checked(const Eigen::MatrixXcd& A, const RhsT& b, const char* what) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const std::complex<double> det = lu.determinant();
    if (det == std::complex<double>(0.0, 0.0) || !std::isfinite(std::abs(det))) {
        throw NumericError(std::string(what) + ": singular linear system");
    }
    return lu.solve(b).eval();
}

} // namespace mmrisk::detail
