#pragma once

#include "mmrisk/model.hpp"

namespace mmrisk {

// Open interval of real arguments on which the cumulant matrix is finite:
// bounded below by the exponential rates of downward jumps and above by the
// smallest Erlang rate among upward jumps (including switching jumps).
// Inactive jump directions do not constrain the domain.
struct CumulantDomain {
    double r_lo; // -infinity if no state has downward jumps
    double r_hi; // +infinity if no state has upward jumps

    bool contains(double r) const { return r > r_lo && r < r_hi; }
};

CumulantDomain cumulant_domain(const ValidatedModel& model);
CumulantDomain cumulant_domain(const DualDescriptor& dual);

// Matrix cumulant K(r): diagonal entries collect the per-state jump
// exponents and Q_kk, off-diagonal entries are Q_kr scaled by the moment
// generating function of the switching jump (1 when there is none).
// K(0) equals the generator. Throws on r outside the finiteness domain.
Matrix cumulant_matrix(const ValidatedModel& model, double r);
Matrix cumulant_matrix(const DualDescriptor& dual, double r);

// Resolvent of the additive part: s (sI - K(r))^{-1} for s > 0.
Matrix resolvent(const ValidatedModel& model, double r, double s);

// Law of the chain state at the first jump epoch, transformed in the epoch:
// (sI + Lambda - Q)^{-1} Lambda. Rows sum to the transform of the epoch law.
Matrix first_jump_transform(const ValidatedModel& model, double s);

// s -> 0 limit of s^{-1} times the defect of first_jump_transform, i.e.
// (Lambda - Q)^{-1}. Every occupation-time identity in the overshoot module
// routes through this matrix.
Matrix p0_limit(const ValidatedModel& model);

} // namespace mmrisk
