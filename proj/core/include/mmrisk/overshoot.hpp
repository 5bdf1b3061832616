#pragma once

#include <complex>
#include <vector>

#include "mmrisk/model.hpp"

namespace mmrisk {

// Matrix function of z >= 0 of the form
//   sum_t e^{-rate_t z} sum_{j<=degree_t} coef_t[j] z^j
// closed under the integral operators used by the ladder analysis.
struct MatrixExpMixture {
    struct Term {
        double rate = 1.0;
        int degree = 0;
        std::vector<Matrix> coef; // degree+1 matrices, coef[j] multiplies z^j
    };
    int m = 0;
    std::vector<Term> terms;

    Matrix value(double z) const;
    Matrix total_integral() const;      // integral over [0, inf)
    Matrix cdf(double u) const;         // integral over [0, u]
};

// Limit law ingredients of the reflected-at-the-infimum coordinate. p_minus0
// is the rate matrix of downward level crossings in the stationary regime;
// R_c0 = p_minus0 C drives e^{-x R_c0} in every stationary tail. q_minus0 is
// the chain-state transition kernel across one downward crossing.
struct XiBarLimit {
    Matrix p_minus0;
    Matrix R_c0;
    Matrix q_minus0;
    Eigen::VectorXcd spectrum; // eigenvalues of R_c0
};

// Computed through the time-reversed chain: the occupation kernel of the
// descending ladder satisfies a fixed point equation solved by iteration
// from zero. R_c0 always has exactly one zero eigenvalue (the stationary
// direction); the rest lie strictly in the right half plane.
XiBarLimit xi_bar_limit(const ValidatedModel& model);

// Density of the ascending ladder height by entry and exit state, with its
// total mass matrix (substochastic, rows summing to the ruin probability at
// level 0) and a cdf tabulation helper.
struct LadderMeasure {
    MatrixExpMixture density;
    Matrix total_mass;

    Matrix cdf(double u) const { return density.cdf(u); }
};
LadderMeasure ladder_measure(const ValidatedModel& model);

// Ruin probability assembled from the ladder measure alone: survival is the
// geometric sum over ladder epochs of convolution powers of the ladder
// density, evaluated on a Simpson grid. Agrees with the factorization route
// to quadrature accuracy; exists as an independent cross-check.
double pk_series(const ValidatedModel& model, int i, double u, double tol = 1e-9);

// The three functionals of the first passage over level zero by the path
// started at zero: the jump part above the level, the gap below it just
// before the jump, and their sum.
enum class OvershootKind { gamma_plus, gamma_under, gamma_total };

// P_i{functional > z, passage happens, chain lands in j} as a matrix in
// (i, j). Entries at z = 0 for gamma_plus and gamma_total coincide (both
// count the same passage events).
Matrix overshoot_tail_zero(const ValidatedModel& model, OvershootKind kind, double z);

// Caches the shared ingredients (xi_bar_limit, (Lambda-Q)^{-1}, the
// per-Erlang-term integral tables) so that a z-grid costs one setup.
class OvershootAnalysis {
public:
    explicit OvershootAnalysis(const ValidatedModel& model);

    Matrix tail(OvershootKind kind, double z) const;
    const XiBarLimit& xi_bar() const { return xi_; }
    // tail(gamma_plus, 0) = tail(gamma_total, 0) = total mass of the ladder
    // measure; rows sum to the level-0 passage probabilities.
    Matrix passage_probability() const { return tail(OvershootKind::gamma_plus, 0.0); }

private:
    Matrix k0bar(double z) const;   // diag(pos_rate_k * tail_k(z))
    Matrix i1(double z) const;      // integral of e^{-uR} q_minus0 k0bar(z+u)
    Matrix j0(double z) const;      // integral of e^{-xR} over [0, z]

    int m_;
    const ValidatedModel& model_;
    XiBarLimit xi_;
    Matrix p0_; // (Lambda - Q)^{-1}
};

} // namespace mmrisk
