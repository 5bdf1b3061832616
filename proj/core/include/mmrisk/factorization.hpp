#pragma once

#include <complex>
#include <vector>

#include "mmrisk/model.hpp"
#include "mmrisk/rational.hpp"

namespace mmrisk {

// Matrix of rational functions sharing one denominator, kept both exactly
// (for the algebra) and as doubles (for root finding and evaluation).
struct PolynomialMatrix {
    int m = 0;
    std::vector<std::vector<Poly>> num_exact; // [i][j], ascending coefficients
    Poly den_exact;
    std::vector<std::vector<std::vector<double>>> num; // double mirror of num_exact
    std::vector<double> den;

    Eigen::MatrixXcd eval(std::complex<double> r) const;
    Matrix eval(double r) const;
};

// Wiener-Hopf numerator G(r) = r K_dual(r)^{-1} (C - rI)^{-1} as an exact
// rational matrix. Row k of K_dual is cleared of its denominators by
// (c_k - r) prod_t (delta_t + r)^{n_t}; the cofactor expansion then yields
// polynomial entries whose common factors are cancelled by exact GCDs, and
// the denominator is normalized to primitive integer coefficients with a
// positive leading coefficient.
PolynomialMatrix build_G_rational(const DualDescriptor& dual);

// Roots of the common denominator via the companion matrix, polished by a
// few Newton steps. Throws NumericError when roots come closer than the
// separation the partial fraction step can distinguish.
std::vector<std::complex<double>> find_poles(const std::vector<double>& den);

// Partial fraction form c0 + sum_l residues[l] / (r - poles[l]). The
// constant term is the ratio of leading coefficients when numerator and
// denominator degrees match, zero otherwise. Construction self-checks by
// reassembling G at off-pole sample points.
struct RationalMatrixPF {
    Matrix c0;
    std::vector<std::complex<double>> poles;
    std::vector<Eigen::MatrixXcd> residues;

    Eigen::MatrixXcd eval(std::complex<double> r) const;
    bool all_real(double tol = 1e-10) const;
};
RationalMatrixPF partial_fractions(const PolynomialMatrix& G,
                                   const std::vector<std::complex<double>>& poles);

// Restriction to the poles with negative real part, dropping the constant
// term: the transform of the part of the path below the starting level.
// Idempotent. A pole too close to the imaginary axis makes the projection
// ill defined and throws.
RationalMatrixPF project_minus(const RationalMatrixPF& pf);

// Chain-state distribution at the start of the final ascent: the matrix
// R tilde solving (G^-(0) + (Lambda - Q)^{-1}) X = e pi' on the dual model.
Matrix ladder_exit_matrix(const DualDescriptor& dual, const RationalMatrixPF& pf_minus);

// A scalar function of u of the form sum_l coef_l e^{-rate_l u} with complex
// conjugate pairs; value() is real up to roundoff and clamped to real.
struct ScalarExpMixture {
    std::vector<std::complex<double>> coef;
    std::vector<std::complex<double>> rate;

    double value(double u) const;
};

// Distribution of the all-time infimum of the negated process, which is the
// all-time supremum of the process itself: an atom at zero plus an
// exponential-mixture tail. tail[i].value(u) is P_i{sup > u}, the ruin
// probability of a reserve that starts at u and loses what the process
// gains.
struct InfimumDistribution {
    std::vector<ScalarExpMixture> tail;
    Vector atom_at_zero; // 1 - tail[i].value(0), each within [0,1]
};
InfimumDistribution infimum_distribution(const ValidatedModel& model);

// Convenience wrapper: P_i{the path from 0 ever exceeds u}, u >= 0.
double ruin_probability(const InfimumDistribution& dist, int i, double u);
double ruin_probability(const ValidatedModel& model, int i, double u);

// One pass through the whole factorization pipeline with all intermediates
// kept, for reporting and cross-checking.
struct FactorizationResult {
    DualDescriptor dual;
    PolynomialMatrix G;
    std::vector<std::complex<double>> poles;
    RationalMatrixPF pf;
    RationalMatrixPF pf_minus;
    Matrix ladder_exit;
    InfimumDistribution infimum;
};
FactorizationResult run_factorization(const ValidatedModel& model);

} // namespace mmrisk
