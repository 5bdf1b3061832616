#pragma once

#include <complex>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mmrisk {

// Exact arithmetic backbone of the factorization module. Polynomials are
// stored as ascending coefficient vectors over arbitrary-precision rationals
// so that the Wiener-Hopf numerators and denominators come out exact.
using Rational = boost::multiprecision::cpp_rational;
using Poly = std::vector<Rational>;

// All operations treat an empty vector as the zero polynomial and always
// return trimmed results (no trailing zero coefficients).

Poly p_trim(Poly p);
Poly p_add(const Poly& a, const Poly& b);
Poly p_sub(const Poly& a, const Poly& b);
Poly p_mul(const Poly& a, const Poly& b);
Poly p_scale(const Poly& a, const Rational& s);
int p_degree(const Poly& a); // -1 for the zero polynomial

// Euclidean division; the divisor must be nonzero. quotient*b + remainder == a.
struct PolyDivMod {
    Poly quotient;
    Poly remainder;
};
PolyDivMod p_divmod(const Poly& a, const Poly& b);

// Monic greatest common divisor via the Euclidean algorithm.
Poly p_gcd(Poly a, Poly b);

Poly p_derivative(const Poly& a);

double p_eval(const Poly& a, double x);
std::complex<double> p_eval(const Poly& a, std::complex<double> x);
std::complex<double> p_eval(const std::vector<double>& a, std::complex<double> x);

// Best rational approximation of a double by continued fractions, capped at
// denominator 1e12. Model files carry doubles like 0.3333333333333333 that
// stand for exact thirds; this recovers the intended fraction whenever one
// with a modest denominator round-trips within a few ulps, and otherwise
// falls back to the exact binary expansion of the double.
Rational rationalize(double x);

} // namespace mmrisk
