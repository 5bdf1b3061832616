#pragma once

#include "mmrisk/model.hpp"

namespace mmrisk {

// Largest-real-part eigenvalue of the cumulant matrix. K(r) has nonnegative
// off-diagonal entries, so this eigenvalue is real and simple and plays the
// role of a scalar cumulant for the modulated process.
double perron_root(const ValidatedModel& model, double r);

// The positive root gamma of perron_root(r) = 0. Exists when the drift is
// negative and upward jumps are present; found by bracketing on the
// finiteness domain and polished to |k(gamma)| < 1e-12.
double lundberg_exponent(const ValidatedModel& model);

// Left (nu) and right (h) eigenvectors of K(gamma) for the Perron
// eigenvalue, both strictly positive, normalized so max(h) = 1 and
// nu . h = 1.
struct LundbergVectors {
    Vector nu;
    Vector h;
};
LundbergVectors lundberg_vectors(const ValidatedModel& model, double gamma);

// Sharpened two-sided constants. Over the states with upward jumps, take the
// sup and inf over x >= 0 of the ratio of the upward tail to its
// exponentially tilted integral, then scale by the extreme values of 1/h.
struct LundbergConstants {
    double c_minus;
    double c_plus;
};
LundbergConstants lundberg_constants(const ValidatedModel& model, double gamma,
                                     const LundbergVectors& vectors);

// Everything the exponential bounds need, bundled for reuse and reporting.
struct LundbergCertificate {
    double gamma = 0.0;
    Vector nu;
    Vector h;
    double c_minus = 0.0;
    double c_plus = 0.0;
};
LundbergCertificate lundberg_certificate(const ValidatedModel& model);

// Pointwise sandwich for the ruin probability started in state i at level u:
// lower = C_- h_i e^{-gamma u}, upper = C_+ h_i e^{-gamma u}.
struct LundbergBounds {
    double lower;
    double upper;
};
LundbergBounds lundberg_bounds(const LundbergCertificate& cert, int i, double u);

} // namespace mmrisk
