#include "mmrisk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mmrisk/errors.hpp"
#include "mmrisk/transforms.hpp"

namespace mmrisk {

namespace {

double max_real_eigenvalue(const Matrix& K) {
    Eigen::EigenSolver<Matrix> es(K);
    if (es.info() != Eigen::Success) {
        throw NumericError("eigenvalue computation failed on cumulant matrix");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.rows(); ++i) best = std::max(best, es.eigenvalues()(i).real());
    return best;
}

// Extracts the eigenvector of the eigenvalue closest to target, flipped to
// the positive orthant.
Vector positive_eigenvector(const Matrix& K, double target, const char* what) {
    Eigen::EigenSolver<Matrix> es(K);
    if (es.info() != Eigen::Success) {
        throw NumericError(std::string(what) + ": eigenvalue computation failed");
    }
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.rows(); ++i) {
        const double d = std::abs(es.eigenvalues()(i) - std::complex<double>(target, 0.0));
        if (d < dist) {
            dist = d;
            best = i;
        }
    }
    Eigen::VectorXcd vc = es.eigenvectors().col(best);
    if (vc.imag().cwiseAbs().maxCoeff() > 1e-9 * vc.cwiseAbs().maxCoeff()) {
        throw NumericError(std::string(what) + ": dominant eigenvector is not real");
    }
    Vector v = vc.real();
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    if (v.minCoeff() <= 0.0) {
        throw NumericError(std::string(what) + ": dominant eigenvector is not positive");
    }
    return v;
}

// Ratio of the upward tail in state j to its exponentially tilted integral.
// Both pieces share the factor e^{-delta x} per mixture term, kept explicit
// so the ratio stays stable for large x.
double tilt_ratio(const ErlangMixture& mix, double gamma, double x) {
    double num = 0.0;
    double den = 0.0;
    for (const ErlangTerm& t : mix.terms) {
        const double e = std::exp(-t.delta * x);
        double pois = 1.0;
        double tail_acc = 1.0;
        for (int i = 1; i < t.n; ++i) {
            pois *= t.delta * x / i;
            tail_acc += pois;
        }
        num += t.w * e * tail_acc;

        // integral_x^inf e^{gamma(y-x)} f(y) dy for one Erlang term:
        // term i contributes comb(n-1,i) x^{n-1-i} i! / (delta-gamma)^{i+1},
        // all scaled by w delta^n e^{-delta x} / (n-1)!.
        double dn = 0.0;
        double coef = 1.0; // comb(n-1, i) * i!  ==  (n-1)! / (n-1-i)!
        double dpow = t.delta - gamma;
        for (int i = 0; i < t.n; ++i) {
            dn += coef * std::pow(x, t.n - 1 - i) / dpow;
            coef *= (t.n - 1 - i);
            dpow *= (t.delta - gamma);
        }
        double scale = t.w * e;
        for (int i = 1; i < t.n; ++i) scale *= t.delta / i;
        den += dn * scale * t.delta;
    }
    if (!(den > 0.0)) throw NumericError("tilted tail integral vanished");
    return num / den;
}

struct MinMax {
    double lo;
    double hi;
};

// Golden-section refinement of an extremum bracketed by [a, b].
double golden_refine(const std::function<double(double)>& f, double a, double b,
                     bool maximize) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
        const bool move_left = maximize ? (f1 > f2) : (f1 < f2);
        if (move_left) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return maximize ? std::max(f1, f2) : std::min(f1, f2);
}

MinMax ratio_extrema(const ErlangMixture& mix, double gamma) {
    const double dmin = mix.min_rate();
    const double step = 0.01 / dmin;
    const int n_grid = 6000;
    std::vector<double> vals(static_cast<size_t>(n_grid) + 1);
    for (int i = 0; i <= n_grid; ++i) {
        vals[static_cast<size_t>(i)] = tilt_ratio(mix, gamma, step * i);
    }
    int imax = 0, imin = 0;
    for (int i = 1; i <= n_grid; ++i) {
        if (vals[static_cast<size_t>(i)] > vals[static_cast<size_t>(imax)]) imax = i;
        if (vals[static_cast<size_t>(i)] < vals[static_cast<size_t>(imin)]) imin = i;
    }
    const auto f = [&](double x) { return tilt_ratio(mix, gamma, x); };
    const auto bracket_lo = [&](int i) { return step * std::max(0, i - 1); };
    const auto bracket_hi = [&](int i) { return step * std::min(n_grid, i + 1); };
    double hi = golden_refine(f, bracket_lo(imax), bracket_hi(imax), true);
    double lo = golden_refine(f, bracket_lo(imin), bracket_hi(imin), false);
    // The ratio converges as x grows; the limit is attained by the slowest
    // mixture component and may beat every grid value.
    const double limit = (dmin - gamma) / dmin;
    hi = std::max(hi, limit);
    lo = std::min(lo, limit);
    return {lo, hi};
}

} // namespace

double perron_root(const ValidatedModel& model, double r) {
    return max_real_eigenvalue(cumulant_matrix(model, r));
}

double lundberg_exponent(const ValidatedModel& model) {
    if (!(model.drift() < 0.0)) {
        throw ValidationError("drift is " + std::to_string(model.drift()) +
                              "; the adjustment equation needs negative drift");
    }
    const CumulantDomain dom = cumulant_domain(model);
    if (!std::isfinite(dom.r_hi)) {
        throw NumericError("no upward jumps, adjustment equation has no positive root");
    }
    const auto k = [&](double r) { return perron_root(model, r); };

    // k(0) = 0 with negative slope, k -> +inf at the right edge of the
    // domain: bracket a sign change and bisect.
    double hi = dom.r_hi * (1.0 - 1e-9);
    while (k(hi) <= 0.0) {
        hi = dom.r_hi - 0.1 * (dom.r_hi - hi);
        if (dom.r_hi - hi < 1e-14 * dom.r_hi) {
            throw NumericError("adjustment equation: no positive value before the "
                               "domain edge");
        }
    }
    double lo = std::min(1e-8, 1e-4 * dom.r_hi);
    while (k(lo) >= 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) {
            throw NumericError("adjustment equation: no sign change above zero");
        }
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * dom.r_hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (k(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double gamma = 0.5 * (lo + hi);
    // Newton polish with a central difference slope.
    for (int it = 0; it < 4; ++it) {
        const double h = 1e-7 * std::max(1.0, gamma);
        const double slope = (k(gamma + h) - k(gamma - h)) / (2.0 * h);
        if (slope == 0.0) break;
        const double next = gamma - k(gamma) / slope;
        if (next <= 0.0 || next >= dom.r_hi) break;
        gamma = next;
    }
    if (std::abs(k(gamma)) > 1e-12) {
        throw NumericError("adjustment root residual " + std::to_string(k(gamma)));
    }
    return gamma;
}

LundbergVectors lundberg_vectors(const ValidatedModel& model, double gamma) {
    const Matrix K = cumulant_matrix(model, gamma);
    const double kr = max_real_eigenvalue(K);
    Vector h = positive_eigenvector(K, kr, "right eigenvector");
    Vector nu = positive_eigenvector(K.transpose(), kr, "left eigenvector");
    h /= h.maxCoeff();
    nu /= nu.dot(h);
    return {nu, h};
}

LundbergConstants lundberg_constants(const ValidatedModel& model, double gamma,
                                     const LundbergVectors& vectors) {
    double c_minus = std::numeric_limits<double>::infinity();
    double c_plus = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int j = 0; j < model.states(); ++j) {
        const StateJumpLaw& law = model.law(j);
        if (!(law.pos_rate > 0.0)) continue;
        any = true;
        const MinMax mm = ratio_extrema(law.pos_law, gamma);
        c_minus = std::min(c_minus, mm.lo / vectors.h(j));
        c_plus = std::max(c_plus, mm.hi / vectors.h(j));
    }
    if (!any) throw NumericError("no state has upward jumps");
    return {c_minus, c_plus};
}

LundbergCertificate lundberg_certificate(const ValidatedModel& model) {
    LundbergCertificate cert;
    cert.gamma = lundberg_exponent(model);
    const LundbergVectors v = lundberg_vectors(model, cert.gamma);
    cert.nu = v.nu;
    cert.h = v.h;
    const LundbergConstants c = lundberg_constants(model, cert.gamma, v);
    cert.c_minus = c.c_minus;
    cert.c_plus = c.c_plus;
    return cert;
}

LundbergBounds lundberg_bounds(const LundbergCertificate& cert, int i, double u) {
    const double decay = std::exp(-cert.gamma * u) * cert.h(i);
    return {cert.c_minus * decay, cert.c_plus * decay};
}

} // namespace mmrisk
