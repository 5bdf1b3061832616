#include "mmrisk/rational.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "mmrisk/errors.hpp"

namespace mmrisk {

Poly p_trim(Poly p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
    return p;
}

int p_degree(const Poly& a) { return static_cast<int>(a.size()) - 1; }

Poly p_add(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()), Rational(0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return p_trim(std::move(r));
}

Poly p_sub(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()), Rational(0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
    return p_trim(std::move(r));
}

Poly p_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, Rational(0));
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    return p_trim(std::move(r));
}

Poly p_scale(const Poly& a, const Rational& s) {
    if (s == 0) return {};
    Poly r = a;
    for (Rational& c : r) c *= s;
    return r;
}

PolyDivMod p_divmod(const Poly& a, const Poly& b) {
    if (b.empty()) throw NumericError("polynomial division by zero");
    Poly rem = a;
    Poly quo;
    const int db = p_degree(b);
    if (p_degree(rem) >= db) {
        quo.assign(static_cast<size_t>(p_degree(rem) - db + 1), Rational(0));
        for (int d = p_degree(rem); d >= db; --d) {
            if (rem[static_cast<size_t>(d)] == 0) continue;
            const Rational f = rem[static_cast<size_t>(d)] / b[static_cast<size_t>(db)];
            quo[static_cast<size_t>(d - db)] = f;
            for (int i = 0; i <= db; ++i) {
                rem[static_cast<size_t>(d - db + i)] -= f * b[static_cast<size_t>(i)];
            }
        }
    }
    return {p_trim(std::move(quo)), p_trim(std::move(rem))};
}

Poly p_gcd(Poly a, Poly b) {
    a = p_trim(std::move(a));
    b = p_trim(std::move(b));
    while (!b.empty()) {
        Poly r = p_divmod(a, b).remainder;
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty() && a.back() != 1) {
        const Rational lead = a.back();
        for (Rational& c : a) c /= lead;
    }
    return a;
}

Poly p_derivative(const Poly& a) {
    if (a.size() <= 1) return {};
    Poly r(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * Rational(static_cast<long>(i));
    return p_trim(std::move(r));
}

double p_eval(const Poly& a, double x) {
    double v = 0.0;
    for (size_t i = a.size(); i-- > 0;) v = v * x + static_cast<double>(a[i]);
    return v;
}

std::complex<double> p_eval(const Poly& a, std::complex<double> x) {
    std::complex<double> v = 0.0;
    for (size_t i = a.size(); i-- > 0;) v = v * x + static_cast<double>(a[i]);
    return v;
}

std::complex<double> p_eval(const std::vector<double>& a, std::complex<double> x) {
    std::complex<double> v = 0.0;
    for (size_t i = a.size(); i-- > 0;) v = v * x + a[i];
    return v;
}

Rational rationalize(double x) {
    if (!std::isfinite(x)) throw NumericError("rationalize: non-finite input");
    if (x == 0.0) return Rational(0);

    const bool neg = x < 0.0;
    const double ax = std::abs(x);
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, ax);

    // Continued fraction convergents of ax until one round-trips within tol
    // or the denominator cap is exceeded. Restricted to magnitudes where
    // numerators provably fit an int64 (p ~ ax * q <= 4e6 * 1e12 < 2^63);
    // anything larger goes straight to the exact binary expansion.
    const std::int64_t cap = 1000000000000LL;
    if (ax < 4.0e6) {
        double frac = ax;
        std::int64_t p0 = 1, q0 = 0, p1 = static_cast<std::int64_t>(std::floor(frac)), q1 = 1;
        frac -= std::floor(frac);
        for (int it = 0; it < 64; ++it) {
            const double approx = static_cast<double>(p1) / static_cast<double>(q1);
            if (std::abs(approx - ax) <= tol) {
                Rational r(p1, q1);
                return neg ? -r : r;
            }
            if (frac == 0.0) break;
            const double inv = 1.0 / frac;
            const double a_d = std::floor(inv);
            if (a_d > static_cast<double>(cap)) break;
            const std::int64_t a = static_cast<std::int64_t>(a_d);
            if (a > (cap - q0) / q1) break; // q2 would pass the cap
            frac = inv - a_d;
            const std::int64_t p2 = a * p1 + p0;
            const std::int64_t q2 = a * q1 + q0;
            if (q2 > cap || q2 <= 0) break;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        }
    }

    // Exact binary expansion of the double: x = mantissa * 2^exp.
    int exp = 0;
    const double mant = std::frexp(ax, &exp);
    const auto mant_int = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    Rational r(mant_int);
    if (exp >= 0) {
        r *= Rational(boost::multiprecision::cpp_int(1) << exp);
    } else {
        r /= Rational(boost::multiprecision::cpp_int(1) << (-exp));
    }
    return neg ? -r : r;
}

} // namespace mmrisk
