#include <cmath>
#include <limits>

#include <doctest.h>

#include "mmrisk/rational.hpp"
#include "mmrisk/errors.hpp"

using namespace mmrisk;

namespace {
Poly poly(std::initializer_list<long> cs) {
    Poly p;
    for (long c : cs) p.push_back(Rational(c));
    return p;
}
} // namespace

TEST_CASE("polynomial ring operations") {
    Poly a = poly({1, 2, 3});      // 3x^2 + 2x + 1
    Poly b = poly({-1, 1});        // x - 1

    CHECK(p_degree(a) == 2);
    CHECK(p_degree(Poly{}) == -1);
    CHECK(p_degree(p_trim(poly({1, 0, 0}))) == 0);

    Poly sum = p_add(a, b);
    CHECK(sum == poly({0, 3, 3}));
    CHECK(p_sub(sum, b) == a);

    Poly prod = p_mul(a, b);       // 3x^3 - x^2 - x - 1
    CHECK(prod == poly({-1, -1, -1, 3}));
    CHECK(p_mul(a, Poly{}) == Poly{});

    CHECK(p_scale(a, Rational(2)) == poly({2, 4, 6}));
    CHECK(p_derivative(a) == poly({2, 6}));
    CHECK(p_eval(a, 2.0) == doctest::Approx(17.0));
    CHECK(p_eval(a, std::complex<double>(0.0, 1.0)) ==
          std::complex<double>(-2.0, 2.0));
}

TEST_CASE("euclidean division reconstructs the dividend") {
    Poly a = poly({5, -4, 0, 7, 2}); // 2x^4 + 7x^3 - 4x + 5
    Poly b = poly({-3, 1, 1});       // x^2 + x - 3

    auto qr = p_divmod(a, b);
    Poly re = p_add(p_mul(qr.quotient, b), qr.remainder);
    CHECK(re == a);
    CHECK(p_degree(qr.remainder) < p_degree(b));
    CHECK_THROWS_AS(p_divmod(a, Poly{}), NumericError);
}

TEST_CASE("gcd finds the shared factor and is monic") {
    Poly shared = poly({-1, 1});                 // x - 1
    Poly a = p_mul(shared, poly({2, 1}));        // (x - 1)(x + 2)
    Poly b = p_mul(p_mul(shared, shared), poly({1, 1})); // (x - 1)^2 (x + 1)
    CHECK(p_gcd(a, b) == shared);

    // Scaling the inputs must not change the (monic) answer.
    CHECK(p_gcd(p_scale(a, Rational(7, 3)), p_scale(b, Rational(-2))) == shared);

    // Coprime inputs share only constants.
    CHECK(p_degree(p_gcd(poly({1, 1}), poly({2, 1}))) == 0);
}

TEST_CASE("rationalize recovers intended fractions from doubles") {
    CHECK(rationalize(0.5) == Rational(1, 2));
    CHECK(rationalize(0.375) == Rational(3, 8));
    CHECK(rationalize(0.1) == Rational(1, 10));
    CHECK(rationalize(1.0 / 3.0) == Rational(1, 3));
    CHECK(rationalize(0.3333333333333333) == Rational(1, 3));
    CHECK(rationalize(-2.0 / 7.0) == Rational(-2, 7));
    CHECK(rationalize(0.0) == Rational(0));
    CHECK(rationalize(-4.0) == Rational(-4));

    // Whatever route it takes, the result must stay within a few ulps.
    for (double x : {3.141592653589793, 2.718281828459045, 1.4142135623730951e-3,
                     6.02214076e23}) {
        Rational r = rationalize(x);
        double back = static_cast<double>(r);
        CHECK(std::abs(back - x) <=
              4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)));
    }
    CHECK_THROWS_AS(rationalize(std::numeric_limits<double>::infinity()), NumericError);
    CHECK_THROWS_AS(rationalize(std::numeric_limits<double>::quiet_NaN()), NumericError);
}
