#include "mmrisk/factorization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mmrisk/errors.hpp"
#include "linsolve.hpp"

namespace mmrisk {

namespace {

using boost::multiprecision::cpp_int;

Poly poly_pow(const Poly& base, int n) {
    Poly r{Rational(1)};
    for (int i = 0; i < n; ++i) r = p_mul(r, base);
    return r;
}

Poly p_div_exact(const Poly& a, const Poly& b, const char* what) {
    PolyDivMod qr = p_divmod(a, b);
    if (!qr.remainder.empty()) {
        throw NumericError(std::string(what) + ": expected exact polynomial division");
    }
    return qr.quotient;
}

struct ExactTerm {
    Rational w;
    int n;
    Rational delta;
};

// Dual descriptor with every parameter lifted to exact rationals. The
// generator diagonal is recomputed from the off-diagonal entries and the
// mixture weights are renormalized exactly, so that the algebraic identities
// the cancellation step relies on (row sums zero, weights summing to one)
// hold without roundoff.
struct ExactDual {
    int m = 0;
    std::vector<std::vector<Rational>> Q;
    std::vector<Rational> up_rate, up_exp_rate, down_rate;
    std::vector<std::vector<ExactTerm>> down_terms;
};

ExactDual rationalize_dual(const DualDescriptor& dual) {
    ExactDual ex;
    ex.m = dual.chain.m;
    ex.Q.assign(static_cast<size_t>(ex.m), std::vector<Rational>(static_cast<size_t>(ex.m), Rational(0)));
    for (int k = 0; k < ex.m; ++k) {
        Rational diag(0);
        for (int r = 0; r < ex.m; ++r) {
            if (r == k) continue;
            ex.Q[static_cast<size_t>(k)][static_cast<size_t>(r)] = rationalize(dual.chain.Q(k, r));
            diag -= ex.Q[static_cast<size_t>(k)][static_cast<size_t>(r)];
        }
        ex.Q[static_cast<size_t>(k)][static_cast<size_t>(k)] = diag;
    }
    for (const DualDescriptor::StateLaw& law : dual.laws) {
        ex.up_rate.push_back(rationalize(law.up_rate));
        ex.up_exp_rate.push_back(rationalize(law.up_exp_rate));
        ex.down_rate.push_back(rationalize(law.down_rate));
        std::vector<ExactTerm> terms;
        if (law.down_rate > 0.0) {
            Rational wsum(0);
            for (const ErlangTerm& t : law.down_law.terms) {
                terms.push_back({rationalize(t.w), t.n, rationalize(t.delta)});
                wsum += terms.back().w;
            }
            for (ExactTerm& t : terms) t.w /= wsum;
        }
        ex.down_terms.push_back(std::move(terms));
    }
    return ex;
}

std::vector<std::vector<Poly>> minor_of(const std::vector<std::vector<Poly>>& M,
                                        int di, int dj) {
    const int n = static_cast<int>(M.size());
    std::vector<std::vector<Poly>> out;
    out.reserve(static_cast<size_t>(n) - 1);
    for (int i = 0; i < n; ++i) {
        if (i == di) continue;
        std::vector<Poly> row;
        row.reserve(static_cast<size_t>(n) - 1);
        for (int j = 0; j < n; ++j) {
            if (j == dj) continue;
            row.push_back(M[static_cast<size_t>(i)][static_cast<size_t>(j)]);
        }
        out.push_back(std::move(row));
    }
    return out;
}

Poly poly_det(const std::vector<std::vector<Poly>>& M) {
    const size_t n = M.size();
    if (n == 1) return M[0][0];
    Poly det;
    for (size_t j = 0; j < n; ++j) {
        if (M[0][j].empty()) continue;
        Poly term = p_mul(M[0][j], poly_det(minor_of(M, 0, static_cast<int>(j))));
        det = (j % 2 == 0) ? p_add(det, term) : p_sub(det, term);
    }
    return det;
}

} // namespace

Eigen::MatrixXcd PolynomialMatrix::eval(std::complex<double> r) const {
    Eigen::MatrixXcd out(m, m);
    const std::complex<double> d = p_eval(den, r);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            out(i, j) = p_eval(num[static_cast<size_t>(i)][static_cast<size_t>(j)], r) / d;
        }
    }
    return out;
}

Matrix PolynomialMatrix::eval(double r) const {
    Matrix out(m, m);
    double d = 0.0;
    for (size_t i = den.size(); i-- > 0;) d = d * r + den[i];
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const auto& c = num[static_cast<size_t>(i)][static_cast<size_t>(j)];
            double v = 0.0;
            for (size_t k = c.size(); k-- > 0;) v = v * r + c[k];
            out(i, j) = v / d;
        }
    }
    return out;
}

PolynomialMatrix build_G_rational(const DualDescriptor& dual) {
    const int m = dual.chain.m;
    for (int k = 0; k < m; ++k) {
        if (!(dual.laws[static_cast<size_t>(k)].up_rate > 0.0)) {
            throw ValidationError("factorization requires an exponential jump "
                                  "component in every state; state " +
                                  std::to_string(k) + " has none");
        }
    }
    const ExactDual ex = rationalize_dual(dual);

    // Per-row denominators: e_k collects the Erlang factors of the downward
    // mixture, d_k adds the exponential factor of the upward jump. Row k of
    // the cumulant matrix times d_k is then a polynomial.
    std::vector<Poly> ek(static_cast<size_t>(m)), dk(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) {
        Poly e{Rational(1)};
        for (const ExactTerm& t : ex.down_terms[static_cast<size_t>(k)]) {
            e = p_mul(e, poly_pow(Poly{t.delta, Rational(1)}, t.n));
        }
        ek[static_cast<size_t>(k)] = e;
        dk[static_cast<size_t>(k)] = p_mul(Poly{ex.up_exp_rate[static_cast<size_t>(k)], Rational(-1)}, e);
    }

    std::vector<std::vector<Poly>> Mt(static_cast<size_t>(m),
                                      std::vector<Poly>(static_cast<size_t>(m)));
    for (int k = 0; k < m; ++k) {
        const size_t ks = static_cast<size_t>(k);
        const Rational lm = ex.up_rate[ks];
        const Rational lp = ex.down_rate[ks];
        for (int l = 0; l < m; ++l) {
            if (l == k) continue;
            Mt[ks][static_cast<size_t>(l)] = p_scale(dk[ks], ex.Q[ks][static_cast<size_t>(l)]);
        }
        // lm (c/(c-r) - 1) d_k = lm c e_k - lm d_k, and the downward mixture
        // contributes lp sum_t w_t delta_t^n d_k / (delta_t + r)^n - lp d_k.
        Poly diag = p_scale(ek[ks], lm * ex.up_exp_rate[ks]);
        diag = p_add(diag, p_scale(dk[ks], ex.Q[ks][ks] - lm - lp));
        for (const ExactTerm& t : ex.down_terms[ks]) {
            Rational dn(1);
            for (int i = 0; i < t.n; ++i) dn *= t.delta;
            const Poly reduced =
                p_div_exact(dk[ks], poly_pow(Poly{t.delta, Rational(1)}, t.n), "row denominator");
            diag = p_add(diag, p_scale(reduced, lp * t.w * dn));
        }
        Mt[ks][ks] = std::move(diag);
    }

    Poly den = poly_det(Mt);
    if (den.empty()) throw NumericError("cleared cumulant matrix is singular as a polynomial");

    // Adjugate by cofactors, then num[i][j] = r adj(Mt)[i][j] e_j.
    std::vector<std::vector<Poly>> num(static_cast<size_t>(m),
                                       std::vector<Poly>(static_cast<size_t>(m)));
    const Poly r_poly{Rational(0), Rational(1)};
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Poly cof;
            if (m == 1) {
                cof = Poly{Rational(1)};
            } else {
                cof = poly_det(minor_of(Mt, j, i)); // adj[i][j] = cofactor of (j, i)
                if ((i + j) % 2 == 1) cof = p_scale(cof, Rational(-1));
            }
            num[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                p_mul(r_poly, p_mul(cof, ek[static_cast<size_t>(j)]));
        }
    }

    // Cancel the factor common to the denominator and every numerator (this
    // removes the cleared row denominators and the root at r = 0).
    Poly g = den;
    for (int i = 0; i < m && p_degree(g) > 0; ++i) {
        for (int j = 0; j < m && p_degree(g) > 0; ++j) {
            g = p_gcd(g, num[static_cast<size_t>(i)][static_cast<size_t>(j)]);
        }
    }
    if (p_degree(g) > 0) {
        den = p_div_exact(den, g, "denominator cancellation");
        for (auto& row : num) {
            for (Poly& entry : row) entry = p_div_exact(entry, g, "numerator cancellation");
        }
    }

    // Normalize the denominator to primitive integer coefficients with a
    // positive leading coefficient.
    cpp_int L = 1;
    for (const Rational& c : den) L = lcm(L, denominator(c));
    cpp_int gg = 0;
    for (const Rational& c : den) gg = gcd(gg, numerator(c) * (L / denominator(c)));
    Rational scale(L, gg == 0 ? cpp_int(1) : gg);
    if (den.back() * scale < 0) scale = -scale;
    den = p_scale(den, scale);
    for (auto& row : num) {
        for (Poly& entry : row) entry = p_scale(entry, scale);
    }

    PolynomialMatrix G;
    G.m = m;
    G.num_exact = std::move(num);
    G.den_exact = std::move(den);
    G.num.assign(static_cast<size_t>(m), std::vector<std::vector<double>>(static_cast<size_t>(m)));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const Poly& e = G.num_exact[static_cast<size_t>(i)][static_cast<size_t>(j)];
            auto& d = G.num[static_cast<size_t>(i)][static_cast<size_t>(j)];
            d.reserve(e.size());
            for (const Rational& c : e) d.push_back(static_cast<double>(c));
            if (static_cast<int>(e.size()) - 1 > p_degree(G.den_exact)) {
                throw NumericError("ladder transform is an improper rational function");
            }
        }
    }
    G.den.reserve(G.den_exact.size());
    for (const Rational& c : G.den_exact) G.den.push_back(static_cast<double>(c));
    return G;
}

std::vector<std::complex<double>> find_poles(const std::vector<double>& den) {
    std::vector<double> d = den;
    while (!d.empty() && d.back() == 0.0) d.pop_back();
    if (d.size() < 2) {
        throw NumericError("denominator of degree < 1 has no poles");
    }
    const int deg = static_cast<int>(d.size()) - 1;

    Matrix companion = Matrix::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -d[static_cast<size_t>(i)] / d.back();

    Eigen::EigenSolver<Matrix> es(companion);
    if (es.info() != Eigen::Success) {
        throw NumericError("companion matrix eigenvalue computation failed");
    }
    std::vector<std::complex<double>> poles(static_cast<size_t>(deg));
    const std::vector<double> dprime = [&] {
        std::vector<double> dp(d.size() - 1);
        for (size_t i = 1; i < d.size(); ++i) dp[i - 1] = d[i] * static_cast<double>(i);
        return dp;
    }();
    for (int i = 0; i < deg; ++i) {
        std::complex<double> p = es.eigenvalues()(i);
        for (int it = 0; it < 5; ++it) {
            const std::complex<double> fp = p_eval(dprime, p);
            if (std::abs(fp) < 1e-300) break;
            p -= p_eval(d, p) / fp;
        }
        poles[static_cast<size_t>(i)] = p;
    }
    std::sort(poles.begin(), poles.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    for (size_t i = 0; i < poles.size(); ++i) {
        for (size_t j = i + 1; j < poles.size(); ++j) {
            if (std::abs(poles[i] - poles[j]) < 1e-7 * (1.0 + std::abs(poles[i]))) {
                throw NumericError("denominator roots too close to separate; "
                                   "partial fractions with simple poles undefined");
            }
        }
    }
    return poles;
}

Eigen::MatrixXcd RationalMatrixPF::eval(std::complex<double> r) const {
    Eigen::MatrixXcd out = c0.cast<std::complex<double>>();
    for (size_t l = 0; l < poles.size(); ++l) {
        out += residues[l] / (r - poles[l]);
    }
    return out;
}

bool RationalMatrixPF::all_real(double tol) const {
    for (size_t l = 0; l < poles.size(); ++l) {
        if (std::abs(poles[l].imag()) > tol) return false;
        if (residues[l].imag().cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

RationalMatrixPF partial_fractions(const PolynomialMatrix& G,
                                   const std::vector<std::complex<double>>& poles) {
    RationalMatrixPF pf;
    pf.poles = poles;
    pf.c0 = Matrix::Zero(G.m, G.m);
    for (int i = 0; i < G.m; ++i) {
        for (int j = 0; j < G.m; ++j) {
            const auto& n = G.num[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (n.size() == G.den.size()) pf.c0(i, j) = n.back() / G.den.back();
        }
    }
    std::vector<double> dprime(G.den.size() - 1);
    for (size_t i = 1; i < G.den.size(); ++i) dprime[i - 1] = G.den[i] * static_cast<double>(i);
    for (const std::complex<double>& p : poles) {
        const std::complex<double> dp = p_eval(dprime, p);
        if (std::abs(dp) < 1e-300) {
            throw NumericError("vanishing denominator derivative at a pole");
        }
        Eigen::MatrixXcd R(G.m, G.m);
        for (int i = 0; i < G.m; ++i) {
            for (int j = 0; j < G.m; ++j) {
                R(i, j) = p_eval(G.num[static_cast<size_t>(i)][static_cast<size_t>(j)], p) / dp;
            }
        }
        pf.residues.push_back(std::move(R));
    }

    // Reassembly self-check at sample points kept away from the poles. Both
    // sides of the comparison lose digits on high-degree denominators with
    // clustered roots: the direct rational evaluation where the denominator
    // is small against the magnitude sum of its Horner terms, and each
    // residue through the same effect at its pole. The tolerance carries
    // both forward-error bounds on top of a fixed floor.
    auto mag_sum = [](const std::vector<double>& poly, const std::complex<double>& x) {
        double s = 0.0, ax = std::abs(x), pw = 1.0;
        for (double c : poly) {
            s += std::abs(c) * pw;
            pw *= ax;
        }
        return s;
    };
    constexpr double kEps = 2.2e-16;
    std::vector<double> residue_err(poles.size());
    for (size_t l = 0; l < poles.size(); ++l) {
        const std::complex<double>& p = poles[l];
        double num_mag = 0.0;
        for (int i = 0; i < G.m; ++i) {
            for (int j = 0; j < G.m; ++j) {
                num_mag = std::max(num_mag,
                                   mag_sum(G.num[static_cast<size_t>(i)][static_cast<size_t>(j)], p));
            }
        }
        const double dp_abs = std::abs(p_eval(dprime, p));
        const double rmax = pf.residues[l].cwiseAbs().maxCoeff();
        residue_err[l] =
            kEps * (num_mag + rmax * mag_sum(dprime, p)) / std::max(dp_abs, 1e-300);
    }
    int checked = 0;
    for (int s = 1; s <= 200 && checked < 20; ++s) {
        const double frac = std::fmod(s * 0.6180339887498949, 1.0);
        const std::complex<double> x(-5.0 + 10.0 * frac, 0.0);
        bool ok = true;
        for (const auto& p : poles) {
            if (std::abs(x - p) < 0.1) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        ++checked;
        const Eigen::MatrixXcd a = pf.eval(x);
        const Eigen::MatrixXcd b = G.eval(x);
        const double err = (a - b).cwiseAbs().maxCoeff();
        const double bmax = b.cwiseAbs().maxCoeff();
        double num_mag = 0.0;
        for (int i = 0; i < G.m; ++i) {
            for (int j = 0; j < G.m; ++j) {
                num_mag = std::max(num_mag,
                                   mag_sum(G.num[static_cast<size_t>(i)][static_cast<size_t>(j)], x));
            }
        }
        const double den_val = std::abs(p_eval(G.den, x));
        const double cond = (num_mag + mag_sum(G.den, x) * bmax) / std::max(den_val, 1e-300);
        double propagated = 0.0;
        for (size_t l = 0; l < poles.size(); ++l) {
            propagated += residue_err[l] / std::abs(x - poles[l]);
        }
        const double tol = 1e-8 * (1.0 + bmax) + 1e-13 * cond + 10.0 * propagated;
        if (err > tol) {
            throw NumericError("partial fraction reassembly mismatch " + std::to_string(err));
        }
    }
    if (checked == 0) throw NumericError("no usable sample points for the reassembly check");
    return pf;
}

RationalMatrixPF project_minus(const RationalMatrixPF& pf) {
    RationalMatrixPF out;
    out.c0 = Matrix::Zero(pf.c0.rows(), pf.c0.cols());
    for (size_t l = 0; l < pf.poles.size(); ++l) {
        if (std::abs(pf.poles[l].real()) < 1e-10) {
            throw NumericError("pole on the imaginary axis; half-plane projection undefined");
        }
        if (pf.poles[l].real() < 0.0) {
            out.poles.push_back(pf.poles[l]);
            out.residues.push_back(pf.residues[l]);
        }
    }
    return out;
}

namespace {

Matrix dual_p0(const DualDescriptor& dual) {
    const int m = dual.chain.m;
    Matrix A = -dual.chain.Q;
    for (int k = 0; k < m; ++k) {
        A(k, k) += dual.laws[static_cast<size_t>(k)].up_rate +
                   dual.laws[static_cast<size_t>(k)].down_rate;
    }
    return detail::solve_checked(A, Matrix(Matrix::Identity(m, m)), "jump epoch kernel");
}

Matrix real_part_checked(const Eigen::MatrixXcd& M, const char* what) {
    if (M.imag().cwiseAbs().maxCoeff() > 1e-10 * (1.0 + M.real().cwiseAbs().maxCoeff())) {
        throw NumericError(std::string(what) + ": expected a real matrix");
    }
    return M.real();
}

} // namespace

Matrix ladder_exit_matrix(const DualDescriptor& dual, const RationalMatrixPF& pf_minus) {
    const int m = dual.chain.m;
    const Matrix gm0 = real_part_checked(pf_minus.eval(std::complex<double>(0.0, 0.0)),
                                         "half-plane projection at zero");
    const Matrix A = gm0 + dual_p0(dual);
    Matrix rhs(m, m);
    for (int i = 0; i < m; ++i) rhs.row(i) = dual.pi.transpose();
    return detail::solve_checked(A, rhs, "ladder exit system");
}

double ScalarExpMixture::value(double u) const {
    std::complex<double> acc(0.0, 0.0);
    for (size_t l = 0; l < coef.size(); ++l) {
        acc += coef[l] * std::exp(-rate[l] * u);
    }
    return acc.real();
}

InfimumDistribution infimum_distribution(const ValidatedModel& model) {
    return run_factorization(model).infimum;
}

double ruin_probability(const InfimumDistribution& dist, int i, double u) {
    if (u < 0.0) throw NumericError("ruin probability needs a level u >= 0");
    const double v = dist.tail[static_cast<size_t>(i)].value(u);
    return std::min(1.0, std::max(0.0, v));
}

double ruin_probability(const ValidatedModel& model, int i, double u) {
    return ruin_probability(infimum_distribution(model), i, u);
}

FactorizationResult run_factorization(const ValidatedModel& model) {
    if (!(model.drift() < 0.0)) {
        throw ValidationError("drift is " + std::to_string(model.drift()) +
                              "; the ruin problem needs negative drift");
    }
    FactorizationResult out;
    out.dual = dual_spec(model);
    out.G = build_G_rational(out.dual);
    out.poles = find_poles(out.G.den);
    out.pf = partial_fractions(out.G, out.poles);
    out.pf_minus = project_minus(out.pf);
    out.ladder_exit = ladder_exit_matrix(out.dual, out.pf_minus);

    const int m = model.states();
    const Eigen::VectorXcd v = (out.ladder_exit * Vector::Ones(m)).cast<std::complex<double>>();
    InfimumDistribution dist;
    dist.tail.resize(static_cast<size_t>(m));
    for (size_t l = 0; l < out.pf_minus.poles.size(); ++l) {
        const std::complex<double> rho = -out.pf_minus.poles[l];
        const Eigen::VectorXcd a = out.pf_minus.residues[l] * v;
        for (int i = 0; i < m; ++i) {
            dist.tail[static_cast<size_t>(i)].coef.push_back(a(i) / rho);
            dist.tail[static_cast<size_t>(i)].rate.push_back(rho);
        }
    }
    dist.atom_at_zero = Vector(m);
    for (int i = 0; i < m; ++i) {
        const double atom = 1.0 - dist.tail[static_cast<size_t>(i)].value(0.0);
        if (atom < -1e-6 || atom > 1.0 + 1e-6) {
            throw NumericError("atom at zero of the infimum law is " + std::to_string(atom) +
                               "; factorization pipeline inconsistent");
        }
        dist.atom_at_zero(i) = std::min(1.0, std::max(0.0, atom));
    }
    out.infimum = std::move(dist);
    return out;
}

} // namespace mmrisk
