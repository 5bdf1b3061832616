#include "mmrisk/overshoot.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "mmrisk/errors.hpp"
#include "mmrisk/factorization.hpp"
#include "mmrisk/transforms.hpp"
#include "linsolve.hpp"
#include "parallel.hpp"

namespace mmrisk {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binom(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b *= static_cast<double>(n - k + i) / i;
    return b;
}

Matrix checked_inverse(const Matrix& A, const char* what) {
    return detail::solve_checked(A, Matrix(Matrix::Identity(A.rows(), A.cols())), what);
}

} // namespace

Matrix MatrixExpMixture::value(double z) const {
    Matrix out = Matrix::Zero(m, m);
    for (const Term& t : terms) {
        const double e = std::exp(-t.rate * z);
        double zp = 1.0;
        for (int j = 0; j <= t.degree; ++j) {
            out += (e * zp) * t.coef[static_cast<size_t>(j)];
            zp *= z;
        }
    }
    return out;
}

Matrix MatrixExpMixture::total_integral() const {
    Matrix out = Matrix::Zero(m, m);
    for (const Term& t : terms) {
        for (int j = 0; j <= t.degree; ++j) {
            out += (factorial(j) / std::pow(t.rate, j + 1)) * t.coef[static_cast<size_t>(j)];
        }
    }
    return out;
}

Matrix MatrixExpMixture::cdf(double u) const {
    Matrix out = Matrix::Zero(m, m);
    for (const Term& t : terms) {
        for (int j = 0; j <= t.degree; ++j) {
            // integral over [0,u] of z^j e^{-rate z} via the regularized
            // lower incomplete gamma of integer order
            double pois = std::exp(-t.rate * u);
            double partial = pois;
            for (int i = 1; i <= j; ++i) {
                pois *= t.rate * u / i;
                partial += pois;
            }
            out += (factorial(j) / std::pow(t.rate, j + 1)) * (1.0 - partial) *
                   t.coef[static_cast<size_t>(j)];
        }
    }
    return out;
}

XiBarLimit xi_bar_limit(const ValidatedModel& model) {
    if (!(model.drift() < 0.0)) {
        throw ValidationError("drift is " + std::to_string(model.drift()) +
                              "; the stationary descent structure needs negative drift");
    }
    const int m = model.states();
    for (int k = 0; k < m; ++k) {
        if (!(model.law(k).neg_rate > 0.0)) {
            throw ValidationError("stationary descent analysis requires an exponential "
                                  "jump component in every state; state " +
                                  std::to_string(k) + " has none");
        }
    }
    if (model.spec().has_switching_jumps()) {
        throw ValidationError("stationary descent analysis does not support "
                              "transition-attached jumps");
    }

    const ValidatedModel rev = reverse_chain(model);
    const Matrix& C = model.C();
    const Matrix A = p0_limit(rev); // (Lambda - Q_hat)^{-1}
    const Matrix I = Matrix::Identity(m, m);

    // Occupation kernel of the descending ladder on the reversed chain:
    // minimal solution of Dhat = A (LambdaMinus + LambdaPlus F(Dhat)),
    // where row j of F(Dhat) sums the Erlang terms of state j's upward
    // mixture at the matrix argument Gamma = C (Dhat - I).
    Matrix Dhat = Matrix::Zero(m, m);
    double diff = 1.0;
    int it = 0;
    for (; it < 100000 && diff > 1e-15; ++it) {
        const Matrix Gamma = C * (Dhat - I);
        Matrix F = Matrix::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            const StateJumpLaw& law = model.law(j);
            if (!(law.pos_rate > 0.0)) continue;
            for (const ErlangTerm& t : law.pos_law.terms) {
                const Matrix X = checked_inverse(t.delta * I - Gamma, "descent fixed point");
                Matrix P = Dhat;
                for (int i = 0; i < t.n; ++i) P = P * X;
                F.row(j) += (t.w * std::pow(t.delta, t.n)) * P.row(j);
            }
        }
        const Matrix next = A * (model.LambdaMinus() + model.LambdaPlus() * F);
        diff = (next - Dhat).cwiseAbs().maxCoeff();
        Dhat = next;
    }
    if (diff > 1e-12) {
        throw NumericError("descent fixed point did not converge, last step " +
                           std::to_string(diff));
    }

    // Expected occupation below a level on the reversed model. Landing
    // below a level switches the chain first and then draws the landing
    // depth at the new state's rate, so the renewal density of landings is
    // Dhat C e^{-M w} with M = (I - Dhat) C.
    const Matrix M = (I - Dhat) * C;
    Matrix S = Matrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        const StateJumpLaw& law = model.law(j);
        if (!(law.pos_rate > 0.0)) continue;
        Matrix IJ = Matrix::Zero(m, m);
        for (const ErlangTerm& t : law.pos_law.terms) {
            const Matrix P = checked_inverse(M + t.delta * I, "descent occupation");
            Matrix Ppow = P;
            double dpow = 1.0;
            for (int i = 0; i < t.n; ++i) {
                IJ += (t.w * dpow) * Ppow;
                dpow *= t.delta;
                Ppow = Ppow * P;
            }
        }
        const Matrix Wj = I + Dhat * C * IJ;
        S.row(j) = law.pos_rate * Wj.row(j);
    }
    const Matrix B = A * S;
    const Matrix Vhat = detail::solve_checked(Matrix(I - B), A, "descent occupation system");

    // Back to the original time direction through the stationary weights.
    const Vector& pi = model.pi();
    Matrix V(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            V(i, j) = Vhat(j, i) * pi(j) / pi(i);
        }
    }

    XiBarLimit out;
    out.p_minus0 = -model.Q() * V;
    out.R_c0 = out.p_minus0 * C;
    out.q_minus0 = I - out.p_minus0;

    // Internal consistency: the crossing kernel must match the reversed
    // occupation kernel conjugated by the stationary weights, and the
    // stationary distribution must annihilate the crossing rate matrix.
    Matrix q_check(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            q_check(i, j) = Dhat(j, i) * pi(j) / pi(i);
        }
    }
    if ((q_check - out.q_minus0).cwiseAbs().maxCoeff() > 1e-8) {
        throw NumericError("descent kernels disagree between time directions");
    }
    if ((pi.transpose() * out.p_minus0).cwiseAbs().maxCoeff() > 1e-8) {
        throw NumericError("stationary distribution does not annihilate the "
                           "descent rate matrix");
    }

    Eigen::EigenSolver<Matrix> es(out.R_c0);
    if (es.info() != Eigen::Success) {
        throw NumericError("eigenvalue computation failed on the descent rate matrix");
    }
    out.spectrum = es.eigenvalues();
    const double scale = std::max(1.0, out.R_c0.cwiseAbs().maxCoeff());
    int zeros = 0;
    for (int i = 0; i < m; ++i) {
        if (std::abs(out.spectrum(i)) <= 1e-8 * scale) {
            ++zeros;
        } else if (!(out.spectrum(i).real() > 0.0)) {
            throw NumericError("descent rate matrix has a nonzero eigenvalue outside "
                               "the right half plane");
        }
    }
    if (zeros != 1) {
        throw NumericError("descent rate matrix has " + std::to_string(zeros) +
                           " vanishing eigenvalues, expected exactly one");
    }
    return out;
}

OvershootAnalysis::OvershootAnalysis(const ValidatedModel& model)
    : m_(model.states()), model_(model), xi_(xi_bar_limit(model)), p0_(p0_limit(model)) {}

Matrix OvershootAnalysis::k0bar(double z) const {
    Matrix out = Matrix::Zero(m_, m_);
    for (int k = 0; k < m_; ++k) {
        const StateJumpLaw& law = model_.law(k);
        if (law.pos_rate > 0.0) out(k, k) = law.pos_rate * law.pos_law.tail(z);
    }
    return out;
}

Matrix OvershootAnalysis::i1(double z) const {
    // integral over u of e^{-uR} q_minus0 K0bar(z+u): expand the Erlang
    // tails of K0bar, split (z+u)^i binomially, and integrate u^a e^{-uR}
    // e^{-delta u} in closed form.
    const Matrix I = Matrix::Identity(m_, m_);
    Matrix out = Matrix::Zero(m_, m_);
    for (int k = 0; k < m_; ++k) {
        const StateJumpLaw& law = model_.law(k);
        if (!(law.pos_rate > 0.0)) continue;
        for (const ErlangTerm& t : law.pos_law.terms) {
            const Matrix P = checked_inverse(xi_.R_c0 + t.delta * I, "overshoot integral");
            const Eigen::VectorXd qcol = xi_.q_minus0.col(k);
            const double ez = std::exp(-t.delta * z);
            Matrix Ppow = P; // P^{a+1}
            for (int a = 0; a < t.n; ++a) {
                double zsum = 0.0; // sum over i >= a of the z polynomial part
                for (int i = a; i < t.n; ++i) {
                    zsum += std::pow(t.delta, i) / factorial(i) * binom(i, a) *
                            std::pow(z, i - a);
                }
                const Vector col = (factorial(a) * ez * zsum) * (Ppow * qcol);
                out.col(k) += law.pos_rate * t.w * col;
                Ppow = Ppow * P;
            }
        }
    }
    return out;
}

Matrix OvershootAnalysis::j0(double z) const {
    // integral of e^{-xR} over [0, z] via one exponential of the augmented
    // block matrix, valid even when R is singular.
    Matrix blk = Matrix::Zero(2 * m_, 2 * m_);
    blk.topLeftCorner(m_, m_) = -xi_.R_c0;
    blk.topRightCorner(m_, m_) = Matrix::Identity(m_, m_);
    const Matrix e = (blk * z).exp();
    return e.topRightCorner(m_, m_);
}

Matrix OvershootAnalysis::tail(OvershootKind kind, double z) const {
    if (z < 0.0) throw NumericError("overshoot tails need z >= 0");
    const Matrix& C = model_.C();
    switch (kind) {
        case OvershootKind::gamma_plus:
            return p0_ * (k0bar(z) + C * i1(z));
        case OvershootKind::gamma_under: {
            const Matrix e = (-z * xi_.R_c0).exp();
            return p0_ * (C * (e * i1(z)));
        }
        case OvershootKind::gamma_total: {
            const Matrix e = (-z * xi_.R_c0).exp();
            return p0_ * (k0bar(z) + C * (j0(z) * xi_.q_minus0 * k0bar(z) + e * i1(z)));
        }
    }
    throw NumericError("unknown overshoot kind");
}

Matrix overshoot_tail_zero(const ValidatedModel& model, OvershootKind kind, double z) {
    return OvershootAnalysis(model).tail(kind, z);
}

LadderMeasure ladder_measure(const ValidatedModel& model) {
    const int m = model.states();
    const XiBarLimit xi = xi_bar_limit(model);
    const Matrix p0 = p0_limit(model);
    const Matrix& C = model.C();
    const Matrix I = Matrix::Identity(m, m);

    LadderMeasure out;
    out.density.m = m;
    for (int k = 0; k < m; ++k) {
        const StateJumpLaw& law = model.law(k);
        if (!(law.pos_rate > 0.0)) continue;
        for (const ErlangTerm& t : law.pos_law.terms) {
            MatrixExpMixture::Term term;
            term.rate = t.delta;
            term.degree = t.n - 1;
            term.coef.assign(static_cast<size_t>(t.n), Matrix::Zero(m, m));
            const double amp = law.pos_rate * t.w * std::pow(t.delta, t.n) / factorial(t.n - 1);

            // direct part: the jump from the current level itself
            term.coef[static_cast<size_t>(t.n - 1)](k, k) += amp;

            // descent part: dip x below the level first, then jump u + x
            const Matrix P = checked_inverse(xi.R_c0 + t.delta * I, "ladder density");
            const Eigen::VectorXd qcol = xi.q_minus0.col(k);
            Matrix Ppow = P; // P^{n-j} built from the top power down
            for (int j = t.n - 1; j >= 0; --j) {
                const double c = amp * binom(t.n - 1, j) * factorial(t.n - 1 - j);
                term.coef[static_cast<size_t>(j)].col(k) += (C * (c * (Ppow * qcol)));
                Ppow = Ppow * P;
            }
            for (Matrix& cm : term.coef) cm = p0 * cm;
            out.density.terms.push_back(std::move(term));
        }
    }
    out.total_mass = out.density.total_integral();
    return out;
}

double pk_series(const ValidatedModel& model, int i, double u, double tol) {
    if (u < 0.0) throw NumericError("pk_series needs u >= 0");
    const int m = model.states();
    const LadderMeasure ladder = ladder_measure(model);
    const Vector kill = (Matrix::Identity(m, m) - ladder.total_mass) * Vector::Ones(m);
    if (u == 0.0) {
        return 1.0 - kill(i);
    }
    const double q = ladder.total_mass.rowwise().sum().maxCoeff();
    if (!(q < 1.0)) {
        throw NumericError("ladder mass has a row sum >= 1, geometric series diverges");
    }
    int N = 1;
    while (std::pow(q, N + 1) / (1.0 - q) >= tol) ++N;

    // Composite quadrature weights for the running integral over [0, x_i]:
    // trapezoid, Simpson and 3/8 starts, then composite Simpson with a 3/8
    // tail patch on odd node counts.
    const int n_nodes = 2049;
    const double h = u / (n_nodes - 1);
    const auto weights_for = [&](int i_node) {
        std::vector<double> w(static_cast<size_t>(i_node) + 1, 0.0);
        if (i_node == 1) {
            w[0] = w[1] = 0.5;
        } else if (i_node == 2) {
            w[0] = w[2] = 1.0 / 3.0;
            w[1] = 4.0 / 3.0;
        } else if (i_node == 3) {
            w[0] = w[3] = 3.0 / 8.0;
            w[1] = w[2] = 9.0 / 8.0;
        } else if (i_node % 2 == 0) {
            w[0] = w[static_cast<size_t>(i_node)] = 1.0 / 3.0;
            for (int k = 1; k < i_node; ++k) {
                w[static_cast<size_t>(k)] = (k % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
            }
        } else {
            const int s = i_node - 3; // even composite part, then a 3/8 tail
            w[0] = 1.0 / 3.0;
            for (int k = 1; k < s; ++k) {
                w[static_cast<size_t>(k)] = (k % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
            }
            w[static_cast<size_t>(s)] = 1.0 / 3.0 + 3.0 / 8.0;
            w[static_cast<size_t>(s + 1)] = w[static_cast<size_t>(s + 2)] = 9.0 / 8.0;
            w[static_cast<size_t>(i_node)] = 3.0 / 8.0;
        }
        for (double& x : w) x *= h;
        return w;
    };
    std::vector<std::vector<double>> weights(static_cast<size_t>(n_nodes));
    for (int k = 1; k < n_nodes; ++k) weights[static_cast<size_t>(k)] = weights_for(k);

    std::vector<Matrix> g(static_cast<size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k) g[static_cast<size_t>(k)] = ladder.density.value(h * k);

    // survival = sum over ladder counts n of (n-fold convolution mass on
    // [0, u]) kill; n = 0 contributes kill itself.
    Vector survival = kill;
    std::vector<Matrix> rho = g; // density of the current convolution power
    const std::vector<double>& wu = weights[static_cast<size_t>(n_nodes - 1)];
    for (int n = 1; n <= N; ++n) {
        Matrix H = Matrix::Zero(m, m);
        for (int k = 0; k < n_nodes; ++k) H += wu[static_cast<size_t>(k)] * rho[static_cast<size_t>(k)];
        survival += H * kill;
        if (n == N) break;
        std::vector<Matrix> next(static_cast<size_t>(n_nodes));
        next[0] = Matrix::Zero(m, m);
        detail::parallel_for(1, n_nodes, [&](int inode) {
            Matrix acc = Matrix::Zero(m, m);
            const std::vector<double>& w = weights[static_cast<size_t>(inode)];
            for (int k = 0; k <= inode; ++k) {
                acc.noalias() += w[static_cast<size_t>(k)] *
                                 (rho[static_cast<size_t>(k)] * g[static_cast<size_t>(inode - k)]);
            }
            next[static_cast<size_t>(inode)] = std::move(acc);
        });
        rho = std::move(next);
    }
    return 1.0 - survival(i);
}

} // namespace mmrisk
