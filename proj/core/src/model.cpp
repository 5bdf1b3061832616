#include "mmrisk/model.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "mmrisk/errors.hpp"
#include "linsolve.hpp"

namespace mmrisk {

namespace {

std::string state_field(const char* field, int k) {
    return std::string("laws[") + std::to_string(k) + "]." + field;
}

// Reachability on the support graph of Q in one direction.
std::vector<bool> reachable(const Matrix& Q, bool forward) {
    const int m = static_cast<int>(Q.rows());
    std::vector<bool> seen(static_cast<size_t>(m), false);
    std::queue<int> frontier;
    seen[0] = true;
    frontier.push(0);
    while (!frontier.empty()) {
        const int k = frontier.front();
        frontier.pop();
        for (int r = 0; r < m; ++r) {
            const double q = forward ? Q(k, r) : Q(r, k);
            if (r != k && q > 0.0 && !seen[static_cast<size_t>(r)]) {
                seen[static_cast<size_t>(r)] = true;
                frontier.push(r);
            }
        }
    }
    return seen;
}

void check_mixture(const ErlangMixture& mix, const std::string& where) {
    if (mix.terms.empty()) {
        throw ValidationError(where + ": mixture has no terms");
    }
    double wsum = 0.0;
    for (size_t t = 0; t < mix.terms.size(); ++t) {
        const ErlangTerm& term = mix.terms[t];
        const std::string at = where + ".terms[" + std::to_string(t) + "]";
        if (!(term.w > 0.0) || !std::isfinite(term.w)) {
            throw ValidationError(at + ".w: weight must be positive and finite");
        }
        if (term.n < 1) {
            throw ValidationError(at + ".n: shape must be a positive integer");
        }
        if (!(term.delta > 0.0) || !std::isfinite(term.delta)) {
            throw ValidationError(at + ".delta: rate must be positive and finite");
        }
        wsum += term.w;
    }
    if (std::abs(wsum - 1.0) > 1e-12 * mix.terms.size()) {
        throw ValidationError(where + ": mixture weights sum to " +
                              std::to_string(wsum) + ", expected 1");
    }
}

} // namespace

double ErlangMixture::mean() const {
    double s = 0.0;
    for (const ErlangTerm& t : terms) s += t.w * t.n / t.delta;
    return s;
}

double ErlangMixture::density(double x) const {
    if (x < 0.0) return 0.0;
    double s = 0.0;
    for (const ErlangTerm& t : terms) {
        double p = t.w * t.delta * std::exp(-t.delta * x);
        for (int i = 1; i < t.n; ++i) p *= t.delta * x / i;
        s += p;
    }
    return s;
}

double ErlangMixture::tail(double x) const {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (const ErlangTerm& t : terms) {
        // P{Erlang(n, delta) > x} = e^{-delta x} sum_{i<n} (delta x)^i / i!
        double pois = std::exp(-t.delta * x);
        double acc = pois;
        for (int i = 1; i < t.n; ++i) {
            pois *= t.delta * x / i;
            acc += pois;
        }
        s += t.w * acc;
    }
    return s;
}

double ErlangMixture::mgf(double r) const {
    double s = 0.0;
    for (const ErlangTerm& t : terms) {
        if (r >= t.delta) {
            throw NumericError("Erlang mixture transform evaluated at r = " +
                               std::to_string(r) + " >= rate " + std::to_string(t.delta));
        }
        s += t.w * std::pow(t.delta / (t.delta - r), t.n);
    }
    return s;
}

double ErlangMixture::min_rate() const {
    double d = std::numeric_limits<double>::infinity();
    for (const ErlangTerm& t : terms) d = std::min(d, t.delta);
    return d;
}

int ErlangMixture::max_shape() const {
    int n = 0;
    for (const ErlangTerm& t : terms) n = std::max(n, t.n);
    return n;
}

bool ProcessSpec::has_switching_jumps() const {
    for (const auto& row : switching_jumps) {
        for (const auto& cell : row) {
            if (cell.has_value()) return true;
        }
    }
    return false;
}

ValidatedModel validate_spec(const ProcessSpec& spec) {
    const int m = spec.chain.m;
    if (m < 1) {
        throw ValidationError("chain.m: need at least one state");
    }
    const Matrix& Q = spec.chain.Q;
    if (Q.rows() != m || Q.cols() != m) {
        throw ValidationError("chain.Q: expected " + std::to_string(m) + "x" +
                              std::to_string(m) + " generator, got " +
                              std::to_string(Q.rows()) + "x" + std::to_string(Q.cols()));
    }
    if (static_cast<int>(spec.laws.size()) != m) {
        throw ValidationError("laws: expected one law per state, got " +
                              std::to_string(spec.laws.size()));
    }

    double qmax = 0.0;
    for (int k = 0; k < m; ++k) {
        for (int r = 0; r < m; ++r) {
            if (!std::isfinite(Q(k, r))) {
                throw ValidationError("chain.Q[" + std::to_string(k) + "][" +
                                      std::to_string(r) + "]: non-finite entry");
            }
            qmax = std::max(qmax, std::abs(Q(k, r)));
            if (k != r && Q(k, r) < 0.0) {
                throw ValidationError("chain.Q[" + std::to_string(k) + "][" +
                                      std::to_string(r) + "]: negative off-diagonal entry");
            }
        }
        const double row_sum = Q.row(k).sum();
        if (std::abs(row_sum) > 1e-12 * std::max(1.0, qmax)) {
            throw ValidationError("chain.Q row " + std::to_string(k) +
                                  " sums to " + std::to_string(row_sum) +
                                  ", a generator row must sum to 0");
        }
    }
    if (m > 1) {
        const std::vector<bool> fwd = reachable(Q, true);
        const std::vector<bool> bwd = reachable(Q, false);
        for (int k = 0; k < m; ++k) {
            if (!fwd[static_cast<size_t>(k)] || !bwd[static_cast<size_t>(k)]) {
                throw ValidationError("chain.Q: not irreducible, state " +
                                      std::to_string(k) +
                                      " does not communicate with state 0");
            }
        }
    }

    bool any_pos = false;
    for (int k = 0; k < m; ++k) {
        const StateJumpLaw& law = spec.laws[static_cast<size_t>(k)];
        if (law.pos_rate < 0.0 || !std::isfinite(law.pos_rate)) {
            throw ValidationError(state_field("pos_rate", k) + ": must be finite and >= 0");
        }
        if (law.neg_rate < 0.0 || !std::isfinite(law.neg_rate)) {
            throw ValidationError(state_field("neg_rate", k) + ": must be finite and >= 0");
        }
        if (law.pos_rate > 0.0) {
            any_pos = true;
            check_mixture(law.pos_law, state_field("pos_law", k));
        }
        if (law.neg_rate > 0.0) {
            if (!(law.neg_exp_rate > 0.0) || !std::isfinite(law.neg_exp_rate)) {
                throw ValidationError(state_field("c", k) + ": must be finite and > 0");
            }
        }
    }
    if (!spec.switching_jumps.empty()) {
        if (static_cast<int>(spec.switching_jumps.size()) != m) {
            throw ValidationError("switching_jumps: table must be " +
                                  std::to_string(m) + "x" + std::to_string(m));
        }
        for (int k = 0; k < m; ++k) {
            const auto& row = spec.switching_jumps[static_cast<size_t>(k)];
            if (static_cast<int>(row.size()) != m) {
                throw ValidationError("switching_jumps[" + std::to_string(k) +
                                      "]: row must have " + std::to_string(m) + " entries");
            }
            for (int r = 0; r < m; ++r) {
                const auto& cell = row[static_cast<size_t>(r)];
                if (!cell.has_value()) continue;
                if (k == r) {
                    throw ValidationError("switching_jumps[" + std::to_string(k) + "][" +
                                          std::to_string(k) + "]: no transition to attach to");
                }
                if (Q(k, r) <= 0.0) {
                    throw ValidationError("switching_jumps[" + std::to_string(k) + "][" +
                                          std::to_string(r) +
                                          "]: jump attached to a zero-rate transition");
                }
                check_mixture(*cell, "switching_jumps[" + std::to_string(k) + "][" +
                                         std::to_string(r) + "]");
            }
        }
    }
    if (!any_pos) {
        throw ValidationError("laws: no state has upward jumps, "
                              "the process never crosses a positive level");
    }

    ValidatedModel model;
    model.spec_ = spec;

    // Stationary distribution: pi Q = 0 with pi summing to one, solved by
    // replacing the last equation of Q' pi = 0 with the normalization row.
    Vector pi;
    if (m == 1) {
        pi = Vector::Ones(1);
    } else {
        Matrix A = Q.transpose();
        A.row(m - 1).setOnes();
        Vector b = Vector::Zero(m);
        b(m - 1) = 1.0;
        pi = detail::solve_checked(A, b, "stationary distribution");
        const double resid = (pi.transpose() * Q).cwiseAbs().maxCoeff();
        if (resid > 1e-10 * std::max(1.0, qmax)) {
            throw NumericError("stationary distribution residual " + std::to_string(resid));
        }
    }
    for (int k = 0; k < m; ++k) {
        if (!(pi(k) > 0.0)) {
            throw ValidationError("chain.Q: stationary probability of state " +
                                  std::to_string(k) + " is not positive");
        }
    }
    model.pi_ = pi;

    model.lambda_plus_ = Matrix::Zero(m, m);
    model.lambda_minus_ = Matrix::Zero(m, m);
    model.c_ = Matrix::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        const StateJumpLaw& law = spec.laws[static_cast<size_t>(k)];
        model.lambda_plus_(k, k) = law.pos_rate;
        model.lambda_minus_(k, k) = law.neg_rate;
        model.c_(k, k) = law.neg_rate > 0.0 ? law.neg_exp_rate : 1.0;
    }
    model.lambda_ = model.lambda_plus_ + model.lambda_minus_;

    double drift = 0.0;
    for (int k = 0; k < m; ++k) {
        const StateJumpLaw& law = spec.laws[static_cast<size_t>(k)];
        double mk = 0.0;
        if (law.pos_rate > 0.0) mk += law.pos_rate * law.pos_law.mean();
        if (law.neg_rate > 0.0) mk -= law.neg_rate / law.neg_exp_rate;
        if (!spec.switching_jumps.empty()) {
            for (int r = 0; r < m; ++r) {
                const auto& cell = spec.switching_jumps[static_cast<size_t>(k)][static_cast<size_t>(r)];
                if (cell.has_value()) mk += Q(k, r) * cell->mean();
            }
        }
        drift += pi(k) * mk;
    }
    model.drift_ = drift;

    return model;
}

double drift_m1(const ValidatedModel& model) { return model.drift(); }

DualDescriptor dual_spec(const ValidatedModel& model) {
    if (model.spec().has_switching_jumps()) {
        throw ValidationError("dual_spec: switching jumps would point downward "
                              "after negation, dual is not of the same class");
    }
    DualDescriptor dual;
    dual.chain = model.spec().chain;
    dual.pi = model.pi();
    dual.laws.resize(static_cast<size_t>(model.states()));
    for (int k = 0; k < model.states(); ++k) {
        const StateJumpLaw& law = model.law(k);
        DualDescriptor::StateLaw& d = dual.laws[static_cast<size_t>(k)];
        d.up_rate = law.neg_rate;
        d.up_exp_rate = law.neg_exp_rate;
        d.down_rate = law.pos_rate;
        d.down_law = law.pos_law;
    }
    return dual;
}

ProcessSpec dual_spec(const DualDescriptor& dual) {
    ProcessSpec spec;
    spec.chain = dual.chain;
    spec.laws.resize(dual.laws.size());
    for (size_t k = 0; k < dual.laws.size(); ++k) {
        const DualDescriptor::StateLaw& d = dual.laws[k];
        StateJumpLaw& law = spec.laws[k];
        law.pos_rate = d.down_rate;
        if (d.down_rate > 0.0) law.pos_law = d.down_law;
        law.neg_rate = d.up_rate;
        if (d.up_rate > 0.0) law.neg_exp_rate = d.up_exp_rate;
    }
    return spec;
}

ValidatedModel reverse_chain(const ValidatedModel& model) {
    const int m = model.states();
    const Vector& pi = model.pi();
    Matrix Qhat(m, m);
    for (int k = 0; k < m; ++k) {
        for (int r = 0; r < m; ++r) {
            Qhat(k, r) = pi(r) * model.Q()(r, k) / pi(k);
        }
    }
    ProcessSpec spec = model.spec();
    spec.chain.Q = Qhat;
    if (!spec.switching_jumps.empty()) {
        auto flipped = spec.switching_jumps;
        for (int k = 0; k < m; ++k) {
            for (int r = 0; r < m; ++r) {
                flipped[static_cast<size_t>(k)][static_cast<size_t>(r)] =
                    spec.switching_jumps[static_cast<size_t>(r)][static_cast<size_t>(k)];
            }
        }
        spec.switching_jumps = std::move(flipped);
    }
    return validate_spec(spec);
}

} // namespace mmrisk
