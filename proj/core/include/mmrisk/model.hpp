#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mmrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One component of a positive-jump mixture: Erlang(n, delta) with weight w.
struct ErlangTerm {
    double w = 1.0;
    int n = 1;
    double delta = 1.0;
};

// Finite mixture of Erlang distributions on (0, inf). Dense in laws on the
// half line and closed under every transform this library needs.
struct ErlangMixture {
    std::vector<ErlangTerm> terms;

    double mean() const;
    double density(double x) const;
    double tail(double x) const;    // P{J > x}
    double mgf(double r) const;     // E[e^{rJ}], requires r < min_rate()
    double min_rate() const;        // smallest delta across terms
    int max_shape() const;
};

// Jump behaviour while the chain sits in one state. Downward jumps are
// exponential so that every downward level crossing lands memorylessly;
// upward jumps are an Erlang mixture.
struct StateJumpLaw {
    double pos_rate = 0.0;      // arrival rate of upward jumps
    ErlangMixture pos_law;      // meaningful only when pos_rate > 0
    double neg_rate = 0.0;      // arrival rate of downward jumps
    double neg_exp_rate = 1.0;  // c: rate of the exponential downward jump size
};

struct MarkovChainSpec {
    int m = 0;   // number of states, >= 1
    Matrix Q;    // m x m generator
};

// Full process specification: modulating chain plus per-state jump laws and
// optional nonnegative jumps attached to chain transitions.
struct ProcessSpec {
    MarkovChainSpec chain;
    std::vector<StateJumpLaw> laws;
    // switching_jumps[k][r] is the upward jump taken on a k -> r transition;
    // an empty outer vector or a disengaged optional means "no jump".
    std::vector<std::vector<std::optional<ErlangMixture>>> switching_jumps;

    bool has_switching_jumps() const;
};

// A ProcessSpec that passed validate_spec, with the stationary distribution,
// drift, and the diagonal rate matrices cached. Immutable afterwards, so
// safe to share across threads.
class ValidatedModel {
public:
    const ProcessSpec& spec() const { return spec_; }
    int states() const { return spec_.chain.m; }
    const Matrix& Q() const { return spec_.chain.Q; }
    const StateJumpLaw& law(int k) const { return spec_.laws[static_cast<size_t>(k)]; }
    const Vector& pi() const { return pi_; }
    double drift() const { return drift_; }

    const Matrix& Lambda() const { return lambda_; }            // diag(pos_rate + neg_rate)
    const Matrix& LambdaPlus() const { return lambda_plus_; }   // diag(pos_rate)
    const Matrix& LambdaMinus() const { return lambda_minus_; } // diag(neg_rate)
    const Matrix& C() const { return c_; }                      // diag(neg_exp_rate)

    friend ValidatedModel validate_spec(const ProcessSpec& spec);

private:
    ValidatedModel() = default;

    ProcessSpec spec_;
    Vector pi_;
    double drift_ = 0.0;
    Matrix lambda_, lambda_plus_, lambda_minus_, c_;
};

// Checks every structural invariant (generator rows, irreducibility, mixture
// weights, rate signs) and caches pi and the drift. Throws ValidationError
// with the offending field named.
ValidatedModel validate_spec(const ProcessSpec& spec);

// Mean displacement per unit time under the stationary chain law; negative
// drift is the precondition of every ruin computation. Includes the mean
// displacement of switching jumps when those are present.
double drift_m1(const ValidatedModel& model);

// The sign-flipped process: what was an exponential downward jump becomes an
// exponential upward jump and vice versa. Not a ProcessSpec, because that
// type fixes the jump orientation.
struct DualDescriptor {
    struct StateLaw {
        double up_rate = 0.0;       // neg_rate of the primal
        double up_exp_rate = 1.0;   // neg_exp_rate of the primal
        double down_rate = 0.0;     // pos_rate of the primal
        ErlangMixture down_law;     // pos_law of the primal
    };
    MarkovChainSpec chain;
    std::vector<StateLaw> laws;
    Vector pi;
};

// Descriptor of the negated process. Requires zero switching jumps (a
// negated nonnegative transition jump would point downward).
DualDescriptor dual_spec(const ValidatedModel& model);

// Inverse direction: turning the dual descriptor back into the primal
// specification. dual_spec(dual_spec(m)) reproduces m field by field.
ProcessSpec dual_spec(const DualDescriptor& dual);

// Time reversal of the modulating chain: Q_hat = diag(pi)^{-1} Q' diag(pi),
// identical per-state jump laws, transposed switching-jump table. The
// stationary distribution is unchanged.
ValidatedModel reverse_chain(const ValidatedModel& model);

} // namespace mmrisk
