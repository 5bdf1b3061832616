#pragma once

// Model builders shared by the test suites. The fixed models double as
// regression anchors; the random family exercises the pipeline in general
// position. All random parameters land on dyadic lattices so the exact
// rational stage of the factorization stays cheap.

#include <cmath>
#include <cstdint>
#include <string>

#include "mmrisk/model.hpp"
#include "mmrisk/model_io.hpp"

namespace testsupport {

inline mmrisk::ErlangMixture erlang(int n, double delta) {
    return mmrisk::ErlangMixture{{{1.0, n, delta}}};
}

// Two chain states, unit switching rates, Erlang(2) gains against slow
// exponential losses. Drift -1. The worked example all golden numbers in the
// regression tests refer to.
inline mmrisk::ProcessSpec two_state_spec() {
    mmrisk::ProcessSpec spec;
    spec.chain.m = 2;
    spec.chain.Q = mmrisk::Matrix{{-1.0, 1.0}, {1.0, -1.0}};
    spec.laws.resize(2);
    spec.laws[0] = {1.0, erlang(2, 2.0), 1.0, 1.0 / 3.0};
    spec.laws[1] = {1.0, erlang(2, 1.0), 1.0, 0.5};
    return spec;
}

// One chain state, Erlang(2) gains. Smallest model whose factorization
// denominator is still a genuine cubic.
inline mmrisk::ProcessSpec single_state_spec() {
    mmrisk::ProcessSpec spec;
    spec.chain.m = 1;
    spec.chain.Q = mmrisk::Matrix{{0.0}};
    spec.laws.resize(1);
    spec.laws[0] = {0.6, erlang(2, 1.2), 0.9, 0.8};
    return spec;
}

// One chain state, exponential jumps both ways. The one case with a fully
// elementary closed form: ruin(u) = p e^{-gamma u} with
// gamma = (neg_rate*delta - pos_rate*c) / (pos_rate + neg_rate) and
// p = pos_rate*(delta + c) / (delta*(pos_rate + neg_rate)), here
// gamma = 0.4 and p = 0.6. Used as an oracle the pipeline never sees.
inline mmrisk::ProcessSpec exp_exp_spec() {
    mmrisk::ProcessSpec spec;
    spec.chain.m = 1;
    spec.chain.Q = mmrisk::Matrix{{0.0}};
    spec.laws.resize(1);
    spec.laws[0] = {0.5, erlang(1, 1.0), 1.0, 0.8};
    return spec;
}

// Three states on an asymmetric cycle, one two-term mixture.
inline mmrisk::ProcessSpec three_state_spec() {
    mmrisk::ProcessSpec spec;
    spec.chain.m = 3;
    spec.chain.Q = mmrisk::Matrix{{-1.0, 0.9, 0.1}, {0.2, -1.1, 0.9}, {0.8, 0.1, -0.9}};
    spec.laws.resize(3);
    spec.laws[0] = {0.7, mmrisk::ErlangMixture{{{0.6, 1, 1.5}, {0.4, 3, 3.0}}}, 1.1, 0.9};
    spec.laws[1] = {0.8, erlang(2, 2.5), 1.0, 0.7};
    spec.laws[2] = {0.3, erlang(1, 2.0), 0.8, 0.5};
    return spec;
}

// Two states with very different sojourn times and jump activity.
inline mmrisk::ProcessSpec stiff_two_state_spec() {
    mmrisk::ProcessSpec spec;
    spec.chain.m = 2;
    spec.chain.Q = mmrisk::Matrix{{-2.0, 2.0}, {0.5, -0.5}};
    spec.laws.resize(2);
    spec.laws[0] = {0.6, erlang(1, 1.0), 1.2, 0.8};
    spec.laws[1] = {0.5, erlang(2, 2.0), 0.9, 0.6};
    return spec;
}

namespace detail {

class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Uniform draw from the 1/grain lattice inside [lo, hi]; lo, hi and
    // 1/grain must all be dyadic so every value is an exact double.
    double dyadic(double lo, double hi, int grain) {
        auto steps = static_cast<std::uint64_t>(std::llround((hi - lo) * grain));
        return lo + static_cast<double>(below(steps + 1)) / grain;
    }

private:
    std::uint64_t state_;
};

} // namespace detail

// Deterministic family of models in general position: one to four chain
// states, one or two Erlang terms per state, every state with jumps in both
// directions. Loss rates are scaled up where needed so the drift is at most
// -0.2, keeping every model comfortably inside ruin territory.
inline mmrisk::ProcessSpec random_spec(unsigned index) {
    detail::SplitMix rng(0x00c0ffee00ULL + index);
    const int m = 1 + static_cast<int>(index % 4u);

    mmrisk::ProcessSpec spec;
    spec.chain.m = m;
    spec.chain.Q = mmrisk::Matrix::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        double row = 0.0;
        for (int r = 0; r < m; ++r) {
            if (r == k) continue;
            double q = rng.dyadic(0.03125, 1.5, 32);
            spec.chain.Q(k, r) = q;
            row += q;
        }
        spec.chain.Q(k, k) = -row;
    }

    spec.laws.resize(static_cast<std::size_t>(m));
    for (auto& law : spec.laws) {
        law.pos_rate = rng.dyadic(0.25, 1.0, 32);
        const int n_terms = 1 + static_cast<int>(rng.below(2));
        law.pos_law.terms.clear();
        double w1 = n_terms == 1 ? 1.0 : rng.dyadic(0.125, 0.875, 8);
        law.pos_law.terms.push_back({w1, 1 + static_cast<int>(rng.below(3)),
                                     rng.dyadic(0.5, 3.0, 16)});
        if (n_terms == 2)
            law.pos_law.terms.push_back({1.0 - w1, 1 + static_cast<int>(rng.below(3)),
                                         rng.dyadic(0.5, 3.0, 16)});
        law.neg_rate = rng.dyadic(0.5, 1.5, 32);
        law.neg_exp_rate = rng.dyadic(0.5, 2.0, 16);
    }

    auto first = mmrisk::validate_spec(spec);
    if (first.drift() > -0.2) {
        double pos_part = 0.0;
        double neg_part = 0.0;
        for (int k = 0; k < m; ++k) {
            pos_part += first.pi()(k) * spec.laws[k].pos_rate * spec.laws[k].pos_law.mean();
            neg_part += first.pi()(k) * spec.laws[k].neg_rate / spec.laws[k].neg_exp_rate;
        }
        const double factor = (pos_part + 0.2) / neg_part;
        for (auto& law : spec.laws)
            law.neg_rate = std::ceil(law.neg_rate * factor * 64.0) / 64.0;
    }
    return spec;
}

inline mmrisk::ValidatedModel load_example(const std::string& name) {
    return mmrisk::validate_spec(
        mmrisk::read_model(std::string(MMRISK_EXAMPLES_DIR) + "/" + name));
}

} // namespace testsupport
