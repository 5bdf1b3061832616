#include "mmrisk/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmrisk/errors.hpp"
#include "mmrisk/spectral.hpp"
#include "hashmix.hpp"
#include "parallel.hpp"

namespace mmrisk {

RngStream RngStream::for_replication(std::uint64_t seed, std::uint64_t rep) {
    RngStream s;
    s.key_ = detail::mix64(seed ^ detail::mix64(rep + detail::kGolden64));
    s.counter_ = 0;
    return s;
}

std::uint64_t RngStream::next_u64() {
    return detail::mix64(key_ + detail::kGolden64 * ++counter_);
}

double RngStream::next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
    return -std::log1p(-next_u01()) / rate;
}

double RngStream::erlang(int n, double rate) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::log1p(-next_u01());
    return -sum / rate;
}

namespace {

// Per-state event tables: total event rate and cumulative rate boundaries
// for switch targets and mixture terms, so one uniform draw picks the event
// type and (by conditional uniformity on the selected band) the target.
struct SimTables {
    struct Entry {
        double tot = 0.0;
        double switch_rate = 0.0;
        double pos_rate = 0.0;
        double c = 1.0;
        std::vector<double> switch_cum;          // cumulative rates over targets
        std::vector<int> switch_target;
        std::vector<const ErlangMixture*> switch_jump; // per target, may be null
        std::vector<double> mix_cum;             // cumulative weights
        std::vector<int> mix_n;
        std::vector<double> mix_delta;
    };
    std::vector<Entry> states;

    explicit SimTables(const ValidatedModel& model) {
        const int m = model.states();
        states.resize(static_cast<size_t>(m));
        const bool has_sw = !model.spec().switching_jumps.empty();
        for (int k = 0; k < m; ++k) {
            Entry& e = states[static_cast<size_t>(k)];
            const StateJumpLaw& law = model.law(k);
            e.switch_rate = -model.Q()(k, k);
            e.pos_rate = law.pos_rate;
            e.c = law.neg_exp_rate;
            e.tot = e.switch_rate + law.pos_rate + law.neg_rate;
            double acc = 0.0;
            for (int r = 0; r < m; ++r) {
                if (r == k || !(model.Q()(k, r) > 0.0)) continue;
                acc += model.Q()(k, r);
                e.switch_cum.push_back(acc);
                e.switch_target.push_back(r);
                const ErlangMixture* jump = nullptr;
                if (has_sw) {
                    const auto& cell =
                        model.spec().switching_jumps[static_cast<size_t>(k)][static_cast<size_t>(r)];
                    if (cell.has_value()) jump = &*cell;
                }
                e.switch_jump.push_back(jump);
            }
            if (law.pos_rate > 0.0) {
                double wacc = 0.0;
                for (const ErlangTerm& t : law.pos_law.terms) {
                    wacc += t.w;
                    e.mix_cum.push_back(wacc);
                    e.mix_n.push_back(t.n);
                    e.mix_delta.push_back(t.delta);
                }
            }
        }
    }
};

double draw_mixture(RngStream& rng, const ErlangMixture& mix) {
    const double v = rng.next_u01();
    double acc = 0.0;
    size_t idx = mix.terms.size() - 1;
    for (size_t t = 0; t < mix.terms.size(); ++t) {
        acc += mix.terms[t].w;
        if (v < acc) {
            idx = t;
            break;
        }
    }
    return rng.erlang(mix.terms[idx].n, mix.terms[idx].delta);
}

PathSummary run_path(const SimTables& tab, int state, RngStream& rng,
                     const StopRule& stop) {
    PathSummary out;
    double xi = 0.0;
    double t = 0.0;
    for (;;) {
        const SimTables::Entry& st = tab.states[static_cast<size_t>(state)];
        if (!(st.tot > 0.0)) {
            t = stop.horizon; // absorbing state with no events at all
            break;
        }
        t += rng.exponential(st.tot);
        if (t > stop.horizon) {
            t = stop.horizon;
            break;
        }
        ++out.n_jumps;
        const double u = rng.next_u01() * st.tot;
        double up_jump = 0.0;
        if (u < st.switch_rate) {
            // chain switch; u is uniform on the switch band, so it selects
            // the target directly through the cumulative rates
            size_t idx = st.switch_target.size() - 1;
            for (size_t s = 0; s < st.switch_cum.size(); ++s) {
                if (u < st.switch_cum[s]) {
                    idx = s;
                    break;
                }
            }
            state = st.switch_target[idx];
            if (st.switch_jump[idx] != nullptr) {
                up_jump = draw_mixture(rng, *st.switch_jump[idx]);
            }
        } else if (u < st.switch_rate + st.pos_rate) {
            const double v = u - st.switch_rate; // uniform on [0, pos_rate)
            size_t idx = st.mix_cum.size() - 1;
            for (size_t s = 0; s < st.mix_cum.size(); ++s) {
                if (v < st.mix_cum[s] * st.pos_rate) {
                    idx = s;
                    break;
                }
            }
            up_jump = rng.erlang(st.mix_n[idx], st.mix_delta[idx]);
        } else {
            xi -= rng.exponential(st.c);
            if (xi < out.inf) out.inf = xi;
            if (xi < -stop.kill_depth) {
                out.depth_killed = true;
                break;
            }
            continue;
        }
        if (up_jump > 0.0) {
            const double pre = xi;
            xi += up_jump;
            if (xi > out.sup) out.sup = xi;
            if (pre <= stop.level && xi > stop.level) {
                out.crossed = true;
                out.tau = t;
                out.overshoot.tau = t;
                out.overshoot.gamma_plus = xi - stop.level;
                out.overshoot.gamma_under = stop.level - pre;
                out.overshoot.gamma_total =
                    out.overshoot.gamma_plus + out.overshoot.gamma_under;
                out.overshoot.state_at_tau = state;
                break;
            }
        }
    }
    out.xi_end = xi;
    out.state_end = state;
    out.t_end = t;
    return out;
}

double resolve_kill_depth(const ValidatedModel& model, double requested, double level) {
    if (!std::isnan(requested)) return requested;
    // Deep below the start the chance of ever reaching the level again is
    // bounded by a multiple of e^{-gamma(level + depth)}; 20 decay lengths
    // push that residual below 1e-8, far under any standard error this
    // module can resolve, while keeping the expected kill time short enough
    // that default horizons leave no undecided paths.
    try {
        const double gamma = lundberg_exponent(model);
        return std::max(50.0, 20.0 / gamma + std::max(0.0, level));
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

struct BatchPlan {
    std::uint64_t n = 0;
    std::uint64_t batch = 0;
    int n_batches = 0;
};

BatchPlan plan_batches(std::uint64_t n_paths, std::uint64_t batch_size) {
    BatchPlan p;
    p.n = n_paths;
    p.batch = std::max<std::uint64_t>(1, batch_size);
    const std::uint64_t nb = (p.n + p.batch - 1) / p.batch;
    if (nb > 1u << 30) throw NumericError("batch plan too large");
    p.n_batches = static_cast<int>(nb);
    return p;
}

} // namespace

PathSummary simulate_path(const ValidatedModel& model, int start_state,
                          RngStream& rng, const StopRule& stop) {
    const SimTables tab(model);
    return run_path(tab, start_state, rng, stop);
}

SimEstimate estimate_ruin(const ValidatedModel& model, int i, double u,
                          const SimConfig& cfg) {
    if (u < 0.0) throw NumericError("estimate_ruin needs a level u >= 0");
    if (cfg.n_paths == 0) throw NumericError("estimate_ruin needs at least one path");
    StopRule stop;
    stop.level = u;
    stop.horizon = cfg.t_max;
    stop.kill_depth = resolve_kill_depth(model, cfg.kill_depth, u);
    const SimTables tab(model);
    const BatchPlan plan = plan_batches(cfg.n_paths, cfg.batch_size);

    struct Tally {
        std::uint64_t crossed = 0;
        std::uint64_t truncated = 0;
    };
    std::vector<Tally> tallies(static_cast<size_t>(plan.n_batches));
    detail::parallel_for(0, plan.n_batches, [&](int b) {
        Tally tally;
        const std::uint64_t lo = static_cast<std::uint64_t>(b) * plan.batch;
        const std::uint64_t hi = std::min(plan.n, lo + plan.batch);
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            RngStream rng = RngStream::for_replication(cfg.seed, rep);
            const PathSummary ps = run_path(tab, i, rng, stop);
            if (ps.crossed) {
                ++tally.crossed;
            } else if (!ps.depth_killed) {
                ++tally.truncated;
            }
        }
        tallies[static_cast<size_t>(b)] = tally;
    });

    std::uint64_t crossed = 0;
    std::uint64_t truncated = 0;
    for (const Tally& t : tallies) {
        crossed += t.crossed;
        truncated += t.truncated;
    }
    SimEstimate est;
    est.n = plan.n;
    est.seed = cfg.seed;
    est.point = static_cast<double>(crossed) / static_cast<double>(plan.n);
    est.std_err = std::sqrt(est.point * (1.0 - est.point) / static_cast<double>(plan.n));
    est.truncated_fraction = static_cast<double>(truncated) / static_cast<double>(plan.n);
    return est;
}

OvershootStudy::OvershootStudy(const ValidatedModel& model, int start_state,
                               double level, std::uint64_t n_paths,
                               const SimConfig& cfg) {
    if (n_paths == 0) throw NumericError("overshoot study needs at least one path");
    StopRule stop;
    stop.level = level;
    stop.horizon = cfg.t_max;
    stop.kill_depth = resolve_kill_depth(model, cfg.kill_depth, level);
    const SimTables tab(model);
    const BatchPlan plan = plan_batches(n_paths, cfg.batch_size);

    std::vector<std::vector<OvershootSample>> found(static_cast<size_t>(plan.n_batches));
    std::vector<std::uint64_t> truncated(static_cast<size_t>(plan.n_batches), 0);
    detail::parallel_for(0, plan.n_batches, [&](int b) {
        const std::uint64_t lo = static_cast<std::uint64_t>(b) * plan.batch;
        const std::uint64_t hi = std::min(plan.n, lo + plan.batch);
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            RngStream rng = RngStream::for_replication(cfg.seed, rep);
            PathSummary ps = run_path(tab, start_state, rng, stop);
            if (ps.crossed) {
                ps.overshoot.rep = rep;
                found[static_cast<size_t>(b)].push_back(ps.overshoot);
            } else if (!ps.depth_killed) {
                ++truncated[static_cast<size_t>(b)];
            }
        }
    });

    n_run_ = n_paths;
    std::uint64_t trunc = 0;
    for (int b = 0; b < plan.n_batches; ++b) {
        samples_.insert(samples_.end(), found[static_cast<size_t>(b)].begin(),
                        found[static_cast<size_t>(b)].end());
        trunc += truncated[static_cast<size_t>(b)];
    }
    truncated_ = static_cast<double>(trunc) / static_cast<double>(n_paths);
}

SimEstimate OvershootStudy::crossing_probability() const {
    SimEstimate est;
    est.n = n_run_;
    est.point = static_cast<double>(samples_.size()) / static_cast<double>(n_run_);
    est.std_err = std::sqrt(est.point * (1.0 - est.point) / static_cast<double>(n_run_));
    est.truncated_fraction = truncated_;
    return est;
}

SimEstimate OvershootStudy::tail(OvershootKindTag kind, double z, int state_at_tau) const {
    std::uint64_t count = 0;
    for (const OvershootSample& s : samples_) {
        if (s.state_at_tau != state_at_tau) continue;
        const double v = kind == OvershootKindTag::gamma_plus    ? s.gamma_plus
                         : kind == OvershootKindTag::gamma_under ? s.gamma_under
                                                                 : s.gamma_total;
        if (v > z) ++count;
    }
    SimEstimate est;
    est.n = n_run_;
    est.point = static_cast<double>(count) / static_cast<double>(n_run_);
    est.std_err = std::sqrt(est.point * (1.0 - est.point) / static_cast<double>(n_run_));
    est.truncated_fraction = truncated_;
    return est;
}

std::vector<OvershootSample> sample_overshoot(const ValidatedModel& model, int i,
                                              double x, std::uint64_t n,
                                              const SimConfig& cfg) {
    StopRule stop;
    stop.level = x;
    stop.horizon = cfg.t_max;
    stop.kill_depth = resolve_kill_depth(model, cfg.kill_depth, x);
    const SimTables tab(model);
    std::vector<OvershootSample> out;
    out.reserve(n);
    const std::uint64_t cap = std::max<std::uint64_t>(cfg.n_paths, 1000 * n);
    for (std::uint64_t rep = 0; rep < cap && out.size() < n; ++rep) {
        RngStream rng = RngStream::for_replication(cfg.seed, rep);
        PathSummary ps = run_path(tab, i, rng, stop);
        if (ps.crossed) {
            ps.overshoot.rep = rep;
            out.push_back(ps.overshoot);
        }
    }
    if (out.size() < n) {
        throw NumericError("collected only " + std::to_string(out.size()) + " of " +
                           std::to_string(n) + " crossings; level may be too high");
    }
    return out;
}

} // namespace mmrisk
