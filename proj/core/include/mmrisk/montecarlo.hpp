#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mmrisk/model.hpp"

namespace mmrisk {

// Counter-based pseudorandom stream. Each replication derives its own key
// from (seed, rep) and then draws by hashing an incrementing counter, so any
// replication can be generated independently of all others. That is what
// makes the batch scheduler free to hand replications to threads in any
// order while the merged results stay byte-identical.
class RngStream {
public:
    static RngStream for_replication(std::uint64_t seed, std::uint64_t rep);

    std::uint64_t next_u64();
    double next_u01();                       // uniform on (0,1), 53-bit
    double exponential(double rate);
    double erlang(int n, double rate);

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_paths = 100000;
    double t_max = 500.0;
    std::uint64_t batch_size = 16384;
    // Depth below the start at which a path is declared survived. NaN picks
    // a depth from the decay rate of the ruin probability so that the error
    // committed is far below one standard error.
    double kill_depth = std::numeric_limits<double>::quiet_NaN();
};

struct SimEstimate {
    double point = 0.0;
    double std_err = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    // Fraction of paths still undecided at t_max. These count as survived,
    // which biases ruin estimates low; the fraction is reported so callers
    // can judge whether t_max was large enough.
    double truncated_fraction = 0.0;
};

// The three functionals of the first crossing of a level, plus where the
// chain was when it happened and which replication produced the sample.
struct OvershootSample {
    std::uint64_t rep = 0;
    double tau = 0.0;
    double gamma_plus = 0.0;   // excess above the level
    double gamma_under = 0.0;  // gap below the level just before the jump
    double gamma_total = 0.0;  // jump size through the level, = plus + under
    int state_at_tau = 0;
};

struct StopRule {
    double level = 0.0;        // stop when the path exceeds this
    double horizon = 500.0;    // give up at this time
    double kill_depth = std::numeric_limits<double>::infinity(); // declare survival below
};

struct PathSummary {
    bool crossed = false;
    bool depth_killed = false;
    double tau = 0.0;
    OvershootSample overshoot; // meaningful when crossed
    double xi_end = 0.0;
    int state_end = 0;
    double t_end = 0.0;
    double sup = 0.0;
    double inf = 0.0;
    std::uint64_t n_jumps = 0;
};

// Event-driven simulation of one path until the stop rule fires. Events are
// drawn by superposition: one exponential clock at the total event rate,
// then a categorical draw for the event type. Distributionally identical to
// racing the per-type exponential clocks.
PathSummary simulate_path(const ValidatedModel& model, int start_state,
                          RngStream& rng, const StopRule& stop);

// P_i{path started at 0 ever exceeds u}, the probability that a reserve
// process u - path(t) ever goes negative. Batched across worker threads,
// merged in batch order; identical results for any thread count.
SimEstimate estimate_ruin(const ValidatedModel& model, int i, double u,
                          const SimConfig& cfg);

// Tag mirroring overshoot.hpp's enum without forcing that include here.
enum class OvershootKindTag { gamma_plus, gamma_under, gamma_total };

// Collects crossing samples of a fixed level and exposes the empirical
// counterparts of the analytic displays.
class OvershootStudy {
public:
    OvershootStudy(const ValidatedModel& model, int start_state, double level,
                   std::uint64_t n_paths, const SimConfig& cfg);

    const std::vector<OvershootSample>& samples() const { return samples_; }
    std::uint64_t paths_run() const { return n_run_; }
    double truncated_fraction() const { return truncated_; }

    // P{crossing happened} with its standard error.
    SimEstimate crossing_probability() const;

    // P{functional > z, crossing, chain in state j at tau} with standard
    // error, the empirical counterpart of the analytic tail matrices.
    SimEstimate tail(OvershootKindTag kind, double z, int state_at_tau) const;

private:
    std::vector<OvershootSample> samples_;
    std::uint64_t n_run_ = 0;
    double truncated_ = 0.0;
};

// First n crossing samples of level x started in state i.
std::vector<OvershootSample> sample_overshoot(const ValidatedModel& model, int i,
                                              double x, std::uint64_t n,
                                              const SimConfig& cfg);

} // namespace mmrisk
