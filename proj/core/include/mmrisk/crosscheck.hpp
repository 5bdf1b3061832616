#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmrisk/model.hpp"

namespace mmrisk {

// One analytic-vs-simulation comparison: the analytic value, the Monte
// Carlo estimate, its standard error, and the resulting z score.
struct CompareCheck {
    std::string name;
    double analytic = 0.0;
    double mc = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct CompareReport {
    std::vector<CompareCheck> checks;
    double max_abs_z = 0.0;
    double truncated_fraction_max = 0.0;
    bool pass = false; // all |z| <= 3 and every run decided enough paths
};

// Runs the full cross-validation battery: ruin probabilities at a positive
// level per starting state, the level-0 passage probabilities, and the
// three overshoot tail matrices on a z grid, each against its simulated
// counterpart. Seeds for the individual runs are derived deterministically
// from the base seed, so a report is reproducible from (model, n_paths,
// seed, t_max) alone. tamper shifts every analytic value by a constant and
// exists so tests can confirm the comparison actually has teeth.
CompareReport compare_analytics_vs_mc(const ValidatedModel& model,
                                      std::uint64_t n_paths, std::uint64_t seed,
                                      double t_max, double tamper = 0.0);

} // namespace mmrisk
