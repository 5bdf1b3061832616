#include "mmrisk/crosscheck.hpp"

#include <cmath>
#include <string>

#include "mmrisk/factorization.hpp"
#include "mmrisk/montecarlo.hpp"
#include "mmrisk/overshoot.hpp"
#include "hashmix.hpp"

namespace mmrisk {

namespace {

CompareCheck make_check(std::string name, double analytic, double tamper,
                        const SimEstimate& mc) {
    CompareCheck c;
    c.name = std::move(name);
    c.analytic = analytic + tamper;
    c.mc = mc.point;
    c.se = mc.std_err;
    const double diff = c.analytic - c.mc;
    c.z = diff == 0.0 ? 0.0 : diff / std::max(c.se, 1e-300);
    c.pass = std::abs(c.z) <= 3.0;
    return c;
}

} // namespace

CompareReport compare_analytics_vs_mc(const ValidatedModel& model,
                                      std::uint64_t n_paths, std::uint64_t seed,
                                      double t_max, double tamper) {
    const int m = model.states();
    const FactorizationResult fact = run_factorization(model);
    const OvershootAnalysis analysis(model);

    const double z_grid[] = {0.25, 0.5, 1.0};
    const struct {
        OvershootKind kind;
        OvershootKindTag tag;
        const char* label;
    } kinds[] = {
        {OvershootKind::gamma_plus, OvershootKindTag::gamma_plus, "plus"},
        {OvershootKind::gamma_under, OvershootKindTag::gamma_under, "under"},
        {OvershootKind::gamma_total, OvershootKindTag::gamma_total, "total"},
    };

    CompareReport report;
    std::uint64_t run_idx = 0;
    const auto next_cfg = [&] {
        SimConfig cfg;
        cfg.seed = detail::derive_seed(seed, run_idx++);
        cfg.n_paths = n_paths;
        cfg.t_max = t_max;
        return cfg;
    };
    const auto note_truncation = [&](double fraction) {
        report.truncated_fraction_max = std::max(report.truncated_fraction_max, fraction);
    };

    for (int i = 0; i < m; ++i) {
        const std::string from = "state " + std::to_string(i + 1);

        const double psi1 = ruin_probability(fact.infimum, i, 1.0);
        const SimEstimate ruin_est = estimate_ruin(model, i, 1.0, next_cfg());
        note_truncation(ruin_est.truncated_fraction);
        report.checks.push_back(make_check("ruin u=1 from " + from, psi1, tamper, ruin_est));

        const OvershootStudy study(model, i, 0.0, n_paths, next_cfg());
        note_truncation(study.truncated_fraction());

        const double psi0 = ruin_probability(fact.infimum, i, 0.0);
        report.checks.push_back(
            make_check("passage of 0 from " + from, psi0, tamper, study.crossing_probability()));

        for (const auto& k : kinds) {
            for (const double z : z_grid) {
                const Matrix T = analysis.tail(k.kind, z);
                for (int j = 0; j < m; ++j) {
                    report.checks.push_back(make_check(
                        std::string(k.label) + " z=" + std::to_string(z).substr(0, 4) +
                            " " + from + " -> " + std::to_string(j + 1),
                        T(i, j), tamper, study.tail(k.tag, z, j)));
                }
            }
        }
    }

    report.max_abs_z = 0.0;
    report.pass = true;
    for (const CompareCheck& c : report.checks) {
        report.max_abs_z = std::max(report.max_abs_z, std::abs(c.z));
        if (!c.pass) report.pass = false;
    }
    if (report.truncated_fraction_max >= 1e-4) report.pass = false;
    return report;
}

} // namespace mmrisk
