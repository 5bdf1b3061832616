#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include <doctest.h>

#include "mmrisk/mmrisk.hpp"
#include "approx.hpp"
#include "models.hpp"

using namespace mmrisk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kolmogorov-Smirnov statistic of a sorted sample against a cdf.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

} // namespace

TEST_CASE("random streams are reproducible and decorrelated") {
    auto a = RngStream::for_replication(7, 3);
    auto b = RngStream::for_replication(7, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto c = RngStream::for_replication(7, 4);
    auto d = RngStream::for_replication(8, 3);
    auto e = RngStream::for_replication(7, 3);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 8; ++i) {
        const std::uint64_t r = e.next_u64();
        same_c += (c.next_u64() == r);
        same_d += (d.next_u64() == r);
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("uniform draws live strictly inside the unit interval") {
    auto rng = RngStream::for_replication(101, 0);
    const int n = 20000;
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_u01();
        sum += u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    // 4 sigma band around the uniform mean
    CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("exponential and erlang samplers match their distributions") {
    const int n = 20000;
    SUBCASE("exponential") {
        auto rng = RngStream::for_replication(55, 1);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.exponential(1.3);
        const double d = ks_statistic(std::move(xs),
                                      [](double x) { return 1.0 - std::exp(-1.3 * x); });
        CHECK(std::sqrt(static_cast<double>(n)) * d < 1.95);
    }
    SUBCASE("erlang") {
        auto rng = RngStream::for_replication(55, 2);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.erlang(3, 2.0);
        const double d = ks_statistic(std::move(xs), [](double x) {
            return 1.0 - std::exp(-2.0 * x) * (1.0 + 2.0 * x + 2.0 * x * x);
        });
        CHECK(std::sqrt(static_cast<double>(n)) * d < 1.95);
    }
    SUBCASE("erlang stays positive and finite for a high shape") {
        auto rng = RngStream::for_replication(55, 3);
        for (int i = 0; i < 1000; ++i) {
            const double x = rng.erlang(50, 3.0);
            CHECK(x > 0.0);
            CHECK(std::isfinite(x));
        }
    }
}

TEST_CASE("single paths report consistent crossing records") {
    auto model = validate_spec(testsupport::two_state_spec());
    int crossings = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        auto rng = RngStream::for_replication(31, rep);
        auto path = simulate_path(model, 0, rng, StopRule{1.0, 500.0, kInf});
        CHECK(path.state_end >= 0);
        CHECK(path.state_end < 2);
        CHECK(path.sup >= path.inf);
        if (path.crossed) {
            ++crossings;
            CHECK(path.overshoot.gamma_plus > 0.0);
            CHECK(path.overshoot.gamma_under >= 0.0);
            CHECK(path.overshoot.gamma_total ==
                  path.overshoot.gamma_plus + path.overshoot.gamma_under);
            CHECK(path.sup > 1.0);
            CHECK(path.tau <= path.t_end);
            CHECK(path.overshoot.state_at_tau >= 0);
            CHECK(path.overshoot.state_at_tau < 2);
        }
    }
    // about 69% of these paths cross level 1
    CHECK(crossings > 100);
    CHECK(crossings < 180);
}

TEST_CASE("event counts match the total event rate") {
    auto model = validate_spec(testsupport::two_state_spec());
    auto rng = RngStream::for_replication(11, 0);
    auto path = simulate_path(model, 0, rng, StopRule{1e18, 2000.0, kInf});
    CHECK(!path.crossed);
    CHECK(path.t_end > 1000.0);
    // every state has jump rate 2 and switch rate 1
    const double rate = static_cast<double>(path.n_jumps) / path.t_end;
    CHECK(rate == testsupport::Within(3.0, 0.15));
}

TEST_CASE("the chain state forgets its start") {
    auto model = validate_spec(testsupport::three_state_spec());
    const int n = 20000;
    int counts[3] = {0, 0, 0};
    for (int rep = 0; rep < n; ++rep) {
        auto rng = RngStream::for_replication(77, static_cast<std::uint64_t>(rep));
        auto path = simulate_path(model, 0, rng, StopRule{1e18, 50.0, kInf});
        ++counts[path.state_end];
    }
    for (int k = 0; k < 3; ++k) {
        const double p = model.pi()(k);
        const double sigma = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(static_cast<double>(counts[k]) / n - p) < 4.0 * sigma);
    }
}

TEST_CASE("ruin estimates agree with closed forms") {
    SUBCASE("memoryless model, exact answer known everywhere") {
        auto model = validate_spec(testsupport::exp_exp_spec());
        SimConfig cfg;
        cfg.seed = 21;
        cfg.n_paths = 200000;
        auto est = estimate_ruin(model, 0, 1.0, cfg);
        const double truth = 0.6 * std::exp(-0.4);
        CHECK(est.n == 200000);
        CHECK(est.std_err > 0.0);
        CHECK(std::abs(est.point - truth) < 4.0 * est.std_err);
        CHECK(est.truncated_fraction < 1e-4);
    }
    SUBCASE("two state model against the factorization value") {
        auto model = validate_spec(testsupport::two_state_spec());
        SimConfig cfg;
        cfg.seed = 22;
        cfg.n_paths = 60000;
        auto est = estimate_ruin(model, 0, 1.0, cfg);
        const double truth = ruin_probability(model, 0, 1.0);
        CHECK(truth == doctest::Approx(0.69090).epsilon(2e-4));
        CHECK(std::abs(est.point - truth) < 4.0 * est.std_err);
    }
}

TEST_CASE("the whole path supremum matches the ruin function") {
    auto model = validate_spec(testsupport::two_state_spec());
    const std::uint64_t n = 100000;
    std::vector<double> sups;
    sups.reserve(n);
    std::uint64_t undecided = 0;
    for (std::uint64_t rep = 0; rep < n; ++rep) {
        auto rng = RngStream::for_replication(13, rep);
        auto path = simulate_path(model, 0, rng, StopRule{1e18, 2500.0, 150.0});
        if (!path.depth_killed) ++undecided;
        sups.push_back(path.sup);
    }
    // with a 150-deep kill line the unexplored rebound mass is ~e^{-20}
    CHECK(static_cast<double>(undecided) / n < 1e-3);
    for (double u : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        const double emp = static_cast<double>(
                               std::count_if(sups.begin(), sups.end(),
                                             [u](double s) { return s > u; })) /
                           n;
        CHECK(emp == testsupport::Within(ruin_probability(model, 0, u), 0.0075));
    }
}

TEST_CASE("short horizons are reported as truncation, not survival certainty") {
    auto model = validate_spec(testsupport::two_state_spec());
    SimConfig cfg;
    cfg.seed = 5;
    cfg.n_paths = 4000;
    cfg.t_max = 1.0;
    auto est = estimate_ruin(model, 0, 1.0, cfg);
    CHECK(est.truncated_fraction > 0.1);
}

TEST_CASE("positive drift sends every path over the level") {
    auto spec = testsupport::two_state_spec();
    spec.laws[0].neg_rate = 0.1;
    spec.laws[1].neg_rate = 0.1;
    auto model = validate_spec(spec);
    CHECK(model.drift() > 0.0);
    SimConfig cfg;
    cfg.seed = 6;
    cfg.n_paths = 4000;
    auto est = estimate_ruin(model, 0, 1.0, cfg);
    CHECK(est.point > 0.999);
}

TEST_CASE("estimates are identical for any worker count") {
    auto model = validate_spec(testsupport::two_state_spec());
    SimConfig cfg;
    cfg.seed = 33;
    cfg.n_paths = 20000;
    cfg.t_max = 120.0;

    setenv("MMRISK_THREADS", "1", 1);
    auto one = estimate_ruin(model, 0, 1.0, cfg);
    OvershootStudy study_one(model, 0, 0.0, 8000, cfg);

    setenv("MMRISK_THREADS", "5", 1);
    auto five = estimate_ruin(model, 0, 1.0, cfg);
    OvershootStudy study_five(model, 0, 0.0, 8000, cfg);

    setenv("MMRISK_THREADS", "weasel", 1);
    auto fallback = estimate_ruin(model, 0, 1.0, cfg);
    unsetenv("MMRISK_THREADS");

    CHECK(one.point == five.point);
    CHECK(one.std_err == five.std_err);
    CHECK(one.n == five.n);
    CHECK(one.truncated_fraction == five.truncated_fraction);
    CHECK(one.point == fallback.point);

    REQUIRE(study_one.samples().size() == study_five.samples().size());
    for (size_t i = 0; i < study_one.samples().size(); ++i) {
        const auto& a = study_one.samples()[i];
        const auto& b = study_five.samples()[i];
        CHECK(a.rep == b.rep);
        CHECK(a.tau == b.tau);
        CHECK(a.gamma_plus == b.gamma_plus);
        CHECK(a.gamma_under == b.gamma_under);
        CHECK(a.gamma_total == b.gamma_total);
        CHECK(a.state_at_tau == b.state_at_tau);
    }
}

TEST_CASE("time transforms agree with a path average") {
    auto model = validate_spec(testsupport::two_state_spec());
    const double r = 0.1, s = 0.7;
    Matrix expect = resolvent(model, r, s);
    const int n = 30000;
    double sum[2] = {0, 0}, sumsq[2] = {0, 0};
    for (int rep = 0; rep < n; ++rep) {
        auto rng = RngStream::for_replication(91, static_cast<std::uint64_t>(rep));
        const double horizon = rng.exponential(s);
        auto path = simulate_path(model, 0, rng, StopRule{1e18, horizon, kInf});
        const double w = std::exp(r * path.xi_end);
        sum[path.state_end] += w;
        sumsq[path.state_end] += w * w;
    }
    for (int j = 0; j < 2; ++j) {
        const double mean = sum[j] / n;
        const double var = (sumsq[j] / n - mean * mean) / n;
        const double z = (mean - expect(0, j)) / std::sqrt(var);
        CHECK(std::abs(z) <= 4.0);
    }
}

TEST_CASE("first jump transform agrees with a hand-rolled race of clocks") {
    auto model = validate_spec(testsupport::two_state_spec());
    const double s = 0.9;
    Matrix expect = first_jump_transform(model, s);
    const int n = 40000;
    double sum[2] = {0, 0}, sumsq[2] = {0, 0};
    for (int rep = 0; rep < n; ++rep) {
        auto rng = RngStream::for_replication(92, static_cast<std::uint64_t>(rep));
        int k = 0;
        double t = 0.0;
        for (;;) {
            const double jump_rate = model.law(k).pos_rate + model.law(k).neg_rate;
            const double switch_rate = -model.Q()(k, k);
            t += rng.exponential(jump_rate + switch_rate);
            if (rng.next_u01() < jump_rate / (jump_rate + switch_rate)) break;
            k = 1 - k;
        }
        const double w = std::exp(-s * t);
        sum[k] += w;
        sumsq[k] += w * w;
    }
    for (int j = 0; j < 2; ++j) {
        const double mean = sum[j] / n;
        const double var = (sumsq[j] / n - mean * mean) / n;
        const double z = (mean - expect(0, j)) / std::sqrt(var);
        CHECK(std::abs(z) <= 4.0);
    }
}

TEST_CASE("crossing studies reproduce the analytic overshoot tails") {
    auto model = validate_spec(testsupport::two_state_spec());
    OvershootAnalysis analysis(model);
    SimConfig cfg;
    cfg.seed = 44;
    OvershootStudy study(model, 0, 0.0, 30000, cfg);
    CHECK(study.paths_run() == 30000);
    CHECK(study.truncated_fraction() < 1e-3);

    auto cross = study.crossing_probability();
    const double truth0 = ruin_probability(model, 0, 0.0);
    CHECK(std::abs(cross.point - truth0) <= 4.0 * cross.std_err);

    const struct {
        OvershootKindTag tag;
        OvershootKind kind;
    } kinds[] = {{OvershootKindTag::gamma_plus, OvershootKind::gamma_plus},
                 {OvershootKindTag::gamma_total, OvershootKind::gamma_total},
                 {OvershootKindTag::gamma_under, OvershootKind::gamma_under}};
    for (const auto& k : kinds) {
        for (double z : {0.25, 1.0}) {
            Matrix expect = analysis.tail(k.kind, z);
            for (int j = 0; j < 2; ++j) {
                auto est = study.tail(k.tag, z, j);
                CHECK(est.std_err > 0.0);
                CHECK(std::abs(est.point - expect(0, j)) <= 4.0 * est.std_err);
            }
        }
    }
}

TEST_CASE("overshoot sampling returns the requested number of crossings") {
    auto model = validate_spec(testsupport::two_state_spec());
    SimConfig cfg;
    cfg.seed = 45;
    auto samples = sample_overshoot(model, 0, 0.0, 500, cfg);
    REQUIRE(samples.size() == 500);
    for (size_t i = 1; i < samples.size(); ++i) CHECK(samples[i].rep > samples[i - 1].rep);
    for (const auto& s : samples) {
        CHECK(s.gamma_plus > 0.0);
        CHECK(s.gamma_total == s.gamma_plus + s.gamma_under);
    }
}
