#include <string>

#include <doctest.h>

#include "checks.hpp"
#include "models.hpp"

using namespace mmrisk;

namespace {

void run_battery(const ProcessSpec& spec, const std::string& context) {
    testsupport::PropertyReport rep(context);
    testsupport::check_invariants(validate_spec(spec), rep);
    CHECK_MESSAGE(rep.violations.empty(), rep.joined());
}

} // namespace

TEST_CASE("invariant battery on the fixed model zoo") {
    run_battery(testsupport::two_state_spec(), "two_state");
    run_battery(testsupport::single_state_spec(), "single_state");
    run_battery(testsupport::exp_exp_spec(), "exp_exp");
    run_battery(testsupport::three_state_spec(), "three_state");
    run_battery(testsupport::stiff_two_state_spec(), "stiff_two_state");
}

TEST_CASE("invariant battery on a deterministic random corpus") {
    for (int k = 0; k < 25; ++k) {
        CAPTURE(k);
        run_battery(testsupport::random_spec(k), "random_" + std::to_string(k));
    }
}
