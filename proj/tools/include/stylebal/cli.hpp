// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stylebal {

/// Exit codes of cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Entry point of the `stylebal` tool. Results go to `out`, diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct GradcheckReport {
    double classic = 0.0;   // worst relative error, classic style gradient
    double balanced = 0.0;  // frozen-denominator balanced gradient
    double content = 0.0;
    double network = -1.0;  // through the default net; -1 when not run
    std::size_t instances = 0;

    double feature_max() const;
};

/// Seeded finite-difference verification of the analytic gradients.
GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t instances, bool network);

struct FixtureResult {
    std::string name;
    bool pass = false;
    double value = 0.0;  // the computed quantity the fixture checks
    std::string detail;  // set on failure
    bool known = false;  // documented not to hold for the default extractor
};

/// Fixtures whose worked example does not hold for the random default
/// extractor. They are reported as xfail/xpass and do not fail the suite.
const std::vector<std::string>& known_failing_fixtures();

/// Worked examples of every module, evaluated in a fixed order.
std::vector<FixtureResult> run_selftest();

}  // namespace stylebal
