#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace robust_mdp {

/// small: reduced sample sizes for a quick invariant sweep. full: acceptance sizes.
enum class SuiteScale { small, full };

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

inline constexpr int kCriterionCount = 13;

/**
 * Runs property check `id` (1..13). Every check seeds its own streams, so
 * results are reproducible. At small scale check 12 only compares the R = 0
 * traces; the robust-vs-nominal ordering experiment runs at full scale only.
 */
[[nodiscard]] CheckResult run_check(int id, SuiteScale scale);

[[nodiscard]] std::vector<CheckResult> run_suite(SuiteScale scale);

/// "PASS [03] smoothing_bound: ..." style line.
[[nodiscard]] std::string format_result(const CheckResult& r);

} // namespace robust_mdp
