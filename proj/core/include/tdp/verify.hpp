// The functional acceptance suites behind `tdp verify` and the
// acceptance test binary: formula regressions against the published
// tables, semantic-equivalence and tamper oracles, copy/transition
// accounting, scaling/ordering checks, conservation, and the
// attestation gate. One suite per acceptance criterion.
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tdp::accept {

enum class Status { pass, fail, skip };

struct SuiteResult {
    Status status;
    std::string detail;
};

struct Suite {
    int criterion;  // 1..10
    std::string id;
    std::function<SuiteResult()> run;
};

const std::vector<Suite>& all_suites();

// Runs the listed suites (all when `filter` is empty), printing one
// "[PASS|FAIL|SKIP] <n> <id>: <detail>" line each. Returns the number of
// failures.
int run_suites(std::ostream& out, const std::vector<std::string>& filter = {});

}  // namespace tdp::accept
