#pragma once

#include "etm/equilibrium.hpp"
#include "etm/scenario.hpp"

#include "json.hpp"

#include <functional>
#include <string>
#include <vector>

namespace etm {

struct Check {
    std::string scenario;
    std::string claim;
    nlohmann::json expected;
    nlohmann::json actual;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<Check> per_check;
    bool all_pass = true;
};

// Checks beyond the scenario's `expect` block, run against its solved
// equilibrium.
using ExtraClaims = std::function<std::vector<Check>(const Scenario&, const Equilibrium&)>;

struct SuiteCase {
    Scenario scenario;
    ExtraClaims extra;
};

// Solver errors fail the affected scenario's checks; they never abort the run.
// Cases run concurrently; checks come back ordered by scenario name.
VerificationReport run_suite(const std::vector<SuiteCase>& cases);
VerificationReport verify_scenarios(const std::vector<Scenario>& scenarios);

// One scenario per proposition or corollary, expectations from closed forms.
std::vector<SuiteCase> builtin_suite();

nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const VerificationReport& r);

} // namespace etm
