#pragma once

// Scenario files: JSON with a top-level "schema": 1.
//
// {
//   "schema": 1,
//   "name": "example",
//   "market": {
//     "tickets": 10,
//     "buyers": [
//       {"id": "a", "r": 0.01,
//        "risk": {"kind": "exp_concave", "param": 1.0},
//        "mev":  {"kind": "exponential", "params": {"mean": 2.0}}}
//     ],
//     "pbs": {"non_buyer_abilities": [{"kind": "point_mass", "params": {"mu": 5}}],
//             "gamma": {"rule": "max_haircut", "epsilon": 0.1},
//             "joint_samples": 200000, "seed": 7, "exclude_self": false}
//   },
//   "lambda": 0.0,
//   "sim": {"slots": 100000, "seed": 1, "trace": false},
//   "expect": {"chi": 1.0, "price": 1.0, "chi_below": 1.0, "holders": ["a"],
//              "holdings": {"a": 10}, "investors": ["a"], "dominates": true,
//              "sim_sigmas": 3, "tolerance": 1e-9}
// }
//
// risk.kind:  risk_neutral | exp_concave (param = alpha) | power_concave (param = gamma)
// mev.kind:   point_mass {mu} | exponential {mean} | lognormal {mu_log, sigma_log}
//             | uniform {a, b} | empirical {samples}
// gamma.rule: max_haircut {epsilon} | second_max
//
// A suite file is {"schema": 1, "scenarios": [ <scenario>, ... ]}.

#include "etm/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace etm {

inline constexpr int kSchemaVersion = 1;

struct SimSpec {
    std::uint64_t slots = 1;
    std::uint64_t seed = 0;
    std::optional<bool> trace;
};

struct Expectation {
    std::optional<double> chi;
    std::optional<double> price;
    std::optional<double> chi_below;
    std::optional<std::set<std::string>> holders;
    std::optional<std::map<std::string, double>> holdings;
    std::optional<std::set<std::string>> investors;
    std::optional<bool> dominates;
    // chi_hat must land within this many standard errors of chi; needs sim.
    std::optional<double> sim_sigmas;
    double tolerance = 1e-9;
};

struct Scenario {
    std::string name;
    MarketParams market;
    double lambda = 0.0;
    std::optional<SimSpec> sim;
    std::optional<Expectation> expect;
};

// Throws ParseError, SchemaError, or ValidationError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);
std::vector<Scenario> load_suite(const std::filesystem::path& path);
std::vector<Scenario> parse_suite(const nlohmann::json& doc);

nlohmann::json to_json(const Scenario& scenario);
nlohmann::json to_json(const MevModel& model);
nlohmann::json to_json(const RiskProfile& profile);

} // namespace etm
