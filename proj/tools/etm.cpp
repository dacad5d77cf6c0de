// etm: execution-ticket market solver and slot simulator.
//
//   etm valuate     --scenario s.json            per-buyer maximal prices
//   etm equilibrium --scenario s.json            price, holdings, chi
//   etm pbs-derive  --scenario s.json            PBS payoff laws
//   etm simulate    --scenario s.json --slots N  seeded slot lottery
//   etm verify      [--suite f.json | --scenario s.json]
//
// Exit codes: 0 success, 1 verification failure, 2 input error.
#include "etm/equilibrium.hpp"
#include "etm/error.hpp"
#include "etm/pbs.hpp"
#include "etm/report.hpp"
#include "etm/scenario.hpp"
#include "etm/sim.hpp"
#include "etm/valuation.hpp"
#include "etm/verify.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitInput = 2;

struct Options {
    std::string scenario;
    std::string suite;
    std::string out;
    std::string format = "json";
    std::optional<double> lambda;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> slots;
    std::string trace_csv;
    bool integer_holdings = false;
    bool trace = false;
};

void add_shared(CLI::App* cmd, Options& opt, bool scenario_required) {
    auto* s = cmd->add_option("--scenario", opt.scenario, "Scenario JSON file");
    if (scenario_required) s->required();
    s->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out, "Write the report here instead of stdout");
    cmd->add_option("--format", opt.format, "Report format")->check(CLI::IsMember({"json", "text"}));
    cmd->add_option("--lambda", opt.lambda, "Equilibrium selection in [0, 1] (0 = second price)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", opt.seed, "Simulation seed");
    cmd->add_option("--slots", opt.slots, "Simulated slots")->check(CLI::PositiveNumber);
}

void emit(const json& doc, const Options& opt) {
    const std::string body = opt.format == "text" ? etm::render_text(doc) : doc.dump(2) + "\n";
    if (opt.out.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream f(opt.out);
    if (!f) throw etm::Error(etm::ErrorKind::ValidationError, "cannot write '" + opt.out + "'");
    f << body;
}

etm::Scenario scenario_with_overrides(const Options& opt) {
    etm::Scenario s = etm::load_scenario(opt.scenario);
    if (opt.lambda) s.lambda = *opt.lambda;
    return s;
}

etm::HoldingsMode holdings_mode(const Options& opt) {
    return opt.integer_holdings ? etm::HoldingsMode::LargestRemainder : etm::HoldingsMode::EqualSplit;
}

int cmd_valuate(const Options& opt) {
    const auto s = scenario_with_overrides(opt);
    emit(etm::to_json(etm::rank_valuations(s.market)), opt);
    return kExitOk;
}

int cmd_equilibrium(const Options& opt) {
    const auto s = scenario_with_overrides(opt);
    emit(etm::to_json(etm::solve_equilibrium(s.market, s.lambda, holdings_mode(opt))), opt);
    return kExitOk;
}

int cmd_pbs_derive(const Options& opt) {
    const auto s = scenario_with_overrides(opt);
    json out = json::array();
    for (const auto& d : etm::derive_payoffs(s.market)) out.push_back(etm::to_json(d));
    emit(out, opt);
    return kExitOk;
}

int cmd_simulate(const Options& opt) {
    const auto s = scenario_with_overrides(opt);
    etm::SimOptions sim;
    if (s.sim) {
        sim.slots = s.sim->slots;
        sim.seed = s.sim->seed;
        sim.trace = s.sim->trace;
    }
    if (opt.slots) sim.slots = *opt.slots;
    else if (!s.sim) throw etm::Error(etm::ErrorKind::ValidationError, "no slot count: pass --slots or add a sim section");
    if (opt.seed) sim.seed = *opt.seed;
    if (opt.trace || !opt.trace_csv.empty()) sim.trace = true;

    const auto eq = etm::solve_equilibrium(s.market, s.lambda, holdings_mode(opt));
    const auto rep = etm::run_slots(s.market, eq, sim);

    json doc = etm::to_json(rep);
    doc["chi_hat_standard_error"] = etm::chi_hat_standard_error(s.market, eq, sim.slots);
    try {
        doc["win_delay_stats"] = etm::to_json(etm::win_delay_stats(rep, s.market.tickets));
    } catch (const etm::Error& e) {
        if (e.kind() != etm::ErrorKind::InsufficientData) throw;
    }
    if (!opt.trace_csv.empty()) {
        std::ofstream f(opt.trace_csv);
        if (!f) throw etm::Error(etm::ErrorKind::ValidationError, "cannot write '" + opt.trace_csv + "'");
        etm::write_trace_csv(f, rep.trace);
        if (!opt.trace) doc.erase("trace");
    }
    emit(doc, opt);
    return kExitOk;
}

int cmd_verify(const Options& opt) {
    etm::VerificationReport rep;
    if (!opt.suite.empty()) {
        rep = etm::verify_scenarios(etm::load_suite(opt.suite));
    } else if (!opt.scenario.empty()) {
        rep = etm::verify_scenarios({scenario_with_overrides(opt)});
    } else {
        rep = etm::run_suite(etm::builtin_suite());
    }
    emit(etm::to_json(rep), opt);
    return rep.all_pass ? kExitOk : kExitFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Execution-ticket market equilibrium solver and slot simulator"};
    app.require_subcommand(1);
    Options opt;

    auto* valuate = app.add_subcommand("valuate", "Per-buyer maximal prices, top set, second price");
    add_shared(valuate, opt, true);

    auto* equilibrium = app.add_subcommand("equilibrium", "Stationary price, holdings and MEV capture ratio");
    add_shared(equilibrium, opt, true);
    equilibrium->add_flag("--integer-holdings", opt.integer_holdings, "Largest-remainder integer holdings");

    auto* pbs = app.add_subcommand("pbs-derive", "Effective ET payoff laws under PBS");
    add_shared(pbs, opt, true);

    auto* simulate = app.add_subcommand("simulate", "Seeded slot-by-slot lottery at the equilibrium");
    add_shared(simulate, opt, true);
    simulate->add_flag("--integer-holdings", opt.integer_holdings, "Largest-remainder integer holdings");
    simulate->add_flag("--trace", opt.trace, "Include the per-slot trace in the report");
    simulate->add_option("--trace-csv", opt.trace_csv, "Write the per-slot trace as CSV");

    auto* verify = app.add_subcommand("verify", "Check solver output against closed forms");
    add_shared(verify, opt, false);
    verify->add_option("--suite", opt.suite, "Suite JSON file (default: built-in suite)")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*valuate) return cmd_valuate(opt);
        if (*equilibrium) return cmd_equilibrium(opt);
        if (*pbs) return cmd_pbs_derive(opt);
        if (*simulate) return cmd_simulate(opt);
        if (*verify) return cmd_verify(opt);
    } catch (const etm::Error& e) {
        std::cerr << "etm: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "etm: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
