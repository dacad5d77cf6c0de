#include "etm/verify.hpp"

#include "etm/error.hpp"
#include "etm/pbs.hpp"
#include "etm/sim.hpp"
#include "etm/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace etm {

using nlohmann::json;

namespace {

Check close(const std::string& scenario, const std::string& claim, double expected, double actual, double tol) {
    return {scenario, claim, expected, actual, tol, std::abs(expected - actual) <= tol};
}

Check flag(const std::string& scenario, const std::string& claim, json expected, json actual, bool pass) {
    return {scenario, claim, std::move(expected), std::move(actual), 0.0, pass};
}

std::set<std::string> holders_of(const Equilibrium& eq) {
    std::set<std::string> out;
    for (const auto& [id, k] : eq.holdings)
        if (k > 0.0) out.insert(id);
    return out;
}

std::vector<Check> expectation_checks(const Scenario& s, const Equilibrium& eq) {
    std::vector<Check> out;
    if (!s.expect) return out;
    const Expectation& e = *s.expect;
    const double tol = e.tolerance;

    if (e.chi) out.push_back(close(s.name, "chi", *e.chi, eq.chi, tol));
    if (e.price) out.push_back(close(s.name, "price", *e.price, eq.price, tol));
    if (e.chi_below)
        out.push_back(flag(s.name, "chi < " + json(*e.chi_below).dump(), *e.chi_below, eq.chi, eq.chi < *e.chi_below));
    if (e.holders) {
        const auto actual = holders_of(eq);
        out.push_back(flag(s.name, "holders", *e.holders, actual, actual == *e.holders));
    }
    if (e.holdings) {
        for (const auto& [id, k] : *e.holdings) {
            const auto it = eq.holdings.find(id);
            const double actual = it == eq.holdings.end() ? 0.0 : it->second;
            out.push_back(close(s.name, "holdings." + id, k, actual, tol));
        }
    }
    if (e.investors) {
        const MarketParams eff = effective_market(s.market);
        const double investor_mean = eff.buyer(*e.investors->begin()).mev.mean();
        const auto th = investor_threshold(s.market, *e.investors, investor_mean);
        if (e.dominates) {
            Check c = flag(s.name, "investor dominance", *e.dominates, th.dominates, th.dominates == *e.dominates);
            c.expected = {{"dominates", *e.dominates}};
            c.actual = {{"dominates", th.dominates}, {"bound", th.bound}};
            out.push_back(std::move(c));
        }
        double held = 0.0;
        for (const auto& id : *e.investors) held += eq.holdings.at(id);
        const bool all_held = std::abs(held - static_cast<double>(eq.tickets)) <= tol;
        out.push_back(flag(s.name, "investors hold all tickets iff threshold met", th.dominates, all_held,
                           !th.dominates || all_held));
    }
    if (e.sim_sigmas) {
        if (!s.sim) throw Error(ErrorKind::ValidationError, "expect.sim_sigmas requires a sim section");
        const auto rep = run_slots(s.market, eq, SimOptions{s.sim->slots, s.sim->seed, false});
        const double se = chi_hat_standard_error(s.market, eq, s.sim->slots);
        const double band = *e.sim_sigmas * se + 1e-12;
        out.push_back(close(s.name, "chi_hat within " + json(*e.sim_sigmas).dump() + " standard errors", eq.chi,
                            rep.chi_hat, band));
    }
    return out;
}

std::vector<Check> run_case(const SuiteCase& c) {
    const Scenario& s = c.scenario;
    try {
        const Equilibrium eq = solve_equilibrium(s.market, s.lambda);
        auto out = expectation_checks(s, eq);
        if (c.extra) {
            auto more = c.extra(s, eq);
            out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
        }
        if (out.empty()) out.push_back(flag(s.name, "solves", true, true, true));
        return out;
    } catch (const std::exception& ex) {
        return {flag(s.name, "solves", true, ex.what(), false)};
    }
}

// ------------------------------------------------------------ built-in suite

BuyerSpec buyer(std::string id, double r, MevModel mev, RiskProfile risk = RiskProfile::neutral()) {
    return BuyerSpec{std::move(id), r, risk, std::move(mev)};
}

Scenario scenario(std::string name, std::int64_t tickets, std::vector<BuyerSpec> buyers) {
    Scenario s;
    s.name = std::move(name);
    s.market.tickets = tickets;
    s.market.buyers = std::move(buyers);
    s.expect = Expectation{};
    return s;
}

std::vector<Check> wins_within_binomial_band(const Scenario& s, const Equilibrium& eq) {
    const auto rep = run_slots(s.market, eq, SimOptions{s.sim->slots, s.sim->seed, false});
    std::vector<Check> out;
    const auto t = static_cast<double>(s.sim->slots);
    for (const auto& [id, k] : eq.holdings) {
        const double p = k / static_cast<double>(eq.tickets);
        const double sigma = std::sqrt(t * p * (1.0 - p));
        out.push_back(close(s.name, "wins." + id + " within 3 sigma", t * p,
                            static_cast<double>(rep.wins.at(id)), 3.0 * sigma + 1e-12));
    }
    return out;
}

std::vector<Check> jensen_gap(const Scenario& s, const Equilibrium& eq) {
    const BuyerSpec& b = s.market.buyers.front();
    const double mean = b.mev.mean();
    const double lhs = expected_gain(b.risk, b.mev, eq.price);
    const double rhs = eval_pi(b.risk, mean - eq.price);
    const double p_bar = max_price(b, s.market.tickets);
    return {
        flag(s.name, "E[pi(R - P)] < pi(E[R] - P)", rhs, lhs, lhs < rhs),
        flag(s.name, "max_price < E[R]", mean, p_bar, p_bar < mean),
    };
}

std::vector<Check> matches_hand_built(const Scenario& s, const Equilibrium& eq) {
    // Same buyers carrying the PBS price as a plain point-mass payoff.
    std::vector<double> abilities;
    for (const auto& b : s.market.buyers) abilities.push_back(b.mev.mean());
    for (const auto& y : s.market.pbs->non_buyer_abilities) abilities.push_back(y.mean());
    const double gamma = gamma_eval(s.market.pbs->gamma_rule, abilities);

    MarketParams plain;
    plain.tickets = s.market.tickets;
    for (const auto& b : s.market.buyers) plain.buyers.push_back(buyer(b.id, b.cost_of_capital, MevModel::point_mass(gamma)));
    const Equilibrium ref = solve_equilibrium(plain, s.lambda);

    std::vector<Check> out{close(s.name, "price equals hand-built market", ref.price, eq.price, 1e-12),
                           close(s.name, "chi equals hand-built market", ref.chi, eq.chi, 1e-12)};
    for (const auto& [id, k] : ref.holdings)
        out.push_back(close(s.name, "holdings." + id + " equals hand-built market", k, eq.holdings.at(id), 1e-12));
    return out;
}

std::vector<Check> top_set_is_valuation_argmax(const Scenario& s, const Equilibrium& eq) {
    const auto derived = derive_payoffs(s.market);
    const auto n = static_cast<double>(s.market.tickets);
    double best = -1.0;
    for (std::size_t i = 0; i < derived.size(); ++i)
        best = std::max(best, derived[i].payoff.mean() / (1.0 + s.market.buyers[i].cost_of_capital * n));
    std::set<std::string> argmax;
    for (std::size_t i = 0; i < derived.size(); ++i) {
        const double v = derived[i].payoff.mean() / (1.0 + s.market.buyers[i].cost_of_capital * n);
        if (std::abs(v - best) <= kTieTolerance * std::max(1.0, best)) argmax.insert(derived[i].buyer_id);
    }
    return {flag(s.name, "top_set = argmax E[R]/(1 + rN)", argmax, eq.valuation.top_set, argmax == eq.valuation.top_set),
            flag(s.name, "holders = top_set", eq.valuation.top_set, holders_of(eq), holders_of(eq) == eq.valuation.top_set)};
}

std::vector<Check> geometric_delay(const Scenario& s, const Equilibrium& eq) {
    const auto rep = run_slots(s.market, eq, SimOptions{s.sim->slots, s.sim->seed, false});
    const auto stats = win_delay_stats(rep, s.market.tickets);
    const auto n = static_cast<double>(s.market.tickets);

    // Control: the same number of delays spread uniformly over 1..N.
    SimReport wrong;
    std::uint64_t total = 0;
    for (const auto& [_, c] : rep.win_delay_histogram) total += c;
    for (std::uint64_t d = 1; d <= static_cast<std::uint64_t>(s.market.tickets); ++d)
        wrong.win_delay_histogram[d] = total / static_cast<std::uint64_t>(s.market.tickets);
    const auto control = win_delay_stats(wrong, s.market.tickets);

    return {close(s.name, "mean delay within 3 standard errors of N", n, stats.mean_delay, 3.0 * stats.standard_error),
            flag(s.name, "geometric goodness-of-fit p >= 0.01", kDelaySignificance, stats.p_value, stats.pass),
            flag(s.name, "uniform-delay control rejected", false, control.pass, !control.pass)};
}

} // namespace

VerificationReport run_suite(const std::vector<SuiteCase>& cases) {
    std::vector<std::vector<Check>> results(cases.size());
    const auto n = static_cast<std::int64_t>(cases.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = run_case(cases[static_cast<std::size_t>(i)]);

    std::vector<std::size_t> order(cases.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cases[a].scenario.name < cases[b].scenario.name; });

    VerificationReport rep;
    for (auto i : order)
        for (auto& c : results[i]) {
            rep.all_pass = rep.all_pass && c.pass;
            rep.per_check.push_back(std::move(c));
        }
    return rep;
}

VerificationReport verify_scenarios(const std::vector<Scenario>& scenarios) {
    if (scenarios.empty()) throw Error(ErrorKind::ValidationError, "no scenarios to verify");
    std::vector<SuiteCase> cases;
    for (const auto& s : scenarios) cases.push_back({s, nullptr});
    return run_suite(cases);
}

std::vector<SuiteCase> builtin_suite() {
    std::vector<SuiteCase> suite;

    {
        // Homogeneous, risk-neutral, r = 0: full capture, even split.
        Scenario s = scenario("homogeneous-total-capture", 8, {});
        for (const char* id : {"b1", "b2", "b3", "b4"}) s.market.buyers.push_back(buyer(id, 0.0, MevModel::exponential(1.0)));
        s.sim = SimSpec{100'000, 1, false};
        s.expect->chi = 1.0;
        s.expect->price = 1.0;
        s.expect->holdings = std::map<std::string, double>{{"b1", 2}, {"b2", 2}, {"b3", 2}, {"b4", 2}};
        s.expect->sim_sigmas = 3.0;
        s.expect->tolerance = 1e-12;
        suite.push_back({s, wins_within_binomial_band});
    }
    {
        // Homogeneous, risk-averse, r > 0: partial capture. With Pi clipped at
        // zero this needs r N (1 + alpha E[R]) e > 1; smaller N prices above
        // the mean.
        Scenario s = scenario("homogeneous-partial-capture", 100, {});
        for (const char* id : {"b1", "b2", "b3", "b4"})
            s.market.buyers.push_back(buyer(id, 0.01, MevModel::exponential(1.0), RiskProfile::exp_concave(1.0)));
        s.expect->chi_below = 1.0 - 1e-6;
        s.expect->holdings = std::map<std::string, double>{{"b1", 25}, {"b2", 25}, {"b3", 25}, {"b4", 25}};
        s.expect->tolerance = 1e-12;
        suite.push_back({s, jensen_gap});
    }
    {
        // Identical payoffs, heterogeneous capital cost: chi = 1 / (1 + r_(2) N).
        Scenario s = scenario("closed-form-second-lowest-cost", 100,
                              {buyer("b1", 0.001, MevModel::point_mass(1.0)), buyer("b2", 0.002, MevModel::point_mass(1.0)),
                               buyer("b3", 0.002, MevModel::point_mass(1.0))});
        s.expect->chi = 1.0 / (1.0 + 0.002 * 100);
        s.expect->price = 1.0 / (1.0 + 0.002 * 100);
        s.expect->holders = std::set<std::string>{"b1"};
        s.expect->holdings = std::map<std::string, double>{{"b1", 100}, {"b2", 0}, {"b3", 0}};
        suite.push_back({s, nullptr});
    }
    {
        // r = 0, heterogeneous payoffs: chi = E[R_2] / E[R_1], best buyer holds all.
        Scenario s = scenario("closed-form-best-buyer", 5,
                              {buyer("b1", 0.0, MevModel::point_mass(2.0)), buyer("b2", 0.0, MevModel::point_mass(1.0))});
        s.expect->chi = 1.0 / 2.0;
        s.expect->holdings = std::map<std::string, double>{{"b1", 5}, {"b2", 0}};
        s.expect->tolerance = 1e-12;
        suite.push_back({s, nullptr});
    }
    {
        // PBS where no buyer can build: reduces to identical payoffs.
        Scenario s = scenario("pbs-no-builders-reduction", 100,
                              {buyer("b1", 0.001, MevModel::point_mass(0.0)), buyer("b2", 0.002, MevModel::point_mass(0.0)),
                               buyer("b3", 0.003, MevModel::point_mass(0.0))});
        s.market.pbs = PbsConfig{{MevModel::point_mass(5.0), MevModel::point_mass(3.0)}, GammaRule::second_max(), 200'000, 0, false};
        s.expect->chi = 1.0 / (1.0 + 0.002 * 100);
        s.expect->holders = std::set<std::string>{"b1"};
        s.expect->tolerance = 1e-12;
        suite.push_back({s, matches_hand_built});
    }
    {
        // PBS, no buyer can build, investors have strictly lowest r.
        Scenario s = scenario("pbs-large-investors-lowest-cost", 50,
                              {buyer("inv1", 0.001, MevModel::point_mass(0.0)), buyer("inv2", 0.001, MevModel::point_mass(0.0)),
                               buyer("fund1", 0.004, MevModel::point_mass(0.0)), buyer("fund2", 0.006, MevModel::point_mass(0.0))});
        s.market.pbs = PbsConfig{{MevModel::exponential(2.0), MevModel::exponential(3.0)}, GammaRule::max_haircut(0.05), 200'000, 42, false};
        s.expect->holders = std::set<std::string>{"inv1", "inv2"};
        s.expect->holdings = std::map<std::string, double>{{"inv1", 25}, {"inv2", 25}, {"fund1", 0}, {"fund2", 0}};
        suite.push_back({s, nullptr});
    }
    {
        // Investor below the dominance bound (0.035 here) takes every ticket.
        Scenario s = scenario("pbs-investor-threshold-holds", 10,
                              {buyer("inv", 0.02, MevModel::point_mass(0.0)), buyer("builder", 0.05, MevModel::point_mass(8.0))});
        s.market.pbs = PbsConfig{{MevModel::point_mass(5.0)}, GammaRule::max_haircut(0.1), 200'000, 0, false};
        s.expect->investors = std::set<std::string>{"inv"};
        s.expect->dominates = true;
        s.expect->holders = std::set<std::string>{"inv"};
        suite.push_back({s, nullptr});

        // Just above the bound the builder wins the market back.
        Scenario t = s;
        t.name = "pbs-investor-threshold-flips";
        t.market.buyers[0].cost_of_capital = 0.035 + 1e-4;
        t.expect->dominates = false;
        t.expect->holders = std::set<std::string>{"builder"};
        suite.push_back({t, nullptr});
    }
    {
        // Builders with sampled abilities compete with a low-cost investor.
        Scenario s = scenario("pbs-builders-highest-valuation", 20,
                              {buyer("builderA", 0.01, MevModel::exponential(4.0)), buyer("builderB", 0.005, MevModel::uniform(0.0, 6.0)),
                               buyer("inv", 0.001, MevModel::point_mass(0.0))});
        s.market.pbs = PbsConfig{{MevModel::exponential(3.0)}, GammaRule::second_max(), 200'000, 7, false};
        suite.push_back({s, top_set_is_valuation_argmax});
    }
    {
        Scenario s = scenario("geometric-win-delay", 16, {});
        for (const char* id : {"b1", "b2", "b3", "b4"}) s.market.buyers.push_back(buyer(id, 0.0, MevModel::point_mass(1.0)));
        s.sim = SimSpec{200'000, 3, false};
        suite.push_back({s, geometric_delay});
    }
    return suite;
}

json to_json(const Check& c) {
    return {{"scenario", c.scenario}, {"claim", c.claim},         {"expected", c.expected},
            {"actual", c.actual},     {"tolerance", c.tolerance}, {"pass", c.pass}};
}

json to_json(const VerificationReport& r) {
    json checks = json::array();
    for (const auto& c : r.per_check) checks.push_back(to_json(c));
    return {{"per_check", std::move(checks)}, {"all_pass", r.all_pass}};
}

} // namespace etm
