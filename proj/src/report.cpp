#include "etm/report.hpp"

#include "etm/scenario.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace etm {

using nlohmann::json;

json to_json(const ValuationResult& v) {
    return {{"per_buyer", v.per_buyer},       {"p_top", v.p_top},
            {"p_second", v.p_second},         {"top_set", v.top_set},
            {"tie_tolerance", v.tie_tolerance}, {"boundary_regime", v.boundary_regime}};
}

json to_json(const Equilibrium& eq) {
    return {{"tickets", eq.tickets},
            {"price", eq.price},
            {"holdings", eq.holdings},
            {"chi", eq.chi},
            {"selection_lambda", eq.selection_lambda},
            {"regime_tags", eq.regime_tags},
            {"valuation", to_json(eq.valuation)}};
}

json to_json(const DerivedPayoff& d) {
    // Empirical payoffs are summarized; the sample vector is reproducible
    // from the scenario's pbs seed.
    json payoff = {{"kind", d.payoff.kind_name()}, {"mean", d.payoff.mean()}};
    if (std::holds_alternative<Empirical>(d.payoff.law())) {
        payoff["samples"] = d.payoff.samples().size();
        payoff["ess_sup"] = d.payoff.ess_sup();
    } else {
        payoff["params"] = to_json(d.payoff)["params"];
    }
    return {{"buyer_id", d.buyer_id}, {"payoff", std::move(payoff)}, {"outsource_probability", d.outsource_probability}};
}

json to_json(const SimReport& r) {
    json hist = json::object();
    for (const auto& [delay, count] : r.win_delay_histogram) hist[std::to_string(delay)] = count;
    json doc = {{"slots", r.slots},
                {"seed", r.seed},
                {"price", r.price},
                {"wins", r.wins},
                {"protocol_revenue", r.protocol_revenue},
                {"realized_mev_total", r.realized_mev_total},
                {"chi_hat", r.chi_hat},
                {"chi_analytic", r.chi_analytic},
                {"per_buyer_pnl", r.per_buyer_pnl},
                {"win_delay_histogram", std::move(hist)},
                {"outsource_fraction", r.outsource_fraction}};
    if (!r.trace.empty()) {
        json trace = json::array();
        for (const auto& o : r.trace)
            trace.push_back({{"slot", o.slot},
                             {"winner_id", o.winner_id},
                             {"realized_mev", o.realized_mev},
                             {"pnl", o.pnl},
                             {"portfolio_before", o.portfolio_before},
                             {"portfolio_after", o.portfolio_after},
                             {"exercised_self", o.exercised_self}});
        doc["trace"] = std::move(trace);
    }
    return doc;
}

json to_json(const DelayStats& s) {
    return {{"mean_delay", s.mean_delay},       {"standard_error", s.standard_error},
            {"gof_statistic", s.gof_statistic}, {"degrees_of_freedom", s.degrees_of_freedom},
            {"p_value", s.p_value},             {"pass", s.pass}};
}

namespace {

void flatten(const json& j, const std::string& path, std::vector<std::pair<std::string, std::string>>& rows) {
    const bool scalar_array =
        j.is_array() && std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
    if (j.is_object() && !j.empty()) {
        for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, rows);
    } else if (j.is_array() && !scalar_array) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", rows);
    } else if (j.is_string()) {
        rows.emplace_back(path, j.get<std::string>());
    } else {
        rows.emplace_back(path, j.dump());
    }
}

} // namespace

std::string render_text(const json& doc) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(doc, "", rows);
    std::size_t width = 0;
    for (const auto& [k, _] : rows) width = std::max(width, k.size());
    std::ostringstream out;
    for (const auto& [k, v] : rows) out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    return out.str();
}

void write_trace_csv(std::ostream& out, std::span<const SlotOutcome> trace) {
    out << kTraceCsvHeader << '\n';
    for (const auto& o : trace) {
        out << o.slot << ',' << o.winner_id << ',' << json(o.realized_mev).dump() << ',' << json(o.pnl).dump() << ','
            << (o.exercised_self ? "true" : "false") << '\n';
    }
}

} // namespace etm
