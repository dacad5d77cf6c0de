#include "etm/scenario.hpp"

#include "etm/error.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>
#include <variant>

namespace etm {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorKind::SchemaError, path + ": " + msg);
}

std::string join(std::initializer_list<std::string_view> items) {
    std::string out;
    for (auto s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) schema_error(path, "expected an object");
    return j;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            schema_error(child(path, key), "unknown key (allowed: " + join(allowed) + ")");
    }
}

const json& require_key(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(child(path, key), "missing required key");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_error(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_error(path, "expected an integer");
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw Error(ErrorKind::ValidationError, path + ": must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) schema_error(path, "expected a string");
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) schema_error(path, "expected a boolean");
    return j.get<bool>();
}

const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path, "expected an array");
    return j;
}

std::set<std::string> as_id_set(const json& j, const std::string& path) {
    std::set<std::string> out;
    const auto& arr = as_array(j, path);
    for (std::size_t i = 0; i < arr.size(); ++i) out.insert(as_string(arr[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

// Re-throws model-level validation failures with the document path attached.
template <class F>
auto validated(const std::string& path, F&& make) {
    try {
        return make();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ValidationError) throw;
        throw Error(ErrorKind::ValidationError, path + ": " + e.detail());
    }
}

MevModel parse_mev(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"kind", "params"});
    const std::string kind = as_string(require_key(j, "kind", path), child(path, "kind"));
    const std::string ppath = child(path, "params");
    static const json kEmpty = json::object();
    const json& params = j.contains("params") ? require_object(j.at("params"), ppath) : kEmpty;
    auto num = [&](const char* key) { return as_number(require_key(params, key, ppath), child(ppath, key)); };

    if (kind == "point_mass") {
        check_keys(params, ppath, {"mu"});
        return validated(path, [&] { return MevModel::point_mass(num("mu")); });
    }
    if (kind == "exponential") {
        check_keys(params, ppath, {"mean"});
        return validated(path, [&] { return MevModel::exponential(num("mean")); });
    }
    if (kind == "lognormal") {
        check_keys(params, ppath, {"mu_log", "sigma_log"});
        return validated(path, [&] { return MevModel::lognormal(num("mu_log"), num("sigma_log")); });
    }
    if (kind == "uniform") {
        check_keys(params, ppath, {"a", "b"});
        return validated(path, [&] { return MevModel::uniform(num("a"), num("b")); });
    }
    if (kind == "empirical") {
        check_keys(params, ppath, {"samples"});
        const std::string spath = child(ppath, "samples");
        const auto& arr = as_array(require_key(params, "samples", ppath), spath);
        std::vector<double> samples;
        samples.reserve(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i)
            samples.push_back(as_number(arr[i], spath + "[" + std::to_string(i) + "]"));
        return validated(path, [&] { return MevModel::empirical(std::move(samples)); });
    }
    schema_error(child(path, "kind"),
                 "unknown value '" + kind + "' (allowed: point_mass, exponential, lognormal, uniform, empirical)");
}

RiskProfile parse_risk(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"kind", "param"});
    const std::string kind = as_string(require_key(j, "kind", path), child(path, "kind"));
    auto param = [&] { return as_number(require_key(j, "param", path), child(path, "param")); };
    if (kind == "risk_neutral") return RiskProfile::neutral();
    if (kind == "exp_concave") return validated(path, [&] { return RiskProfile::exp_concave(param()); });
    if (kind == "power_concave") return validated(path, [&] { return RiskProfile::power_concave(param()); });
    schema_error(child(path, "kind"), "unknown value '" + kind + "' (allowed: risk_neutral, exp_concave, power_concave)");
}

BuyerSpec parse_buyer(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"id", "r", "risk", "mev"});
    BuyerSpec b;
    b.id = as_string(require_key(j, "id", path), child(path, "id"));
    b.cost_of_capital = as_number(require_key(j, "r", path), child(path, "r"));
    if (j.contains("risk")) b.risk = parse_risk(j.at("risk"), child(path, "risk"));
    b.mev = parse_mev(require_key(j, "mev", path), child(path, "mev"));
    return b;
}

GammaRule parse_gamma(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"rule", "epsilon"});
    const std::string rule = as_string(require_key(j, "rule", path), child(path, "rule"));
    if (rule == "second_max") return GammaRule::second_max();
    if (rule == "max_haircut") {
        const double eps = j.contains("epsilon") ? as_number(j.at("epsilon"), child(path, "epsilon")) : 0.0;
        return validated(path, [&] { return GammaRule::max_haircut(eps); });
    }
    schema_error(child(path, "rule"), "unknown value '" + rule + "' (allowed: max_haircut, second_max)");
}

PbsConfig parse_pbs(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"non_buyer_abilities", "gamma", "joint_samples", "seed", "exclude_self"});
    PbsConfig cfg;
    if (j.contains("non_buyer_abilities")) {
        const std::string apath = child(path, "non_buyer_abilities");
        const auto& arr = as_array(j.at("non_buyer_abilities"), apath);
        for (std::size_t i = 0; i < arr.size(); ++i)
            cfg.non_buyer_abilities.push_back(parse_mev(arr[i], apath + "[" + std::to_string(i) + "]"));
    }
    cfg.gamma_rule = parse_gamma(require_key(j, "gamma", path), child(path, "gamma"));
    if (j.contains("joint_samples")) {
        cfg.joint_samples = as_unsigned(j.at("joint_samples"), child(path, "joint_samples"));
        if (cfg.joint_samples == 0)
            throw Error(ErrorKind::ValidationError, child(path, "joint_samples") + ": must be positive");
    }
    if (j.contains("seed")) cfg.seed = as_unsigned(j.at("seed"), child(path, "seed"));
    if (j.contains("exclude_self")) cfg.exclude_self = as_bool(j.at("exclude_self"), child(path, "exclude_self"));
    return cfg;
}

MarketParams parse_market(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"tickets", "buyers", "pbs"});
    MarketParams m;
    m.tickets = as_integer(require_key(j, "tickets", path), child(path, "tickets"));
    const std::string bpath = child(path, "buyers");
    const auto& arr = as_array(require_key(j, "buyers", path), bpath);
    for (std::size_t i = 0; i < arr.size(); ++i) m.buyers.push_back(parse_buyer(arr[i], bpath + "[" + std::to_string(i) + "]"));
    if (j.contains("pbs")) m.pbs = parse_pbs(j.at("pbs"), child(path, "pbs"));
    validate(m);
    return m;
}

Expectation parse_expect(const json& j, const std::string& path, const MarketParams& market) {
    require_object(j, path);
    check_keys(j, path,
               {"chi", "price", "chi_below", "holders", "holdings", "investors", "dominates", "sim_sigmas", "tolerance"});
    Expectation e;
    if (j.contains("chi")) e.chi = as_number(j.at("chi"), child(path, "chi"));
    if (j.contains("price")) e.price = as_number(j.at("price"), child(path, "price"));
    if (j.contains("chi_below")) e.chi_below = as_number(j.at("chi_below"), child(path, "chi_below"));
    if (j.contains("holders")) e.holders = as_id_set(j.at("holders"), child(path, "holders"));
    if (j.contains("holdings")) {
        const std::string hpath = child(path, "holdings");
        std::map<std::string, double> h;
        for (const auto& [id, v] : require_object(j.at("holdings"), hpath).items()) h[id] = as_number(v, child(hpath, id));
        e.holdings = std::move(h);
    }
    if (j.contains("investors")) e.investors = as_id_set(j.at("investors"), child(path, "investors"));
    if (j.contains("dominates")) e.dominates = as_bool(j.at("dominates"), child(path, "dominates"));
    if (j.contains("sim_sigmas")) e.sim_sigmas = as_number(j.at("sim_sigmas"), child(path, "sim_sigmas"));
    if (j.contains("tolerance")) e.tolerance = as_number(j.at("tolerance"), child(path, "tolerance"));

    if (!(e.tolerance > 0.0)) throw Error(ErrorKind::ValidationError, child(path, "tolerance") + ": must be positive");
    if (e.sim_sigmas && !(*e.sim_sigmas > 0.0))
        throw Error(ErrorKind::ValidationError, child(path, "sim_sigmas") + ": must be positive");
    if (e.dominates && !e.investors)
        throw Error(ErrorKind::ValidationError, child(path, "dominates") + ": requires expect.investors");

    auto known = [&](const std::set<std::string>& ids, const std::string& key) {
        for (const auto& id : ids) {
            const bool found = std::any_of(market.buyers.begin(), market.buyers.end(),
                                           [&](const BuyerSpec& b) { return b.id == id; });
            if (!found) throw Error(ErrorKind::ValidationError, child(path, key) + ": unknown buyer id '" + id + "'");
        }
    };
    if (e.holders) known(*e.holders, "holders");
    if (e.investors) known(*e.investors, "investors");
    if (e.holdings) {
        std::set<std::string> ids;
        for (const auto& [id, _] : *e.holdings) ids.insert(id);
        known(ids, "holdings");
    }
    return e;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

void check_schema_version(const json& doc, const std::string& path) {
    const auto v = as_integer(require_key(doc, "schema", path), child(path, "schema"));
    if (v != kSchemaVersion)
        schema_error(child(path, "schema"), "unsupported version " + std::to_string(v) + " (expected 1)");
}

} // namespace

Scenario parse_scenario(const json& doc) {
    require_object(doc, "");
    check_keys(doc, "", {"schema", "name", "market", "lambda", "sim", "expect"});
    check_schema_version(doc, "");

    Scenario s;
    s.name = doc.contains("name") ? as_string(doc.at("name"), "name") : "scenario";
    s.market = parse_market(require_key(doc, "market", ""), "market");
    if (doc.contains("lambda")) {
        s.lambda = as_number(doc.at("lambda"), "lambda");
        if (!(s.lambda >= 0.0 && s.lambda <= 1.0))
            throw Error(ErrorKind::ValidationError, "lambda: must lie in [0, 1]");
    }
    if (doc.contains("sim")) {
        const json& j = require_object(doc.at("sim"), "sim");
        check_keys(j, "sim", {"slots", "seed", "trace"});
        SimSpec sim;
        sim.slots = as_unsigned(require_key(j, "slots", "sim"), "sim.slots");
        if (sim.slots == 0) throw Error(ErrorKind::ValidationError, "sim.slots: must be positive");
        if (j.contains("seed")) sim.seed = as_unsigned(j.at("seed"), "sim.seed");
        if (j.contains("trace")) sim.trace = as_bool(j.at("trace"), "sim.trace");
        s.sim = sim;
    }
    if (doc.contains("expect")) s.expect = parse_expect(doc.at("expect"), "expect", s.market);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_json(path)); }

std::vector<Scenario> parse_suite(const json& doc) {
    require_object(doc, "");
    check_keys(doc, "", {"schema", "scenarios"});
    check_schema_version(doc, "");
    const auto& arr = as_array(require_key(doc, "scenarios", ""), "scenarios");
    if (arr.empty()) throw Error(ErrorKind::ValidationError, "scenarios: suite is empty");
    std::vector<Scenario> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            out.push_back(parse_scenario(arr[i]));
        } catch (const Error& e) {
            throw Error(e.kind(), "scenarios[" + std::to_string(i) + "]: " + e.detail());
        }
        if (!names.insert(out.back().name).second)
            throw Error(ErrorKind::ValidationError, "scenarios: duplicate name '" + out.back().name + "'");
    }
    return out;
}

std::vector<Scenario> load_suite(const std::filesystem::path& path) { return parse_suite(read_json(path)); }

// ---------------------------------------------------------------- serialize

json to_json(const MevModel& model) {
    json params = std::visit(
        [](const auto& law) -> json {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, PointMass>) return {{"mu", law.mu}};
            else if constexpr (std::is_same_v<T, Exponential>) return {{"mean", law.mean}};
            else if constexpr (std::is_same_v<T, LogNormal>) return {{"mu_log", law.mu_log}, {"sigma_log", law.sigma_log}};
            else if constexpr (std::is_same_v<T, Uniform>) return {{"a", law.a}, {"b", law.b}};
            else return {{"samples", *law.samples}};
        },
        model.law());
    return {{"kind", model.kind_name()}, {"params", std::move(params)}};
}

json to_json(const RiskProfile& profile) {
    switch (profile.kind()) {
    case RiskProfile::Kind::RiskNeutral: return {{"kind", "risk_neutral"}};
    case RiskProfile::Kind::ExpConcave: return {{"kind", "exp_concave"}, {"param", profile.param()}};
    case RiskProfile::Kind::PowerConcave: return {{"kind", "power_concave"}, {"param", profile.param()}};
    }
    return {};
}

json to_json(const Scenario& s) {
    json buyers = json::array();
    for (const auto& b : s.market.buyers)
        buyers.push_back({{"id", b.id}, {"r", b.cost_of_capital}, {"risk", to_json(b.risk)}, {"mev", to_json(b.mev)}});
    json market = {{"tickets", s.market.tickets}, {"buyers", std::move(buyers)}};
    if (s.market.pbs) {
        const auto& p = *s.market.pbs;
        json abilities = json::array();
        for (const auto& y : p.non_buyer_abilities) abilities.push_back(to_json(y));
        json gamma = p.gamma_rule.kind == GammaRule::Kind::SecondMax
                         ? json{{"rule", "second_max"}}
                         : json{{"rule", "max_haircut"}, {"epsilon", p.gamma_rule.epsilon}};
        market["pbs"] = {{"non_buyer_abilities", std::move(abilities)},
                         {"gamma", std::move(gamma)},
                         {"joint_samples", p.joint_samples},
                         {"seed", p.seed},
                         {"exclude_self", p.exclude_self}};
    }

    json doc = {{"schema", kSchemaVersion}, {"name", s.name}, {"market", std::move(market)}, {"lambda", s.lambda}};
    if (s.sim) {
        doc["sim"] = {{"slots", s.sim->slots}, {"seed", s.sim->seed}};
        if (s.sim->trace) doc["sim"]["trace"] = *s.sim->trace;
    }
    if (s.expect) {
        const auto& e = *s.expect;
        json ex = {{"tolerance", e.tolerance}};
        if (e.chi) ex["chi"] = *e.chi;
        if (e.price) ex["price"] = *e.price;
        if (e.chi_below) ex["chi_below"] = *e.chi_below;
        if (e.holders) ex["holders"] = *e.holders;
        if (e.holdings) ex["holdings"] = *e.holdings;
        if (e.investors) ex["investors"] = *e.investors;
        if (e.dominates) ex["dominates"] = *e.dominates;
        if (e.sim_sigmas) ex["sim_sigmas"] = *e.sim_sigmas;
        doc["expect"] = std::move(ex);
    }
    return doc;
}

} // namespace etm
