#include "etm/model.hpp"

#include "etm/error.hpp"

#include <boost/math/distributions/lognormal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace etm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ValidationError, what);
}

} // namespace

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::DivergentValuation: return "DivergentValuation";
    case ErrorKind::ZeroMevMarket: return "ZeroMevMarket";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::MissingPbsConfig: return "MissingPbsConfig";
    case ErrorKind::InvalidHoldings: return "InvalidHoldings";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValidationError: return "ValidationError";
    }
    return "Error";
}

// ---------------------------------------------------------------- RiskProfile

RiskProfile RiskProfile::exp_concave(double alpha) {
    require(std::isfinite(alpha) && alpha > 0.0, "risk.param (alpha) must be a positive real");
    return RiskProfile(Kind::ExpConcave, alpha);
}

RiskProfile RiskProfile::power_concave(double gamma) {
    require(std::isfinite(gamma) && gamma > 0.0 && gamma <= 1.0,
            "risk.param (gamma) must lie in (0, 1]");
    return RiskProfile(Kind::PowerConcave, gamma);
}

bool RiskProfile::is_strictly_concave() const noexcept {
    switch (kind_) {
    case Kind::RiskNeutral: return false;
    case Kind::ExpConcave: return true;
    case Kind::PowerConcave: return param_ < 1.0;
    }
    return false;
}

double RiskProfile::operator()(double x) const noexcept {
    switch (kind_) {
    case Kind::RiskNeutral: return x;
    case Kind::ExpConcave: return x > 0.0 ? -std::expm1(-param_ * x) / param_ : 0.0;
    case Kind::PowerConcave: return x > 0.0 ? std::pow(x, param_) : 0.0;
    }
    return 0.0;
}

double eval_pi(const RiskProfile& profile, double x) { return profile(x); }

// ------------------------------------------------------------------- MevModel

MevModel MevModel::point_mass(double mu) {
    require(std::isfinite(mu) && mu >= 0.0, "mev point_mass.mu must be a nonnegative real");
    return MevModel(PointMass{mu});
}

MevModel MevModel::exponential(double mean) {
    require(std::isfinite(mean) && mean > 0.0, "mev exponential.mean must be positive");
    return MevModel(Exponential{mean});
}

MevModel MevModel::lognormal(double mu_log, double sigma_log) {
    require(std::isfinite(mu_log), "mev lognormal.mu_log must be finite");
    require(std::isfinite(sigma_log) && sigma_log > 0.0, "mev lognormal.sigma_log must be positive");
    return MevModel(LogNormal{mu_log, sigma_log});
}

MevModel MevModel::uniform(double a, double b) {
    require(std::isfinite(a) && a >= 0.0, "mev uniform.a must be nonnegative");
    require(std::isfinite(b) && b > a, "mev uniform.b must exceed a");
    return MevModel(Uniform{a, b});
}

MevModel MevModel::empirical(std::vector<double> samples) {
    require(!samples.empty(), "mev empirical.samples must be nonempty");
    for (double s : samples)
        require(std::isfinite(s) && s >= 0.0, "mev empirical.samples must be nonnegative reals");
    const double sum = std::accumulate(samples.begin(), samples.end(), 0.0);
    const double mean = sum / static_cast<double>(samples.size());
    const double max = *std::max_element(samples.begin(), samples.end());
    return MevModel(Empirical{std::make_shared<const std::vector<double>>(std::move(samples)), mean, max});
}

std::string MevModel::kind_name() const {
    return std::visit(overloaded{
                          [](const PointMass&) { return std::string("point_mass"); },
                          [](const Exponential&) { return std::string("exponential"); },
                          [](const LogNormal&) { return std::string("lognormal"); },
                          [](const Uniform&) { return std::string("uniform"); },
                          [](const Empirical&) { return std::string("empirical"); },
                      },
                      law_);
}

double MevModel::mean() const noexcept {
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mu; },
                          [](const Exponential& m) { return m.mean; },
                          [](const LogNormal& m) { return std::exp(m.mu_log + 0.5 * m.sigma_log * m.sigma_log); },
                          [](const Uniform& m) { return 0.5 * (m.a + m.b); },
                          [](const Empirical& m) { return m.mean; },
                      },
                      law_);
}

double MevModel::variance() const noexcept {
    return std::visit(overloaded{
                          [](const PointMass&) { return 0.0; },
                          [](const Exponential& m) { return m.mean * m.mean; },
                          [](const LogNormal& m) {
                              const double s2 = m.sigma_log * m.sigma_log;
                              return std::expm1(s2) * std::exp(2.0 * m.mu_log + s2);
                          },
                          [](const Uniform& m) { return (m.b - m.a) * (m.b - m.a) / 12.0; },
                          [](const Empirical& m) {
                              double acc = 0.0;
                              for (double s : *m.samples) acc += (s - m.mean) * (s - m.mean);
                              return acc / static_cast<double>(m.samples->size());
                          },
                      },
                      law_);
}

double MevModel::ess_sup() const noexcept {
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mu; },
                          [](const Exponential&) { return kInf; },
                          [](const LogNormal&) { return kInf; },
                          [](const Uniform& m) { return m.b; },
                          [](const Empirical& m) { return m.max; },
                      },
                      law_);
}

double MevModel::ess_inf() const noexcept {
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mu; },
                          [](const Exponential&) { return 0.0; },
                          [](const LogNormal&) { return 0.0; },
                          [](const Uniform& m) { return m.a; },
                          [](const Empirical& m) { return *std::min_element(m.samples->begin(), m.samples->end()); },
                      },
                      law_);
}

double MevModel::quantile(double p) const {
    require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mu; },
                          [p](const Exponential& m) { return -m.mean * std::log1p(-p); },
                          [p](const LogNormal& m) {
                              if (p <= 0.0) return 0.0;
                              if (p >= 1.0) return kInf;
                              boost::math::lognormal_distribution<double> d(m.mu_log, m.sigma_log);
                              return boost::math::quantile(d, p);
                          },
                          [p](const Uniform& m) { return m.a + p * (m.b - m.a); },
                          [p](const Empirical& m) {
                              std::vector<double> v(*m.samples);
                              const auto n = v.size();
                              auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
                              idx = std::clamp<std::size_t>(idx, 1, n) - 1;
                              std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
                              return v[idx];
                          },
                      },
                      law_);
}

double MevModel::density(double x) const {
    return std::visit(overloaded{
                          [](const PointMass&) { return 0.0; },
                          [x](const Exponential& m) { return x < 0.0 ? 0.0 : std::exp(-x / m.mean) / m.mean; },
                          [x](const LogNormal& m) {
                              if (x <= 0.0) return 0.0;
                              boost::math::lognormal_distribution<double> d(m.mu_log, m.sigma_log);
                              return boost::math::pdf(d, x);
                          },
                          [x](const Uniform& m) { return (x < m.a || x > m.b) ? 0.0 : 1.0 / (m.b - m.a); },
                          [](const Empirical&) { return 0.0; },
                      },
                      law_);
}

bool MevModel::is_degenerate() const noexcept {
    if (std::holds_alternative<PointMass>(law_)) return true;
    if (const auto* e = std::get_if<Empirical>(&law_))
        return std::all_of(e->samples->begin(), e->samples->end(), [&](double s) { return s == e->max; });
    return false;
}

double MevModel::sample(Engine& rng) const {
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mu; },
                          [&rng](const Exponential& m) { return std::exponential_distribution<double>(1.0 / m.mean)(rng); },
                          [&rng](const LogNormal& m) { return std::lognormal_distribution<double>(m.mu_log, m.sigma_log)(rng); },
                          [&rng](const Uniform& m) { return std::uniform_real_distribution<double>(m.a, m.b)(rng); },
                          [&rng](const Empirical& m) {
                              std::uniform_int_distribution<std::size_t> pick(0, m.samples->size() - 1);
                              return (*m.samples)[pick(rng)];
                          },
                      },
                      law_);
}

std::span<const double> MevModel::samples() const noexcept {
    if (const auto* e = std::get_if<Empirical>(&law_)) return {e->samples->data(), e->samples->size()};
    return {};
}

MevModel MevModel::scaled(double c) const {
    require(std::isfinite(c) && c > 0.0, "scale factor must be positive");
    return std::visit(overloaded{
                          [c](const PointMass& m) { return point_mass(c * m.mu); },
                          [c](const Exponential& m) { return exponential(c * m.mean); },
                          [c](const LogNormal& m) { return lognormal(m.mu_log + std::log(c), m.sigma_log); },
                          [c](const Uniform& m) { return uniform(c * m.a, c * m.b); },
                          [c](const Empirical& m) {
                              std::vector<double> v(*m.samples);
                              for (double& s : v) s *= c;
                              return empirical(std::move(v));
                          },
                      },
                      law_);
}

double mev_mean(const MevModel& model) { return model.mean(); }

double mev_sample(const MevModel& model, Engine& rng) { return model.sample(rng); }

// -------------------------------------------------------------------- market

GammaRule GammaRule::max_haircut(double epsilon) {
    require(std::isfinite(epsilon) && epsilon >= 0.0 && epsilon < 1.0, "gamma.epsilon must lie in [0, 1)");
    return GammaRule{Kind::MaxHaircut, epsilon};
}

std::size_t MarketParams::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < buyers.size(); ++i)
        if (buyers[i].id == id) return i;
    throw Error(ErrorKind::ValidationError, "unknown buyer id '" + id + "'");
}

const BuyerSpec& MarketParams::buyer(const std::string& id) const { return buyers[index_of(id)]; }

void validate(const MarketParams& market) {
    require(market.tickets >= 1, "market.tickets must be a positive integer");
    require(!market.buyers.empty(), "market.buyers must be nonempty");
    std::set<std::string> seen;
    for (const auto& b : market.buyers) {
        require(!b.id.empty(), "buyer id must be nonempty");
        require(seen.insert(b.id).second, "duplicate buyer id '" + b.id + "'");
        require(std::isfinite(b.cost_of_capital) && b.cost_of_capital >= 0.0,
                "buyer '" + b.id + "': cost_of_capital (r) must be nonnegative");
    }
    if (market.pbs) {
        require(market.pbs->joint_samples >= 1, "market.pbs.joint_samples must be positive");
        const auto& g = market.pbs->gamma_rule;
        require(g.epsilon >= 0.0 && g.epsilon < 1.0, "market.pbs.gamma.epsilon must lie in [0, 1)");
    }
}

} // namespace etm
