#pragma once

#include "etm/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace etm {

// Risk-adjustment function applied to a buyer's per-slot profit.
//   RiskNeutral   x                       on all reals
//   ExpConcave    (1 - exp(-alpha x))/alpha  for x > 0, else 0
//   PowerConcave  x^gamma                  for x > 0, else 0
class RiskProfile {
public:
    enum class Kind { RiskNeutral, ExpConcave, PowerConcave };

    static RiskProfile neutral() { return RiskProfile(Kind::RiskNeutral, 0.0); }
    static RiskProfile exp_concave(double alpha);
    static RiskProfile power_concave(double gamma);

    Kind kind() const noexcept { return kind_; }
    double param() const noexcept { return param_; }
    bool is_neutral() const noexcept { return kind_ == Kind::RiskNeutral; }
    // PowerConcave with gamma = 1 is linear on x > 0 but still clipped.
    bool is_strictly_concave() const noexcept;

    double operator()(double x) const noexcept;

    bool operator==(const RiskProfile&) const = default;

private:
    RiskProfile(Kind kind, double param) : kind_(kind), param_(param) {}

    Kind kind_;
    double param_;
};

double eval_pi(const RiskProfile& profile, double x);

struct PointMass {
    double mu;
};
struct Exponential {
    double mean;
};
struct LogNormal {
    double mu_log;
    double sigma_log;
};
struct Uniform {
    double a;
    double b;
};
struct Empirical {
    std::shared_ptr<const std::vector<double>> samples;
    double mean;
    double max;
};

// Nonnegative law with finite mean. Immutable; copies share Empirical storage.
class MevModel {
public:
    using Variant = std::variant<PointMass, Exponential, LogNormal, Uniform, Empirical>;

    static MevModel point_mass(double mu);
    static MevModel exponential(double mean);
    static MevModel lognormal(double mu_log, double sigma_log);
    static MevModel uniform(double a, double b);
    static MevModel empirical(std::vector<double> samples);

    const Variant& law() const noexcept { return law_; }
    std::string kind_name() const;

    double mean() const noexcept;
    double variance() const noexcept;
    // +inf for unbounded support.
    double ess_sup() const noexcept;
    double ess_inf() const noexcept;
    double quantile(double p) const;
    // Density of the continuous kinds; 0 for atoms.
    double density(double x) const;
    bool is_degenerate() const noexcept;

    double sample(Engine& rng) const;

    // Empirical samples, empty for other kinds.
    std::span<const double> samples() const noexcept;

    MevModel scaled(double c) const;

private:
    explicit MevModel(Variant law) : law_(std::move(law)) {}

    Variant law_;
};

double mev_mean(const MevModel& model);
double mev_sample(const MevModel& model, Engine& rng);

struct GammaRule {
    enum class Kind { MaxHaircut, SecondMax };
    Kind kind = Kind::SecondMax;
    double epsilon = 0.0;

    static GammaRule max_haircut(double epsilon);
    static GammaRule second_max() { return {}; }
};

struct PbsConfig {
    std::vector<MevModel> non_buyer_abilities;
    GammaRule gamma_rule;
    std::size_t joint_samples = 200'000;
    std::uint64_t seed = 0;
    // Drop the ticket holder's own ability from the PBS price for their slot.
    bool exclude_self = false;
};

struct BuyerSpec {
    std::string id;
    double cost_of_capital = 0.0;
    RiskProfile risk = RiskProfile::neutral();
    MevModel mev = MevModel::point_mass(0.0);
};

struct MarketParams {
    std::int64_t tickets = 1;
    std::vector<BuyerSpec> buyers;
    std::optional<PbsConfig> pbs;

    const BuyerSpec& buyer(const std::string& id) const;
    std::size_t index_of(const std::string& id) const;
};

// Throws ValidationError naming the offending field.
void validate(const MarketParams& market);

struct SlotOutcome {
    std::uint64_t slot = 0;
    std::string winner_id;
    double realized_mev = 0.0;
    double pnl = 0.0;
    double portfolio_before = 0.0;
    double portfolio_after = 0.0;
    bool exercised_self = true;
};

} // namespace etm
