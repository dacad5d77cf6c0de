#pragma once

#include "etm/equilibrium.hpp"
#include "etm/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace etm {

inline constexpr std::uint64_t kTraceDefaultLimit = 10'000;
inline constexpr std::size_t kMinDelayObservations = 1'000;

struct SimOptions {
    std::uint64_t slots = 1;
    std::uint64_t seed = 0;
    // Unset: keep the trace only when slots <= kTraceDefaultLimit.
    std::optional<bool> trace;
};

struct SimReport {
    std::uint64_t slots = 0;
    std::uint64_t seed = 0;
    double price = 0.0;
    std::map<std::string, std::uint64_t> wins;
    double protocol_revenue = 0.0;
    double realized_mev_total = 0.0;
    double chi_hat = 0.0;
    double chi_analytic = 0.0;
    std::map<std::string, double> per_buyer_pnl;
    // Delay (slots until the tagged ticket wins, >= 1) -> count.
    std::map<std::uint64_t, std::uint64_t> win_delay_histogram;
    double outsource_fraction = 0.0;
    std::vector<SlotOutcome> trace;
};

// Slot-by-slot lottery at the stationary equilibrium price. With PBS
// configured, abilities are drawn each slot and the winner takes
// max(gamma, X_winner). Independent substreams (winner, mev, abilities,
// delay) derive from options.seed. Throws InvalidHoldings if the equilibrium
// holdings do not sum to N.
SimReport run_slots(const MarketParams& market, const Equilibrium& eq, const SimOptions& options);

// Independent runs, one per seed, in seed order. The OpenMP version runs the
// seeds concurrently and returns exactly what the serial version returns.
std::vector<SimReport> run_slots_batch(const MarketParams& market, const Equilibrium& eq, std::uint64_t slots,
                                       std::span<const std::uint64_t> seeds);
std::vector<SimReport> run_slots_batch_serial(const MarketParams& market, const Equilibrium& eq,
                                              std::uint64_t slots, std::span<const std::uint64_t> seeds);

// Delta-method standard error of chi_hat after `slots` slots, from the
// holdings mixture of the (PBS-reduced) winner payoff laws.
double chi_hat_standard_error(const MarketParams& market, const Equilibrium& eq, std::uint64_t slots);

struct DelayStats {
    double mean_delay;
    double standard_error;
    double gof_statistic;
    int degrees_of_freedom;
    double p_value;
    bool pass;
};

inline constexpr double kDelaySignificance = 0.01;

// Compares the tagged-ticket delay histogram with Geometric(1/N): mean
// against N and a chi-square goodness-of-fit with the tail pooled so every
// expected bucket count is at least 5. Throws InsufficientData below
// kMinDelayObservations completed delays.
DelayStats win_delay_stats(const SimReport& report, std::int64_t tickets);

} // namespace etm
