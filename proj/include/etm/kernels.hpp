#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial reference twin with
// the same signature; tests pin the pair together and the benchmark target
// compares them.
//
// Work is cut into fixed blocks of kBlockSize independent of the thread
// count, and partial results are merged in block order, so the parallel
// kernels are bit-reproducible on any number of threads.

#include "etm/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace etm::kernels {

inline constexpr std::size_t kBlockSize = 4096;

// Mean of profile(x - price) over the samples.
double empirical_gain(const RiskProfile& profile, std::span<const double> samples, double price);
double empirical_gain_serial(const RiskProfile& profile, std::span<const double> samples, double price);

struct PbsDraws {
    // payoffs[b][s] = max(gamma_s, X_{b,s}).
    std::vector<std::vector<double>> payoffs;
    // Per-buyer count of samples with gamma >= X_b.
    std::vector<std::size_t> outsourced;
    // Gamma computed from the full ability vector, one per sample.
    std::vector<double> gamma;
};

// Joint i.i.d. draws of all abilities, PBS price, and derived payoffs.
// Block k of the sample range uses make_engine(seed, Stream::PbsDerive, k).
PbsDraws draw_pbs_payoffs(std::span<const MevModel> buyer_abilities, std::span<const MevModel> non_buyer_abilities,
                          const GammaRule& rule, bool exclude_self, std::size_t samples, std::uint64_t seed);
PbsDraws draw_pbs_payoffs_serial(std::span<const MevModel> buyer_abilities,
                                 std::span<const MevModel> non_buyer_abilities, const GammaRule& rule,
                                 bool exclude_self, std::size_t samples, std::uint64_t seed);

} // namespace etm::kernels
