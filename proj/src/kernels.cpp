#include "etm/kernels.hpp"

#include "etm/pbs.hpp"

#include <algorithm>
#include <numeric>

namespace etm::kernels {

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

double block_gain(const RiskProfile& profile, std::span<const double> samples, double price, std::size_t block) {
    const std::size_t begin = block * kBlockSize;
    const std::size_t end = std::min(samples.size(), begin + kBlockSize);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += profile(samples[i] - price);
    return acc;
}

struct PbsWorkspace {
    std::vector<double> abilities;
    std::vector<double> others;
};

void draw_pbs_block(std::span<const MevModel> buyers, std::span<const MevModel> non_buyers, const GammaRule& rule,
                    bool exclude_self, std::size_t samples, std::uint64_t seed, std::size_t block, PbsDraws& out,
                    std::vector<std::size_t>& outsourced_row) {
    const std::size_t begin = block * kBlockSize;
    const std::size_t end = std::min(samples, begin + kBlockSize);
    const std::size_t nb = buyers.size();

    Engine rng = make_engine(seed, Stream::PbsDerive, block);
    PbsWorkspace ws;
    ws.abilities.resize(nb + non_buyers.size());
    ws.others.reserve(ws.abilities.size());

    for (std::size_t s = begin; s < end; ++s) {
        for (std::size_t b = 0; b < nb; ++b) ws.abilities[b] = buyers[b].sample(rng);
        for (std::size_t j = 0; j < non_buyers.size(); ++j) ws.abilities[nb + j] = non_buyers[j].sample(rng);

        const double full_gamma = gamma_eval(rule, ws.abilities);
        out.gamma[s] = full_gamma;
        for (std::size_t b = 0; b < nb; ++b) {
            double g = full_gamma;
            if (exclude_self) {
                ws.others.assign(ws.abilities.begin(), ws.abilities.end());
                ws.others.erase(ws.others.begin() + static_cast<std::ptrdiff_t>(b));
                g = gamma_eval(rule, ws.others);
            }
            const double x = ws.abilities[b];
            out.payoffs[b][s] = std::max(g, x);
            if (g >= x) ++outsourced_row[b];
        }
    }
}

PbsDraws allocate(std::size_t buyers, std::size_t samples) {
    PbsDraws d;
    d.payoffs.assign(buyers, std::vector<double>(samples));
    d.outsourced.assign(buyers, 0);
    d.gamma.assign(samples, 0.0);
    return d;
}

} // namespace

double empirical_gain_serial(const RiskProfile& profile, std::span<const double> samples, double price) {
    double acc = 0.0;
    for (double x : samples) acc += profile(x - price);
    return acc / static_cast<double>(samples.size());
}

double empirical_gain(const RiskProfile& profile, std::span<const double> samples, double price) {
    const std::size_t blocks = block_count(samples.size());
    std::vector<double> partial(blocks, 0.0);
    const auto nblocks = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < nblocks; ++k)
        partial[static_cast<std::size_t>(k)] = block_gain(profile, samples, price, static_cast<std::size_t>(k));
    const double acc = std::accumulate(partial.begin(), partial.end(), 0.0);
    return acc / static_cast<double>(samples.size());
}

PbsDraws draw_pbs_payoffs_serial(std::span<const MevModel> buyer_abilities,
                                 std::span<const MevModel> non_buyer_abilities, const GammaRule& rule,
                                 bool exclude_self, std::size_t samples, std::uint64_t seed) {
    PbsDraws out = allocate(buyer_abilities.size(), samples);
    for (std::size_t k = 0; k < block_count(samples); ++k)
        draw_pbs_block(buyer_abilities, non_buyer_abilities, rule, exclude_self, samples, seed, k, out,
                       out.outsourced);
    return out;
}

PbsDraws draw_pbs_payoffs(std::span<const MevModel> buyer_abilities, std::span<const MevModel> non_buyer_abilities,
                          const GammaRule& rule, bool exclude_self, std::size_t samples, std::uint64_t seed) {
    PbsDraws out = allocate(buyer_abilities.size(), samples);
    const std::size_t blocks = block_count(samples);
    std::vector<std::vector<std::size_t>> counts(blocks, std::vector<std::size_t>(buyer_abilities.size(), 0));
    const auto nblocks = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < nblocks; ++k) {
        const auto block = static_cast<std::size_t>(k);
        draw_pbs_block(buyer_abilities, non_buyer_abilities, rule, exclude_self, samples, seed, block, out,
                       counts[block]);
    }
    for (const auto& row : counts)
        for (std::size_t b = 0; b < row.size(); ++b) out.outsourced[b] += row[b];
    return out;
}

} // namespace etm::kernels
