#pragma once

#include <cstdint>
#include <random>

namespace etm {

using Engine = std::mt19937_64;

// Named substreams derived from one master seed. Each consumer draws from its
// own stream, so instrumentation added to one never shifts the others.
enum class Stream : std::uint32_t {
    Winner = 1,
    Mev = 2,
    Abilities = 3,
    Delay = 4,
    PbsDerive = 5,
};

// `block` splits a stream further (fixed-size sample blocks, batch runs) so
// parallel consumers reproduce the serial draw sequence exactly.
inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t block = 0) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(block),
        static_cast<std::uint32_t>(block >> 32),
    };
    return Engine(seq);
}

} // namespace etm
