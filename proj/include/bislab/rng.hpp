#pragma once

#include <cstdint>
#include <random>

namespace bislab {

using Rng = std::mt19937_64;

/// Named sub-streams. Each consumer of randomness owns its own stream so that
/// changing one part of an experiment does not shift the draws of another.
enum class Stream : std::uint32_t {
    ClassMeans = 1,
    LabeledPoints = 2,
    UnlabeledPoints = 3,
    TestPoints = 4,
    ModelInit = 10,
    LabeledBatches = 11,
    UnlabeledBatches = 12,
    Augment = 13,
    KeepDecision = 14,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace bislab
