#pragma once

#include "bislab/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bislab {

/// Per-class sample counts N_k. Produced sorted head-first by the long-tail
/// generators.
using ClassCounts = std::vector<std::int64_t>;

enum class SamplerKind { Random, Mean, Reverse, Blended };

std::string_view to_string(SamplerKind kind);
/// Parses "random", "mean" or "reverse". "blended" is not a configurable kind.
SamplerKind parse_sampler_kind(std::string_view name);

/// Class-selection distribution mu. Entries are non-negative and sum to one.
class SamplerStrategy {
public:
    SamplerStrategy(std::vector<double> probs, SamplerKind kind);

    std::span<const double> probs() const noexcept { return probs_; }
    double operator[](std::size_t j) const { return probs_[j]; }
    std::size_t size() const noexcept { return probs_.size(); }
    SamplerKind kind() const noexcept { return kind_; }

private:
    std::vector<double> probs_;
    SamplerKind kind_;
};

SamplerStrategy random_probs(std::span<const std::int64_t> counts);
SamplerStrategy mean_probs(int k);
SamplerStrategy reverse_probs(std::span<const std::int64_t> counts);

/// Builds the named base strategy over `counts`.
SamplerStrategy make_strategy(SamplerKind kind, std::span<const std::int64_t> counts);

struct KeepProbConfig {
    double q = 1.0 / 3.0;
};

/// mu^q with 0^0 = 1.
double keep_prob(double mu, KeepProbConfig cfg);

/// alpha * a + (1 - alpha) * b, element-wise.
SamplerStrategy bis_blend(double alpha, const SamplerStrategy& a, const SamplerStrategy& b);

enum class ScheduleKind { Equal, Linear, Cosine, Parabolic };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Decay rule for the blend weight alpha over epochs 0..t_max.
struct BisSchedule {
    ScheduleKind kind = ScheduleKind::Parabolic;
    int t_max = 1;
};

/// Blend weight on sampler A at epoch t. Exact 1 at t = 0 and exact 0 at
/// t = t_max for the decaying kinds; constant 0.5 for Equal.
double alpha_at(const BisSchedule& schedule, int t);

/// Inverse-CDF categorical sampler over a fixed strategy.
class ClassDrawer {
public:
    explicit ClassDrawer(const SamplerStrategy& strategy);

    int draw(Rng& rng) const;
    std::size_t size() const noexcept { return cdf_.size(); }

private:
    std::vector<double> cdf_;
    int last_positive_ = 0;
};

/// One categorical draw; builds the CDF each call, prefer ClassDrawer in loops.
int draw_class(const SamplerStrategy& strategy, Rng& rng);

} // namespace bislab
