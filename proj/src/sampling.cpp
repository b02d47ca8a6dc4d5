#include "bislab/sampling.hpp"

#include "bislab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bislab {

namespace {

constexpr double kSumTolerance = 1e-9;

std::vector<double> normalized(std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights)
        w /= total;
    return weights;
}

} // namespace

std::string_view to_string(SamplerKind kind) {
    switch (kind) {
    case SamplerKind::Random: return "random";
    case SamplerKind::Mean: return "mean";
    case SamplerKind::Reverse: return "reverse";
    case SamplerKind::Blended: return "blended";
    }
    return "unknown";
}

SamplerKind parse_sampler_kind(std::string_view name) {
    if (name == "random")
        return SamplerKind::Random;
    if (name == "mean")
        return SamplerKind::Mean;
    if (name == "reverse")
        return SamplerKind::Reverse;
    throw InvalidInput("unknown sampler '" + std::string(name) +
                       "' (expected random, mean or reverse)");
}

SamplerStrategy::SamplerStrategy(std::vector<double> probs, SamplerKind kind)
    : probs_(std::move(probs)), kind_(kind) {
    if (probs_.empty())
        throw InvalidInput("sampler strategy needs at least one class");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0))
            throw InvalidInput("sampler probability outside [0, 1]");
        total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance)
        throw InvalidInput("sampler probabilities do not sum to 1");
}

SamplerStrategy random_probs(std::span<const std::int64_t> counts) {
    if (counts.empty())
        throw InvalidInput("random_probs: empty counts");
    std::vector<double> w;
    w.reserve(counts.size());
    std::int64_t total = 0;
    for (auto c : counts) {
        if (c < 0)
            throw InvalidInput("random_probs: negative count");
        total += c;
        w.push_back(static_cast<double>(c));
    }
    if (total == 0)
        throw InvalidInput("random_probs: all counts are zero");
    return {normalized(std::move(w)), SamplerKind::Random};
}

SamplerStrategy mean_probs(int k) {
    if (k < 2)
        throw InvalidInput("mean_probs: need at least two classes");
    return {std::vector<double>(static_cast<std::size_t>(k), 1.0 / k), SamplerKind::Mean};
}

SamplerStrategy reverse_probs(std::span<const std::int64_t> counts) {
    if (counts.empty())
        throw InvalidInput("reverse_probs: empty counts");
    std::vector<double> w;
    w.reserve(counts.size());
    for (auto c : counts) {
        if (c < 1)
            throw InvalidInput("reverse_probs: every count must be >= 1");
        w.push_back(1.0 / static_cast<double>(c));
    }
    return {normalized(std::move(w)), SamplerKind::Reverse};
}

SamplerStrategy make_strategy(SamplerKind kind, std::span<const std::int64_t> counts) {
    switch (kind) {
    case SamplerKind::Random: return random_probs(counts);
    case SamplerKind::Mean: return mean_probs(static_cast<int>(counts.size()));
    case SamplerKind::Reverse: return reverse_probs(counts);
    case SamplerKind::Blended: break;
    }
    throw InvalidInput("make_strategy: blended strategies come from bis_blend");
}

double keep_prob(double mu, KeepProbConfig cfg) {
    if (!(mu >= 0.0 && mu <= 1.0))
        throw InvalidInput("keep_prob: mu outside [0, 1]");
    if (!(cfg.q >= 0.0))
        throw InvalidInput("keep_prob: q must be >= 0");
    if (cfg.q == 0.0)
        return 1.0;
    return std::pow(mu, cfg.q);
}

SamplerStrategy bis_blend(double alpha, const SamplerStrategy& a, const SamplerStrategy& b) {
    if (a.size() != b.size())
        throw InvalidInput("bis_blend: strategies have different class counts");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidInput("bis_blend: alpha outside [0, 1]");
    std::vector<double> out(a.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = alpha * a[j] + (1.0 - alpha) * b[j];
    return {std::move(out), SamplerKind::Blended};
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::Equal: return "equal";
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::Parabolic: return "parabolic";
    }
    return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "equal")
        return ScheduleKind::Equal;
    if (name == "linear")
        return ScheduleKind::Linear;
    if (name == "cosine")
        return ScheduleKind::Cosine;
    if (name == "parabolic")
        return ScheduleKind::Parabolic;
    throw InvalidInput("unknown schedule '" + std::string(name) +
                       "' (expected equal, linear, cosine or parabolic)");
}

double alpha_at(const BisSchedule& schedule, int t) {
    if (schedule.t_max < 1)
        throw InvalidInput("alpha_at: t_max must be positive");
    if (t < 0 || t > schedule.t_max)
        throw InvalidInput("alpha_at: epoch outside [0, t_max]");
    if (schedule.kind == ScheduleKind::Equal)
        return 0.5;
    if (t == 0)
        return 1.0;
    if (t == schedule.t_max)
        return 0.0;

    const double x = static_cast<double>(t) / schedule.t_max;
    double alpha = 0.0;
    switch (schedule.kind) {
    case ScheduleKind::Linear: alpha = 1.0 - x; break;
    case ScheduleKind::Cosine: alpha = std::cos(x * std::numbers::pi / 2.0); break;
    case ScheduleKind::Parabolic: alpha = 1.0 - x * x; break;
    case ScheduleKind::Equal: break;
    }
    return std::clamp(alpha, 0.0, 1.0);
}

ClassDrawer::ClassDrawer(const SamplerStrategy& strategy) : cdf_(strategy.size()) {
    double running = 0.0;
    for (std::size_t j = 0; j < cdf_.size(); ++j) {
        running += strategy[j];
        cdf_[j] = running;
        if (strategy[j] > 0.0)
            last_positive_ = static_cast<int>(j);
    }
}

int ClassDrawer::draw(Rng& rng) const {
    const double u = uniform01(rng);
    // First class whose cumulative mass exceeds u; zero-mass classes share the
    // previous boundary and are never returned.
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end())
        return last_positive_;
    return static_cast<int>(it - cdf_.begin());
}

int draw_class(const SamplerStrategy& strategy, Rng& rng) {
    return ClassDrawer(strategy).draw(rng);
}

} // namespace bislab
