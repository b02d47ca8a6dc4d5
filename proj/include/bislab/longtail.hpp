#pragma once

#include "bislab/rng.hpp"
#include "bislab/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bislab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Declarative description of an imbalanced labeled + unlabeled dataset.
struct LongTailSpec {
    int k = 5;
    std::int64_t n1 = 100;
    double lambda = 20.0;      // N_1 / N_K
    double beta = 2.0;         // M / N
    int dim = 8;
    double class_sep = 2.2;
    double noise_sigma = 1.0;
    std::int64_t test_per_class = 200;

    /// Throws ConfigError naming the violated constraint.
    void validate() const;
};

/// Labeled points with per-class row index.
struct LabeledSet {
    Matrix points;
    std::vector<int> labels;
    std::vector<std::vector<std::int64_t>> per_class_index;

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(labels.size()); }
    int num_classes() const noexcept { return static_cast<int>(per_class_index.size()); }
    ClassCounts class_counts() const;
};

/// Unlabeled points. `hidden_labels` exist for evaluation only; training entry
/// points take `points` alone.
struct UnlabeledSet {
    Matrix points;
    std::vector<int> hidden_labels;

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(points.rows()); }
};

struct SyntheticData {
    LabeledSet labeled;
    UnlabeledSet unlabeled;
    LabeledSet test;
};

/// Half-up rounding used for every fractional count.
std::int64_t round_count(double value);

/// Geometric interpolation from n1 down to n1 / lambda over k classes.
ClassCounts class_count_profile(int k, std::int64_t n1, double lambda);

/// Same skew as `labeled`, scaled by beta.
ClassCounts unlabeled_count_profile(std::span<const std::int64_t> labeled, double beta);

/// Gaussian-mixture dataset. Pure function of (spec, seed).
SyntheticData make_synthetic(const LongTailSpec& spec, std::uint64_t seed);

/// Rebuilds per_class_index from labels.
void index_by_class(LabeledSet& set, int k);

struct AugmentConfig {
    double weak_sigma = 0.05;
    double strong_sigma = 0.5;
    double drop_prob = 0.1;

    /// Defaults scaled by the data's within-class noise.
    static AugmentConfig for_noise(double noise_sigma);
};

Vector weak_augment(const Eigen::Ref<const Vector>& x, const AugmentConfig& cfg, Rng& rng);
Vector strong_augment(const Eigen::Ref<const Vector>& x, const AugmentConfig& cfg, Rng& rng);

} // namespace bislab
