#pragma once

#include "bislab/longtail.hpp"
#include "bislab/metrics.hpp"
#include "bislab/micro_model.hpp"
#include "bislab/sampling.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bislab {

struct BisConfig {
    ScheduleKind schedule = ScheduleKind::Parabolic;
    SamplerKind sampler_a = SamplerKind::Random;
    SamplerKind sampler_b = SamplerKind::Mean;
    /// Epoch index at which alpha reaches its end value. 0 means epochs - 1,
    /// so the last epoch samples from B alone.
    int t_max = 0;

    BisSchedule schedule_for(int epochs) const;
};

struct TrainConfig {
    int epochs = 30;
    int steps_per_epoch = 200;
    int batch_labeled = 64;
    int batch_unlabeled = 64;
    double tau = 0.95;
    double lambda_u = 1.0;
    double q = 1.0 / 3.0;
    double lr = 0.05;
    int hidden = 64;
    SamplerKind labeled_sampler = SamplerKind::Random;
    SamplerKind unlabeled_sampler = SamplerKind::Random;
    std::optional<BisConfig> bis;
    /// Classifier fine-tuning runs at lr * finetune_lr_scale.
    double finetune_lr_scale = 0.05;

    /// Throws ConfigError.
    void validate() const;
};

/// What the trainer may see. Hidden unlabeled labels are carried separately
/// and only ever reach pseudo_diagnostics.
struct TrainingView {
    const LabeledSet& labeled;
    const Matrix& unlabeled_points;
    const LabeledSet& test;
    AugmentConfig augment;
    std::span<const int> hidden_labels_for_eval = {};
};

/// View over a generated dataset with augmentation scaled to its noise level.
TrainingView make_view(const SyntheticData& data, double noise_sigma);

enum class Stage { Joint, Finetune, Bis };
std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

struct EpochMetrics {
    int epoch = 0;
    std::optional<double> alpha;
    double mean_loss = 0.0;
    std::vector<double> labeled_probs;          // strategy used this epoch
    std::vector<double> labeled_draw_fraction;  // realized class mix of labeled batches
    MetricsReport report;
};

struct RunRecord {
    std::string run_id;
    Stage stage = Stage::Joint;
    std::uint64_t seed = 0;
    TrainConfig config;
    std::vector<EpochMetrics> history;
    std::optional<MetricsReport> final_report;
    std::string feature_hash;
    std::string parameter_hash;
    double wall_seconds = 0.0;
};

struct TrainResult {
    MicroModel model;
    RunRecord record;
};

struct LabeledBatch {
    Matrix points;
    std::vector<int> targets;
};

/// Each slot: class j ~ strategy, then a uniform example of class j.
LabeledBatch labeled_batch(const SamplerStrategy& strategy, const LabeledSet& set, Rng& rng,
                           int size);

/// Throws ConfigError when some class has mass but no labeled example.
void check_strategy_coverage(const SamplerStrategy& strategy, const LabeledSet& set);

struct PseudoLabelBatch {
    std::vector<PseudoLabelRecord> records;
    Matrix kept_points;  // strong-augmented
    std::vector<int> kept_targets;
};

struct PseudoLabelRngs {
    Rng& augment;
    Rng& keep;
};

/// Weak-augment, predict, threshold at tau, then keep with probability
/// mu[pseudo]^q. Kept samples are paired with a strong augmentation.
PseudoLabelBatch pseudo_label_step(const MicroModel& model, const Matrix& unlabeled_points,
                                   std::span<const std::int64_t> rows,
                                   const SamplerStrategy& strategy, double q, double tau,
                                   const AugmentConfig& augment, PseudoLabelRngs rngs);

/// Test-set predictions, ties to the lowest class index.
std::vector<int> predict_labels(const MicroModel& model, const Matrix& points);

/// Test-set report with no pseudo-label fields.
MetricsReport evaluate(const MicroModel& model, const LabeledSet& test);

TrainResult train_joint(const TrainConfig& config, const TrainingView& data, std::uint64_t seed);

/// Freezes the feature extractor of a copy of `model` and trains the
/// classifier with config's samplers at lr * finetune_lr_scale.
TrainResult finetune_classifier(const MicroModel& model, const TrainConfig& config,
                                const TrainingView& data, std::uint64_t seed);

TrainResult train_bis(const TrainConfig& config, const TrainingView& data, std::uint64_t seed);

} // namespace bislab
