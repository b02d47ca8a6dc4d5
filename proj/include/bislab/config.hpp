#pragma once

#include "bislab/longtail.hpp"
#include "bislab/trainer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bislab {

/// Everything one experiment needs, filled from a config file plus
/// command-line overrides.
///
/// File format: flat `key = value` lines under `[section]` headers, `#` or `;`
/// comments. Sections: data, augment, train, finetune, bis, grid. Unknown
/// sections or keys are rejected.
struct ExperimentConfig {
    LongTailSpec data;
    std::uint64_t data_seed = 1;
    std::string data_path;  // load a dumped dataset instead of generating

    std::optional<double> weak_sigma;
    std::optional<double> strong_sigma;
    std::optional<double> drop_prob;

    TrainConfig train;
    std::uint64_t train_seed = 1;

    // Classifier fine-tuning stage; anything unset falls back to [train].
    int finetune_epochs = 30;
    SamplerKind finetune_labeled_sampler = SamplerKind::Mean;
    SamplerKind finetune_unlabeled_sampler = SamplerKind::Mean;
    std::uint64_t finetune_seed = 1;

    BisConfig bis;

    // Grid axes.
    std::vector<double> grid_lambdas{5.0, 10.0, 20.0};
    std::vector<double> grid_betas{1.0, 2.0};
    std::vector<std::pair<SamplerKind, SamplerKind>> grid_pairs{
        {SamplerKind::Random, SamplerKind::Random}};
    std::vector<ScheduleKind> grid_schedules;
    std::vector<double> grid_qs;  // empty: train.q only
    std::vector<std::uint64_t> grid_seeds{1, 2, 3};
    bool grid_finetune = false;

    /// Applies one `section.key = value` setting; throws ConfigError.
    void set(const std::string& dotted_key, const std::string& value);
    /// `section.key=value`.
    void apply_override(const std::string& assignment);

    /// Training config for the fine-tune stage.
    TrainConfig finetune_config() const;
    /// Training config with the bis schedule attached.
    TrainConfig bis_config() const;
    AugmentConfig augment() const;

    void validate() const;
};

ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

/// Every recognized `section.key`, in file order.
const std::vector<std::string>& config_keys();

/// Renders a config in the same format load_config reads.
std::string render_config(const ExperimentConfig& cfg);

} // namespace bislab
