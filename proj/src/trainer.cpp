#include "bislab/trainer.hpp"

#include "bislab/error.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace bislab {

BisSchedule BisConfig::schedule_for(int epochs) const {
    return {schedule, t_max > 0 ? t_max : std::max(1, epochs - 1)};
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("invalid training config: " + msg); };
    if (epochs < 0)
        fail("epochs >= 0 required");
    if (steps_per_epoch < 1)
        fail("steps_per_epoch >= 1 required");
    if (batch_labeled < 1 || batch_unlabeled < 1)
        fail("batch sizes must be >= 1");
    if (!(tau > 0.0 && tau <= 1.0))
        fail("tau must lie in (0, 1]");
    if (!(lambda_u >= 0.0))
        fail("lambda_u >= 0 required");
    if (!(q >= 0.0))
        fail("q >= 0 required");
    if (!(lr > 0.0))
        fail("lr > 0 required");
    if (hidden < 1)
        fail("hidden >= 1 required");
    if (!(finetune_lr_scale > 0.0))
        fail("finetune_lr_scale > 0 required");
    if (labeled_sampler == SamplerKind::Blended || unlabeled_sampler == SamplerKind::Blended)
        fail("blended is not a configurable sampler");
    if (bis) {
        if (bis->sampler_a == SamplerKind::Blended || bis->sampler_b == SamplerKind::Blended)
            fail("blended is not a configurable sampler");
        if (bis->t_max < 0)
            fail("bis t_max >= 0 required");
        if (bis->t_max > 0 && bis->t_max < epochs - 1)
            fail("bis t_max must cover every epoch (t_max >= epochs - 1)");
    }
}

TrainingView make_view(const SyntheticData& data, double noise_sigma) {
    return {data.labeled, data.unlabeled.points, data.test, AugmentConfig::for_noise(noise_sigma),
            data.unlabeled.hidden_labels};
}

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::Joint: return "joint";
    case Stage::Finetune: return "finetune";
    case Stage::Bis: return "bis";
    }
    return "unknown";
}

Stage parse_stage(std::string_view name) {
    if (name == "joint")
        return Stage::Joint;
    if (name == "finetune")
        return Stage::Finetune;
    if (name == "bis")
        return Stage::Bis;
    throw InvalidInput("unknown stage '" + std::string(name) + "'");
}

void check_strategy_coverage(const SamplerStrategy& strategy, const LabeledSet& set) {
    if (static_cast<int>(strategy.size()) != set.num_classes())
        throw ConfigError("sampler covers " + std::to_string(strategy.size()) +
                          " classes but the labeled set has " +
                          std::to_string(set.num_classes()));
    for (std::size_t j = 0; j < strategy.size(); ++j)
        if (strategy[j] > 0.0 && set.per_class_index[j].empty())
            throw ConfigError("class " + std::to_string(j) +
                              " has sampling mass but no labeled examples");
}

namespace {

LabeledBatch labeled_batch(const ClassDrawer& drawer, const LabeledSet& set, Rng& rng, int size,
                           std::vector<std::int64_t>* draw_counts) {
    LabeledBatch batch{Matrix(size, set.points.cols()), std::vector<int>(size)};
    for (int s = 0; s < size; ++s) {
        const int j = drawer.draw(rng);
        const auto& rows = set.per_class_index[j];
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        batch.points.row(s) = set.points.row(rows[pick(rng)]);
        batch.targets[s] = j;
        if (draw_counts)
            ++(*draw_counts)[j];
    }
    return batch;
}

int argmax_row(const Matrix& m, Eigen::Index r) {
    int best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
        if (m(r, c) > m(r, best))
            best = static_cast<int>(c);
    return best;
}

} // namespace

LabeledBatch labeled_batch(const SamplerStrategy& strategy, const LabeledSet& set, Rng& rng,
                           int size) {
    check_strategy_coverage(strategy, set);
    return labeled_batch(ClassDrawer(strategy), set, rng, size, nullptr);
}

PseudoLabelBatch pseudo_label_step(const MicroModel& model, const Matrix& unlabeled_points,
                                   std::span<const std::int64_t> rows,
                                   const SamplerStrategy& strategy, double q, double tau,
                                   const AugmentConfig& augment, PseudoLabelRngs rngs) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix weak(n, unlabeled_points.cols());
    for (Eigen::Index i = 0; i < n; ++i)
        weak.row(i) = weak_augment(unlabeled_points.row(rows[i]).transpose(), augment, rngs.augment)
                          .transpose();
    const Matrix probs = predict_probs_batch(model, weak);

    PseudoLabelBatch out;
    out.records.reserve(rows.size());
    std::vector<Eigen::Index> kept_rows;
    const KeepProbConfig keep_cfg{q};
    for (Eigen::Index i = 0; i < n; ++i) {
        PseudoLabelRecord rec;
        rec.index = rows[i];
        rec.pseudo_label = argmax_row(probs, i);
        rec.confidence = probs(i, rec.pseudo_label);
        const double u = uniform01(rngs.keep);
        rec.kept = rec.confidence >= tau && u < keep_prob(strategy[rec.pseudo_label], keep_cfg);
        if (rec.kept)
            kept_rows.push_back(i);
        out.records.push_back(rec);
    }

    out.kept_points.resize(static_cast<Eigen::Index>(kept_rows.size()), unlabeled_points.cols());
    out.kept_targets.reserve(kept_rows.size());
    for (std::size_t s = 0; s < kept_rows.size(); ++s) {
        const Eigen::Index i = kept_rows[s];
        out.kept_points.row(static_cast<Eigen::Index>(s)) =
            strong_augment(unlabeled_points.row(rows[i]).transpose(), augment, rngs.augment)
                .transpose();
        out.kept_targets.push_back(out.records[i].pseudo_label);
    }
    return out;
}

std::vector<int> predict_labels(const MicroModel& model, const Matrix& points) {
    const Matrix probs = predict_probs_batch(model, points);
    std::vector<int> out(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index r = 0; r < points.rows(); ++r)
        out[r] = argmax_row(probs, r);
    return out;
}

MetricsReport evaluate(const MicroModel& model, const LabeledSet& test) {
    const auto preds = predict_labels(model, test.points);
    return make_report(confusion(preds, test.labels, model.num_classes()), {});
}

namespace {

struct EpochStrategies {
    SamplerStrategy labeled;
    SamplerStrategy unlabeled;
    std::optional<double> alpha;
};

using StrategyForEpoch = std::function<EpochStrategies(int epoch)>;

// The shared loop behind all three schemes.
void run_epochs(MicroModel& model, RunRecord& record, const TrainConfig& cfg, double lr,
                const TrainingView& data, std::uint64_t seed, const StrategyForEpoch& strategies) {
    const int k = model.num_classes();
    const auto num_unlabeled = static_cast<std::int64_t>(data.unlabeled_points.rows());
    if (data.labeled.num_classes() != k || data.test.num_classes() != k)
        throw ConfigError("dataset class count does not match the model");
    if (data.labeled.points.cols() != model.dim())
        throw ConfigError("dataset dimension does not match the model");

    Rng labeled_rng = make_rng(seed, Stream::LabeledBatches);
    Rng unlabeled_rng = make_rng(seed, Stream::UnlabeledBatches);
    Rng augment_rng = make_rng(seed, Stream::Augment);
    Rng keep_rng = make_rng(seed, Stream::KeepDecision);

    std::vector<double> ones(static_cast<std::size_t>(cfg.batch_labeled), 1.0);
    std::vector<std::int64_t> rows(static_cast<std::size_t>(cfg.batch_unlabeled));
    std::vector<PseudoLabelRecord> epoch_records;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const EpochStrategies strat = strategies(epoch);
        check_strategy_coverage(strat.labeled, data.labeled);
        const ClassDrawer drawer(strat.labeled);
        std::vector<std::int64_t> draw_counts(static_cast<std::size_t>(k), 0);
        epoch_records.clear();
        double loss_sum = 0.0;

        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            const LabeledBatch batch =
                labeled_batch(drawer, data.labeled, labeled_rng, cfg.batch_labeled, &draw_counts);
            LossAndGrad total = loss_and_grad(model, batch.points, batch.targets, ones);

            if (num_unlabeled > 0) {
                std::uniform_int_distribution<std::int64_t> pick(0, num_unlabeled - 1);
                for (auto& r : rows)
                    r = pick(unlabeled_rng);
                PseudoLabelBatch pl =
                    pseudo_label_step(model, data.unlabeled_points, rows, strat.unlabeled, cfg.q,
                                      cfg.tau, data.augment, {augment_rng, keep_rng});
                const auto kept = static_cast<double>(pl.kept_targets.size());
                if (cfg.lambda_u > 0.0 && kept > 0.0) {
                    // Mean over the whole unlabeled batch, rejected samples count as zero.
                    const std::vector<double> w(pl.kept_targets.size(), 1.0);
                    const LossAndGrad u = loss_and_grad(model, pl.kept_points, pl.kept_targets, w);
                    const double scale = cfg.lambda_u * kept / cfg.batch_unlabeled;
                    total.loss += scale * u.loss;
                    total.grad.add_scaled(u.grad, scale);
                }
                epoch_records.insert(epoch_records.end(), pl.records.begin(), pl.records.end());
            }

            if (!std::isfinite(total.loss)) {
                std::ostringstream os;
                os << "non-finite loss at epoch " << epoch << " step " << step
                   << "; last finite epoch " << epoch - 1;
                throw TrainingDiverged(os.str(), epoch - 1);
            }
            loss_sum += total.loss;
            apply_update(model, total.grad, lr);
        }

        for (auto& rec : epoch_records)
            rec.hidden_true_label =
                data.hidden_labels_for_eval.empty()
                    ? -1
                    : data.hidden_labels_for_eval[static_cast<std::size_t>(rec.index)];

        EpochMetrics em;
        em.epoch = epoch;
        em.alpha = strat.alpha;
        em.mean_loss = loss_sum / cfg.steps_per_epoch;
        em.labeled_probs.assign(strat.labeled.probs().begin(), strat.labeled.probs().end());
        const double draws = static_cast<double>(cfg.steps_per_epoch) * cfg.batch_labeled;
        for (auto c : draw_counts)
            em.labeled_draw_fraction.push_back(static_cast<double>(c) / draws);
        const auto preds = predict_labels(model, data.test.points);
        em.report = make_report(confusion(preds, data.test.labels, k),
                                pseudo_diagnostics(epoch_records, k));
        record.history.push_back(std::move(em));
    }
}

RunRecord new_record(Stage stage, std::uint64_t seed, const TrainConfig& config) {
    RunRecord record;
    record.stage = stage;
    record.seed = seed;
    record.config = config;
    return record;
}

TrainResult finish(MicroModel model, RunRecord record, const LabeledSet& test,
                   std::chrono::steady_clock::time_point t0) {
    record.final_report = record.history.empty() ? evaluate(model, test) : record.history.back().report;
    record.feature_hash = feature_hash(model);
    record.parameter_hash = parameter_hash(model);
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(model), std::move(record)};
}

StrategyForEpoch fixed_strategies(const TrainConfig& cfg, const ClassCounts& counts) {
    SamplerStrategy labeled = make_strategy(cfg.labeled_sampler, counts);
    SamplerStrategy unlabeled = make_strategy(cfg.unlabeled_sampler, counts);
    return [=](int) { return EpochStrategies{labeled, unlabeled, std::nullopt}; };
}

MicroModel fresh_model(const TrainConfig& cfg, const TrainingView& data, std::uint64_t seed) {
    Rng init = make_rng(seed, Stream::ModelInit);
    return MicroModel::initialized(static_cast<int>(data.labeled.points.cols()), cfg.hidden,
                                   data.labeled.num_classes(), init);
}

} // namespace

TrainResult train_joint(const TrainConfig& config, const TrainingView& data, std::uint64_t seed) {
    config.validate();
    if (config.bis)
        throw ConfigError("train_joint: configuration carries a bis schedule; use train_bis");
    const auto t0 = std::chrono::steady_clock::now();
    MicroModel model = fresh_model(config, data, seed);
    RunRecord record = new_record(Stage::Joint, seed, config);
    run_epochs(model, record, config, config.lr, data, seed,
               fixed_strategies(config, data.labeled.class_counts()));
    return finish(std::move(model), std::move(record), data.test, t0);
}

TrainResult finetune_classifier(const MicroModel& model, const TrainConfig& config,
                                const TrainingView& data, std::uint64_t seed) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    MicroModel tuned = model;
    tuned.freeze_features();
    TrainConfig echo = config;
    echo.bis.reset();
    RunRecord record = new_record(Stage::Finetune, seed, echo);
    run_epochs(tuned, record, echo, config.lr * config.finetune_lr_scale, data, seed,
               fixed_strategies(echo, data.labeled.class_counts()));
    return finish(std::move(tuned), std::move(record), data.test, t0);
}

TrainResult train_bis(const TrainConfig& config, const TrainingView& data, std::uint64_t seed) {
    config.validate();
    if (!config.bis)
        throw ConfigError("train_bis: configuration has no bis schedule");
    const auto t0 = std::chrono::steady_clock::now();
    MicroModel model = fresh_model(config, data, seed);
    const ClassCounts counts = data.labeled.class_counts();
    const SamplerStrategy a = make_strategy(config.bis->sampler_a, counts);
    const SamplerStrategy b = make_strategy(config.bis->sampler_b, counts);
    const BisSchedule schedule = config.bis->schedule_for(config.epochs);
    // Unlabeled keep probabilities use the same blended mu as the labeled batches.
    auto strategies = [&](int epoch) {
        const double alpha = alpha_at(schedule, epoch);
        SamplerStrategy blended = bis_blend(alpha, a, b);
        return EpochStrategies{blended, blended, alpha};
    };
    RunRecord record = new_record(Stage::Bis, seed, config);
    run_epochs(model, record, config, config.lr, data, seed, strategies);
    return finish(std::move(model), std::move(record), data.test, t0);
}

} // namespace bislab
