#include "bislab/run_record.hpp"

namespace bislab {

using nlohmann::json;

json to_json(const LongTailSpec& s) {
    return {{"k", s.k},
            {"n1", s.n1},
            {"lambda", s.lambda},
            {"beta", s.beta},
            {"dim", s.dim},
            {"class_sep", s.class_sep},
            {"noise_sigma", s.noise_sigma},
            {"test_per_class", s.test_per_class}};
}

LongTailSpec long_tail_spec_from_json(const json& j) {
    LongTailSpec s;
    s.k = j.at("k").get<int>();
    s.n1 = j.at("n1").get<std::int64_t>();
    s.lambda = j.at("lambda").get<double>();
    s.beta = j.at("beta").get<double>();
    s.dim = j.at("dim").get<int>();
    s.class_sep = j.at("class_sep").get<double>();
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.test_per_class = j.at("test_per_class").get<std::int64_t>();
    return s;
}

json to_json(const TrainConfig& c) {
    json j = {{"epochs", c.epochs},
              {"steps_per_epoch", c.steps_per_epoch},
              {"batch_labeled", c.batch_labeled},
              {"batch_unlabeled", c.batch_unlabeled},
              {"tau", c.tau},
              {"lambda_u", c.lambda_u},
              {"q", c.q},
              {"lr", c.lr},
              {"hidden", c.hidden},
              {"labeled_sampler", to_string(c.labeled_sampler)},
              {"unlabeled_sampler", to_string(c.unlabeled_sampler)},
              {"finetune_lr_scale", c.finetune_lr_scale},
              {"bis", nullptr}};
    if (c.bis)
        j["bis"] = {{"schedule", to_string(c.bis->schedule)},
                    {"sampler_a", to_string(c.bis->sampler_a)},
                    {"sampler_b", to_string(c.bis->sampler_b)},
                    {"t_max", c.bis->schedule_for(c.epochs).t_max}};
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.steps_per_epoch = j.at("steps_per_epoch").get<int>();
    c.batch_labeled = j.at("batch_labeled").get<int>();
    c.batch_unlabeled = j.at("batch_unlabeled").get<int>();
    c.tau = j.at("tau").get<double>();
    c.lambda_u = j.at("lambda_u").get<double>();
    c.q = j.at("q").get<double>();
    c.lr = j.at("lr").get<double>();
    c.hidden = j.at("hidden").get<int>();
    c.labeled_sampler = parse_sampler_kind(j.at("labeled_sampler").get<std::string>());
    c.unlabeled_sampler = parse_sampler_kind(j.at("unlabeled_sampler").get<std::string>());
    c.finetune_lr_scale = j.at("finetune_lr_scale").get<double>();
    if (!j.at("bis").is_null()) {
        const json& b = j.at("bis");
        c.bis = BisConfig{parse_schedule_kind(b.at("schedule").get<std::string>()),
                          parse_sampler_kind(b.at("sampler_a").get<std::string>()),
                          parse_sampler_kind(b.at("sampler_b").get<std::string>()),
                          b.at("t_max").get<int>()};
    }
    return c;
}

json to_json(const MetricsReport& r) {
    return {{"accuracy", r.accuracy},
            {"per_class_recall", r.per_class_recall},
            {"per_class_precision", r.per_class_precision},
            {"recall_spearman", r.recall_spearman},
            {"precision_spearman", r.precision_spearman},
            {"pseudo_kept_fraction", r.pseudo_kept_fraction},
            {"pseudo_accuracy_per_class", r.pseudo_accuracy_per_class},
            {"pseudo_class_histogram", r.pseudo_class_histogram}};
}

MetricsReport metrics_report_from_json(const json& j) {
    MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.per_class_recall = j.at("per_class_recall").get<std::vector<double>>();
    r.per_class_precision = j.at("per_class_precision").get<std::vector<double>>();
    r.recall_spearman = j.at("recall_spearman").get<double>();
    r.precision_spearman = j.at("precision_spearman").get<double>();
    r.pseudo_kept_fraction = j.at("pseudo_kept_fraction").get<double>();
    r.pseudo_accuracy_per_class = j.at("pseudo_accuracy_per_class").get<std::vector<double>>();
    r.pseudo_class_histogram = j.at("pseudo_class_histogram").get<std::vector<std::int64_t>>();
    return r;
}

json to_json(const RunRecord& rec, const DataSource& source) {
    json history = json::array();
    for (const auto& e : rec.history) {
        history.push_back({{"epoch", e.epoch},
                           {"alpha", e.alpha ? json(*e.alpha) : json(nullptr)},
                           {"mean_loss", e.mean_loss},
                           {"labeled_probs", e.labeled_probs},
                           {"labeled_draw_fraction", e.labeled_draw_fraction},
                           {"metrics", to_json(e.report)}});
    }
    json data = {{"seed", source.data_seed},
                 {"spec", source.spec ? to_json(*source.spec) : json(nullptr)},
                 {"path", source.path}};
    return {{"run_id", rec.run_id},
            {"stage", to_string(rec.stage)},
            {"seed", rec.seed},
            {"data", std::move(data)},
            {"config", to_json(rec.config)},
            {"history", std::move(history)},
            {"final", rec.final_report ? to_json(*rec.final_report) : json(nullptr)},
            {"feature_hash", rec.feature_hash},
            {"parameter_hash", rec.parameter_hash}};
}

LoadedRun run_record_from_json(const json& j) {
    LoadedRun out;
    RunRecord& r = out.record;
    r.run_id = j.at("run_id").get<std::string>();
    r.stage = parse_stage(j.at("stage").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = train_config_from_json(j.at("config"));
    for (const auto& e : j.at("history")) {
        EpochMetrics em;
        em.epoch = e.at("epoch").get<int>();
        if (!e.at("alpha").is_null())
            em.alpha = e.at("alpha").get<double>();
        em.mean_loss = e.at("mean_loss").get<double>();
        em.labeled_probs = e.at("labeled_probs").get<std::vector<double>>();
        em.labeled_draw_fraction = e.at("labeled_draw_fraction").get<std::vector<double>>();
        em.report = metrics_report_from_json(e.at("metrics"));
        r.history.push_back(std::move(em));
    }
    if (!j.at("final").is_null())
        r.final_report = metrics_report_from_json(j.at("final"));
    r.feature_hash = j.at("feature_hash").get<std::string>();
    r.parameter_hash = j.at("parameter_hash").get<std::string>();

    const json& d = j.at("data");
    out.source.data_seed = d.at("seed").get<std::uint64_t>();
    if (!d.at("spec").is_null())
        out.source.spec = long_tail_spec_from_json(d.at("spec"));
    out.source.path = d.at("path").get<std::string>();
    return out;
}

std::string dump_record(const RunRecord& record, const DataSource& source) {
    return to_json(record, source).dump() + "\n";
}

} // namespace bislab
