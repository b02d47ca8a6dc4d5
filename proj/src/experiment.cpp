#include "bislab/experiment.hpp"

#include "bislab/checkpoint.hpp"
#include "bislab/dataset_io.hpp"
#include "bislab/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace bislab {

namespace fs = std::filesystem;

const csv::Row& summary_header() {
    static const csv::Row header = {
        "run_id",          "stage",           "seed",           "lambda",
        "beta",            "labeled_sampler", "unlabeled_sampler", "q",
        "schedule",        "epochs",          "accuracy",       "min_class_recall",
        "max_class_recall", "recall_spearman", "pseudo_kept_fraction", "wall_seconds"};
    return header;
}

const csv::Row& per_class_header() {
    static const csv::Row header = {
        "run_id", "stage", "seed",  "lambda", "beta",      "labeled_sampler", "unlabeled_sampler",
        "q",      "schedule", "epoch", "class", "recall", "precision",       "pseudo_accuracy",
        "pseudo_count"};
    return header;
}

RunLabels labels_for(const RunRecord& record, const DataSource& source,
                     std::optional<std::pair<SamplerKind, SamplerKind>> source_pair) {
    RunLabels labels;
    if (source.spec) {
        labels.lambda = source.spec->lambda;
        labels.beta = source.spec->beta;
    }
    labels.labeled = record.config.labeled_sampler;
    labels.unlabeled = record.config.unlabeled_sampler;
    if (record.stage == Stage::Bis && record.config.bis) {
        labels.labeled = record.config.bis->sampler_a;
        labels.unlabeled = record.config.bis->sampler_b;
        labels.schedule = record.config.bis->schedule;
    }
    if (source_pair) {
        labels.labeled = source_pair->first;
        labels.unlabeled = source_pair->second;
    }
    return labels;
}

namespace {

std::string fmt(double v) { return csv::format_double(v); }

std::string schedule_name(const RunLabels& l) {
    return l.schedule ? std::string(to_string(*l.schedule)) : "none";
}

csv::Row label_prefix(const RunRecord& r, const RunLabels& l) {
    return {r.run_id,
            std::string(to_string(r.stage)),
            std::to_string(r.seed),
            fmt(l.lambda),
            fmt(l.beta),
            std::string(to_string(l.labeled)),
            std::string(to_string(l.unlabeled)),
            fmt(r.config.q),
            schedule_name(l)};
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

csv::Row summary_row(const RunRecord& r, const RunLabels& l) {
    csv::Row row = label_prefix(r, l);
    row.push_back(std::to_string(r.config.epochs));
    if (r.final_report) {
        const auto& f = *r.final_report;
        row.push_back(fmt(f.accuracy));
        row.push_back(fmt(*std::min_element(f.per_class_recall.begin(), f.per_class_recall.end())));
        row.push_back(fmt(*std::max_element(f.per_class_recall.begin(), f.per_class_recall.end())));
        row.push_back(fmt(f.recall_spearman));
        row.push_back(fmt(f.pseudo_kept_fraction));
    } else {
        for (int i = 0; i < 5; ++i)
            row.push_back("nan");
    }
    row.push_back(fmt(r.wall_seconds));
    return row;
}

std::vector<csv::Row> per_class_rows(const RunRecord& r, const RunLabels& l) {
    std::vector<csv::Row> rows;
    const csv::Row prefix = label_prefix(r, l);
    for (const auto& e : r.history) {
        const auto& m = e.report;
        for (std::size_t j = 0; j < m.per_class_recall.size(); ++j) {
            csv::Row row = prefix;
            row.push_back(std::to_string(e.epoch));
            row.push_back(std::to_string(j));
            row.push_back(fmt(m.per_class_recall[j]));
            row.push_back(fmt(m.per_class_precision[j]));
            row.push_back(j < m.pseudo_accuracy_per_class.size() ? fmt(m.pseudo_accuracy_per_class[j])
                                                                  : "0");
            row.push_back(j < m.pseudo_class_histogram.size()
                              ? std::to_string(m.pseudo_class_histogram[j])
                              : "0");
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string make_run_id(Stage stage, const RunLabels& labels, const TrainConfig& config,
                        const DataSource& source, std::uint64_t seed) {
    const nlohmann::json canonical = {{"stage", to_string(stage)},
                                      {"config", to_json(config)},
                                      {"data_seed", source.data_seed},
                                      {"spec", source.spec ? to_json(*source.spec) : nlohmann::json()},
                                      {"path", source.path},
                                      {"pair", {to_string(labels.labeled), to_string(labels.unlabeled)}},
                                      {"seed", seed}};
    const std::string text = canonical.dump();
    std::uint32_t h = 2166136261u;
    for (unsigned char c : text) {
        h ^= c;
        h *= 16777619u;
    }
    char digest[9];
    std::snprintf(digest, sizeof digest, "%08x", h);

    std::string id = std::string(to_string(stage));
    if (source.spec)
        id += "-l" + short_number(labels.lambda) + "-b" + short_number(labels.beta);
    id += "-" + std::string(to_string(labels.labeled)) + "-" + std::string(to_string(labels.unlabeled));
    id += "-q" + short_number(config.q);
    if (labels.schedule)
        id += "-" + std::string(to_string(*labels.schedule));
    id += "-s" + std::to_string(seed) + "-" + digest;
    return id;
}

Dataset materialize(const ExperimentConfig& cfg) {
    Dataset ds;
    if (!cfg.data_path.empty()) {
        ds.data = load_dataset_file(cfg.data_path);
        ds.source.path = cfg.data_path;
    } else {
        ds.data = make_synthetic(cfg.data, cfg.data_seed);
        ds.source.spec = cfg.data;
        ds.source.data_seed = cfg.data_seed;
    }
    return ds;
}

TrainingView view_of(const Dataset& ds, const ExperimentConfig& cfg) {
    return {ds.data.labeled, ds.data.unlabeled.points, ds.data.test, cfg.augment(),
            ds.data.unlabeled.hidden_labels};
}

fs::path resolve_output_dir(const std::string& flag) {
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv("BIS_LAB_OUT"); env && *env)
        return env;
    return "bislab_out";
}

void append_rows(const fs::path& path, const csv::Row& header, const std::vector<csv::Row>& rows) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    if (fresh)
        out << csv::format_row(header) << '\n';
    for (const auto& row : rows)
        out << csv::format_row(row) << '\n';
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    return nlohmann::json::parse(in);
}

void write_table_file(const fs::path& path, const csv::Row& header,
                      const std::vector<csv::Row>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    csv::write_table(out, {header, rows});
}

} // namespace

void write_single_run(const OutputDir& out, const RunRecord& record, const DataSource& source,
                      const RunLabels& labels) {
    fs::create_directories(out.runs());
    write_text(out.run_json(record.run_id), dump_record(record, source));
    append_rows(out.summary_csv(), summary_header(), {summary_row(record, labels)});
    append_rows(out.per_class_csv(), per_class_header(), per_class_rows(record, labels));
}

namespace {

struct PlannedRun {
    std::string id;
    Stage stage;
    RunLabels labels;
    TrainConfig config;
    std::uint64_t seed;
};

struct Job {
    ExperimentConfig cfg;  // cell, q and seed applied
    DataSource source;     // echo, known before generation
    PlannedRun primary;    // joint or bis
    std::optional<PlannedRun> finetune;
};

struct Finished {
    RunRecord record;
    DataSource source;
    RunLabels labels;
};

std::vector<Job> plan(const ExperimentConfig& base) {
    if (base.grid_lambdas.empty() || base.grid_betas.empty() || base.grid_seeds.empty())
        throw ConfigError("grid needs at least one lambda, beta and seed");
    if (base.grid_pairs.empty() && base.grid_schedules.empty())
        throw ConfigError("grid needs at least one sampler pair or schedule");
    const std::vector<double> qs = base.grid_qs.empty() ? std::vector<double>{base.train.q}
                                                        : base.grid_qs;
    std::vector<Job> jobs;
    for (double lambda : base.grid_lambdas)
        for (double beta : base.grid_betas)
            for (double q : qs)
                for (std::uint64_t seed : base.grid_seeds) {
                    ExperimentConfig cfg = base;
                    cfg.data_path.clear();
                    cfg.data.lambda = lambda;
                    cfg.data.beta = beta;
                    cfg.train.q = q;
                    cfg.data_seed = seed;
                    cfg.train_seed = seed;
                    cfg.finetune_seed = seed;
                    cfg.validate();
                    const DataSource source{cfg.data, seed, ""};

                    for (const auto& [ls, us] : base.grid_pairs) {
                        Job job{cfg, source, {}, std::nullopt};
                        job.cfg.train.labeled_sampler = ls;
                        job.cfg.train.unlabeled_sampler = us;
                        RunLabels labels{lambda, beta, ls, us, std::nullopt};
                        const TrainConfig tc = job.cfg.train;
                        job.primary = {make_run_id(Stage::Joint, labels, tc, source, seed),
                                       Stage::Joint, labels, tc, seed};
                        if (base.grid_finetune) {
                            TrainConfig fc = job.cfg.finetune_config();
                            job.finetune = PlannedRun{
                                make_run_id(Stage::Finetune, labels, fc, source, seed),
                                Stage::Finetune, labels, fc, seed};
                        }
                        jobs.push_back(std::move(job));
                    }
                    for (ScheduleKind sched : base.grid_schedules) {
                        Job job{cfg, source, {}, std::nullopt};
                        job.cfg.bis.schedule = sched;
                        const TrainConfig tc = job.cfg.bis_config();
                        RunLabels labels{lambda, beta, tc.bis->sampler_a, tc.bis->sampler_b, sched};
                        job.primary = {make_run_id(Stage::Bis, labels, tc, source, seed), Stage::Bis,
                                       labels, tc, seed};
                        jobs.push_back(std::move(job));
                    }
                }
    return jobs;
}

std::map<std::string, std::string> previous_wall_seconds(const OutputDir& out) {
    std::map<std::string, std::string> walls;
    if (!fs::exists(out.summary_csv()))
        return walls;
    try {
        const auto table = csv::read_table_file(out.summary_csv().string());
        const auto id = table.column("run_id");
        const auto wall = table.column("wall_seconds");
        for (const auto& row : table.rows)
            if (row.size() > std::max(id, wall))
                walls[row[id]] = row[wall];
    } catch (const std::exception&) {
    }
    return walls;
}

} // namespace

GridOutcome run_grid(const ExperimentConfig& cfg, const OutputDir& out, const GridOptions& opts) {
    const std::vector<Job> jobs = plan(cfg);
    fs::create_directories(out.runs());

    std::vector<std::vector<Finished>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::vector<char> skipped(jobs.size(), 0);
    std::vector<int> fresh(jobs.size(), 0);
    std::mutex io_mutex;
    std::atomic<std::size_t> next{0};

    auto log = [&](const std::string& msg) {
        if (opts.progress) {
            std::lock_guard lock(io_mutex);
            opts.progress(msg);
        }
    };
    auto persist = [&](const RunRecord& rec, const DataSource& src, const MicroModel* model) {
        std::lock_guard lock(io_mutex);
        write_text(out.run_json(rec.run_id), dump_record(rec, src));
        if (model)
            save_checkpoint_file(out.checkpoint(rec.run_id).string(), *model);
    };
    auto load_done = [&](const PlannedRun& run) -> std::optional<Finished> {
        if (!fs::exists(out.run_json(run.id)))
            return std::nullopt;
        LoadedRun loaded = run_record_from_json(read_json(out.run_json(run.id)));
        return Finished{std::move(loaded.record), std::move(loaded.source), run.labels};
    };

    auto work = [&](std::size_t i) {
        const Job& job = jobs[i];
        try {
            std::optional<Finished> primary_done;
            std::optional<Finished> finetune_done;
            if (opts.resume) {
                primary_done = load_done(job.primary);
                if (job.finetune)
                    finetune_done = load_done(*job.finetune);
                if (primary_done && (!job.finetune || finetune_done)) {
                    results[i].push_back(std::move(*primary_done));
                    if (finetune_done)
                        results[i].push_back(std::move(*finetune_done));
                    skipped[i] = 1;
                    log("skip " + job.primary.id);
                    return;
                }
            }

            const Dataset ds = materialize(job.cfg);
            const TrainingView view = view_of(ds, job.cfg);
            std::optional<MicroModel> primary_model;
            if (primary_done) {
                primary_model = load_checkpoint_file(out.checkpoint(job.primary.id).string());
                results[i].push_back(std::move(*primary_done));
            } else {
                TrainResult r = job.primary.stage == Stage::Bis
                                    ? train_bis(job.primary.config, view, job.cfg.train_seed)
                                    : train_joint(job.primary.config, view, job.cfg.train_seed);
                r.record.run_id = job.primary.id;
                persist(r.record, ds.source, &r.model);
                log("done " + r.record.run_id);
                results[i].push_back({r.record, ds.source, job.primary.labels});
                ++fresh[i];
                primary_model = std::move(r.model);
            }
            if (job.finetune) {
                TrainResult f = finetune_classifier(*primary_model, job.finetune->config, view,
                                                    job.cfg.finetune_seed);
                f.record.run_id = job.finetune->id;
                persist(f.record, ds.source, &f.model);
                log("done " + f.record.run_id);
                results[i].push_back({f.record, ds.source, job.finetune->labels});
                ++fresh[i];
            }
        } catch (const std::exception& e) {
            failures[i] = e.what();
            log("FAILED " + job.primary.id + ": " + e.what());
        }
    };

    const int workers = std::max(1, std::min<int>(opts.jobs, static_cast<int>(jobs.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            work(i);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++)
                    work(i);
            });
    }

    const auto walls = previous_wall_seconds(out);
    std::vector<csv::Row> summary;
    std::vector<csv::Row> per_class;
    std::vector<csv::Row> failed_rows;
    GridOutcome outcome;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (const Finished& f : results[i]) {
            csv::Row row = summary_row(f.record, f.labels);
            if (skipped[i]) {
                auto it = walls.find(f.record.run_id);
                row.back() = it != walls.end() ? it->second : "0";
            }
            summary.push_back(std::move(row));
            auto rows = per_class_rows(f.record, f.labels);
            per_class.insert(per_class.end(), rows.begin(), rows.end());
        }
        outcome.completed += fresh[i];
        outcome.skipped += static_cast<int>(results[i].size()) - fresh[i];
        if (!failures[i].empty()) {
            ++outcome.failed;
            failed_rows.push_back({jobs[i].primary.id, std::string(to_string(jobs[i].primary.stage)),
                                   std::to_string(jobs[i].primary.seed), "failed", failures[i]});
        }
    }
    write_table_file(out.summary_csv(), summary_header(), summary);
    write_table_file(out.per_class_csv(), per_class_header(), per_class);
    if (!failed_rows.empty())
        write_table_file(out.failures_csv(), {"run_id", "stage", "seed", "status", "message"},
                         failed_rows);
    else if (fs::exists(out.failures_csv()))
        fs::remove(out.failures_csv());
    return outcome;
}

} // namespace bislab
