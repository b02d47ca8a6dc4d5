#include "bislab/cli.hpp"

#include "bislab/checkpoint.hpp"
#include "bislab/config.hpp"
#include "bislab/dataset_io.hpp"
#include "bislab/error.hpp"
#include "bislab/experiment.hpp"
#include "bislab/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace bislab {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> data_seed;
    std::string data_path;
    std::string out;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
    cmd->add_option("-c,--config", o.config_path, "Config file (INI style)");
    cmd->add_option("-s,--set", o.sets, "Override one setting, section.key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "Training seed");
    cmd->add_option("--data-seed", o.data_seed, "Dataset generation seed");
    cmd->add_option("--data", o.data_path, "Load a dataset dump instead of generating one");
    if (with_out)
        cmd->add_option("-o,--out", o.out, "Output directory (default $BIS_LAB_OUT or ./bislab_out)");
    cmd->add_flag("-f,--force", o.force, "Overwrite existing outputs");
}

ExperimentConfig build_config(const CommonOptions& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config_file(o.config_path);
    for (const auto& s : o.sets)
        cfg.apply_override(s);
    if (o.seed) {
        cfg.train_seed = *o.seed;
        cfg.finetune_seed = *o.seed;
    }
    if (o.data_seed)
        cfg.data_seed = *o.data_seed;
    if (!o.data_path.empty())
        cfg.data_path = o.data_path;
    cfg.validate();
    return cfg;
}

void print_result(std::ostream& out, const RunRecord& r, const OutputDir& dir) {
    out << "run " << r.run_id << " (" << to_string(r.stage) << ")";
    if (r.final_report) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", r.final_report->accuracy);
        out << " accuracy " << buf;
    }
    out << "\n  record " << dir.run_json(r.run_id).string() << '\n';
}

void guard_existing(const OutputDir& dir, const std::string& id, bool force) {
    if (!force && fs::exists(dir.run_json(id)))
        throw ConfigError("run " + id + " already exists in " + dir.root.string() +
                          "; pass --force to repeat it");
}

void finish_run(std::ostream& out, const OutputDir& dir, TrainResult& result,
                const DataSource& source, const RunLabels& labels) {
    write_single_run(dir, result.record, source, labels);
    save_checkpoint_file(dir.checkpoint(result.record.run_id).string(), result.model);
    print_result(out, result.record, dir);
    out << "  checkpoint " << dir.checkpoint(result.record.run_id).string() << '\n';
    out << "  feature_hash " << result.record.feature_hash << '\n';
}

int cmd_gen(const CommonOptions& o, const std::string& path, std::ostream& out) {
    ExperimentConfig cfg = build_config(o);
    if (!cfg.data_path.empty())
        throw ConfigError("gen generates data; --data / data.path does not apply");
    if (fs::exists(path) && !o.force)
        throw ConfigError("'" + path + "' exists; pass --force to overwrite");
    const SyntheticData data = make_synthetic(cfg.data, cfg.data_seed);
    if (const auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_dataset_file(path, data);
    out << "wrote " << path << ": " << data.labeled.labels.size() << " labeled, "
        << data.unlabeled.points.rows() << " unlabeled, " << data.test.labels.size() << " test\n";
    return kExitOk;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = build_config(o);
    const OutputDir dir{resolve_output_dir(o.out)};
    const Dataset ds = materialize(cfg);
    RunLabels labels = labels_for(RunRecord{}, ds.source);
    labels.labeled = cfg.train.labeled_sampler;
    labels.unlabeled = cfg.train.unlabeled_sampler;
    const std::string id = make_run_id(Stage::Joint, labels, cfg.train, ds.source, cfg.train_seed);
    guard_existing(dir, id, o.force);
    TrainResult r = train_joint(cfg.train, view_of(ds, cfg), cfg.train_seed);
    r.record.run_id = id;
    finish_run(out, dir, r, ds.source, labels);
    return kExitOk;
}

int cmd_bis(const CommonOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = build_config(o);
    const OutputDir dir{resolve_output_dir(o.out)};
    const Dataset ds = materialize(cfg);
    const TrainConfig tc = cfg.bis_config();
    RunLabels labels = labels_for(RunRecord{}, ds.source);
    labels.labeled = tc.bis->sampler_a;
    labels.unlabeled = tc.bis->sampler_b;
    labels.schedule = tc.bis->schedule;
    const std::string id = make_run_id(Stage::Bis, labels, tc, ds.source, cfg.train_seed);
    guard_existing(dir, id, o.force);
    TrainResult r = train_bis(tc, view_of(ds, cfg), cfg.train_seed);
    r.record.run_id = id;
    finish_run(out, dir, r, ds.source, labels);
    return kExitOk;
}

int cmd_finetune(const CommonOptions& o, const std::string& checkpoint, std::ostream& out) {
    const ExperimentConfig cfg = build_config(o);
    const OutputDir dir{resolve_output_dir(o.out)};
    const MicroModel source_model = load_checkpoint_file(checkpoint);
    const Dataset ds = materialize(cfg);
    const TrainConfig fc = cfg.finetune_config();

    // Sampler pair of the source run, from its record beside the checkpoint.
    RunLabels labels = labels_for(RunRecord{}, ds.source);
    labels.labeled = fc.labeled_sampler;
    labels.unlabeled = fc.unlabeled_sampler;
    if (auto sidecar = fs::path(checkpoint).replace_extension(".json"); fs::exists(sidecar)) {
        std::ifstream in(sidecar, std::ios::binary);
        const LoadedRun src = run_record_from_json(nlohmann::json::parse(in));
        const RunLabels src_labels = labels_for(src.record, src.source);
        labels.labeled = src_labels.labeled;
        labels.unlabeled = src_labels.unlabeled;
    }
    const std::string id = make_run_id(Stage::Finetune, labels, fc, ds.source, cfg.finetune_seed);
    guard_existing(dir, id, o.force);
    TrainResult r = finetune_classifier(source_model, fc, view_of(ds, cfg), cfg.finetune_seed);
    r.record.run_id = id;
    finish_run(out, dir, r, ds.source, labels);
    out << "  source feature_hash " << feature_hash(source_model) << '\n';
    return kExitOk;
}

int cmd_grid(const CommonOptions& o, int jobs, bool resume, bool quiet, std::ostream& out) {
    const ExperimentConfig cfg = build_config(o);
    const OutputDir dir{resolve_output_dir(o.out)};
    if (!resume && !o.force && fs::exists(dir.summary_csv()))
        throw ConfigError(dir.summary_csv().string() +
                          " exists; pass --resume to continue or --force to start over");
    if (o.force && !resume && fs::exists(dir.runs()))
        fs::remove_all(dir.runs());
    GridOptions opts{jobs, resume, {}};
    if (!quiet)
        opts.progress = [&out](const std::string& msg) { out << msg << '\n' << std::flush; };
    const GridOutcome g = run_grid(cfg, dir, opts);
    out << "grid: " << g.completed << " completed, " << g.skipped << " skipped, " << g.failed
        << " failed\n  summary " << dir.summary_csv().string() << '\n';
    if (g.failed > 0) {
        out << "  failures " << dir.failures_csv().string() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_report(const std::string& csv_path, const std::string& out_path, std::ostream& out) {
    const csv::Table summary = csv::read_table_file(csv_path);
    const auto groups = aggregate(summary);
    const std::string target =
        out_path.empty() ? (fs::path(csv_path).parent_path() / "report.csv").string() : out_path;
    {
        std::ofstream f(target, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write '" + target + "'");
        csv::write_table(f, report_table(groups));
    }
    out << render_report(groups) << "\nwrote " << target << '\n';
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bi-sampling semi-supervised experiments on synthetic long-tailed data", "bislab"};
    app.require_subcommand(1);

    CommonOptions gen_o, train_o, ft_o, bis_o, grid_o;
    std::string gen_path, checkpoint, report_csv, report_out;
    int jobs = 1;
    bool resume = false, quiet = false;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic long-tailed dataset dump");
    add_common(gen, gen_o, false);
    gen->add_option("path", gen_path, "Output file")->required();

    auto* train = app.add_subcommand("train", "Joint training with a labeled/unlabeled sampler pair");
    add_common(train, train_o);

    auto* ft = app.add_subcommand("finetune", "Fine-tune the classifier of a trained checkpoint");
    add_common(ft, ft_o);
    ft->add_option("--checkpoint", checkpoint, "Checkpoint written by train or bis")->required();

    auto* bis = app.add_subcommand("bis", "Bi-sampling training");
    add_common(bis, bis_o);

    auto* grid = app.add_subcommand("grid", "Run a grid of experiments");
    add_common(grid, grid_o);
    grid->add_option("-j,--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    grid->add_flag("--resume", resume, "Skip runs whose record already exists");
    grid->add_flag("-q,--quiet", quiet, "No per-run progress lines");

    auto* report = app.add_subcommand("report", "Aggregate a summary CSV over seeds");
    report->add_option("csv", report_csv, "Summary CSV written by grid")->required();
    report->add_option("-o,--out", report_out, "Output CSV (default report.csv beside the input)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_o, gen_path, out);
        if (train->parsed())
            return cmd_train(train_o, out);
        if (ft->parsed())
            return cmd_finetune(ft_o, checkpoint, out);
        if (bis->parsed())
            return cmd_bis(bis_o, out);
        if (grid->parsed())
            return cmd_grid(grid_o, jobs, resume, quiet, out);
        return cmd_report(report_csv, report_out, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace bislab
