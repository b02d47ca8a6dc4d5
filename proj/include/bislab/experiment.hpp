#pragma once

#include "bislab/config.hpp"
#include "bislab/csv.hpp"
#include "bislab/run_record.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bislab {

/// Columns of the per-run summary CSV, in order.
const csv::Row& summary_header();
/// Columns of the per-(run, epoch, class) CSV, in order.
const csv::Row& per_class_header();

/// Labels a run carries in the CSV files. For fine-tune runs the sampler pair
/// is that of the jointly trained source model; for bis runs it is (A, B).
struct RunLabels {
    double lambda = 0.0;
    double beta = 0.0;
    SamplerKind labeled = SamplerKind::Random;
    SamplerKind unlabeled = SamplerKind::Random;
    std::optional<ScheduleKind> schedule;
};

RunLabels labels_for(const RunRecord& record, const DataSource& source,
                     std::optional<std::pair<SamplerKind, SamplerKind>> source_pair = {});

csv::Row summary_row(const RunRecord& record, const RunLabels& labels);
std::vector<csv::Row> per_class_rows(const RunRecord& record, const RunLabels& labels);

/// Readable, unique id: stage, cell, samplers, q, schedule, seed, plus a short
/// digest of the full configuration.
std::string make_run_id(Stage stage, const RunLabels& labels, const TrainConfig& config,
                        const DataSource& source, std::uint64_t seed);

struct Dataset {
    SyntheticData data;
    DataSource source;
};

/// Generates from cfg.data / cfg.data_seed, or loads cfg.data_path.
Dataset materialize(const ExperimentConfig& cfg);

TrainingView view_of(const Dataset& ds, const ExperimentConfig& cfg);

/// Output locations under one directory.
struct OutputDir {
    std::filesystem::path root;

    std::filesystem::path runs() const { return root / "runs"; }
    std::filesystem::path run_json(const std::string& id) const { return runs() / (id + ".json"); }
    std::filesystem::path checkpoint(const std::string& id) const { return runs() / (id + ".ckpt"); }
    std::filesystem::path summary_csv() const { return root / "summary.csv"; }
    std::filesystem::path per_class_csv() const { return root / "per_class.csv"; }
    std::filesystem::path failures_csv() const { return root / "failures.csv"; }
};

/// --out if given, else $BIS_LAB_OUT, else ./bislab_out.
std::filesystem::path resolve_output_dir(const std::string& flag);

/// Writes the run JSON and appends its rows to both CSV files.
void write_single_run(const OutputDir& out, const RunRecord& record, const DataSource& source,
                      const RunLabels& labels);

/// Appends rows, writing the header first when the file is new or empty.
void append_rows(const std::filesystem::path& path, const csv::Row& header,
                 const std::vector<csv::Row>& rows);

struct GridOptions {
    int jobs = 1;
    bool resume = false;
    std::function<void(const std::string&)> progress;  // optional log sink
};

/// Run counts; a failure counts the job whose run threw.
struct GridOutcome {
    int completed = 0;
    int skipped = 0;
    int failed = 0;
};

/// Runs every cell x q x seed x (pair [+ finetune], schedule) combination.
/// Summary and per-class CSVs are rewritten in enumeration order at the end,
/// so output is independent of completion order. Failures go to failures.csv.
GridOutcome run_grid(const ExperimentConfig& cfg, const OutputDir& out, const GridOptions& opts);

} // namespace bislab
