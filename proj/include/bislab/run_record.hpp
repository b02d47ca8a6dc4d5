#pragma once

#include "bislab/longtail.hpp"
#include "bislab/trainer.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace bislab {

/// Where the training data came from, echoed into every record so a run can
/// be repeated exactly.
struct DataSource {
    std::optional<LongTailSpec> spec;  // set when generated
    std::uint64_t data_seed = 0;
    std::string path;                  // set when loaded from a dump
};

nlohmann::json to_json(const LongTailSpec& spec);
LongTailSpec long_tail_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

/// Deterministic serialization: wall-clock time is left out so that repeating
/// a run reproduces the document byte for byte. Timing lives in the summary CSV.
nlohmann::json to_json(const RunRecord& record, const DataSource& source);

struct LoadedRun {
    RunRecord record;
    DataSource source;
};
LoadedRun run_record_from_json(const nlohmann::json& j);

/// Compact JSON text with a trailing newline.
std::string dump_record(const RunRecord& record, const DataSource& source);

} // namespace bislab
