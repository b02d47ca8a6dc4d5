#pragma once

#include "bislab/csv.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace bislab {

/// Columns that identify a group of runs differing only by seed.
const std::vector<std::string>& report_group_columns();
/// Numeric summary columns aggregated per group.
const std::vector<std::string>& report_metric_columns();

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample sd, 0 for a single value
};

MeanSd mean_sd(const std::vector<double>& values);

struct ReportGroup {
    std::vector<std::string> key;     // values of report_group_columns()
    std::size_t n = 0;
    std::vector<MeanSd> metrics;      // parallel to report_metric_columns()
};

/// Groups summary rows by configuration, in order of first appearance.
/// Throws InvalidInput when the table has no rows or lacks a required column.
std::vector<ReportGroup> aggregate(const csv::Table& summary);

/// Columns: group columns, n, then <metric>_mean and <metric>_sd per metric.
csv::Table report_table(const std::vector<ReportGroup>& groups);

/// Fixed-width text rendering with "mean ± sd" cells.
std::string render_report(const std::vector<ReportGroup>& groups);

} // namespace bislab
