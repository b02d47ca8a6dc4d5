#include "bislab/report.hpp"

#include "bislab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace bislab {

const std::vector<std::string>& report_group_columns() {
    static const std::vector<std::string> cols = {"stage", "lambda", "beta", "labeled_sampler",
                                                  "unlabeled_sampler", "q", "schedule", "epochs"};
    return cols;
}

const std::vector<std::string>& report_metric_columns() {
    static const std::vector<std::string> cols = {"accuracy", "min_class_recall", "max_class_recall",
                                                  "recall_spearman", "pseudo_kept_fraction",
                                                  "wall_seconds"};
    return cols;
}

MeanSd mean_sd(const std::vector<double>& values) {
    if (values.empty())
        throw InvalidInput("mean_sd of no values");
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() == 1)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<ReportGroup> aggregate(const csv::Table& summary) {
    if (summary.rows.empty())
        throw InvalidInput("summary CSV has no data rows");
    std::vector<std::size_t> key_idx, metric_idx;
    try {
        for (const auto& c : report_group_columns())
            key_idx.push_back(summary.column(c));
        for (const auto& c : report_metric_columns())
            metric_idx.push_back(summary.column(c));
    } catch (const std::exception& e) {
        throw InvalidInput(std::string("summary CSV: ") + e.what());
    }

    std::map<std::vector<std::string>, std::size_t> index;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<std::vector<double>>> values;
    for (std::size_t r = 0; r < summary.rows.size(); ++r) {
        const auto& row = summary.rows[r];
        if (row.size() != summary.header.size())
            throw InvalidInput("summary CSV row " + std::to_string(r + 2) + " has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(summary.header.size()));
        std::vector<std::string> key;
        for (auto i : key_idx)
            key.push_back(row[i]);
        auto [it, fresh] = index.try_emplace(key, keys.size());
        if (fresh) {
            keys.push_back(key);
            values.emplace_back(metric_idx.size());
        }
        for (std::size_t m = 0; m < metric_idx.size(); ++m)
            values[it->second][m].push_back(csv::parse_double(row[metric_idx[m]]));
    }

    std::vector<ReportGroup> groups;
    for (std::size_t g = 0; g < keys.size(); ++g) {
        ReportGroup group{keys[g], values[g][0].size(), {}};
        for (const auto& v : values[g])
            group.metrics.push_back(mean_sd(v));
        groups.push_back(std::move(group));
    }
    return groups;
}

csv::Table report_table(const std::vector<ReportGroup>& groups) {
    csv::Table t;
    t.header = report_group_columns();
    t.header.push_back("n");
    for (const auto& m : report_metric_columns()) {
        t.header.push_back(m + "_mean");
        t.header.push_back(m + "_sd");
    }
    for (const auto& g : groups) {
        csv::Row row = g.key;
        row.push_back(std::to_string(g.n));
        for (const auto& ms : g.metrics) {
            row.push_back(csv::format_double(ms.mean));
            row.push_back(csv::format_double(ms.sd));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string render_report(const std::vector<ReportGroup>& groups) {
    std::vector<std::string> header = report_group_columns();
    header.push_back("n");
    for (const auto& m : report_metric_columns())
        header.push_back(m);

    std::vector<std::vector<std::string>> cells;
    for (const auto& g : groups) {
        std::vector<std::string> row = g.key;
        row.push_back(std::to_string(g.n));
        for (const auto& ms : g.metrics) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.4f ± %.4f", ms.mean, ms.sd);
            row.push_back(buf);
        }
        cells.push_back(std::move(row));
    }

    // Display width; UTF-8 continuation bytes take no column.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char c : s)
            w += (c & 0xC0) != 0x80;
        return w;
    };
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = width(header[c]);
        for (const auto& row : cells)
            widths[c] = std::max(widths[c], width(row[c]));
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c)
                out << "  ";
            out << row[c];
            if (c + 1 < row.size())
                out << std::string(widths[c] - width(row[c]), ' ');
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : cells)
        emit(row);
    return out.str();
}

} // namespace bislab
