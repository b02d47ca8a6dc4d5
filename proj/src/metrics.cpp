#include "bislab/metrics.hpp"

#include "bislab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bislab {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
    if (k < 1)
        throw InvalidInput("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(k) * k, 0);
}

std::size_t ConfusionMatrix::index(int truth, int pred) const {
    if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_)
        throw InvalidInput("class index out of range");
    return static_cast<std::size_t>(truth) * k_ + pred;
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
    std::int64_t s = 0;
    for (int p = 0; p < k_; ++p)
        s += at(truth, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int pred) const {
    std::int64_t s = 0;
    for (int t = 0; t < k_; ++t)
        s += at(t, pred);
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int j = 0; j < k_; ++j)
        s += at(j, j);
    return s;
}

double ConfusionMatrix::accuracy() const {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int k) {
    if (preds.size() != truths.size())
        throw InvalidInput("confusion: predictions and truths differ in length");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < preds.size(); ++i)
        cm.add(truths[i], preds[i]);
    return cm;
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
    const int k = cm.num_classes();
    PrecisionRecall out{std::vector<double>(k), std::vector<double>(k)};
    for (int j = 0; j < k; ++j) {
        const auto row = cm.row_sum(j);
        if (row == 0)
            throw InvalidInput("precision_recall: class " + std::to_string(j) +
                               " has no evaluation samples");
        const auto col = cm.col_sum(j);
        const auto hit = static_cast<double>(cm.at(j, j));
        out.recall[j] = hit / static_cast<double>(row);
        out.precision[j] = col == 0 ? 0.0 : hit / static_cast<double>(col);
    }
    return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t <= j; ++t)
            ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double trend_stats(std::span<const double> values) {
    if (values.size() < 3)
        throw InvalidInput("trend_stats: need at least three classes");
    const std::vector<double> r = average_ranks(values);
    const double n = static_cast<double>(values.size());
    const double mean = (n - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double dx = static_cast<double>(i) - mean;
        const double dy = r[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (syy == 0.0)
        return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

PseudoDiagnostics pseudo_diagnostics(std::span<const PseudoLabelRecord> records, int k) {
    PseudoDiagnostics out;
    out.accuracy_per_class.assign(static_cast<std::size_t>(k), 0.0);
    out.class_histogram.assign(static_cast<std::size_t>(k), 0);
    std::vector<std::int64_t> correct(static_cast<std::size_t>(k), 0);
    std::int64_t kept = 0;
    for (const auto& r : records) {
        if (!r.kept)
            continue;
        if (r.pseudo_label < 0 || r.pseudo_label >= k)
            throw InvalidInput("pseudo_diagnostics: pseudo label out of range");
        ++kept;
        ++out.class_histogram[r.pseudo_label];
        if (r.hidden_true_label == r.pseudo_label)
            ++correct[r.pseudo_label];
    }
    if (!records.empty())
        out.kept_fraction = static_cast<double>(kept) / static_cast<double>(records.size());
    for (int j = 0; j < k; ++j)
        if (out.class_histogram[j] > 0)
            out.accuracy_per_class[j] =
                static_cast<double>(correct[j]) / static_cast<double>(out.class_histogram[j]);
    return out;
}

MetricsReport make_report(const ConfusionMatrix& cm, const PseudoDiagnostics& pseudo) {
    MetricsReport r;
    const auto pr = precision_recall(cm);
    r.accuracy = cm.accuracy();
    r.per_class_recall = pr.recall;
    r.per_class_precision = pr.precision;
    if (cm.num_classes() >= 3) {
        r.recall_spearman = trend_stats(pr.recall);
        r.precision_spearman = trend_stats(pr.precision);
    }
    r.pseudo_kept_fraction = pseudo.kept_fraction;
    r.pseudo_accuracy_per_class = pseudo.accuracy_per_class;
    r.pseudo_class_histogram = pseudo.class_histogram;
    return r;
}

} // namespace bislab
