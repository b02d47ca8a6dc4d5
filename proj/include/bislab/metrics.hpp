#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bislab {

/// K x K counts, rows are true classes and columns are predictions.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int k);

    int num_classes() const noexcept { return k_; }
    std::int64_t at(int truth, int pred) const { return counts_[index(truth, pred)]; }
    void add(int truth, int pred, std::int64_t n = 1) { counts_[index(truth, pred)] += n; }

    std::int64_t row_sum(int truth) const;
    std::int64_t col_sum(int pred) const;
    std::int64_t total() const;
    std::int64_t trace() const;
    double accuracy() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t index(int truth, int pred) const;

    int k_;
    std::vector<std::int64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int k);

struct PrecisionRecall {
    std::vector<double> precision;
    std::vector<double> recall;
};

/// Precision of a never-predicted class is 0. Any empty row is an error: the
/// evaluation set is balanced and every class must appear.
PrecisionRecall precision_recall(const ConfusionMatrix& cm);

/// Spearman rank correlation between class index 0..K-1 and `values`,
/// average ranks for ties; 0 for a constant vector.
double trend_stats(std::span<const double> values);

/// Outcome of filtering one unlabeled sample.
struct PseudoLabelRecord {
    std::int64_t index = 0;
    int pseudo_label = 0;
    double confidence = 0.0;
    bool kept = false;
    int hidden_true_label = -1;  // filled by the evaluator, never by training
};

struct PseudoDiagnostics {
    double kept_fraction = 0.0;
    /// Over kept records grouped by pseudo label: share whose hidden label agrees.
    std::vector<double> accuracy_per_class;
    /// Count of kept records per pseudo label.
    std::vector<std::int64_t> class_histogram;
};

PseudoDiagnostics pseudo_diagnostics(std::span<const PseudoLabelRecord> records, int k);

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> per_class_recall;
    std::vector<double> per_class_precision;
    double recall_spearman = 0.0;
    double precision_spearman = 0.0;
    double pseudo_kept_fraction = 0.0;
    std::vector<double> pseudo_accuracy_per_class;
    std::vector<std::int64_t> pseudo_class_histogram;
};

/// Test-set metrics from predictions, plus the pseudo-label fields.
MetricsReport make_report(const ConfusionMatrix& cm, const PseudoDiagnostics& pseudo);

} // namespace bislab
