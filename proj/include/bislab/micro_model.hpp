#pragma once

#include "bislab/longtail.hpp"
#include "bislab/rng.hpp"

#include <span>
#include <string>

namespace bislab {

/// Feature extractor f(x) = ReLU(w1 x + b1) followed by a linear classifier
/// g(h) = w2 h + b2. The two halves can be trained jointly or, after
/// freeze_features(), the classifier alone.
class MicroModel {
public:
    MicroModel() = default;
    /// All-zero parameters.
    MicroModel(int dim, int hidden, int num_classes);

    /// uniform(-s, s) with s = 1 / sqrt(fan_in) for every layer.
    static MicroModel initialized(int dim, int hidden, int num_classes, Rng& rng);

    int dim() const noexcept { return static_cast<int>(w1.cols()); }
    int hidden() const noexcept { return static_cast<int>(w1.rows()); }
    int num_classes() const noexcept { return static_cast<int>(w2.rows()); }

    /// w1 and b1 become immutable under apply_update. There is no unfreeze.
    void freeze_features() noexcept { frozen_ = true; }
    bool features_frozen() const noexcept { return frozen_; }

    Matrix w1;  // hidden x dim
    Vector b1;  // hidden
    Matrix w2;  // classes x hidden
    Vector b2;  // classes

private:
    bool frozen_ = false;
};

struct GradientBundle {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;

    static GradientBundle zeros_like(const MicroModel& model);
    /// this += scale * other
    void add_scaled(const GradientBundle& other, double scale);
};

struct LossAndGrad {
    double loss = 0.0;
    GradientBundle grad;
};

Vector features(const MicroModel& model, const Eigen::Ref<const Vector>& x);
Vector predict_probs(const MicroModel& model, const Eigen::Ref<const Vector>& x);

/// Row-wise class probabilities for a batch of points.
Matrix predict_probs_batch(const MicroModel& model, const Matrix& points);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// sum_i weight_i * CE(x_i, target_i) / n, with backprop through the softmax
/// cross-entropy, the ReLU and both affine layers. An empty batch yields zero
/// loss and zero gradients.
LossAndGrad loss_and_grad(const MicroModel& model, const Matrix& points,
                          std::span<const int> targets, std::span<const double> weights);

/// SGD step. Leaves w1/b1 untouched when the features are frozen.
void apply_update(MicroModel& model, const GradientBundle& grads, double lr);

/// FNV-1a over the raw bytes of w1 and b1, as 16 hex digits.
std::string feature_hash(const MicroModel& model);

/// FNV-1a over every parameter.
std::string parameter_hash(const MicroModel& model);

} // namespace bislab
