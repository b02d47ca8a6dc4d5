#include "bislab/micro_model.hpp"

#include "bislab/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace bislab {

MicroModel::MicroModel(int dim, int hidden, int num_classes)
    : w1(Matrix::Zero(hidden, dim)),
      b1(Vector::Zero(hidden)),
      w2(Matrix::Zero(num_classes, hidden)),
      b2(Vector::Zero(num_classes)) {
    if (dim < 1 || hidden < 1 || num_classes < 2)
        throw InvalidInput("MicroModel: dim >= 1, hidden >= 1, classes >= 2 required");
}

MicroModel MicroModel::initialized(int dim, int hidden, int num_classes, Rng& rng) {
    MicroModel m(dim, hidden, num_classes);
    auto fill = [&rng](auto& param, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-s, s);
        for (Eigen::Index i = 0; i < param.size(); ++i)
            param.data()[i] = u(rng);
    };
    fill(m.w1, dim);
    fill(m.b1, dim);
    fill(m.w2, hidden);
    fill(m.b2, hidden);
    return m;
}

GradientBundle GradientBundle::zeros_like(const MicroModel& model) {
    return {Matrix::Zero(model.w1.rows(), model.w1.cols()), Vector::Zero(model.b1.size()),
            Matrix::Zero(model.w2.rows(), model.w2.cols()), Vector::Zero(model.b2.size())};
}

void GradientBundle::add_scaled(const GradientBundle& other, double scale) {
    w1 += scale * other.w1;
    b1 += scale * other.b1;
    w2 += scale * other.w2;
    b2 += scale * other.b2;
}

namespace {

void check_input(const MicroModel& model, Eigen::Index cols) {
    if (cols != model.w1.cols())
        throw InvalidInput("input dimension does not match the model");
}

Matrix hidden_batch(const MicroModel& model, const Matrix& points) {
    Matrix pre = points * model.w1.transpose();
    pre.rowwise() += model.b1.transpose();
    return pre.cwiseMax(0.0);
}

} // namespace

Vector features(const MicroModel& model, const Eigen::Ref<const Vector>& x) {
    check_input(model, x.size());
    return (model.w1 * x + model.b1).cwiseMax(0.0);
}

Vector predict_probs(const MicroModel& model, const Eigen::Ref<const Vector>& x) {
    const Vector logits = model.w2 * features(model, x) + model.b2;
    const double top = logits.maxCoeff();
    Vector e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double top = logits.row(r).maxCoeff();
        out.row(r) = (logits.row(r).array() - top).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Matrix predict_probs_batch(const MicroModel& model, const Matrix& points) {
    check_input(model, points.cols());
    Matrix logits = hidden_batch(model, points) * model.w2.transpose();
    logits.rowwise() += model.b2.transpose();
    return softmax_rows(logits);
}

LossAndGrad loss_and_grad(const MicroModel& model, const Matrix& points,
                          std::span<const int> targets, std::span<const double> weights) {
    LossAndGrad out{0.0, GradientBundle::zeros_like(model)};
    const Eigen::Index n = points.rows();
    if (static_cast<std::size_t>(n) != targets.size() || targets.size() != weights.size())
        throw InvalidInput("loss_and_grad: points, targets and weights differ in length");
    if (n == 0)
        return out;
    check_input(model, points.cols());

    const Matrix h = hidden_batch(model, points);
    Matrix logits = h * model.w2.transpose();
    logits.rowwise() += model.b2.transpose();

    const int k = model.num_classes();
    Matrix dlogits(n, k);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = targets[static_cast<std::size_t>(i)];
        const double w = weights[static_cast<std::size_t>(i)];
        if (y < 0 || y >= k)
            throw InvalidInput("loss_and_grad: target out of range");
        if (!(w >= 0.0))
            throw InvalidInput("loss_and_grad: negative weight");
        const double top = logits.row(i).maxCoeff();
        auto shifted = (logits.row(i).array() - top).exp();
        const double z = shifted.sum();
        total += w * (std::log(z) - (logits(i, y) - top));
        dlogits.row(i) = (shifted / z).matrix() * (w / static_cast<double>(n));
        dlogits(i, y) -= w / static_cast<double>(n);
    }
    out.loss = total / static_cast<double>(n);

    out.grad.w2.noalias() = dlogits.transpose() * h;
    out.grad.b2 = dlogits.colwise().sum().transpose();
    Matrix dh = dlogits * model.w2;
    dh = dh.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
    out.grad.w1.noalias() = dh.transpose() * points;
    out.grad.b1 = dh.colwise().sum().transpose();
    return out;
}

void apply_update(MicroModel& model, const GradientBundle& grads, double lr) {
    if (grads.w1.rows() != model.w1.rows() || grads.w1.cols() != model.w1.cols() ||
        grads.w2.rows() != model.w2.rows() || grads.w2.cols() != model.w2.cols() ||
        grads.b1.size() != model.b1.size() || grads.b2.size() != model.b2.size())
        throw InvalidInput("apply_update: gradient shapes do not match the model");
    if (!(lr >= 0.0))
        throw InvalidInput("apply_update: lr must be >= 0");
    if (!model.features_frozen()) {
        model.w1 -= lr * grads.w1;
        model.b1 -= lr * grads.b1;
    }
    model.w2 -= lr * grads.w2;
    model.b2 -= lr * grads.b2;
}

namespace {

struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ULL;

    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= c[i];
            state *= 0x100000001b3ULL;
        }
    }
    template <typename M>
    void param(const M& m) {
        bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state));
        return buf;
    }
};

} // namespace

std::string feature_hash(const MicroModel& model) {
    Fnv1a h;
    h.param(model.w1);
    h.param(model.b1);
    return h.hex();
}

std::string parameter_hash(const MicroModel& model) {
    Fnv1a h;
    h.param(model.w1);
    h.param(model.b1);
    h.param(model.w2);
    h.param(model.b2);
    return h.hex();
}

} // namespace bislab
