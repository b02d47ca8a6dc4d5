#include "bislab/longtail.hpp"

#include "bislab/error.hpp"

#include <cmath>
#include <sstream>

namespace bislab {

void LongTailSpec::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("invalid dataset spec: " + msg); };
    if (k < 2)
        fail("k >= 2 required");
    if (!(lambda >= 1.0) || !std::isfinite(lambda))
        fail("lambda >= 1 required");
    if (!(beta > 0.0) || !std::isfinite(beta))
        fail("beta > 0 required");
    if (n1 < 1)
        fail("n1 >= 1 required");
    if (round_count(static_cast<double>(n1) / lambda) < 1) {
        std::ostringstream os;
        os << "tail count round(n1 / lambda) = round(" << n1 << " / " << lambda
           << ") must be >= 1";
        fail(os.str());
    }
    if (dim < 1)
        fail("dim >= 1 required");
    if (!(class_sep > 0.0))
        fail("class_sep > 0 required");
    if (!(noise_sigma >= 0.0))
        fail("noise_sigma >= 0 required");
    if (test_per_class < 1)
        fail("test_per_class >= 1 required");
}

ClassCounts LabeledSet::class_counts() const {
    ClassCounts out;
    out.reserve(per_class_index.size());
    for (const auto& rows : per_class_index)
        out.push_back(static_cast<std::int64_t>(rows.size()));
    return out;
}

std::int64_t round_count(double value) {
    return static_cast<std::int64_t>(std::floor(value + 0.5));
}

ClassCounts class_count_profile(int k, std::int64_t n1, double lambda) {
    if (k < 2)
        throw ConfigError("invalid dataset spec: k >= 2 required");
    if (!(lambda >= 1.0))
        throw ConfigError("invalid dataset spec: lambda >= 1 required");
    if (round_count(static_cast<double>(n1) / lambda) < 1)
        throw ConfigError("invalid dataset spec: tail count round(n1 / lambda) must be >= 1");

    ClassCounts counts(static_cast<std::size_t>(k));
    counts[0] = n1;
    for (int j = 1; j < k; ++j) {
        const double exponent = -static_cast<double>(j) / (k - 1);
        counts[j] = std::max<std::int64_t>(1, round_count(n1 * std::pow(lambda, exponent)));
    }
    counts[k - 1] = round_count(static_cast<double>(n1) / lambda);
    return counts;
}

ClassCounts unlabeled_count_profile(std::span<const std::int64_t> labeled, double beta) {
    if (!(beta > 0.0))
        throw ConfigError("invalid dataset spec: beta > 0 required");
    ClassCounts out;
    out.reserve(labeled.size());
    for (auto c : labeled)
        out.push_back(std::max<std::int64_t>(1, round_count(static_cast<double>(c) * beta)));
    return out;
}

void index_by_class(LabeledSet& set, int k) {
    set.per_class_index.assign(static_cast<std::size_t>(k), {});
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        const int y = set.labels[i];
        if (y < 0 || y >= k)
            throw InvalidInput("label out of range");
        set.per_class_index[y].push_back(static_cast<std::int64_t>(i));
    }
}

namespace {

Matrix draw_class_means(const LongTailSpec& spec, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::ClassMeans);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix means(spec.k, spec.dim);
    for (int c = 0; c < spec.k; ++c) {
        double norm = 0.0;
        do {
            for (int d = 0; d < spec.dim; ++d)
                means(c, d) = normal(rng);
            norm = means.row(c).norm();
        } while (norm == 0.0);
        means.row(c) *= spec.class_sep / norm;
    }
    return means;
}

// Rows grouped by class, class 0 first.
void fill_points(const Matrix& means, std::span<const std::int64_t> counts, double sigma,
                 Rng& rng, Matrix& points, std::vector<int>& labels) {
    std::int64_t total = 0;
    for (auto c : counts)
        total += c;
    const auto dim = means.cols();
    points.resize(total, dim);
    labels.resize(static_cast<std::size_t>(total));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::int64_t row = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::int64_t i = 0; i < counts[c]; ++i, ++row) {
            for (Eigen::Index d = 0; d < dim; ++d)
                points(row, d) = means(static_cast<Eigen::Index>(c), d) + sigma * normal(rng);
            labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
        }
    }
}

} // namespace

SyntheticData make_synthetic(const LongTailSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ClassCounts labeled_counts = class_count_profile(spec.k, spec.n1, spec.lambda);
    const ClassCounts unlabeled_counts = unlabeled_count_profile(labeled_counts, spec.beta);
    const ClassCounts test_counts(static_cast<std::size_t>(spec.k), spec.test_per_class);

    const Matrix means = draw_class_means(spec, seed);
    SyntheticData data;

    Rng labeled_rng = make_rng(seed, Stream::LabeledPoints);
    fill_points(means, labeled_counts, spec.noise_sigma, labeled_rng, data.labeled.points,
                data.labeled.labels);
    index_by_class(data.labeled, spec.k);

    Rng unlabeled_rng = make_rng(seed, Stream::UnlabeledPoints);
    fill_points(means, unlabeled_counts, spec.noise_sigma, unlabeled_rng, data.unlabeled.points,
                data.unlabeled.hidden_labels);

    Rng test_rng = make_rng(seed, Stream::TestPoints);
    fill_points(means, test_counts, spec.noise_sigma, test_rng, data.test.points, data.test.labels);
    index_by_class(data.test, spec.k);
    return data;
}

AugmentConfig AugmentConfig::for_noise(double noise_sigma) {
    return {0.05 * noise_sigma, 0.5 * noise_sigma, 0.1};
}

Vector weak_augment(const Eigen::Ref<const Vector>& x, const AugmentConfig& cfg, Rng& rng) {
    Vector out = x;
    if (cfg.weak_sigma == 0.0)
        return out;
    std::normal_distribution<double> normal(0.0, cfg.weak_sigma);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] += normal(rng);
    return out;
}

Vector strong_augment(const Eigen::Ref<const Vector>& x, const AugmentConfig& cfg, Rng& rng) {
    Vector out = x;
    std::normal_distribution<double> normal(0.0, cfg.strong_sigma > 0.0 ? cfg.strong_sigma : 1.0);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (cfg.strong_sigma > 0.0)
            out[i] += normal(rng);
        if (uniform01(rng) < cfg.drop_prob)
            out[i] = 0.0;
    }
    return out;
}

} // namespace bislab
