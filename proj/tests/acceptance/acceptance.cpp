// Acceptance checks A1-A11. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Trend criteria train on the desk_trends preset.

#include "bislab/config.hpp"
#include "bislab/run_record.hpp"
#include "bislab/sampling.hpp"
#include "bislab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace bislab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
    double seconds = 0.0;        // runtime charged to the criterion
    double budget = 0.0;         // 0: no runtime limit
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- A1-A4

Outcome a1_sampler_exactness() {
    const auto t0 = Clock::now();
    const ClassCounts counts{4, 2, 1, 1};
    const std::vector<std::pair<SamplerStrategy, std::vector<double>>> cases = {
        {random_probs(counts), {0.5, 0.25, 0.125, 0.125}},
        {mean_probs(4), {0.25, 0.25, 0.25, 0.25}},
        {reverse_probs(counts), {1.0 / 11, 2.0 / 11, 4.0 / 11, 4.0 / 11}}};
    double analytic_err = 0.0, draw_dev = 0.0;
    std::uint64_t seed = 1;
    for (const auto& [strategy, want] : cases) {
        for (std::size_t j = 0; j < want.size(); ++j)
            analytic_err = std::max(analytic_err, std::abs(strategy[j] - want[j]));
        Rng rng = make_rng(seed++, Stream::LabeledBatches);
        const ClassDrawer drawer(strategy);
        std::vector<double> freq(want.size(), 0.0);
        const int n = 100000;
        for (int i = 0; i < n; ++i)
            freq[drawer.draw(rng)] += 1.0 / n;
        for (std::size_t j = 0; j < want.size(); ++j)
            draw_dev = std::max(draw_dev, std::abs(freq[j] - strategy[j]));
    }
    Outcome o;
    o.seconds = seconds_since(t0);
    o.budget = 2.0;
    o.pass = analytic_err <= 1e-12 && draw_dev <= 0.01 && o.seconds < o.budget;
    o.detail = fmt("max analytic error %.3g (tol 1e-12), max draw deviation %.4f over 100k draws (tol 0.01)",
                   analytic_err, draw_dev);
    return o;
}

// Kept fraction of `n` confident pseudo labels of class 0 with mu_0 = mu.
double kept_fraction(double mu, double q, int n, std::uint64_t seed) {
    MicroModel model(2, 2, 2);
    model.b2(0) = 40.0;  // confidence ~1 for class 0
    const Matrix points = Matrix::Zero(n, 2);
    std::vector<std::int64_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    Rng aug = make_rng(seed, Stream::Augment), keep = make_rng(seed, Stream::KeepDecision);
    const SamplerStrategy strategy({mu, 1.0 - mu}, SamplerKind::Blended);
    const auto batch = pseudo_label_step(model, points, rows, strategy, q, 0.95,
                                         AugmentConfig::for_noise(1.0), {aug, keep});
    return double(batch.kept_targets.size()) / n;
}

Outcome a2_keep_probability() {
    const auto t0 = Clock::now();
    const double third = kept_fraction(0.125, 1.0 / 3.0, 10000, 1);
    const double zero = kept_fraction(0.125, 0.0, 10000, 2);
    const double one = kept_fraction(0.125, 1.0, 10000, 3);
    Outcome o;
    o.seconds = seconds_since(t0);
    o.pass = std::abs(third - 0.5) <= 0.02 && zero == 1.0 && std::abs(one - 0.125) <= 0.01;
    o.detail = fmt("mu=0.125: q=1/3 kept %.4f (0.5 +- 0.02), q=0 kept %.4f (1), q=1 kept %.4f (0.125 +- 0.01)",
                   third, zero, one);
    return o;
}

Outcome a3_schedules() {
    const auto t0 = Clock::now();
    const int t_max = 999;  // 1000 grid points
    bool endpoints = true, range = true, monotone = true, order = true;
    for (ScheduleKind kind : {ScheduleKind::Equal, ScheduleKind::Linear, ScheduleKind::Cosine,
                              ScheduleKind::Parabolic}) {
        const BisSchedule s{kind, t_max};
        const double start = kind == ScheduleKind::Equal ? 0.5 : 1.0;
        const double end = kind == ScheduleKind::Equal ? 0.5 : 0.0;
        endpoints &= alpha_at(s, 0) == start && alpha_at(s, t_max) == end;
        double prev = alpha_at(s, 0);
        for (int t = 0; t <= t_max; ++t) {
            const double a = alpha_at(s, t);
            range &= a >= 0.0 && a <= 1.0;
            monotone &= a <= prev;
            prev = a;
        }
    }
    for (int t = 1; t < t_max; ++t) {
        const double p = alpha_at({ScheduleKind::Parabolic, t_max}, t);
        const double c = alpha_at({ScheduleKind::Cosine, t_max}, t);
        const double l = alpha_at({ScheduleKind::Linear, t_max}, t);
        order &= p >= c && c >= l;
    }
    Outcome o;
    o.seconds = seconds_since(t0);
    o.budget = 1.0;
    o.pass = endpoints && range && monotone && order && o.seconds < o.budget;
    o.detail = fmt("endpoints %s, range %s, monotone %s, parabolic>=cosine>=linear %s on 1000 points",
                   endpoints ? "ok" : "BAD", range ? "ok" : "BAD", monotone ? "ok" : "BAD",
                   order ? "ok" : "BAD");
    return o;
}

Outcome a4_gradients() {
    const auto t0 = Clock::now();
    const double eps = 1e-5;
    // Relative error |a - n| / max(|a|, |n|, floor).
    const double floor = 1e-7;
    double worst = 0.0;
    for (std::uint64_t m = 0; m < 20; ++m) {
        Rng rng = make_rng(1000 + m, Stream::ModelInit);
        const int dim = 2 + int(m % 4), hidden = 3 + int(m % 5), k = 2 + int(m % 3), n = 5;
        MicroModel model = MicroModel::initialized(dim, hidden, k, rng);
        std::normal_distribution<double> g;
        Matrix x(n, dim);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x.data()[i] = g(rng);
        std::vector<int> y(n);
        std::vector<double> w(n);
        for (int i = 0; i < n; ++i) {
            y[i] = int(rng() % k);
            w[i] = 0.5 + uniform01(rng);
        }
        const auto grad = loss_and_grad(model, x, y, w).grad;
        auto probe = [&](auto param, const auto& analytic) {
            for (Eigen::Index i = 0; i < analytic.size(); ++i) {
                MicroModel plus = model, minus = model;
                param(plus)[i] += eps;
                param(minus)[i] -= eps;
                const double num = (loss_and_grad(plus, x, y, w).loss - loss_and_grad(minus, x, y, w).loss) / (2 * eps);
                const double a = analytic.data()[i];
                worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor}));
            }
        };
        probe([](MicroModel& mm) { return mm.w1.data(); }, grad.w1);
        probe([](MicroModel& mm) { return mm.b1.data(); }, grad.b1);
        probe([](MicroModel& mm) { return mm.w2.data(); }, grad.w2);
        probe([](MicroModel& mm) { return mm.b2.data(); }, grad.b2);
    }
    Outcome o;
    o.seconds = seconds_since(t0);
    o.budget = 5.0;
    o.pass = worst < 1e-4 && o.seconds < o.budget;
    o.detail = fmt("max relative error %.3g over 20 models (tol 1e-4, eps 1e-5)", worst);
    return o;
}

// ---------------------------------------------------------------- trend runs

struct Run {
    double accuracy = 0.0;
    double recall_spearman = 0.0;
    double precision_spearman = 0.0;
    double seconds = 0.0;
};

class TrendRuns {
public:
    explicit TrendRuns(ExperimentConfig preset) : preset_(std::move(preset)) {}

    const ExperimentConfig& preset() const { return preset_; }

    // kind: rr, mm, rr_ft, mm_ft, bis_parabolic, bis_equal
    const Run& get(const std::string& kind, std::uint64_t seed) {
        const auto key = std::make_pair(kind, seed);
        if (auto it = cache_.find(key); it != cache_.end())
            return it->second;
        if (kind == "rr_ft" || kind == "mm_ft") {
            const std::string source = kind.substr(0, 2);
            get(source, seed);
            const auto t0 = Clock::now();
            const auto& d = data(seed);
            const ExperimentConfig cfg = config(seed);
            const auto r = finetune_classifier(models_.at({source, seed}), cfg.finetune_config(),
                                               view(d, cfg), cfg.finetune_seed);
            return cache_[key] = summarize(r, seconds_since(t0));
        }
        const auto t0 = Clock::now();
        const auto& d = data(seed);
        ExperimentConfig cfg = config(seed);
        TrainResult r;
        if (kind == "rr" || kind == "mm") {
            const SamplerKind s = kind == "rr" ? SamplerKind::Random : SamplerKind::Mean;
            cfg.train.labeled_sampler = cfg.train.unlabeled_sampler = s;
            r = train_joint(cfg.train, view(d, cfg), cfg.train_seed);
            models_.emplace(key, r.model);
        } else {
            cfg.bis = BisConfig{kind == "bis_parabolic" ? ScheduleKind::Parabolic : ScheduleKind::Equal,
                                SamplerKind::Random, SamplerKind::Mean, 0};
            r = train_bis(cfg.bis_config(), view(d, cfg), cfg.train_seed);
        }
        return cache_[key] = summarize(r, seconds_since(t0));
    }

    ExperimentConfig config(std::uint64_t seed) const {
        ExperimentConfig c = preset_;
        c.data_seed = c.train_seed = c.finetune_seed = seed;
        return c;
    }

    const SyntheticData& data(std::uint64_t seed) {
        auto it = data_.find(seed);
        if (it == data_.end())
            it = data_.emplace(seed, make_synthetic(preset_.data, seed)).first;
        return it->second;
    }

    static TrainingView view(const SyntheticData& d, const ExperimentConfig& c) {
        return {d.labeled, d.unlabeled.points, d.test, c.augment(), d.unlabeled.hidden_labels};
    }

private:
    static Run summarize(const TrainResult& r, double secs) {
        return {r.record.final_report->accuracy, r.record.final_report->recall_spearman,
                r.record.final_report->precision_spearman, secs};
    }

    ExperimentConfig preset_;
    std::map<std::uint64_t, SyntheticData> data_;
    std::map<std::pair<std::string, std::uint64_t>, Run> cache_;
    std::map<std::pair<std::string, std::uint64_t>, MicroModel> models_;
};

struct Series {
    std::vector<double> values;
    double seconds = 0.0;
    double mean() const { return std::accumulate(values.begin(), values.end(), 0.0) / values.size(); }
};

// Accuracy (or another field) over seeds 1..n; seconds count every run the
// series depends on, including a fine-tune's source run.
Series series(TrendRuns& runs, const std::string& kind, int n, double Run::*field = &Run::accuracy) {
    Series s;
    for (int seed = 1; seed <= n; ++seed) {
        const Run& r = runs.get(kind, seed);
        s.values.push_back(r.*field);
        s.seconds += r.seconds;
        if (kind.ends_with("_ft"))
            s.seconds += runs.get(kind.substr(0, 2), seed).seconds;
    }
    return s;
}

Outcome a5_recall_trend(TrendRuns& runs) {
    const Series rec = series(runs, "rr", 5, &Run::recall_spearman);
    const Series prec = series(runs, "rr", 5, &Run::precision_spearman);
    Outcome o;
    o.seconds = rec.seconds;
    o.budget = 180.0;
    o.pass = rec.mean() <= -0.6 && prec.mean() >= 0.4 && o.seconds < o.budget;
    o.detail = fmt("random/random, 5 seeds: mean Spearman recall %.3f (<= -0.6), precision %.3f (>= +0.4)",
                   rec.mean(), prec.mean());
    return o;
}

Outcome a6_resampling_helps(TrendRuns& runs) {
    const Series rr = series(runs, "rr", 10), mm = series(runs, "mm", 10);
    const double gain = 100 * (mm.mean() - rr.mean());
    Outcome o;
    o.seconds = rr.seconds + mm.seconds;
    o.budget = 360.0;
    o.pass = gain >= 1.0 && o.seconds < o.budget;
    o.detail = fmt("10 seeds: mean/mean %.2f%% vs random/random %.2f%%, gain %+.2f points (>= 1)",
                   100 * mm.mean(), 100 * rr.mean(), gain);
    return o;
}

Outcome a7_decoupling(TrendRuns& runs) {
    const Series rr = series(runs, "rr", 10), rr_ft = series(runs, "rr_ft", 10),
                 mm_ft = series(runs, "mm_ft", 10);
    const double gain = 100 * (rr_ft.mean() - rr.mean());
    const double vs_mm = 100 * (rr_ft.mean() - mm_ft.mean());
    Outcome o;
    o.seconds = rr_ft.seconds + mm_ft.seconds;  // includes both source runs
    o.budget = 600.0;
    o.pass = gain >= 1.0 && vs_mm >= -0.5 && o.seconds < o.budget;
    o.detail = fmt("10 seeds: random/random %.2f%% -> fine-tuned %.2f%% (%+.2f, >= 1); "
                   "fine-tuned mean/mean %.2f%% (difference %+.2f, >= -0.5)",
                   100 * rr.mean(), 100 * rr_ft.mean(), gain, 100 * mm_ft.mean(), vs_mm);
    return o;
}

Outcome a8_bis(TrendRuns& runs) {
    const Series bis = series(runs, "bis_parabolic", 10), rr = series(runs, "rr", 10),
                 mm = series(runs, "mm", 10);
    const double vs_rr = 100 * (bis.mean() - rr.mean()), vs_mm = 100 * (bis.mean() - mm.mean());
    Outcome o;
    o.seconds = bis.seconds + rr.seconds + mm.seconds;
    o.budget = 360.0;
    o.pass = vs_rr >= 1.0 && vs_mm >= 0.0 && o.seconds < o.budget;
    o.detail = fmt("10 seeds: BiS %.2f%%, vs random/random %+.2f (>= 1), vs mean/mean %+.2f (>= 0)",
                   100 * bis.mean(), vs_rr, vs_mm);
    return o;
}

Outcome a9_decay_ordering(TrendRuns& runs) {
    const Series par = series(runs, "bis_parabolic", 10), eq = series(runs, "bis_equal", 10);
    int wins = 0;
    for (std::size_t i = 0; i < par.values.size(); ++i)
        wins += par.values[i] > eq.values[i];
    Outcome o;
    o.seconds = par.seconds + eq.seconds;
    o.pass = par.mean() >= eq.mean() && wins >= 6;
    o.detail = fmt("10 seeds: parabolic %.2f%% vs equal %.2f%%, strictly better in %d/10 (>= 6)",
                   100 * par.mean(), 100 * eq.mean(), wins);
    return o;
}

// ---------------------------------------------------------------- A10-A11

struct StageRun {
    const char* name;
    std::function<TrainResult(const TrainingView&)> run;
};

std::vector<StageRun> stage_runs(const ExperimentConfig& cfg) {
    return {
        {"joint", [cfg](const TrainingView& v) { return train_joint(cfg.train, v, cfg.train_seed); }},
        {"finetune",
         [cfg](const TrainingView& v) {
             const auto base = train_joint(cfg.train, v, cfg.train_seed);
             return finetune_classifier(base.model, cfg.finetune_config(), v, cfg.finetune_seed);
         }},
        {"bis", [cfg](const TrainingView& v) { return train_bis(cfg.bis_config(), v, cfg.train_seed); }},
    };
}

Outcome a10_determinism(TrendRuns& runs) {
    const auto t0 = Clock::now();
    const ExperimentConfig cfg = runs.config(1);
    const DataSource source{cfg.data, cfg.data_seed, ""};
    std::string failed;
    for (const auto& stage : stage_runs(cfg)) {
        // Fresh data per repeat.
        const auto d1 = make_synthetic(cfg.data, cfg.data_seed);
        const auto d2 = make_synthetic(cfg.data, cfg.data_seed);
        const std::string a = dump_record(stage.run(TrendRuns::view(d1, cfg)).record, source);
        const std::string b = dump_record(stage.run(TrendRuns::view(d2, cfg)).record, source);
        if (a != b)
            failed += std::string(" ") + stage.name;
    }
    Outcome o;
    o.seconds = seconds_since(t0);
    o.pass = failed.empty();
    o.detail = failed.empty() ? "joint, finetune and bis records byte-identical on repeat"
                              : "records differ for:" + failed;
    return o;
}

Outcome a11_hidden_labels(TrendRuns& runs) {
    const auto t0 = Clock::now();
    const ExperimentConfig cfg = runs.config(1);
    const auto clean = make_synthetic(cfg.data, cfg.data_seed);
    auto poisoned = clean;
    const int k = cfg.data.k;
    for (auto& y : poisoned.unlabeled.hidden_labels)
        y = (y + 1) % k;
    std::string failed;
    for (const auto& stage : stage_runs(cfg)) {
        const auto a = stage.run(TrendRuns::view(clean, cfg)).model;
        const auto b = stage.run(TrendRuns::view(poisoned, cfg)).model;
        if (!(a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2))
            failed += std::string(" ") + stage.name;
    }
    Outcome o;
    o.seconds = seconds_since(t0);
    o.pass = failed.empty();
    o.detail = failed.empty() ? "joint, finetune and bis parameters bit-identical with poisoned hidden labels"
                              : "parameters differ for:" + failed;
    return o;
}

} // namespace

int main(int argc, char** argv) {
    std::string preset_path = BISLAB_TREND_PRESET;
    std::vector<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc)
            preset_path = argv[++i];
        else
            only.push_back(arg);
    }
    TrendRuns runs(load_config_file(preset_path));

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"A1", a1_sampler_exactness},
        {"A2", a2_keep_probability},
        {"A3", a3_schedules},
        {"A4", a4_gradients},
        {"A5", [&] { return a5_recall_trend(runs); }},
        {"A6", [&] { return a6_resampling_helps(runs); }},
        {"A7", [&] { return a7_decoupling(runs); }},
        {"A8", [&] { return a8_bis(runs); }},
        {"A9", [&] { return a9_decay_ordering(runs); }},
        {"A10", [&] { return a10_determinism(runs); }},
        {"A11", [&] { return a11_hidden_labels(runs); }},
    };
    std::printf("preset: %s\n", preset_path.c_str());
    int failures = 0;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        const std::string budget = o.budget > 0 ? fmt(" (budget %.0f s)", o.budget) : "";
        std::printf("%-4s %s  %s  [%.2f s%s]\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    o.seconds, budget.c_str());
        std::fflush(stdout);
    }
    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
