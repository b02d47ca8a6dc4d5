#include "bislab/config.hpp"
#include "bislab/error.hpp"
#include "bislab/experiment.hpp"
#include "bislab/metrics.hpp"
#include "bislab/run_record.hpp"
#include "bislab/sampling.hpp"
#include "bislab/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace bislab;

namespace {

std::vector<double> as_list(const SamplerStrategy& s) { return {s.probs().begin(), s.probs().end()}; }

SamplerStrategy as_strategy(const std::vector<double>& p) { return {p, SamplerKind::Blended}; }

ExperimentConfig build_config(const std::string& ini, const std::vector<std::string>& overrides) {
    std::istringstream in(ini);
    ExperimentConfig cfg = load_config(in);
    for (const auto& o : overrides)
        cfg.apply_override(o);
    cfg.validate();
    return cfg;
}

py::dict model_dict(const MicroModel& m) {
    py::dict d;
    d["w1"] = m.w1;
    d["b1"] = m.b1;
    d["w2"] = m.w2;
    d["b2"] = m.b2;
    d["features_frozen"] = m.features_frozen();
    return d;
}

py::dict result_dict(const TrainResult& r, const DataSource& source) {
    py::dict d;
    d["record"] = dump_record(r.record, source);
    d["wall_seconds"] = r.record.wall_seconds;
    d["model"] = model_dict(r.model);
    return d;
}

py::dict labeled_dict(const LabeledSet& s) {
    py::dict d;
    d["points"] = s.points;
    d["labels"] = s.labels;
    return d;
}

} // namespace

PYBIND11_MODULE(_bislab, m) {
    m.doc() = "Samplers, synthetic long-tailed data, metrics and training loops.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

    m.def("random_probs", [](const ClassCounts& c) { return as_list(random_probs(c)); }, py::arg("counts"));
    m.def("mean_probs", [](int k) { return as_list(mean_probs(k)); }, py::arg("k"));
    m.def("reverse_probs", [](const ClassCounts& c) { return as_list(reverse_probs(c)); }, py::arg("counts"));
    m.def("keep_prob", [](double mu, double q) { return keep_prob(mu, {q}); }, py::arg("mu"),
          py::arg("q") = 1.0 / 3.0);
    m.def("bis_blend",
          [](double alpha, const std::vector<double>& a, const std::vector<double>& b) {
              return as_list(bis_blend(alpha, as_strategy(a), as_strategy(b)));
          },
          py::arg("alpha"), py::arg("a"), py::arg("b"));
    m.def("alpha_at",
          [](const std::string& schedule, int t, int t_max) {
              return alpha_at({parse_schedule_kind(schedule), t_max}, t);
          },
          py::arg("schedule"), py::arg("t"), py::arg("t_max"));
    m.def("draw_classes",
          [](const std::vector<double>& probs, int n, std::uint64_t seed) {
              Rng rng = make_rng(seed, Stream::LabeledBatches);
              const ClassDrawer drawer(as_strategy(probs));
              std::vector<int> out(n);
              for (int& c : out)
                  c = drawer.draw(rng);
              return out;
          },
          py::arg("probs"), py::arg("n"), py::arg("seed") = 0);

    m.def("class_count_profile", &class_count_profile, py::arg("k"), py::arg("n1"), py::arg("lam"));
    m.def("unlabeled_count_profile",
          [](const ClassCounts& c, double beta) { return unlabeled_count_profile(c, beta); },
          py::arg("counts"), py::arg("beta"));
    m.def("make_synthetic",
          [](const std::string& ini, const std::vector<std::string>& overrides, std::uint64_t seed) {
              const ExperimentConfig cfg = build_config(ini, overrides);
              const SyntheticData d = make_synthetic(cfg.data, seed);
              py::dict out;
              out["labeled"] = labeled_dict(d.labeled);
              py::dict u;
              u["points"] = d.unlabeled.points;
              u["hidden_labels"] = d.unlabeled.hidden_labels;
              out["unlabeled"] = u;
              out["test"] = labeled_dict(d.test);
              return out;
          },
          py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
          py::arg("seed") = 1);

    m.def("confusion",
          [](const std::vector<int>& preds, const std::vector<int>& truths, int k) {
              const auto cm = confusion(preds, truths, k);
              Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(k, k);
              for (int t = 0; t < k; ++t)
                  for (int p = 0; p < k; ++p)
                      out(t, p) = cm.at(t, p);
              return out;
          },
          py::arg("preds"), py::arg("truths"), py::arg("k"));
    m.def("precision_recall",
          [](const std::vector<int>& preds, const std::vector<int>& truths, int k) {
              const auto pr = precision_recall(confusion(preds, truths, k));
              return py::make_tuple(pr.precision, pr.recall);
          },
          py::arg("preds"), py::arg("truths"), py::arg("k"));
    m.def("trend_stats", [](const std::vector<double>& v) { return trend_stats(v); }, py::arg("values"));

    m.def("config_keys", &config_keys);
    m.def("render_config",
          [](const std::string& ini, const std::vector<std::string>& overrides) {
              return render_config(build_config(ini, overrides));
          },
          py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{});

    m.def("train",
          [](const std::string& stage, const std::string& ini, const std::vector<std::string>& overrides) {
              const ExperimentConfig cfg = build_config(ini, overrides);
              const Stage s = parse_stage(stage);
              py::gil_scoped_release release;
              const Dataset ds = materialize(cfg);
              const TrainingView view = view_of(ds, cfg);
              TrainResult joint = s == Stage::Bis ? train_bis(cfg.bis_config(), view, cfg.train_seed)
                                                  : train_joint(cfg.train, view, cfg.train_seed);
              TrainResult result = s == Stage::Finetune
                                       ? finetune_classifier(joint.model, cfg.finetune_config(), view,
                                                             cfg.finetune_seed)
                                       : std::move(joint);
              py::gil_scoped_acquire acquire;
              return result_dict(result, ds.source);
          },
          py::arg("stage"), py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
          "Runs one stage; finetune first trains the joint source model.");
}
