/*
 * Copyright 2026 The ACR Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "acr/error.hpp"
#include "acr/experiment.hpp"
#include "acr/io.hpp"
#include "acr/metrics.hpp"
#include "acr/mfs.hpp"
#include "acr/model.hpp"
#include "acr/numerics.hpp"
#include "acr/scores.hpp"

namespace py = pybind11;

namespace {

acr::ScorerSpec make_scorer(const std::string& name, double temperature, double gamma,
                            std::size_t top_m, bool renormalize) {
  acr::ScorerSpec spec;
  spec.kind = acr::parse_scorer_kind(name);
  spec.temperature = temperature;
  spec.gamma = gamma;
  spec.top_m = top_m;
  spec.renormalize_over_c = renormalize;
  return spec;
}

py::dict outlier_to_dict(const acr::SynthesizedOutlier& o) {
  py::dict d;
  d["embeddings"] = o.embeddings;
  d["label"] = o.label;
  d["lambda"] = o.lambda;
  d["n_swap"] = o.n_swap;
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::dict report_to_dict(const acr::MetricsReport& r) {
  py::dict d = json_to_py(acr::metrics_to_json(r));
  d["coverage"] = r.curve.coverage;
  d["risk"] = r.curve.risk;
  d["warnings"] = r.warnings;
  return d;
}

acr::SwapConfig swap_config(std::size_t n_min, std::size_t n_max, std::size_t num_classes) {
  return acr::SwapConfig{n_min, n_max, num_classes};
}

}  // namespace

PYBIND11_MODULE(_acr, m) {
  m.doc() = "Adaptive confidence regularization: scorers, metrics, feature swapping, training";

  py::register_exception<acr::InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<acr::ShapeMismatch>(m, "ShapeMismatch", PyExc_ValueError);
  py::register_exception<acr::InvalidConfig>(m, "InvalidConfig", PyExc_ValueError);
  py::register_exception<acr::DegenerateSplit>(m, "DegenerateSplit", PyExc_ValueError);
  py::register_exception<acr::DivergedTraining>(m, "DivergedTraining", PyExc_ArithmeticError);

  m.def("softmax", [](const std::vector<double>& v) { return acr::softmax(v); }, py::arg("v"));
  m.def("logsumexp", [](const std::vector<double>& v) { return acr::logsumexp(v); }, py::arg("v"));
  m.def("cross_entropy_soft",
        [](const std::vector<double>& p, const std::vector<double>& t) { return acr::cross_entropy_soft(p, t); },
        py::arg("probs"), py::arg("target"));

  m.def("score_msp", [](const std::vector<double>& p) { return acr::score_msp(p); }, py::arg("probs"));
  m.def("score_maxlogit", [](const std::vector<double>& z) { return acr::score_maxlogit(z); }, py::arg("logits"));
  m.def("score_energy", [](const std::vector<double>& z, double t) { return acr::score_energy(z, t); },
        py::arg("logits"), py::arg("temperature") = 1.0);
  m.def("score_entropy", [](const std::vector<double>& p) { return acr::score_entropy(p); }, py::arg("probs"));
  m.def("score_doctor",
        [](const std::vector<double>& p, const std::string& variant) {
          if (variant != "alpha" && variant != "beta") throw acr::InvalidInput("variant must be alpha or beta");
          return acr::score_doctor(p, variant == "alpha" ? acr::DoctorVariant::Alpha : acr::DoctorVariant::Beta);
        },
        py::arg("probs"), py::arg("variant") = "alpha");
  m.def("score_gen",
        [](const std::vector<double>& p, double gamma, std::size_t top_m) { return acr::score_gen(p, gamma, top_m); },
        py::arg("probs"), py::arg("gamma") = 0.1, py::arg("top_m") = 0);
  m.def("score_logits",
        [](const std::vector<double>& logits, std::size_t num_classes, const std::string& scorer,
           double temperature, double gamma, std::size_t top_m, bool renormalize) {
          return acr::score_logits(logits, num_classes, make_scorer(scorer, temperature, gamma, top_m, renormalize));
        },
        py::arg("logits"), py::arg("num_classes"), py::arg("scorer") = "msp", py::arg("temperature") = 1.0,
        py::arg("gamma") = 0.1, py::arg("top_m") = 0, py::arg("renormalize_over_c") = false);

  m.def("risk_coverage",
        [](const std::vector<double>& s, const std::vector<bool>& c) {
          const auto curve = acr::risk_coverage(s, c);
          return py::make_tuple(curve.coverage, curve.risk);
        },
        py::arg("scores"), py::arg("correct"));
  m.def("aurc", [](const std::vector<double>& s, const std::vector<bool>& c) { return acr::aurc(s, c); },
        py::arg("scores"), py::arg("correct"));
  m.def("auroc", [](const std::vector<double>& s, const std::vector<bool>& c) { return acr::auroc(s, c); },
        py::arg("scores"), py::arg("correct"));
  m.def("fpr_at_95_tpr",
        [](const std::vector<double>& s, const std::vector<bool>& c) { return acr::fpr_at_95_tpr(s, c); },
        py::arg("scores"), py::arg("correct"));
  m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& l) { return acr::accuracy(p, l); },
        py::arg("predictions"), py::arg("labels"));
  m.def("degradation_rate",
        [](const std::vector<double>& fused, const std::vector<std::vector<double>>& uni,
           const std::vector<bool>& correct) {
          const auto r = acr::degradation_rate(fused, uni, correct);
          return py::make_tuple(r.rate_correct, r.rate_incorrect);
        },
        py::arg("fused_conf"), py::arg("unimodal_confs"), py::arg("correct"));
  m.def("dpi_and_fano_check",
        [](std::size_t n_x1, std::size_t n_x2, std::size_t n_y, const std::vector<double>& table) {
          const auto d = acr::dpi_and_fano_check(acr::DiscreteJoint(n_x1, n_x2, n_y, table));
          py::dict out;
          out["h_y_given_x1"] = d.h_y_given_x1;
          out["h_y_given_x2"] = d.h_y_given_x2;
          out["h_y_given_x12"] = d.h_y_given_x12;
          out["bayes_error"] = d.bayes_error;
          out["fano_bound"] = d.fano_bound;
          out["ok"] = d.ok();
          out["violation"] = d.violation;
          return out;
        },
        py::arg("n_x1"), py::arg("n_x2"), py::arg("n_y"), py::arg("table"));

  m.def("acl_loss", [](double conf, const std::vector<double>& confs) { return acr::acl_loss(conf, confs); },
        py::arg("conf"), py::arg("unimodal_confs"));
  m.def("soft_label", &acr::soft_label, py::arg("lam"), py::arg("y_true"), py::arg("num_classes"));
  m.def("mfs_two",
        [](const std::vector<double>& e1, const std::vector<double>& e2, std::size_t y_true, std::size_t num_classes,
           std::size_t n_min, std::size_t n_max, std::uint64_t seed) {
          acr::RandomStream rng(seed);
          return outlier_to_dict(acr::mfs_two(e1, e2, y_true, swap_config(n_min, n_max, num_classes), rng));
        },
        py::arg("e1"), py::arg("e2"), py::arg("y_true"), py::arg("num_classes"), py::arg("n_min") = 32,
        py::arg("n_max") = 256, py::arg("seed") = 0);
  m.def("synthesize_outlier",
        [](const std::string& kind, const acr::EmbeddingSet& embeddings, std::size_t y_true, std::size_t num_classes,
           std::size_t n_min, std::size_t n_max, std::uint64_t seed) {
          acr::RandomStream rng(seed);
          const std::size_t width = embeddings.empty() ? 0 : embeddings.front().size();
          const auto cfg = swap_config(n_min, n_max, num_classes);
          const auto plan = acr::plan_outlier(acr::parse_synthesizer(kind), embeddings.size(), width, cfg, rng);
          return outlier_to_dict(acr::synthesize(plan, embeddings, y_true, cfg));
        },
        py::arg("kind"), py::arg("embeddings"), py::arg("y_true"), py::arg("num_classes"), py::arg("n_min") = 32,
        py::arg("n_max") = 256, py::arg("seed") = 0);

  m.def("default_config", [] { return json_to_py(acr::config_to_json(acr::ExperimentConfig{})); });
  m.def("run_experiment",
        [](const py::object& config) {
          const auto cfg = acr::config_from_json(py_to_json(config));
          acr::ExperimentResult result;
          {
            py::gil_scoped_release release;
            result = acr::run_experiment(cfg);
          }
          py::dict out;
          out["metrics"] = report_to_dict(result.metrics);
          if (result.clean_metrics) out["clean_metrics"] = report_to_dict(*result.clean_metrics);
          out["best_epoch"] = result.training.best_epoch;
          py::list history;
          for (const auto& e : result.training.history) {
            py::dict row;
            row["epoch"] = e.epoch;
            row["loss_total"] = e.loss_total;
            row["l_cls"] = e.l_cls;
            row["l_outlier"] = e.l_outlier;
            row["l_acl"] = e.l_acl;
            row["val_acc"] = e.val_acc;
            row["val_auroc"] = e.val_auroc;
            row["val_aurc"] = e.val_aurc;
            history.append(row);
          }
          out["history"] = history;
          return out;
        },
        py::arg("config"));
  m.def("evaluate_dump",
        [](const std::string& path, const std::string& scorer, double temperature, double gamma, std::size_t top_m,
           bool renormalize) {
          const auto dump = acr::read_logit_dump(std::filesystem::path(path));
          return report_to_dict(acr::evaluate_dump(dump, make_scorer(scorer, temperature, gamma, top_m, renormalize)));
        },
        py::arg("path"), py::arg("scorer") = "msp", py::arg("temperature") = 1.0, py::arg("gamma") = 0.1,
        py::arg("top_m") = 0, py::arg("renormalize_over_c") = false);
}
