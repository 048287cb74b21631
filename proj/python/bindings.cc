// Copyright 2026 The genmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "genmatch/core.h"
#include "genmatch/evaluate.h"
#include "genmatch/matcher.h"
#include "genmatch/oracle.h"
#include "genmatch/sim.h"

namespace py = pybind11;
using namespace genmatch;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Sample MakeSample(DoubleArray covariates, const std::vector<Condition>& conditions,
                  std::size_t num_conditions, std::vector<std::string> labels) {
  if (covariates.ndim() == 1) {
    covariates = covariates.reshape({covariates.shape(0), py::ssize_t{1}});
  }
  if (covariates.ndim() != 2) throw InvalidInput("covariates must be 2-D");
  const auto n = static_cast<std::size_t>(covariates.shape(0));
  const auto d = static_cast<std::size_t>(covariates.shape(1));
  if (n != conditions.size()) {
    throw InvalidInput("covariates and conditions differ in length");
  }
  std::vector<double> x(covariates.data(), covariates.data() + n * d);
  return Sample::FromConditions(std::move(x), d, conditions, num_conditions,
                                std::move(labels));
}

py::object ToPython(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_genmatch, m) {
  m.doc() = "Generalized full matching";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  static py::handle infeasible =
      py::exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Infeasible& e) {
      py::object err = infeasible(e.what());
      err.attr("units") = py::cast(e.units());
      PyErr_SetObject(infeasible.ptr(), err.ptr());
    }
  });

  py::class_<Sample>(m, "Sample")
      .def(py::init(&MakeSample), py::arg("covariates"), py::arg("conditions"),
           py::arg("num_conditions"), py::arg("labels") = std::vector<std::string>{})
      .def_static(
          "from_labels",
          [](const std::vector<std::vector<double>>& rows,
             const std::vector<std::string>& labels) {
            return ValidateSample(rows, labels);
          },
          py::arg("rows"), py::arg("labels"))
      .def_property_readonly("size", &Sample::size)
      .def_property_readonly("dims", &Sample::dims)
      .def_property_readonly("num_conditions", &Sample::num_conditions)
      .def_property_readonly("labels", &Sample::labels)
      .def_property_readonly("conditions",
                             [](const Sample& s) {
                               auto c = s.conditions();
                               return std::vector<Condition>(c.begin(), c.end());
                             })
      .def("members",
           [](const Sample& s, Condition j) {
             if (j >= s.num_conditions()) throw InvalidInput("no such condition");
             auto w = s.members(j);
             return std::vector<Unit>(w.begin(), w.end());
           })
      .def("__len__", &Sample::size);

  py::class_<Constraints>(m, "Constraints")
      .def(py::init([](std::vector<std::size_t> per_condition, std::size_t total) {
             return Constraints{std::move(per_condition), total};
           }),
           py::arg("per_condition"), py::arg("total"))
      .def_static("parse", &Constraints::Parse)
      .def_static("traditional", &Constraints::Traditional)
      .def_readonly("per_condition", &Constraints::per_condition)
      .def_readonly("total", &Constraints::total)
      .def("degree", &Constraints::degree)
      .def("__str__", &Constraints::ToString)
      .def("__repr__", [](const Constraints& c) {
        return "Constraints('" + c.ToString() + "')";
      });

  py::class_<Metric>(m, "Metric")
      .def_static("euclidean", &Metric::Euclidean)
      .def_static("scalar", &Metric::Scalar)
      .def_static("mahalanobis",
                  [](DoubleArray scaling) {
                    if (scaling.ndim() != 2 || scaling.shape(0) != scaling.shape(1)) {
                      throw InvalidInput("scaling must be a square matrix");
                    }
                    const auto d = static_cast<std::size_t>(scaling.shape(0));
                    return Metric::Mahalanobis(
                        std::span<const double>(scaling.data(), d * d), d);
                  })
      .def_static("mahalanobis_from_sample", &Metric::MahalanobisFromSample)
      .def_static("for_sample",
                  [](const std::string& kind, const Sample& sample) {
                    return Metric::ForSample(ParseMetricKind(kind), sample);
                  })
      .def_property_readonly("kind", [](const Metric& metric) {
        return std::string(MetricKindName(metric.kind()));
      });

  m.def(
      "distance",
      [](const Metric& metric, Unit a, Unit b, const Sample& sample) {
        if (a >= sample.size() || b >= sample.size()) {
          throw InvalidInput("unit out of range");
        }
        return Distance(metric, a, b, sample);
      },
      py::arg("metric"), py::arg("a"), py::arg("b"), py::arg("sample"));

  py::class_<MatchOptions>(m, "MatchOptions")
      .def(py::init<>())
      .def_readwrite("use_refined_seeds", &MatchOptions::use_refined_seeds)
      .def_readwrite("global_step5", &MatchOptions::global_step5)
      .def_readwrite("caliper_gc", &MatchOptions::caliper_gc)
      .def_readwrite("caliper_step5", &MatchOptions::caliper_step5)
      .def_readwrite("focus_set", &MatchOptions::focus_set)
      .def_readwrite("num_threads", &MatchOptions::num_threads);

  py::class_<Matching>(m, "Matching")
      .def_static("from_labels", &Matching::FromLabels)
      .def_property_readonly("labels",
                             [](const Matching& mt) {
                               auto l = mt.labels();
                               return std::vector<GroupId>(l.begin(), l.end());
                             })
      .def_property_readonly("groups", &Matching::groups)
      .def_property_readonly("num_groups", &Matching::num_groups)
      .def("unassigned", &Matching::unassigned)
      .def("__eq__", [](const Matching& a, const Matching& b) { return a == b; });

  m.def(
      "full_match",
      [](const Sample& sample, const Metric& metric, const Constraints& constraints,
         const MatchOptions& options) {
        py::gil_scoped_release release;
        return FullMatch(sample, metric, constraints, options);
      },
      py::arg("sample"), py::arg("metric"), py::arg("constraints"),
      py::arg("options") = MatchOptions{});

  m.def(
      "evaluate_objective",
      [](const Matching& matching, const Sample& sample, const Metric& metric,
         const std::string& objective, Condition treated) {
        const MetricSpace space(sample, metric);
        return EvaluateObjective(matching, space, ParseObjective(objective), treated);
      },
      py::arg("matching"), py::arg("sample"), py::arg("metric"),
      py::arg("objective"), py::arg("treated") = 0);

  m.def("implied_weights", &ImpliedWeights, py::arg("matching"),
        py::arg("sample"), py::arg("treated") = 0);

  m.def(
      "att_estimate",
      [](const Matching& matching, const Sample& sample,
         const std::vector<double>& outcomes, Condition treated) {
        if (outcomes.size() != sample.size()) {
          throw InvalidInput("one outcome per unit is needed");
        }
        return AttEstimate(matching, sample, outcomes, treated);
      },
      py::arg("matching"), py::arg("sample"), py::arg("outcomes"),
      py::arg("treated") = 0);

  m.def(
      "report",
      [](const Matching& matching, const Sample& sample, const Metric& metric,
         const Constraints& constraints, Condition treated,
         std::optional<std::vector<double>> outcomes) {
        const MetricSpace space(sample, metric);
        std::optional<std::span<const double>> view;
        if (outcomes) {
          if (outcomes->size() != sample.size()) {
            throw InvalidInput("one outcome per unit is needed");
          }
          view = std::span<const double>(*outcomes);
        }
        return ToPython(
            ReportToJson(BuildReport(matching, space, constraints, treated, view)));
      },
      py::arg("matching"), py::arg("sample"), py::arg("metric"),
      py::arg("constraints"), py::arg("treated") = 0,
      py::arg("outcomes") = py::none());

  m.def(
      "optimal_matching",
      [](const Sample& sample, const Metric& metric, const Constraints& constraints,
         const std::string& objective, Condition treated) {
        const MetricSpace space(sample, metric);
        OracleResult r = OptimalMatchingBruteForce(
            space, constraints, ParseObjective(objective), treated);
        return py::make_tuple(r.matching, r.value);
      },
      py::arg("sample"), py::arg("metric"), py::arg("constraints"),
      py::arg("objective") = "lmax", py::arg("treated") = 0);

  m.def(
      "simulate",
      [](std::size_t n, std::size_t replicates, std::uint64_t seed,
         const std::vector<std::string>& methods, const std::string& constraints,
         const std::string& metric, unsigned threads) {
        SimConfig config;
        config.n = n;
        config.replicates = replicates;
        config.seed = seed;
        config.methods.clear();
        for (const auto& name : methods) config.methods.push_back(ParseSimMethod(name));
        config.constraints = Constraints::Parse(constraints);
        config.metric = ParseMetricKind(metric);
        config.threads = threads;
        SimReport report;
        {
          py::gil_scoped_release release;
          report = RunExperiment(config);
        }
        return ToPython(report.ToJson());
      },
      py::arg("n"), py::arg("replicates"), py::arg("seed"),
      py::arg("methods") = std::vector<std::string>{"unadjusted", "gfm"},
      py::arg("constraints") = "1,1,2", py::arg("metric") = "euclidean",
      py::arg("threads") = 1u);

  m.def(
      "generate_sample",
      [](std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng = ReplicateRng(seed, 0);
        SimSample s = GenerateSample(n, rng);
        return py::make_tuple(s.sample, s.outcomes);
      },
      py::arg("n"), py::arg("seed"));
}
