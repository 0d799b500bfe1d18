#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stratmine/clustering.hpp"
#include "stratmine/embedding.hpp"
#include "stratmine/error.hpp"
#include "stratmine/inference.hpp"
#include "stratmine/pipeline.hpp"
#include "stratmine/smtl.hpp"
#include "stratmine/synthetic.hpp"

namespace py = pybind11;
using namespace stratmine;

namespace {

// Boolean condition columns named after `columns`.
TraceSet boolean_traces(const std::vector<std::string>& columns, const std::vector<std::vector<std::vector<bool>>>& traces) {
  std::vector<FeatureSpec> specs;
  for (const auto& c : columns) specs.push_back(FeatureSpec{c, FeatureKind::Boolean, FeatureRole::Condition, {}});
  TraceSet ts{FeatureSchema(std::move(specs)), {}};
  for (std::size_t i = 0; i < traces.size(); ++i) {
    Trace t{"t" + std::to_string(i), "py", {}};
    for (const auto& row : traces[i]) {
      if (row.size() != columns.size()) throw py::value_error("row width does not match columns");
      t.steps.emplace_back(row.begin(), row.end());
    }
    ts.traces.push_back(std::move(t));
  }
  return ts;
}

std::vector<bool> evaluate_formula(const std::string& text, const std::vector<std::string>& columns,
                                   const std::vector<std::vector<bool>>& steps) {
  const TraceSet ts = boolean_traces(columns, {steps});
  const auto table = smtl::evaluate(smtl::parse_formula(text), ts.traces.front(), ts.schema);
  if (table.values.empty()) return {};
  return {table.root().begin(), table.root().end()};
}

std::vector<double> feature_counts(const std::vector<std::vector<bool>>& steps, double gamma) {
  const std::size_t width = steps.empty() ? 0 : steps.front().size();
  std::vector<std::string> columns;
  for (std::size_t c = 0; c < width; ++c) columns.push_back("f" + std::to_string(c));
  const TraceSet ts = boolean_traces(columns, {steps});
  std::vector<std::size_t> idx(width);
  for (std::size_t c = 0; c < width; ++c) idx[c] = c;
  return feature_count_embedding(ts.traces.front(), idx, gamma);
}

std::vector<py::tuple> hac(const std::vector<std::vector<double>>& d) {
  DistanceMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].size() != d.size()) throw py::value_error("distance matrix must be square");
    for (std::size_t j = 0; j < d.size(); ++j) m.set(i, j, d[i][j]);
  }
  std::vector<py::tuple> out;
  for (const auto& s : hac_complete(m)) out.push_back(py::make_tuple(s.left, s.right, s.distance, s.size));
  return out;
}

double ch_score(const std::vector<std::vector<double>>& points, const std::vector<std::size_t>& labels) {
  Partition p;
  p.labels = labels;
  for (std::size_t l : labels) p.k = std::max(p.k, l + 1);
  return calinski_harabasz(points, p);
}

py::dict select_k(const std::vector<std::vector<double>>& points, std::size_t kmin, std::size_t kmax,
                unsigned threads) {
  const auto sel = select_partition(points, kmin, kmax, threads);
  py::dict d;
  d["k"] = sel.partition.k;
  d["labels"] = sel.partition.labels;
  d["scores"] = sel.scores;
  return d;
}

std::string generate_jsonl(const std::string& agent, std::size_t n, std::uint64_t seed, unsigned threads) {
  const auto episodes = synthetic::generate_episodes(synthetic::parse_policy(agent), n, seed, threads);
  std::vector<EpisodeLog> logs;
  for (const auto& e : episodes) logs.push_back(e.log);
  std::ostringstream out;
  write_episodes(out, logs);
  return out.str();
}

py::dict pipeline(const std::filesystem::path& expert, const std::filesystem::path& random,
                  const std::filesystem::path& out, const std::string& config_json, unsigned threads) {
  const PipelineConfig cfg = parse_pipeline_config(config_json);
  const FeatureConfig fc = synthetic::default_feature_config();
  const auto r = run_pipeline(load_episodes(expert), load_episodes(random), fc, cfg, threads);
  write_pipeline_outputs(out, r, cfg, synthetic::kBoardWidth, synthetic::kBoardHeight, threads);
  py::dict d;
  d["k"] = r.selection.partition.k;
  d["sizes"] = r.selection.partition.sizes();
  d["train"] = r.train.size();
  d["eval"] = r.eval.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_stratmine, m) {
  m.doc() = "Strategy mining core";
  m.attr("__version__") = STRATMINE_VERSION;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<FormulaSyntaxError>(m, "FormulaSyntaxError", PyExc_ValueError);

  m.def("render_formula", [](const std::string& text) { return smtl::render(smtl::parse_formula(text)); },
        py::arg("text"));
  m.def("evaluate", &evaluate_formula, py::arg("formula"), py::arg("columns"), py::arg("steps"),
        "Truth value of the formula at every timestep of one trace.");
  m.def("kl_bernoulli", &kl_bernoulli, py::arg("p"), py::arg("q"), py::arg("epsilon") = 1e-6);
  m.def("gated_score", &gated_score, py::arg("p"), py::arg("q"), py::arg("epsilon") = 1e-6);
  m.def("feature_counts", &feature_counts, py::arg("steps"), py::arg("gamma") = 0.99);
  m.def("hac_complete", &hac, py::arg("distances"), "Merge steps as (left, right, distance, size).");
  m.def("calinski_harabasz", &ch_score, py::arg("points"), py::arg("labels"));
  m.def("select_partition", &select_k, py::arg("points"), py::arg("kmin") = 2, py::arg("kmax") = 10,
        py::arg("threads") = 1);
  m.def("generate_episodes", &generate_jsonl, py::arg("agent"), py::arg("n"), py::arg("seed") = 0,
        py::arg("threads") = 1, "Synthetic episodes as JSONL text.");
  m.def("run_pipeline", &pipeline, py::arg("expert"), py::arg("random"), py::arg("out"),
        py::arg("config_json") = "{}", py::arg("threads") = 1);
}
