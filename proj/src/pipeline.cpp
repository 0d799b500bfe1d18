#include "stratmine/pipeline.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "file_io.hpp"
#include "stratmine/error.hpp"
#include "stratmine/viz.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string("pipeline config: ") + what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(kappa > 0.0, "kappa must be positive");
  require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 0.5)");
  require(!grid.durations.empty() && !grid.rates.empty(), "d_grid and r_grid must not be empty");
  require(kmin >= 2 && kmin <= kmax, "need 2 <= kmin <= kmax");
  require(split_ratio > 0.0 && split_ratio <= 1.0, "split_ratio must lie in (0, 1]");
  require(top_k >= 1, "top_k must be positive");
  require(score_floor >= 0.0, "score_floor must be non-negative");
  require(frame_scale >= 1 && frame_steps >= 1, "frame_scale and frame_steps must be positive");
}

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  PipelineConfig c;
  try {
    const json doc = json::parse(json_text);
    c.gamma = doc.value("gamma", c.gamma);
    c.kappa = doc.value("kappa", c.kappa);
    c.epsilon = doc.value("epsilon", c.epsilon);
    if (doc.contains("d_grid")) c.grid.durations = doc.at("d_grid").get<std::vector<std::uint32_t>>();
    if (doc.contains("r_grid")) {
      c.grid.rates.clear();
      for (const auto& r : doc.at("r_grid")) c.grid.rates.push_back(smtl::Rate::from_double(r.get<double>()));
    }
    c.kmin = doc.value("kmin", c.kmin);
    c.kmax = doc.value("kmax", c.kmax);
    c.split_ratio = doc.value("split_ratio", c.split_ratio);
    c.top_k = doc.value("top_k", c.top_k);
    c.score_floor = doc.value("score_floor", c.score_floor);
    c.seed = doc.value("seed", c.seed);
    c.frame_scale = doc.value("frame_scale", c.frame_scale);
    c.frame_steps = doc.value("frame_steps", c.frame_steps);
  } catch (const json::exception& e) {
    throw DataError(std::string("pipeline config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_pipeline_config(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json doc;
  doc["gamma"] = c.gamma;
  doc["kappa"] = c.kappa;
  doc["epsilon"] = c.epsilon;
  doc["d_grid"] = c.grid.durations;
  json rates = json::array();
  for (const auto& r : c.grid.rates) rates.push_back(r.value());
  doc["r_grid"] = std::move(rates);
  doc["kmin"] = c.kmin;
  doc["kmax"] = c.kmax;
  doc["split_ratio"] = c.split_ratio;
  doc["top_k"] = c.top_k;
  doc["score_floor"] = c.score_floor;
  doc["seed"] = c.seed;
  doc["frame_scale"] = c.frame_scale;
  doc["frame_steps"] = c.frame_steps;
  return doc.dump(2) + "\n";
}

std::vector<TraceSet> group_by_cluster(const TraceSet& traces,
                                       const std::vector<std::pair<std::string, std::size_t>>& labels,
                                       std::size_t k) {
  std::map<std::string, std::size_t, std::less<>> lookup;
  for (const auto& [id, c] : labels) {
    if (c >= k) throw DataError("trace '" + id + "' has cluster " + std::to_string(c) + " >= k");
    lookup[id] = c;
  }
  std::vector<TraceSet> out(k, TraceSet{traces.schema, {}});
  for (const Trace& t : traces.traces) {
    auto it = lookup.find(t.id);
    if (it == lookup.end()) throw DataError("trace '" + t.id + "' has no cluster label");
    out[it->second].traces.push_back(t);
  }
  for (std::size_t c = 0; c < k; ++c)
    if (out[c].empty()) throw DataError("cluster " + std::to_string(c) + " has no traces");
  return out;
}

PipelineResult run_pipeline(const std::vector<EpisodeLog>& expert, const std::vector<EpisodeLog>& random,
                            const FeatureConfig& features, const PipelineConfig& cfg, unsigned threads) {
  cfg.validate();
  PipelineResult r;
  const TraceSet all = extract_traces(expert, features, threads);
  r.random = extract_traces(random, features, threads);
  const auto [train_idx, eval_idx] = split_indices(all.size(), cfg.split_ratio, cfg.seed);
  r.train.schema = all.schema;
  r.eval.schema = all.schema;
  for (std::size_t i : train_idx) {
    r.train.traces.push_back(all.traces[i]);
    r.train_logs.push_back(expert[i]);
  }
  for (std::size_t i : eval_idx) r.eval.traces.push_back(all.traces[i]);

  r.embedding = build_embedding_matrix(r.train, cfg.gamma, cfg.kappa, threads);
  if (r.train.size() < 3) throw DataError("clustering needs at least three training traces");
  const std::size_t kmax = std::min(cfg.kmax, r.train.size() - 1);
  const std::size_t kmin = std::min(cfg.kmin, kmax);
  r.selection = select_partition(r.embedding.rows, kmin, kmax, threads);

  std::vector<std::pair<std::string, std::size_t>> labels;
  for (std::size_t i = 0; i < r.train.size(); ++i)
    labels.emplace_back(r.train.traces[i].id, r.selection.partition.labels[i]);
  r.clusters = group_by_cluster(r.train, labels, r.selection.partition.k);

  InferenceParams params;
  params.grid = cfg.grid;
  params.epsilon = cfg.epsilon;
  params.top_k = cfg.top_k;
  params.score_floor = cfg.score_floor;
  params.threads = threads;
  r.report = infer_strategy_report(r.clusters, r.random, params);
  r.summary.k = r.selection.partition.k;
  r.summary.ch_scores = r.selection.scores;
  return r;
}

void write_cluster_frames(const std::filesystem::path& dir, const std::vector<EpisodeLog>& logs,
                          const std::vector<std::pair<std::string, std::size_t>>& labels, std::size_t k,
                          std::size_t board_width, std::size_t board_height, std::size_t scale, std::size_t steps,
                          unsigned threads) {
  std::map<std::string, std::size_t, std::less<>> lookup(labels.begin(), labels.end());
  std::vector<std::vector<EpisodeLog>> groups(k);
  for (const EpisodeLog& log : logs) {
    auto it = lookup.find(log.id);
    if (it != lookup.end() && it->second < k) groups[it->second].push_back(log);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (groups[c].empty()) continue;
    const std::string prefix = "cluster" + std::to_string(c);
    write_frames(groups[c], dir, prefix, board_width, board_height, scale, steps, threads);
    auto csv = detail::open_for_write(dir / (prefix + "_grid.csv"));
    write_grid_csv(csv, occupancy_grids(groups[c], 1.0, board_width, board_height, threads));
  }
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& r, const PipelineConfig& cfg,
                            std::size_t board_width, std::size_t board_height, unsigned threads) {
  save_traces(dir / "traces" / "train.jsonl", r.train);
  if (!r.eval.empty()) save_traces(dir / "traces" / "eval.jsonl", r.eval);
  save_traces(dir / "traces" / "random.jsonl", r.random);
  save_embedding(dir / "embedding.json", r.embedding);
  save_clusters(dir / "clusters.json", r.embedding.row_ids, r.selection);
  {
    auto out = detail::open_for_write(dir / "distances.csv");
    write_distances_csv(out, r.embedding.row_ids, r.selection.partition, r.selection.distances);
  }
  save_report_json(dir / "report.json", r.report);
  {
    auto out = detail::open_for_write(dir / "candidates.csv");
    write_candidates_csv(out, r.report, cfg.score_floor);
  }
  render_report(dir, r.report, r.summary);

  std::vector<std::pair<std::string, std::size_t>> labels;
  for (std::size_t i = 0; i < r.embedding.row_ids.size(); ++i)
    labels.emplace_back(r.embedding.row_ids[i], r.selection.partition.labels[i]);
  write_cluster_frames(dir / "frames", r.train_logs, labels, r.selection.partition.k, board_width, board_height,
                       cfg.frame_scale, cfg.frame_steps, threads);
}

}  // namespace stratmine
