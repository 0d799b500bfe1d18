// stratmine command-line entry point.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratmine/clustering.hpp"
#include "stratmine/embedding.hpp"
#include "stratmine/error.hpp"
#include "stratmine/features.hpp"
#include "stratmine/inference.hpp"
#include "stratmine/pipeline.hpp"
#include "stratmine/report.hpp"
#include "stratmine/synthetic.hpp"
#include "stratmine/trace_model.hpp"
#include "stratmine/viz.hpp"

namespace fs = std::filesystem;
using namespace stratmine;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Values given on the command line win over the config file.
struct ConfigFlags {
  std::string config;
  std::optional<double> gamma, kappa, epsilon, split_ratio, score_floor;
  std::optional<std::size_t> kmin, kmax, top_k, frame_scale, frame_steps;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "pipeline config JSON")->check(CLI::ExistingFile);
    app.add_option("--gamma", gamma, "feature-count discount");
    app.add_option("--kappa", kappa, "SGT decay");
    app.add_option("--epsilon", epsilon, "probability clipping");
    app.add_option("--kmin", kmin, "smallest cluster count");
    app.add_option("--kmax", kmax, "largest cluster count");
    app.add_option("--split-ratio", split_ratio, "train fraction");
    app.add_option("--top-k", top_k, "features kept per cluster");
    app.add_option("--score-floor", score_floor, "minimum score of an attached tactic");
    app.add_option("--seed", seed, "split seed");
    app.add_option("--scale", frame_scale, "pixels per cell");
    app.add_option("--steps", frame_steps, "frames after t=0");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config.empty() ? PipelineConfig{} : load_pipeline_config(config);
    if (gamma) c.gamma = *gamma;
    if (kappa) c.kappa = *kappa;
    if (epsilon) c.epsilon = *epsilon;
    if (split_ratio) c.split_ratio = *split_ratio;
    if (score_floor) c.score_floor = *score_floor;
    if (kmin) c.kmin = *kmin;
    if (kmax) c.kmax = *kmax;
    if (top_k) c.top_k = *top_k;
    if (frame_scale) c.frame_scale = *frame_scale;
    if (frame_steps) c.frame_steps = *frame_steps;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

FeatureConfig features_or_default(const std::string& path) {
  return path.empty() ? synthetic::default_feature_config() : load_feature_config(path);
}

std::pair<std::size_t, std::size_t> board_size(const FeatureConfig& fc, std::optional<std::size_t> w,
                                               std::optional<std::size_t> h) {
  std::size_t width = w ? *w : fc.groups.board_width ? static_cast<std::size_t>(*fc.groups.board_width) : 0;
  std::size_t height = h ? *h : fc.groups.board_height ? static_cast<std::size_t>(*fc.groups.board_height) : 0;
  if (width == 0 || height == 0) throw DataError("board size unknown: pass --width and --height");
  return {width, height};
}

InferenceParams inference_params(const PipelineConfig& c, unsigned threads) {
  InferenceParams p;
  p.grid = c.grid;
  p.epsilon = c.epsilon;
  p.top_k = c.top_k;
  p.score_floor = c.score_floor;
  p.threads = threads;
  return p;
}

void write_inference(const fs::path& dir, const StrategyReport& report, const ClusterSummary& summary,
                     double floor) {
  save_report_json(dir / "report.json", report);
  {
    auto out = open_out(dir / "candidates.csv");
    write_candidates_csv(out, report, floor);
  }
  render_report(dir, report, summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategy mining from multi-agent episode logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("stratmine ") + STRATMINE_VERSION);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic episodes");
  std::string gen_agent, gen_out, gen_manifest;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--agent", gen_agent, "expert or random")->required()->check(CLI::IsMember({"expert", "random"}));
  gen->add_option("--n", gen_n, "number of episodes")->required();
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--out", gen_out, "episode JSONL")->required();
  gen->add_option("--manifest", gen_manifest, "scenario manifest CSV");

  // extract
  auto* extract = app.add_subcommand("extract", "episode logs to feature traces");
  std::string ex_episodes, ex_features, ex_out, ex_eval;
  std::optional<double> ex_ratio;
  std::uint64_t ex_seed = 0;
  extract->add_option("--episodes", ex_episodes, "episode JSONL")->required()->check(CLI::ExistingFile);
  extract->add_option("--features", ex_features, "feature config JSON")->check(CLI::ExistingFile);
  extract->add_option("--out", ex_out, "trace JSONL (train part when splitting)")->required();
  extract->add_option("--split-ratio", ex_ratio, "train fraction");
  extract->add_option("--seed", ex_seed, "split seed");
  extract->add_option("--eval-out", ex_eval, "held-out trace JSONL");

  // embed
  auto* embed = app.add_subcommand("embed", "trace embeddings");
  ConfigFlags embed_flags;
  std::string em_traces, em_out;
  embed_flags.add_to(*embed);
  embed->add_option("--traces", em_traces, "trace JSONL")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", em_out, "embedding JSON")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "complete-linkage clustering");
  ConfigFlags cluster_flags;
  std::string cl_embedding, cl_out, cl_distances;
  cluster_flags.add_to(*cluster);
  cluster->add_option("--embedding", cl_embedding, "embedding JSON")->required()->check(CLI::ExistingFile);
  cluster->add_option("--out", cl_out, "clusters JSON")->required();
  cluster->add_option("--distances", cl_distances, "distance matrix CSV");

  // infer
  auto* infer = app.add_subcommand("infer", "per-cluster strategy inference");
  ConfigFlags infer_flags;
  std::string in_traces, in_random, in_clusters, in_out;
  infer_flags.add_to(*infer);
  infer->add_option("--traces", in_traces, "clustered trace JSONL")->required()->check(CLI::ExistingFile);
  infer->add_option("--random", in_random, "random-agent trace JSONL")->required()->check(CLI::ExistingFile);
  infer->add_option("--clusters", in_clusters, "clusters JSON")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", in_out, "output directory")->required();

  // viz
  auto* viz = app.add_subcommand("viz", "occupancy frames");
  ConfigFlags viz_flags;
  std::string vz_episodes, vz_clusters, vz_features, vz_out, vz_prefix = "all";
  std::optional<std::size_t> vz_w, vz_h;
  viz_flags.add_to(*viz);
  viz->add_option("--episodes", vz_episodes, "episode JSONL")->required()->check(CLI::ExistingFile);
  viz->add_option("--clusters", vz_clusters, "clusters JSON; one frame set per cluster")->check(CLI::ExistingFile);
  viz->add_option("--features", vz_features, "feature config JSON with board size")->check(CLI::ExistingFile);
  viz->add_option("--width", vz_w, "board width");
  viz->add_option("--height", vz_h, "board height");
  viz->add_option("--prefix", vz_prefix, "frame prefix without clusters");
  viz->add_option("--out", vz_out, "output directory")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "all stages");
  ConfigFlags pipe_flags;
  std::string pp_expert, pp_random, pp_out, pp_features;
  pipe_flags.add_to(*pipe);
  pipe->add_option("--expert", pp_expert, "expert episode JSONL")->required()->check(CLI::ExistingFile);
  pipe->add_option("--random", pp_random, "random episode JSONL")->required()->check(CLI::ExistingFile);
  pipe->add_option("--features", pp_features, "feature config JSON")->check(CLI::ExistingFile);
  pipe->add_option("--out", pp_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto policy = synthetic::parse_policy(gen_agent);
      const auto episodes = synthetic::generate_episodes(policy, gen_n, gen_seed, threads);
      std::vector<EpisodeLog> logs;
      logs.reserve(episodes.size());
      for (const auto& e : episodes) logs.push_back(e.log);
      save_episodes(gen_out, logs);
      if (!gen_manifest.empty()) {
        auto out = open_out(gen_manifest);
        synthetic::write_manifest_csv(out, episodes);
      }
    } else if (*extract) {
      const auto logs = load_episodes(ex_episodes);
      const TraceSet traces = extract_traces(logs, features_or_default(ex_features), threads);
      if (ex_ratio) {
        auto [train, eval] = split_train_eval(traces, *ex_ratio, ex_seed);
        save_traces(ex_out, train);
        if (!ex_eval.empty()) save_traces(ex_eval, eval);
      } else {
        if (!ex_eval.empty()) throw DataError("--eval-out needs --split-ratio");
        save_traces(ex_out, traces);
      }
    } else if (*embed) {
      const PipelineConfig c = embed_flags.resolve();
      const auto m = build_embedding_matrix(load_traces(em_traces), c.gamma, c.kappa, threads);
      for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
      save_embedding(em_out, m);
    } else if (*cluster) {
      const PipelineConfig c = cluster_flags.resolve();
      const auto m = load_embedding(cl_embedding);
      if (m.rows.size() < 3) throw DataError(cl_embedding + ": clustering needs at least three rows");
      const std::size_t kmax = std::min(c.kmax, m.rows.size() - 1);
      const auto sel = select_partition(m.rows, std::min(c.kmin, kmax), kmax, threads);
      save_clusters(cl_out, m.row_ids, sel);
      if (!cl_distances.empty()) {
        auto out = open_out(cl_distances);
        write_distances_csv(out, m.row_ids, sel.partition, sel.distances);
      }
    } else if (*infer) {
      const PipelineConfig c = infer_flags.resolve();
      const TraceSet traces = load_traces(in_traces);
      const TraceSet random = load_traces(in_random, traces.schema);
      const ClusterAssignment a = load_clusters(in_clusters);
      const auto groups = group_by_cluster(traces, a.labels, a.k);
      const StrategyReport report = infer_strategy_report(groups, random, inference_params(c, threads));
      write_inference(in_out, report, ClusterSummary{a.k, a.scores}, c.score_floor);
    } else if (*viz) {
      const PipelineConfig c = viz_flags.resolve();
      const auto logs = load_episodes(vz_episodes);
      const auto [w, h] = board_size(features_or_default(vz_features), vz_w, vz_h);
      if (!vz_clusters.empty()) {
        const ClusterAssignment a = load_clusters(vz_clusters);
        write_cluster_frames(vz_out, logs, a.labels, a.k, w, h, c.frame_scale, c.frame_steps, threads);
      } else {
        write_frames(logs, vz_out, vz_prefix, w, h, c.frame_scale, c.frame_steps, threads);
        auto out = open_out(fs::path(vz_out) / (vz_prefix + "_grid.csv"));
        write_grid_csv(out, occupancy_grids(logs, 1.0, w, h, threads));
      }
    } else if (*pipe) {
      const PipelineConfig c = pipe_flags.resolve();
      const FeatureConfig fc = features_or_default(pp_features);
      const auto [w, h] = board_size(fc, std::nullopt, std::nullopt);
      const auto result = run_pipeline(load_episodes(pp_expert), load_episodes(pp_random), fc, c, threads);
      for (const auto& warn : result.embedding.warnings) std::cerr << "warning: " << warn << "\n";
      write_pipeline_outputs(pp_out, result, c, w, h, threads);
      auto out = open_out(fs::path(pp_out) / "config.json");
      out << pipeline_config_to_json(c);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
