#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stratmine/clustering.hpp"
#include "stratmine/embedding.hpp"
#include "stratmine/features.hpp"
#include "stratmine/inference.hpp"
#include "stratmine/report.hpp"
#include "stratmine/trace_model.hpp"

namespace stratmine {

struct PipelineConfig {
  double gamma = 0.99;
  double kappa = 1.0;
  double epsilon = 1e-6;
  SearchGrid grid = SearchGrid::defaults();
  std::size_t kmin = 2;
  std::size_t kmax = 10;  // capped at n - 1 at run time
  double split_ratio = 0.9;
  std::size_t top_k = 3;
  double score_floor = 0.0;
  std::uint64_t seed = 0;
  std::size_t frame_scale = 8;
  std::size_t frame_steps = 10;

  /// Throws DataError on out-of-range parameters.
  void validate() const;
};

/// Keys mirror the field names; `d_grid` and `r_grid` hold the search grids.
/// Missing keys keep their defaults.
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Splits `traces` into one set per cluster label; every trace must be
/// labelled. Throws DataError otherwise.
std::vector<TraceSet> group_by_cluster(const TraceSet& traces,
                                       const std::vector<std::pair<std::string, std::size_t>>& labels,
                                       std::size_t k);

struct PipelineResult {
  TraceSet train;
  TraceSet eval;
  TraceSet random;
  std::vector<EpisodeLog> train_logs;
  EmbeddingMatrix embedding;
  ClusterSelection selection;
  std::vector<TraceSet> clusters;
  StrategyReport report;
  ClusterSummary summary;
};

/// extract -> split -> embed -> cluster -> infer.
PipelineResult run_pipeline(const std::vector<EpisodeLog>& expert, const std::vector<EpisodeLog>& random,
                            const FeatureConfig& features, const PipelineConfig& cfg, unsigned threads = 1);

/// Writes traces/, embedding.json, clusters.json, distances.csv, report.json,
/// candidates.csv, report.md, report.csv, ch_scores.csv and frames/ into dir.
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result,
                            const PipelineConfig& cfg, std::size_t board_width, std::size_t board_height,
                            unsigned threads = 1);

/// Frames and grid CSVs for each cluster of logs.
void write_cluster_frames(const std::filesystem::path& dir, const std::vector<EpisodeLog>& logs,
                          const std::vector<std::pair<std::string, std::size_t>>& labels, std::size_t k,
                          std::size_t board_width, std::size_t board_height, std::size_t scale, std::size_t steps,
                          unsigned threads = 1);

}  // namespace stratmine
