#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stratmine/error.hpp"
#include "stratmine/pipeline.hpp"
#include "stratmine/report.hpp"
#include "stratmine/synthetic.hpp"

using namespace stratmine;

namespace {

std::vector<EpisodeLog> logs_of(synthetic::Policy p, std::size_t n, std::uint64_t seed) {
  std::vector<EpisodeLog> out;
  for (auto& e : synthetic::generate_episodes(p, n, seed, 4)) out.push_back(std::move(e.log));
  return out;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.grid = SearchGrid{{0, 5, 20}, {smtl::Rate::parse("0.7"), smtl::Rate::one()}};
  cfg.kmax = 5;
  cfg.seed = 3;
  return cfg;
}

std::string json_of(const StrategyReport& r) {
  std::stringstream s;
  write_report_json(s, r);
  return s.str();
}

StrategyReport two_feature_report() {
  TraceSet agent{FeatureSchema({{"c", FeatureKind::Boolean, FeatureRole::Condition, {}},
                                {"a", FeatureKind::Boolean, FeatureRole::Action, {}}}),
                 {}};
  TraceSet random = agent;
  agent.traces.push_back(Trace{"x", "e", {{1, 0}, {0, 1}, {1, 1}}});
  agent.traces.push_back(Trace{"y", "e", {{1, 1}, {1, 1}}});
  random.traces.push_back(Trace{"r", "r", {{0, 0}, {0, 1}}});
  random.traces.push_back(Trace{"s", "r", {{1, 0}, {0, 0}}});
  InferenceParams params;
  params.grid = SearchGrid{{0, 1}, {smtl::Rate::parse("0.5"), smtl::Rate::one()}};
  params.top_k = 2;
  return infer_strategy_report({agent}, random, params);
}

}  // namespace

TEST_CASE("markdown report rounds to two decimals and marks missing tactics") {
  const StrategyReport report = two_feature_report();
  ClusterSummary summary{2, {{2, 12.5}, {3, 7.25}}};
  std::stringstream md;
  write_report_markdown(md, report, summary);
  const std::string text = md.str();
  CHECK(text.find("## Cluster 0 (2 traces)") != std::string::npos);
  CHECK(text.find("| Param | p | q | D_KL |") != std::string::npos);
  CHECK(text.find("| 2 | 12.50 | selected |") != std::string::npos);
  CHECK(text.find("| 3 | 7.25 |  |") != std::string::npos);

  // every f row agrees with the JSON values at two decimals
  const auto doc = nlohmann::json::parse(json_of(report));
  for (const auto& entry : doc["clusters"][0]["entries"]) {
    char row[128];
    std::snprintf(row, sizeof row, "| f | %.2f | %.2f | %.2f | `%s` |", entry["p"].get<double>(), entry["q"].get<double>(),
                  entry["dkl"].get<double>(), entry["feature"].get<std::string>().c_str());
    CHECK(text.find(row) != std::string::npos);
  }

  // !c is never more frequent for the agent, so nothing attaches to it
  bool dash = false;
  for (const auto& ft : report.clusters[0].features)
    dash |= !ft.action_goal.has_value() || !ft.condition_action.has_value();
  if (dash) CHECK(text.find("| - | - | - | - |") != std::string::npos);

  std::stringstream csv;
  write_report_csv(csv, report);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "cluster,rank,param,feature,action,d,r,p,q,dkl,formula");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 3 * static_cast<int>(report.clusters[0].features.size()));

  std::stringstream ch;
  write_ch_scores_csv(ch, summary);
  CHECK(ch.str() == "k,ch,selected\n2,12.5,1\n3,7.25,0\n");

  CHECK_THROWS_AS(write_report_markdown(md, StrategyReport{}, summary), std::invalid_argument);
  CHECK_THROWS_AS(write_report_csv(csv, StrategyReport{}), std::invalid_argument);
}

TEST_CASE("pipeline config") {
  const PipelineConfig def = parse_pipeline_config("{}");
  CHECK(def.gamma == 0.99);
  CHECK(def.grid.durations.size() == 15);
  CHECK(def.grid.rates.size() == 4);
  const PipelineConfig c =
      parse_pipeline_config(R"({"gamma": 0.9, "d_grid": [0, 3], "r_grid": [0.5, 1.0], "kmax": 4, "seed": 11})");
  CHECK(c.gamma == 0.9);
  CHECK(c.grid.durations == std::vector<std::uint32_t>{0, 3});
  CHECK(c.grid.rates[0] == smtl::Rate::parse("0.5"));
  CHECK(c.kmax == 4);
  CHECK(c.seed == 11);
  const PipelineConfig back = parse_pipeline_config(pipeline_config_to_json(c));
  CHECK(pipeline_config_to_json(back) == pipeline_config_to_json(c));
  CHECK_THROWS_AS(parse_pipeline_config(R"({"gamma": 1.5})"), DataError);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"kmin": 5, "kmax": 3})"), DataError);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"r_grid": [1.5]})"), DataError);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"gamma": "x"})"), DataError);
  CHECK_THROWS_AS(parse_pipeline_config("[1,"), DataError);
}

TEST_CASE("grouping by cluster label") {
  const FeatureSchema s({{"c", FeatureKind::Boolean, FeatureRole::Condition, {}}});
  TraceSet ts{s, {Trace{"a", "e", {{1}}}, Trace{"b", "e", {{0}}}, Trace{"c", "e", {{1}}}}};
  const auto groups = group_by_cluster(ts, {{"a", 1}, {"b", 0}, {"c", 1}}, 2);
  CHECK(groups[0].size() == 1);
  CHECK(groups[1].size() == 2);
  CHECK(groups[1].traces[1].id == "c");
  CHECK_THROWS_AS(group_by_cluster(ts, {{"a", 1}, {"b", 0}}, 2), DataError);
  CHECK_THROWS_AS(group_by_cluster(ts, {{"a", 1}, {"b", 0}, {"c", 5}}, 2), DataError);
  CHECK_THROWS_AS(group_by_cluster(ts, {{"a", 1}, {"b", 1}, {"c", 1}}, 2), DataError);
}

TEST_CASE("pipeline equals the staged run") {
  const auto expert = logs_of(synthetic::Policy::Expert, 60, 100);
  const auto random = logs_of(synthetic::Policy::Random, 60, 200);
  const auto features = synthetic::default_feature_config();
  const PipelineConfig cfg = small_config();
  const PipelineResult r = run_pipeline(expert, random, features, cfg, 2);

  CHECK(r.train.size() == 54);
  CHECK(r.eval.size() == 6);
  CHECK(r.train_logs.size() == r.train.size());
  for (std::size_t i = 0; i < r.train.size(); ++i) CHECK(r.train_logs[i].id == r.train.traces[i].id);

  const TraceSet all = extract_traces(expert, features);
  const auto [train, eval] = split_train_eval(all, cfg.split_ratio, cfg.seed);
  const auto m = build_embedding_matrix(train, cfg.gamma, cfg.kappa);
  CHECK(m.rows == r.embedding.rows);
  const auto sel = select_partition(m.rows, cfg.kmin, cfg.kmax);
  CHECK(sel.partition.labels == r.selection.partition.labels);
  std::vector<std::pair<std::string, std::size_t>> labels;
  for (std::size_t i = 0; i < train.size(); ++i) labels.emplace_back(train.traces[i].id, sel.partition.labels[i]);
  InferenceParams params;
  params.grid = cfg.grid;
  const auto staged = infer_strategy_report(group_by_cluster(train, labels, sel.partition.k),
                                            extract_traces(random, features), params);
  CHECK(json_of(staged) == json_of(r.report));
  CHECK(r.summary.k == sel.partition.k);
  CHECK(r.summary.ch_scores == sel.scores);

  // same seed, same bytes; threads do not matter
  CHECK(json_of(run_pipeline(expert, random, features, cfg, 1).report) == json_of(r.report));

  const auto dir = std::filesystem::temp_directory_path() / "stratmine_pipeline_test";
  std::filesystem::remove_all(dir);
  write_pipeline_outputs(dir, r, cfg, synthetic::kBoardWidth, synthetic::kBoardHeight, 2);
  for (const char* f : {"traces/train.jsonl", "traces/eval.jsonl", "traces/random.jsonl", "embedding.json",
                        "clusters.json", "distances.csv", "report.json", "candidates.csv", "report.md", "report.csv",
                        "ch_scores.csv", "frames/cluster0_t000.ppm", "frames/cluster0_t100.ppm", "frames/cluster0_grid.csv"})
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
  std::ifstream in(dir / "report.json");
  const std::string on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(nlohmann::json::parse(on_disk) == nlohmann::json::parse(json_of(r.report)));
  const auto back = load_traces(dir / "traces/train.jsonl", r.train.schema);
  CHECK(back.traces == r.train.traces);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline rejects corpora too small to cluster") {
  const auto expert = logs_of(synthetic::Policy::Expert, 2, 1);
  const auto random = logs_of(synthetic::Policy::Random, 3, 2);
  CHECK_THROWS(run_pipeline(expert, random, synthetic::default_feature_config(), small_config()));
}
