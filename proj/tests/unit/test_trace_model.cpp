#include <doctest.h>

#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "stratmine/error.hpp"
#include "stratmine/trace_model.hpp"

using namespace stratmine;

namespace {

FeatureSchema mixed_schema() {
  return FeatureSchema({
      {"Present_Enemy_CC", FeatureKind::Boolean, FeatureRole::Condition, {}},
      {"Distance_Blue_Red", FeatureKind::Categorical, FeatureRole::Condition, {"Melee", "Close", "Far", "Undefined"}},
      {"Target_Ground_CC", FeatureKind::Boolean, FeatureRole::Action, {}},
  });
}

TraceSet random_set(Rng& rng, std::size_t n) {
  TraceSet ts{mixed_schema(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    Trace tr{"t" + std::to_string(i), i % 2 ? "expert" : "random", {}};
    const std::size_t len = 1 + rng.below(30);
    for (std::size_t t = 0; t < len; ++t) {
      Observation o(6, 0);
      o[0] = rng.bernoulli(0.5);
      o[1 + rng.below(4)] = 1;
      o[5] = rng.bernoulli(0.5);
      tr.steps.push_back(o);
    }
    ts.traces.push_back(tr);
  }
  return ts;
}

}  // namespace

TEST_CASE("schema expands categorical features into labelled columns") {
  const FeatureSchema s = mixed_schema();
  CHECK(s.feature_count() == 3);
  CHECK(s.arity() == 6);
  CHECK(s.columns()[2] == "Distance_Blue_Red=Close");
  CHECK(*s.column_index("Target_Ground_CC") == 5);
  CHECK_FALSE(s.column_index("nope").has_value());
  CHECK(s.columns_with_role(FeatureRole::Action) == std::vector<std::size_t>{5});
  CHECK(s.block_offset(1) == 1);
  CHECK(s.block_width(1) == 4);
}

TEST_CASE("schema rejects bad entries") {
  using V = std::vector<FeatureSpec>;
  CHECK_THROWS(FeatureSchema(V{{"a", FeatureKind::Boolean, FeatureRole::Condition, {}},
                               {"a", FeatureKind::Boolean, FeatureRole::Action, {}}}));
  CHECK_THROWS(FeatureSchema(V{{"c", FeatureKind::Categorical, FeatureRole::Condition, {"only"}}}));
  CHECK_THROWS(FeatureSchema(V{{"1bad", FeatureKind::Boolean, FeatureRole::Condition, {}}}));
}

TEST_CASE("one-hot encoding") {
  const FeatureSchema s = mixed_schema();
  RawObservation raw{{"Present_Enemy_CC", true}, {"Distance_Blue_Red", std::string("Close")}, {"Target_Ground_CC", false}};
  CHECK(one_hot_encode(raw, s) == Observation{1, 0, 1, 0, 0, 0});
  raw["Distance_Blue_Red"] = std::string("Near");
  CHECK_THROWS_AS(one_hot_encode(raw, s), std::invalid_argument);
  raw.erase("Distance_Blue_Red");
  CHECK_THROWS_AS(one_hot_encode(raw, s), std::invalid_argument);

  // distinct labels give distinct blocks
  std::set<Observation> seen;
  for (const auto& label : s.entries()[1].labels) {
    RawObservation r{{"Present_Enemy_CC", false}, {"Distance_Blue_Red", label}, {"Target_Ground_CC", false}};
    seen.insert(one_hot_encode(r, s));
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("trace JSONL round trip") {
  Rng rng(3);
  const TraceSet ts = random_set(rng, 100);
  std::stringstream buf;
  write_traces(buf, ts);
  const TraceSet back = read_traces(buf, "mem", ts.schema);
  CHECK(back.schema == ts.schema);
  REQUIRE(back.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(back.traces[i] == ts.traces[i]);
  std::stringstream again;
  write_traces(again, back);
  std::stringstream first;
  write_traces(first, ts);
  CHECK(again.str() == first.str());
}

TEST_CASE("reading a one-line trace file") {
  std::istringstream in(
      R"({"id":"t0001","agent":"expert","features":[{"name":"a","kind":"bool","role":"condition"},)"
      R"({"name":"b","kind":"bool","role":"action"}],"steps":[[1,0],[0,1],[1,1]]})"
      "\n");
  const TraceSet ts = read_traces(in, "one.jsonl");
  CHECK(ts.size() == 1);
  CHECK(ts.schema.arity() == 2);
  CHECK(ts.traces[0].length() == 3);
}

TEST_CASE("malformed trace files report the line") {
  const std::string header = R"({"id":"x","agent":"a","features":[{"name":"a","kind":"bool","role":"condition"},)"
                             R"({"name":"b","kind":"bool","role":"action"}],)";
  auto fails_with = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      read_traces(in, "f.jsonl");
    } catch (const DataError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_with(header + R"("steps":[[1,0,1]]})" "\n", "f.jsonl:1"));
  CHECK(fails_with(header + R"("steps":[[1,0]]})" "\n" + header + R"("steps":[[1]]})" "\n", "f.jsonl:2"));
  CHECK(fails_with("", "no trace records"));
  CHECK(fails_with("{not json\n", "f.jsonl:1"));
  CHECK(fails_with(header + R"("steps":[[2,0]]})" "\n", "0 or 1"));
  // broken one-hot block
  const std::string cat = R"({"id":"x","agent":"a","features":[{"name":"c","kind":"categorical","role":"condition",)"
                          R"("labels":["A","B"]},{"name":"b","kind":"bool","role":"action"}],)";
  CHECK(fails_with(cat + R"("steps":[[1,1,0]]})" "\n", "one"));
  // schema mismatch against the expected header
  std::istringstream in(header + R"("steps":[[1,0]]})" "\n");
  CHECK_THROWS_AS(read_traces(in, "f", mixed_schema()), DataError);
}

TEST_CASE("episode JSONL round trip and validation") {
  EpisodeLog log{"e0001", "expert", 42, {}, {}};
  log.snapshots.push_back({{1, "Marine", Force::Friendly, 3.0, 1.0, 45.0, 50.0},
                           {2, "CommandCenter", Force::Enemy, 5.5, 14.25, 400.0, 400.0}});
  log.snapshots.push_back({{1, "Marine", Force::Friendly, 3.0, 2.0, 40.0, 50.0}});
  log.actions = {{"Target_Ground_CC"}, {}};
  std::stringstream buf;
  write_episodes(buf, std::span<const EpisodeLog>(&log, 1));
  const auto back = read_episodes(buf, "mem");
  REQUIRE(back.size() == 1);
  CHECK(back[0] == log);

  EpisodeLog bad = log;
  bad.actions.pop_back();
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = log;
  bad.snapshots[0][1].uid = 1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = log;
  bad.snapshots[1][0].health = -1;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("train/eval split") {
  Rng rng(1);
  const TraceSet ts = random_set(rng, 1000);
  const auto [train, eval] = split_train_eval(ts, 0.9, 7);
  CHECK(train.size() == 900);
  CHECK(eval.size() == 100);
  std::multiset<std::string> ids;
  for (const auto& t : train.traces) ids.insert(t.id);
  for (const auto& t : eval.traces) ids.insert(t.id);
  CHECK(ids.size() == 1000);
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 1000);

  const auto [all, none] = split_train_eval(ts, 1.0, 7);
  CHECK(all.size() == 1000);
  CHECK(none.empty());

  const auto again = split_indices(1000, 0.9, 7);
  CHECK(again == split_indices(1000, 0.9, 7));
  int differing = 0;
  for (std::uint64_t s = 100; s < 110; ++s) differing += split_indices(1000, 0.9, s).second != again.second;
  CHECK(differing == 10);
  CHECK_THROWS_AS(split_indices(10, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(10, 1.5, 1), std::invalid_argument);
}
