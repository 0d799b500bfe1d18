#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "stratmine/error.hpp"
#include "stratmine/features.hpp"
#include "stratmine/rng.hpp"

using namespace stratmine;

namespace {

UnitSnapshot unit(std::int64_t uid, double x, double y, Force f = Force::Friendly, double hp = 10, double cost = 50,
                  std::string type = "Marine") {
  return UnitSnapshot{uid, std::move(type), f, x, y, hp, cost};
}

const Thresholds kDefault{};

}  // namespace

TEST_CASE("distance categories") {
  const std::vector<UnitSnapshot> a{unit(1, 0, 0)};
  const std::vector<UnitSnapshot> b{unit(2, 3, 4, Force::Enemy)};
  CHECK(distance_category(a, b, 100.0, kDefault) == "Melee");  // ratio exactly 0.05
  CHECK(distance_category(a, b, 62.5, kDefault) == "Close");   // 0.08
  CHECK(distance_category(a, b, 50.0, kDefault) == "Close");   // exactly 0.1
  CHECK(distance_category(a, b, 40.0, kDefault) == "Far");
  CHECK(distance_category(a, {}, 100.0, kDefault) == "Undefined");
  CHECK(distance_category({}, b, 100.0, kDefault) == "Undefined");
  const std::vector<UnitSnapshot> near{unit(3, 0.4, 0, Force::Enemy)};
  CHECK(distance_category(a, near, 10.0, kDefault) == "Melee");  // 0.04
}

TEST_CASE("distance category is symmetric") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<UnitSnapshot> a, b;
    for (std::uint64_t k = 0; k < 1 + rng.below(4); ++k) a.push_back(unit(k, 10 * rng.uniform(), 10 * rng.uniform()));
    for (std::uint64_t k = 0; k < 1 + rng.below(4); ++k) b.push_back(unit(k, 10 * rng.uniform(), 10 * rng.uniform()));
    CHECK(distance_category(a, b, 60.0, kDefault) == distance_category(b, a, 60.0, kDefault));
  }
}

TEST_CASE("relative cost categories") {
  auto side = [](std::vector<double> costs) {
    std::vector<UnitSnapshot> v;
    for (std::size_t i = 0; i < costs.size(); ++i) v.push_back(unit(i, 0, 0, Force::Friendly, 1, costs[i]));
    return v;
  };
  CHECK(relative_cost_category(side({50}), side({100}), kDefault) == "Disadvantage");  // r = 0.5
  CHECK(relative_cost_category(side({100}), side({100}), kDefault) == "Balanced");
  CHECK(relative_cost_category(side({150, 50}), side({100}), kDefault) == "Advantage");  // r = 2
  CHECK(relative_cost_category(side({90}), side({100}), kDefault) == "Balanced");    // r = 0.9 not < 0.9
  CHECK(relative_cost_category(side({89}), side({100}), kDefault) == "Disadvantage");
  CHECK(relative_cost_category(side({}), side({100}), kDefault) == "Undefined");

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto a = side({1 + 200 * rng.uniform()});
    const auto b = side({1 + 200 * rng.uniform(), 1 + 50 * rng.uniform()});
    const bool adv = relative_cost_category(a, b, kDefault) == "Advantage";
    CHECK(adv == (relative_cost_category(b, a, kDefault) == "Disadvantage"));
  }
}

TEST_CASE("relative movement flags") {
  const std::vector<UnitSnapshot> other{unit(9, 10, 0, Force::Enemy)};
  const std::vector<UnitSnapshot> prev{unit(1, 0, 0)};
  auto moved = [](double angle) { return std::vector<UnitSnapshot>{unit(1, std::cos(angle), std::sin(angle))}; };
  CHECK(relative_movement_flags(moved(0.0), prev, other, other, kDefault) == MovementFlags{true, false});
  CHECK(relative_movement_flags(moved(std::numbers::pi), prev, other, other, kDefault) == MovementFlags{false, true});
  CHECK(relative_movement_flags(moved(1.2), prev, other, other, kDefault) == MovementFlags{false, false});
  CHECK(relative_movement_flags(moved(1.1), prev, other, other, kDefault) == MovementFlags{true, false});
  CHECK(relative_movement_flags(moved(2.0), prev, other, other, kDefault) == MovementFlags{false, true});
  // stationary group
  CHECK(relative_movement_flags(prev, prev, other, other, kDefault) == MovementFlags{});
  // group missing at one of the steps
  CHECK(relative_movement_flags(moved(0.0), {}, other, other, kDefault) == MovementFlags{});

  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto f = relative_movement_flags(moved(2 * std::numbers::pi * rng.uniform()), prev, other, other, kDefault);
    CHECK_FALSE((f.advancing && f.retreating));
  }
}

TEST_CASE("between flag") {
  const std::vector<UnitSnapshot> f{unit(1, 0, 0)};
  const std::vector<UnitSnapshot> e{unit(2, 10, 0, Force::Enemy)};
  CHECK(between_flag(std::vector<UnitSnapshot>{unit(3, 5, 0, Force::Enemy)}, f, e, kDefault));
  CHECK_FALSE(between_flag(std::vector<UnitSnapshot>{unit(3, 0, 5, Force::Enemy)}, f, e, kDefault));
  // 1 of 4 triples aligned: exactly 0.25 is not enough
  const std::vector<UnitSnapshot> four{unit(3, 5, 0, Force::Enemy), unit(4, 0, 5, Force::Enemy),
                                       unit(5, 0, -5, Force::Enemy), unit(6, -5, 0, Force::Enemy)};
  CHECK_FALSE(between_flag(four, f, e, kDefault));
  const std::vector<UnitSnapshot> two_of_four{unit(3, 5, 0, Force::Enemy), unit(4, 8, 0.1, Force::Enemy),
                                              unit(5, 0, -5, Force::Enemy), unit(6, -5, 0, Force::Enemy)};
  CHECK(between_flag(two_of_four, f, e, kDefault));
  CHECK_FALSE(between_flag({}, f, e, kDefault));
}

TEST_CASE("between flag is invariant under rigid motion") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    auto scatter = [&](std::size_t n) {
      std::vector<UnitSnapshot> v;
      for (std::size_t k = 0; k < n; ++k) v.push_back(unit(k, 10 * rng.uniform(), 10 * rng.uniform()));
      return v;
    };
    auto b = scatter(1 + rng.below(3)), fr = scatter(1 + rng.below(3)), en = scatter(1 + rng.below(3));
    const bool before = between_flag(b, fr, en, kDefault);
    const double th = 2 * std::numbers::pi * rng.uniform(), dx = 5 * rng.uniform(), dy = 5 * rng.uniform();
    auto move = [&](std::vector<UnitSnapshot> v) {
      for (auto& u : v) {
        const double x = u.x * std::cos(th) - u.y * std::sin(th) + dx;
        const double y = u.x * std::sin(th) + u.y * std::cos(th) + dy;
        u.x = x;
        u.y = y;
      }
      return v;
    };
    // skip configurations sitting on the angular threshold
    bool marginal = false;
    for (const auto& x : fr)
      for (const auto& y : en)
        for (const auto& z : b) {
          const double a = std::atan2(y.y - x.y, y.x - x.x) - std::atan2(z.y - x.y, z.x - x.x);
          const double w = std::abs(std::remainder(a, 2 * std::numbers::pi));
          marginal |= std::abs(w - 0.1) < 1e-9;
        }
    if (marginal) continue;
    CHECK(between_flag(move(b), move(fr), move(en), kDefault) == before);
  }
}

TEST_CASE("under attack flag") {
  CHECK(under_attack_flag(std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 90)},
                          std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 100)}));
  CHECK_FALSE(under_attack_flag(std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 100)},
                                std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 100)}));
  // a unit removed from the snapshot lowers the sum
  CHECK(under_attack_flag(std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 50)},
                          std::vector<UnitSnapshot>{unit(1, 0, 0, Force::Friendly, 50), unit(2, 0, 0, Force::Friendly, 5)}));
}

namespace {

const char* kConfig = R"({
  "board": {"width": 10, "height": 10, "diagonal": 14.142135623730951},
  "groups": {"Blue": ["Marine"], "CC": ["CommandCenter"], "Red": ["Tank"]},
  "actions": ["Target_Ground_CC", "NoOp_Ground"],
  "features": [
    {"name": "Present_Enemy_CC", "extractor": "presence", "groups": ["CC"]},
    {"name": "Defender_CC", "extractor": "defender_presence", "groups": ["CC", "Red"]},
    {"name": "Distance_Blue_CC", "extractor": "distance", "groups": ["Blue", "CC"]},
    {"name": "UnderAttack_Enemy_CC", "extractor": "under_attack", "groups": ["CC"]},
    {"name": "Advancing_Blue_CC", "extractor": "advancing", "force": "friendly", "groups": ["Blue", "CC"]},
    {"name": "Target_Ground_CC", "extractor": "action"}
  ]
})";

EpisodeLog scripted_log() {
  EpisodeLog log{"e1", "expert", 1, {}, {}};
  const UnitSnapshot cc{10, "CommandCenter", Force::Enemy, 5, 9, 400, 400};
  UnitSnapshot m{1, "Marine", Force::Friendly, 5, 0, 45, 50};
  UnitSnapshot hurt = cc;
  hurt.health = 390;
  log.snapshots.push_back({m, cc});
  m.y = 1;
  log.snapshots.push_back({m, cc});
  m.y = 2;
  log.snapshots.push_back({m, hurt});
  log.actions = {{}, {"Target_Ground_CC"}, {}};
  return log;
}

}  // namespace

TEST_CASE("feature config parses and round-trips") {
  const FeatureConfig cfg = parse_feature_config(kConfig);
  CHECK(cfg.extractor.features.size() == 6);
  CHECK(cfg.extractor.features.back().role == FeatureRole::Action);
  const FeatureConfig again = parse_feature_config(feature_config_to_json(cfg));
  CHECK(feature_config_to_json(again) == feature_config_to_json(cfg));
  CHECK_THROWS_AS(parse_feature_config(R"({"board":{},"groups":{},"features":[]})"), DataError);
  CHECK_THROWS_AS(parse_feature_config("{"), DataError);
}

TEST_CASE("extract_trace on a hand-built log") {
  const FeatureConfig cfg = parse_feature_config(kConfig);
  const FeatureSchema schema = schema_for(cfg.extractor);
  const Trace tr = extract_trace(scripted_log(), cfg, schema);
  REQUIRE(tr.length() == 3);
  auto col = [&](const char* name) {
    std::vector<int> v;
    for (std::size_t t = 0; t < tr.length(); ++t) v.push_back(tr.value(t, *schema.column_index(name)));
    return v;
  };
  CHECK(col("Present_Enemy_CC") == std::vector<int>{1, 1, 1});
  CHECK(col("Defender_CC") == std::vector<int>{0, 0, 0});
  CHECK(col("UnderAttack_Enemy_CC") == std::vector<int>{0, 0, 1});
  CHECK(col("Target_Ground_CC") == std::vector<int>{0, 1, 0});
  CHECK(col("Advancing_Blue_CC") == std::vector<int>{0, 1, 1});
  CHECK(col("Distance_Blue_CC=Far") == std::vector<int>{1, 1, 1});

  // determinism
  CHECK(extract_trace(scripted_log(), cfg, schema) == tr);
}

TEST_CASE("extract_trace errors") {
  const FeatureConfig cfg = parse_feature_config(kConfig);
  const FeatureSchema schema = schema_for(cfg.extractor);
  EpisodeLog log = scripted_log();
  log.actions[0] = {"Dance"};
  CHECK_THROWS_AS(extract_trace(log, cfg, schema), DataError);
  log = scripted_log();
  log.snapshots[1][0].x = 11;
  CHECK_THROWS_AS(extract_trace(log, cfg, schema), DataError);
  const FeatureSchema extra({{"Unwired", FeatureKind::Boolean, FeatureRole::Condition, {}}});
  CHECK_THROWS_AS(extract_trace(scripted_log(), cfg, extra), DataError);
}

TEST_CASE("empty enemy side keeps presence false") {
  const FeatureConfig cfg = parse_feature_config(kConfig);
  const FeatureSchema schema = schema_for(cfg.extractor);
  EpisodeLog log = scripted_log();
  for (auto& snap : log.snapshots) snap.resize(1);
  const Trace tr = extract_trace(log, cfg, schema);
  for (std::size_t t = 0; t < tr.length(); ++t) {
    CHECK_FALSE(tr.value(t, *schema.column_index("Present_Enemy_CC")));
    CHECK(tr.value(t, *schema.column_index("Distance_Blue_CC=Undefined")));
  }
}
