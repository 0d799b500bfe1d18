#include "stratmine/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "stratmine/parallel.hpp"
#include "stratmine/rng.hpp"

namespace stratmine::synthetic {

std::string_view to_string(Policy p) { return p == Policy::Expert ? "expert" : "random"; }

Policy parse_policy(std::string_view s) {
  if (s == "expert") return Policy::Expert;
  if (s == "random") return Policy::Random;
  throw std::invalid_argument("unknown agent '" + std::string(s) + "'");
}

std::string_view to_string(TerminalCause c) {
  switch (c) {
    case TerminalCause::CcDestroyed:
      return "cc_destroyed";
    case TerminalCause::FriendlyDestroyed:
      return "friendly_destroyed";
    case TerminalCause::Timeout:
      return "timeout";
  }
  return "?";
}

namespace {

struct UnitType {
  std::string_view name;
  Force force;
  bool air;
  double health;
  double cost;
  double damage;
  double range;
};

constexpr UnitType kTypes[] = {
    {unit::kMarine, Force::Friendly, false, 45, 50, 6, 1.5},
    {unit::kBanshee, Force::Friendly, true, 140, 150, 12, 1.5},
    {unit::kCommandCenter, Force::Enemy, false, 400, 400, 0, 0},
    {unit::kTank, Force::Enemy, false, 150, 150, 10, 3.0},
    {unit::kStarport, Force::Enemy, false, 150, 150, 0, 0},
    {unit::kGuard, Force::Enemy, false, 45, 50, 6, 1.5},
    {unit::kRock, Force::Enemy, false, 1000, 0, 0, 0},
};

const UnitType& type_of(std::string_view name) {
  for (const UnitType& t : kTypes)
    if (t.name == name) return t;
  throw std::invalid_argument("unknown unit type '" + std::string(name) + "'");
}

UnitSnapshot make_unit(std::int64_t uid, std::string_view type, int x, int y) {
  const UnitType& t = type_of(type);
  return UnitSnapshot{uid, std::string(type), t.force, x + 0.5, y + 0.5, t.health, t.cost};
}

int cell_x(const UnitSnapshot& u) { return static_cast<int>(std::floor(u.x)); }
int cell_y(const UnitSnapshot& u) { return static_cast<int>(std::floor(u.y)); }
int lane_of(int x) { return x / 4; }

double distance(const UnitSnapshot& a, const UnitSnapshot& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool is(const UnitSnapshot& u, std::string_view type) { return u.type == type; }

std::array<bool, 3> blocked_lanes(const Snapshot& snap) {
  std::array<bool, 3> blocked{};
  for (const auto& u : snap)
    if (is(u, unit::kRock)) blocked[lane_of(cell_x(u))] = true;
  return blocked;
}

bool passable(int x, int y, const std::array<bool, 3>& blocked) {
  if (x < 0 || y < 0 || x >= kBoardWidth || y >= kBoardHeight) return false;
  return !(y >= kBandLow && y <= kBandHigh && blocked[lane_of(x)]);
}

constexpr int kNeighbours[8][2] = {{0, 1}, {1, 1}, {-1, 1}, {1, 0}, {-1, 0}, {0, -1}, {1, -1}, {-1, -1}};
constexpr int kFar = std::numeric_limits<int>::max();

// Ground distance field toward one cell, 8-connected.
std::vector<int> distance_field(int tx, int ty, const std::array<bool, 3>& blocked) {
  std::vector<int> dist(kBoardWidth * kBoardHeight, kFar);
  std::vector<std::pair<int, int>> frontier{{tx, ty}};
  dist[ty * kBoardWidth + tx] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const auto [x, y] = frontier[head];
    for (const auto& d : kNeighbours) {
      const int nx = x + d[0];
      const int ny = y + d[1];
      if (!passable(nx, ny, blocked) || dist[ny * kBoardWidth + nx] != kFar) continue;
      dist[ny * kBoardWidth + nx] = dist[y * kBoardWidth + x] + 1;
      frontier.emplace_back(nx, ny);
    }
  }
  return dist;
}

int sign(int v) { return (v > 0) - (v < 0); }

struct Strength {
  double friendly = 0.0;
  double tanks = 0.0;
  double guards = 0.0;
  bool ground = false;
  bool air = false;
  bool cc = false;
  bool starport = false;
};

Strength assess(const Snapshot& snap) {
  Strength s;
  for (const auto& u : snap) {
    if (is(u, unit::kMarine)) {
      s.ground = true;
      s.friendly += u.cost;
    } else if (is(u, unit::kBanshee)) {
      s.air = true;
      s.friendly += kAirMultiplier * u.cost;
    } else if (is(u, unit::kTank)) {
      s.tanks += u.cost;
    } else if (is(u, unit::kGuard)) {
      s.guards += u.cost;
    } else if (is(u, unit::kCommandCenter)) {
      s.cc = true;
    } else if (is(u, unit::kStarport)) {
      s.starport = true;
    }
  }
  return s;
}

enum class Command { None, TargetCc, TargetStarport, Move };

struct Orders {
  Command ground = Command::None;
  Command air = Command::None;
  int ground_x = 0, ground_y = 0;
  int air_x = 0, air_y = 0;
};

Orders orders_from(const std::vector<std::string>& labels) {
  Orders o;
  for (const auto& a : labels) {
    if (a == action::kTargetGroundCc) o.ground = Command::TargetCc;
    if (a == action::kTargetGroundStarport) o.ground = Command::TargetStarport;
    if (a == action::kTargetAirCc) o.air = Command::TargetCc;
  }
  return o;
}

class Simulation {
 public:
  explicit Simulation(const Scenario& s) : units_(initial_snapshot(s)), blocked_(s.lane_blocked) {
    for (const auto& u : units_) next_uid_ = std::max(next_uid_, u.uid + 1);
  }

  const Snapshot& snapshot() const { return units_; }

  void step(const Orders& orders) {
    std::map<std::int64_t, double> damage;
    std::map<std::pair<int, int>, std::vector<int>> fields;
    auto field = [&](int x, int y) -> const std::vector<int>& {
      auto it = fields.find({x, y});
      if (it == fields.end()) it = fields.emplace(std::pair{x, y}, distance_field(x, y, blocked_)).first;
      return it->second;
    };

    // Friendly orders.
    for (auto& u : units_) {
      if (u.force != Force::Friendly) continue;
      const UnitType& t = type_of(u.type);
      const Command cmd = t.air ? orders.air : orders.ground;
      const UnitSnapshot* target = nullptr;
      if (cmd == Command::TargetCc) target = find_first(unit::kCommandCenter);
      if (cmd == Command::TargetStarport) {
        target = nearest(u, unit::kGuard);
        if (target == nullptr) target = find_first(unit::kStarport);
      }
      if (target != nullptr) {
        if (distance(u, *target) <= t.range) {
          damage[target->uid] += t.damage;
        } else {
          move(u, t.air, cell_x(*target), cell_y(*target), field);
        }
      } else if (cmd == Command::Move) {
        move(u, t.air, t.air ? orders.air_x : orders.ground_x, t.air ? orders.air_y : orders.ground_y, field);
      }
    }

    // Enemy fire hits the nearest ground unit in range.
    for (const auto& e : units_) {
      if (e.force != Force::Enemy) continue;
      const UnitType& t = type_of(e.type);
      if (t.damage <= 0) continue;
      const UnitSnapshot* victim = nullptr;
      for (const auto& u : units_) {
        if (!is(u, unit::kMarine) || distance(e, u) > t.range) continue;
        if (victim == nullptr || distance(e, u) < distance(e, *victim)) victim = &u;
      }
      if (victim != nullptr) damage[victim->uid] += t.damage;
    }

    std::optional<UnitSnapshot> spawn;
    for (auto& u : units_) {
      auto it = damage.find(u.uid);
      if (it == damage.end()) continue;
      u.health = std::max(0.0, u.health - it->second);
      if (u.health == 0.0 && is(u, unit::kStarport)) spawn = make_unit(next_uid_++, unit::kBanshee, cell_x(u), cell_y(u));
    }
    std::erase_if(units_, [](const UnitSnapshot& u) { return u.health == 0.0; });
    if (spawn) units_.push_back(*spawn);
  }

 private:
  const UnitSnapshot* find_first(std::string_view type) const {
    for (const auto& u : units_)
      if (is(u, type)) return &u;
    return nullptr;
  }

  const UnitSnapshot* nearest(const UnitSnapshot& from, std::string_view type) const {
    const UnitSnapshot* best = nullptr;
    for (const auto& u : units_) {
      if (!is(u, type)) continue;
      if (best == nullptr || distance(from, u) < distance(from, *best)) best = &u;
    }
    return best;
  }

  template <typename Field>
  void move(UnitSnapshot& u, bool air, int tx, int ty, Field& field) {
    const int x = cell_x(u);
    const int y = cell_y(u);
    if (air) {
      u.x = x + sign(tx - x) + 0.5;
      u.y = y + sign(ty - y) + 0.5;
      return;
    }
    if (!passable(tx, ty, blocked_)) return;
    const std::vector<int>& dist = field(tx, ty);
    int best = dist[y * kBoardWidth + x];
    int bx = x;
    int by = y;
    for (const auto& d : kNeighbours) {
      const int nx = x + d[0];
      const int ny = y + d[1];
      if (!passable(nx, ny, blocked_)) continue;
      const int nd = dist[ny * kBoardWidth + nx];
      if (nd < best) {
        best = nd;
        bx = nx;
        by = ny;
      }
    }
    u.x = bx + 0.5;
    u.y = by + 0.5;
  }

  Snapshot units_;
  std::array<bool, 3> blocked_;
  std::int64_t next_uid_ = 1;
};

std::vector<std::string> random_decision(const Snapshot& snap, Rng& rng, Orders& orders) {
  const Strength s = assess(snap);
  std::vector<std::string> labels;
  if (s.ground) {
    switch (rng.below(4)) {
      case 0:
        labels.emplace_back(action::kTargetGroundCc);
        orders.ground = Command::TargetCc;
        break;
      case 1:
        labels.emplace_back(action::kTargetGroundStarport);
        orders.ground = Command::TargetStarport;
        break;
      case 2:
        labels.emplace_back(action::kMoveGround);
        orders.ground = Command::Move;
        orders.ground_x = static_cast<int>(rng.below(kBoardWidth));
        orders.ground_y = static_cast<int>(rng.below(kBoardHeight));
        break;
      default:
        labels.emplace_back(action::kNoOpGround);
        break;
    }
  }
  if (s.air) {
    switch (rng.below(3)) {
      case 0:
        labels.emplace_back(action::kTargetAirCc);
        orders.air = Command::TargetCc;
        break;
      case 1:
        labels.emplace_back(action::kMoveAir);
        orders.air = Command::Move;
        orders.air_x = static_cast<int>(rng.below(kBoardWidth));
        orders.air_y = static_cast<int>(rng.below(kBoardHeight));
        break;
      default:
        labels.emplace_back(action::kNoOpAir);
        break;
    }
  }
  return labels;
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  Scenario s;
  s.seed = seed;
  for (bool& b : s.lane_blocked) b = rng.bernoulli(0.5);
  s.cc_defended = rng.bernoulli(0.5);
  s.starport = rng.bernoulli(0.5);
  s.starport_lane = rng.bernoulli(0.5) ? 2 : 0;
  s.guards = 1 + static_cast<int>(rng.below(4));
  s.squad = 3 + static_cast<int>(rng.below(4));
  s.cc_x = 4 + static_cast<int>(rng.below(4));
  s.squad_x = 4 + static_cast<int>(rng.below(3));
  if (!s.starport) s.guards = 0;
  return s;
}

Snapshot initial_snapshot(const Scenario& s) {
  Snapshot units;
  std::int64_t uid = 1;
  for (int i = 0; i < s.squad; ++i) units.push_back(make_unit(uid++, unit::kMarine, s.squad_x + i % 3, i / 3));
  units.push_back(make_unit(uid++, unit::kCommandCenter, s.cc_x, 14));
  if (s.cc_defended) {
    units.push_back(make_unit(uid++, unit::kTank, s.cc_x - 1, 13));
    units.push_back(make_unit(uid++, unit::kTank, s.cc_x + 1, 13));
  }
  if (s.starport) {
    const int sx = s.starport_lane == 0 ? 1 : 10;
    constexpr int offsets[4][2] = {{-1, 1}, {1, 1}, {-1, -1}, {1, -1}};
    units.push_back(make_unit(uid++, unit::kStarport, sx, 5));
    for (int g = 0; g < s.guards; ++g) units.push_back(make_unit(uid++, unit::kGuard, sx + offsets[g][0], 5 + offsets[g][1]));
  }
  for (int lane = 0; lane < 3; ++lane) {
    if (!s.lane_blocked[lane]) continue;
    for (int y = kBandLow; y <= kBandHigh; ++y)
      for (int x = 4 * lane + 1; x <= 4 * lane + 2; ++x) units.push_back(make_unit(uid++, unit::kRock, x, y));
  }
  return units;
}

std::vector<std::string> expert_decision(const Snapshot& snapshot) {
  const Strength s = assess(snapshot);
  const auto blocked = blocked_lanes(snapshot);
  const bool any_clear = !blocked[0] || !blocked[1] || !blocked[2];
  if (s.ground && s.cc && !blocked[1] && s.tanks == 0.0) return {std::string(action::kTargetGroundCc)};
  if (s.air && s.cc) return {std::string(action::kTargetAirCc)};
  if (s.ground && s.starport && s.friendly > s.guards) return {std::string(action::kTargetGroundStarport)};
  if (s.ground && s.cc && any_clear && s.friendly > s.tanks) return {std::string(action::kTargetGroundCc)};
  return {std::string(action::kNoOpGround)};
}

Episode run_episode(const Scenario& s, Policy policy, std::uint64_t seed) {
  Episode ep;
  ep.scenario = s;
  ep.log.agent = std::string(to_string(policy));
  ep.log.id = ep.log.agent + "-" + std::to_string(seed);
  ep.log.seed = seed;
  Rng rng(mix_seed(seed ^ 0x6a09e667f3bcc909ULL));
  Simulation sim(s);
  for (std::size_t t = 0;; ++t) {
    const Snapshot& snap = sim.snapshot();
    const Strength st = assess(snap);
    std::optional<TerminalCause> cause;
    if (!st.cc) {
      cause = TerminalCause::CcDestroyed;
    } else if (!st.ground && !st.air) {
      cause = TerminalCause::FriendlyDestroyed;
    } else if (t + 1 == kTimeLimit) {
      cause = TerminalCause::Timeout;
    }
    ep.log.snapshots.push_back(snap);
    if (cause) {
      ep.log.actions.emplace_back();
      ep.outcome = {*cause, ep.log.length()};
      return ep;
    }
    Orders orders;
    std::vector<std::string> labels;
    if (policy == Policy::Expert) {
      labels = expert_decision(snap);
      orders = orders_from(labels);
    } else {
      labels = random_decision(snap, rng, orders);
    }
    ep.log.actions.push_back(labels);
    sim.step(orders);
  }
}

std::vector<Episode> generate_episodes(Policy policy, std::size_t n, std::uint64_t seed, unsigned threads) {
  std::vector<Episode> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t s = mix_seed(seed + i);
    out[i] = run_episode(generate_scenario(s), policy, s);
    char id[32];
    std::snprintf(id, sizeof id, "-%05zu", i);
    out[i].log.id = std::string(to_string(policy)) + id;
  });
  return out;
}

FeatureConfig default_feature_config() {
  FeatureConfig cfg;
  cfg.groups.board_width = kBoardWidth;
  cfg.groups.board_height = kBoardHeight;
  cfg.groups.board_diagonal = kBoardDiagonal;
  auto& g = cfg.groups.groups;
  g["Blue"] = {std::string(unit::kMarine)};
  g["Air"] = {std::string(unit::kBanshee)};
  g["CC"] = {std::string(unit::kCommandCenter)};
  g["Tank"] = {std::string(unit::kTank)};
  g["Starport"] = {std::string(unit::kStarport)};
  g["Guard"] = {std::string(unit::kGuard)};
  g["Red"] = {std::string(unit::kTank), std::string(unit::kGuard)};
  g["Obstacle"] = {std::string(unit::kRock)};

  auto& ex = cfg.extractor;
  auto wire = [&](std::string name, ExtractorKind kind, FeatureRole role, Force force,
                  std::vector<std::string> groups, std::string act = {}) {
    ex.features.push_back({std::move(name), kind, role, force, std::move(groups), std::move(act)});
  };
  using K = ExtractorKind;
  constexpr auto C = FeatureRole::Condition;
  constexpr auto A = FeatureRole::Action;
  wire("Present_Enemy_CC", K::Presence, C, Force::Enemy, {"CC"});
  wire("Present_Enemy_Starport", K::Presence, C, Force::Enemy, {"Starport"});
  wire("Present_Friendly_Air", K::Presence, C, Force::Friendly, {"Air"});
  wire("Present_Friendly_Ground", K::Presence, C, Force::Friendly, {"Blue"});
  wire("Defender_CC", K::DefenderPresence, C, Force::Enemy, {"CC", "Tank"});
  wire("Defender_Starport", K::DefenderPresence, C, Force::Enemy, {"Starport", "Guard"});
  wire("Distance_Blue_CC", K::Distance, C, Force::Friendly, {"Blue", "CC"});
  wire("Distance_Blue_Red", K::Distance, C, Force::Friendly, {"Blue", "Red"});
  wire("RelativeCost_Blue_Red", K::RelativeCost, C, Force::Friendly, {"Blue", "Red"});
  wire("Between_Obstacle_Blue_CC", K::Between, C, Force::Friendly, {"Obstacle", "Blue", "CC"});
  wire("UnderAttack_Friendly_Blue", K::UnderAttack, C, Force::Friendly, {"Blue"});
  wire("UnderAttack_Enemy_CC", K::UnderAttack, C, Force::Enemy, {"CC"});
  for (std::string_view a : {action::kTargetGroundCc, action::kTargetGroundStarport, action::kTargetAirCc,
                             action::kMoveGround, action::kMoveAir, action::kNoOpGround, action::kNoOpAir}) {
    ex.actions.emplace_back(a);
    wire(std::string(a), K::Action, A, Force::Friendly, {}, std::string(a));
  }
  wire("Advancing_Blue_CC", K::Advancing, A, Force::Friendly, {"Blue", "CC"});
  wire("Retreating_Blue_Red", K::Retreating, A, Force::Friendly, {"Blue", "Red"});
  cfg.groups.validate();
  ex.validate(cfg.groups);
  return cfg;
}

void write_manifest_csv(std::ostream& out, std::span<const Episode> episodes) {
  out << "seed,id,agent,lane_left,lane_mid,lane_right,cc_defended,starport,starport_lane,guards,squad,cause,steps\n";
  for (const Episode& e : episodes) {
    const Scenario& s = e.scenario;
    out << s.seed << ',' << e.log.id << ',' << e.log.agent << ',' << s.lane_blocked[0] << ',' << s.lane_blocked[1]
        << ',' << s.lane_blocked[2] << ',' << s.cc_defended << ',' << s.starport << ','
        << (s.starport ? (s.starport_lane == 0 ? "left" : "right") : "-") << ',' << s.guards << ',' << s.squad << ','
        << to_string(e.outcome.cause) << ',' << e.outcome.steps << '\n';
  }
}

}  // namespace stratmine::synthetic
