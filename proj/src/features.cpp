#include "stratmine/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stratmine/error.hpp"
#include "stratmine/parallel.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;

namespace {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

Point center_of_mass(UnitSpan units) {
  Point c;
  for (const auto& u : units) {
    c.x += u.x;
    c.y += u.y;
  }
  c.x /= static_cast<double>(units.size());
  c.y /= static_cast<double>(units.size());
  return c;
}

// Angle in [0, pi] between two vectors; nullopt if either is zero.
std::optional<double> angle_between(double ax, double ay, double bx, double by) {
  const double na = std::hypot(ax, ay);
  const double nb = std::hypot(bx, by);
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

double total(UnitSpan units, double UnitSnapshot::*field) {
  double s = 0.0;
  for (const auto& u : units) s += u.*field;
  return s;
}

const std::vector<std::pair<std::string_view, ExtractorKind>>& kind_names() {
  static const std::vector<std::pair<std::string_view, ExtractorKind>> names = {
      {"presence", ExtractorKind::Presence},
      {"defender_presence", ExtractorKind::DefenderPresence},
      {"distance", ExtractorKind::Distance},
      {"relative_cost", ExtractorKind::RelativeCost},
      {"under_attack", ExtractorKind::UnderAttack},
      {"advancing", ExtractorKind::Advancing},
      {"retreating", ExtractorKind::Retreating},
      {"between", ExtractorKind::Between},
      {"action", ExtractorKind::Action},
  };
  return names;
}

ExtractorKind parse_extractor(const std::string& s) {
  for (const auto& [name, kind] : kind_names())
    if (name == s) return kind;
  throw DataError("unknown extractor '" + s + "'");
}

std::size_t group_arity(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::Presence:
    case ExtractorKind::UnderAttack:
      return 1;
    case ExtractorKind::DefenderPresence:
    case ExtractorKind::Distance:
    case ExtractorKind::RelativeCost:
    case ExtractorKind::Advancing:
    case ExtractorKind::Retreating:
      return 2;
    case ExtractorKind::Between:
      return 3;
    case ExtractorKind::Action:
      return 0;
  }
  return 0;
}

bool is_categorical(ExtractorKind kind) {
  return kind == ExtractorKind::Distance || kind == ExtractorKind::RelativeCost;
}

Force opposite(Force f) { return f == Force::Friendly ? Force::Enemy : Force::Friendly; }

}  // namespace

std::string_view to_string(ExtractorKind kind) {
  for (const auto& [name, k] : kind_names())
    if (k == kind) return name;
  return "unknown";
}

bool GroupConfig::contains(std::string_view group, std::string_view type) const {
  auto it = groups.find(group);
  return it != groups.end() && it->second.count(std::string(type)) > 0;
}

void GroupConfig::validate() const {
  if (!(board_diagonal > 0.0)) throw DataError("board diagonal must be positive");
  for (const auto& [name, types] : groups)
    if (types.empty()) throw DataError("unit group '" + name + "' is empty");
}

void Thresholds::validate() const {
  if (!(melee > 0.0 && melee < close && close < 1.0))
    throw DataError("distance thresholds must satisfy 0 < melee < close < 1");
  if (!(cost > 0.0 && cost < 1.0)) throw DataError("cost threshold must lie in (0, 1)");
  constexpr double pi = std::numbers::pi;
  if (!(alpha_mov > 0.0 && alpha_mov < pi)) throw DataError("alpha_mov must lie in (0, pi)");
  if (!(alpha_btw > 0.0 && alpha_btw < pi)) throw DataError("alpha_btw must lie in (0, pi)");
  if (!(between_fraction >= 0.0 && between_fraction < 1.0))
    throw DataError("between fraction must lie in [0, 1)");
}

void ExtractorConfig::validate(const GroupConfig& groups) const {
  thresholds.validate();
  std::set<std::string> names;
  for (const auto& w : features) {
    if (!names.insert(w.name).second) throw DataError("duplicate wired feature '" + w.name + "'");
    if (w.groups.size() != group_arity(w.kind))
      throw DataError("feature '" + w.name + "': extractor '" + std::string(to_string(w.kind)) +
                      "' takes " + std::to_string(group_arity(w.kind)) + " groups");
    for (const auto& g : w.groups)
      if (!groups.groups.count(g))
        throw DataError("feature '" + w.name + "' references unknown group '" + g + "'");
    if (w.kind == ExtractorKind::Action &&
        std::find(actions.begin(), actions.end(), w.action) == actions.end())
      throw DataError("feature '" + w.name + "' uses undeclared action '" + w.action + "'");
  }
}

FeatureConfig parse_feature_config(std::string_view json_text) {
  FeatureConfig cfg;
  try {
    const json doc = json::parse(json_text);
    const auto& board = doc.at("board");
    if (board.contains("width")) cfg.groups.board_width = board.at("width").get<double>();
    if (board.contains("height")) cfg.groups.board_height = board.at("height").get<double>();
    if (board.contains("diagonal")) {
      cfg.groups.board_diagonal = board.at("diagonal").get<double>();
    } else if (cfg.groups.board_width && cfg.groups.board_height) {
      cfg.groups.board_diagonal = std::hypot(*cfg.groups.board_width, *cfg.groups.board_height);
    } else {
      throw DataError("board needs a diagonal or both width and height");
    }
    for (const auto& [name, types] : doc.at("groups").items()) {
      auto list = types.get<std::vector<std::string>>();
      cfg.groups.groups[name] = std::set<std::string>(list.begin(), list.end());
    }
    if (doc.contains("thresholds")) {
      const auto& t = doc.at("thresholds");
      auto& th = cfg.extractor.thresholds;
      th.melee = t.value("melee", th.melee);
      th.close = t.value("close", th.close);
      th.cost = t.value("cost", th.cost);
      th.alpha_mov = t.value("alpha_mov", th.alpha_mov);
      th.alpha_btw = t.value("alpha_btw", th.alpha_btw);
      th.between_fraction = t.value("between_fraction", th.between_fraction);
    }
    if (doc.contains("actions"))
      cfg.extractor.actions = doc.at("actions").get<std::vector<std::string>>();
    for (const auto& f : doc.at("features")) {
      FeatureWiring w;
      w.name = f.at("name").get<std::string>();
      w.kind = parse_extractor(f.at("extractor").get<std::string>());
      const std::string role = f.value("role", w.kind == ExtractorKind::Action ? "action" : "condition");
      if (role == "condition") {
        w.role = FeatureRole::Condition;
      } else if (role == "action") {
        w.role = FeatureRole::Action;
      } else {
        throw DataError("feature '" + w.name + "': unknown role '" + role + "'");
      }
      const std::string force = f.value("force", "enemy");
      if (force == "friendly") {
        w.force = Force::Friendly;
      } else if (force == "enemy") {
        w.force = Force::Enemy;
      } else {
        throw DataError("feature '" + w.name + "': unknown force '" + force + "'");
      }
      if (f.contains("groups")) w.groups = f.at("groups").get<std::vector<std::string>>();
      if (f.contains("action")) w.action = f.at("action").get<std::string>();
      if (w.kind == ExtractorKind::Action && w.action.empty()) w.action = w.name;
      cfg.extractor.features.push_back(std::move(w));
    }
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("feature config: ") + e.what());
  }
  cfg.groups.validate();
  cfg.extractor.validate(cfg.groups);
  return cfg;
}

FeatureConfig load_feature_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_feature_config(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string feature_config_to_json(const FeatureConfig& config) {
  json doc;
  json board;
  if (config.groups.board_width) board["width"] = *config.groups.board_width;
  if (config.groups.board_height) board["height"] = *config.groups.board_height;
  board["diagonal"] = config.groups.board_diagonal;
  doc["board"] = board;
  json groups = json::object();
  for (const auto& [name, types] : config.groups.groups)
    groups[name] = std::vector<std::string>(types.begin(), types.end());
  doc["groups"] = groups;
  const auto& th = config.extractor.thresholds;
  doc["thresholds"] = {{"melee", th.melee},         {"close", th.close},
                       {"cost", th.cost},           {"alpha_mov", th.alpha_mov},
                       {"alpha_btw", th.alpha_btw}, {"between_fraction", th.between_fraction}};
  doc["actions"] = config.extractor.actions;
  json features = json::array();
  for (const auto& w : config.extractor.features) {
    json f;
    f["name"] = w.name;
    f["extractor"] = std::string(to_string(w.kind));
    f["role"] = std::string(to_string(w.role));
    if (w.kind == ExtractorKind::Action) {
      f["action"] = w.action;
    } else {
      f["force"] = std::string(to_string(w.force));
      f["groups"] = w.groups;
    }
    features.push_back(std::move(f));
  }
  doc["features"] = features;
  return doc.dump(2) + "\n";
}

FeatureSchema schema_for(const ExtractorConfig& config) {
  std::vector<FeatureSpec> specs;
  for (const auto& w : config.features) {
    FeatureSpec spec;
    spec.name = w.name;
    spec.role = w.role;
    if (w.kind == ExtractorKind::Distance) {
      spec.kind = FeatureKind::Categorical;
      spec.labels = {std::string(labels::kMelee), std::string(labels::kClose),
                     std::string(labels::kFar), std::string(labels::kUndefined)};
    } else if (w.kind == ExtractorKind::RelativeCost) {
      spec.kind = FeatureKind::Categorical;
      spec.labels = {std::string(labels::kDisadvantage), std::string(labels::kBalanced),
                     std::string(labels::kAdvantage), std::string(labels::kUndefined)};
    }
    specs.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(specs));
}

std::vector<UnitSnapshot> select_units(UnitSpan snapshot, const GroupConfig& groups,
                                       std::string_view group, Force force) {
  std::vector<UnitSnapshot> out;
  auto it = groups.groups.find(group);
  if (it == groups.groups.end()) return out;
  for (const auto& u : snapshot)
    if (u.force == force && it->second.count(u.type)) out.push_back(u);
  return out;
}

std::string distance_category(UnitSpan friendly, UnitSpan enemy, double board_diagonal,
                              const Thresholds& cfg) {
  if (friendly.empty() || enemy.empty()) return std::string(labels::kUndefined);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : friendly)
    for (const auto& e : enemy) best = std::min(best, std::hypot(f.x - e.x, f.y - e.y));
  const double ratio = best / board_diagonal;
  if (ratio <= cfg.melee) return std::string(labels::kMelee);
  if (ratio <= cfg.close) return std::string(labels::kClose);
  return std::string(labels::kFar);
}

std::string relative_cost_category(UnitSpan friendly, UnitSpan enemy, const Thresholds& cfg) {
  if (friendly.empty() || enemy.empty()) return std::string(labels::kUndefined);
  const double fc = total(friendly, &UnitSnapshot::cost);
  const double ec = total(enemy, &UnitSnapshot::cost);
  // r < t and 1/r < t, written without dividing by a possibly zero cost.
  if (fc < cfg.cost * ec) return std::string(labels::kDisadvantage);
  if (ec < cfg.cost * fc) return std::string(labels::kAdvantage);
  return std::string(labels::kBalanced);
}

MovementFlags relative_movement_flags(UnitSpan group_now, UnitSpan group_prev, UnitSpan other_now,
                                      UnitSpan other_prev, const Thresholds& cfg) {
  if (group_now.empty() || group_prev.empty() || other_now.empty() || other_prev.empty()) return {};
  const Point g0 = center_of_mass(group_prev);
  const Point g1 = center_of_mass(group_now);
  const Point o0 = center_of_mass(other_prev);
  const auto alpha = angle_between(g1.x - g0.x, g1.y - g0.y, o0.x - g0.x, o0.y - g0.y);
  if (!alpha) return {};
  MovementFlags flags;
  flags.advancing = *alpha < cfg.alpha_mov;
  flags.retreating = *alpha > std::numbers::pi - cfg.alpha_mov;
  return flags;
}

bool between_flag(UnitSpan barrier, UnitSpan friendly, UnitSpan enemy, const Thresholds& cfg) {
  if (barrier.empty() || friendly.empty() || enemy.empty()) return false;
  std::size_t hits = 0;
  std::size_t samples = 0;
  for (const auto& f : friendly) {
    for (const auto& e : enemy) {
      for (const auto& b : barrier) {
        ++samples;
        const auto alpha = angle_between(e.x - f.x, e.y - f.y, b.x - f.x, b.y - f.y);
        if (alpha && *alpha < cfg.alpha_btw) ++hits;
      }
    }
  }
  return static_cast<double>(hits) > cfg.between_fraction * static_cast<double>(samples);
}

bool under_attack_flag(UnitSpan group_now, UnitSpan group_prev) {
  return total(group_now, &UnitSnapshot::health) < total(group_prev, &UnitSnapshot::health);
}

Trace extract_trace(const EpisodeLog& log, const FeatureConfig& config, const FeatureSchema& schema) {
  log.validate();
  const auto& groups = config.groups;
  const auto& ex = config.extractor;

  std::vector<const FeatureWiring*> wiring;
  for (const auto& spec : schema.entries()) {
    auto it = std::find_if(ex.features.begin(), ex.features.end(),
                           [&](const FeatureWiring& w) { return w.name == spec.name; });
    if (it == ex.features.end()) throw DataError("schema feature '" + spec.name + "' is not wired");
    if ((spec.kind == FeatureKind::Categorical) != is_categorical(it->kind))
      throw DataError("schema feature '" + spec.name + "' kind disagrees with its extractor");
    wiring.push_back(&*it);
  }

  for (std::size_t t = 0; t < log.length(); ++t) {
    for (const auto& a : log.actions[t])
      if (std::find(ex.actions.begin(), ex.actions.end(), a) == ex.actions.end())
        throw DataError("episode '" + log.id + "' step " + std::to_string(t) +
                        ": undeclared action '" + a + "'");
    if (groups.board_width && groups.board_height) {
      for (const auto& u : log.snapshots[t])
        if (u.x < 0.0 || u.y < 0.0 || u.x > *groups.board_width || u.y > *groups.board_height)
          throw DataError("episode '" + log.id + "' step " + std::to_string(t) + ": uid " +
                          std::to_string(u.uid) + " is off the board");
    }
  }

  Trace trace;
  trace.id = log.id;
  trace.agent = log.agent;
  trace.steps.reserve(log.length());
  for (std::size_t t = 0; t < log.length(); ++t) {
    const Snapshot& now = log.snapshots[t];
    const Snapshot* prev = t > 0 ? &log.snapshots[t - 1] : nullptr;
    auto units = [&](const Snapshot& snap, std::size_t i, const FeatureWiring& w, Force force) {
      return select_units(snap, groups, w.groups[i], force);
    };
    RawObservation raw;
    for (const FeatureWiring* wp : wiring) {
      const FeatureWiring& w = *wp;
      RawValue value = false;
      switch (w.kind) {
        case ExtractorKind::Presence:
          value = !units(now, 0, w, w.force).empty();
          break;
        case ExtractorKind::DefenderPresence:
          value = !units(now, 0, w, w.force).empty() && !units(now, 1, w, w.force).empty();
          break;
        case ExtractorKind::Distance:
          value = distance_category(units(now, 0, w, Force::Friendly), units(now, 1, w, Force::Enemy),
                                    groups.board_diagonal, ex.thresholds);
          break;
        case ExtractorKind::RelativeCost:
          value = relative_cost_category(units(now, 0, w, Force::Friendly),
                                         units(now, 1, w, Force::Enemy), ex.thresholds);
          break;
        case ExtractorKind::UnderAttack:
          value = prev != nullptr && under_attack_flag(units(now, 0, w, w.force), units(*prev, 0, w, w.force));
          break;
        case ExtractorKind::Advancing:
        case ExtractorKind::Retreating: {
          if (prev == nullptr) break;
          const auto flags = relative_movement_flags(
              units(now, 0, w, w.force), units(*prev, 0, w, w.force), units(now, 1, w, opposite(w.force)),
              units(*prev, 1, w, opposite(w.force)), ex.thresholds);
          value = w.kind == ExtractorKind::Advancing ? flags.advancing : flags.retreating;
          break;
        }
        case ExtractorKind::Between:
          value = between_flag(units(now, 0, w, Force::Enemy), units(now, 1, w, Force::Friendly),
                               units(now, 2, w, Force::Enemy), ex.thresholds);
          break;
        case ExtractorKind::Action: {
          const auto& acts = log.actions[t];
          value = std::find(acts.begin(), acts.end(), w.action) != acts.end();
          break;
        }
      }
      raw.emplace(w.name, std::move(value));
    }
    trace.steps.push_back(one_hot_encode(raw, schema));
  }
  return trace;
}

TraceSet extract_traces(std::span<const EpisodeLog> logs, const FeatureConfig& config,
                        unsigned threads) {
  TraceSet out{schema_for(config.extractor), std::vector<Trace>(logs.size())};
  parallel_for(logs.size(), threads,
               [&](std::size_t i) { out.traces[i] = extract_trace(logs[i], config, out.schema); });
  return out;
}

}  // namespace stratmine
