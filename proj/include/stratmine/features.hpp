#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stratmine/trace_model.hpp"

namespace stratmine {

/// Labels produced by the categorical extractors.
namespace labels {
inline constexpr std::string_view kMelee = "Melee";
inline constexpr std::string_view kClose = "Close";
inline constexpr std::string_view kFar = "Far";
inline constexpr std::string_view kUndefined = "Undefined";
inline constexpr std::string_view kDisadvantage = "Disadvantage";
inline constexpr std::string_view kBalanced = "Balanced";
inline constexpr std::string_view kAdvantage = "Advantage";
}  // namespace labels

/// Named unit groups (sets of unit types) and the board extent.
struct GroupConfig {
  std::map<std::string, std::set<std::string>, std::less<>> groups;
  double board_diagonal = 1.0;
  /// Optional board extent; when set, snapshot positions are bounds-checked.
  std::optional<double> board_width;
  std::optional<double> board_height;

  bool contains(std::string_view group, std::string_view type) const;
  void validate() const;
};

struct Thresholds {
  double melee = 0.05;           // distance ratio, inclusive
  double close = 0.1;            // distance ratio, inclusive
  double cost = 0.9;             // relative cost ratio, strict
  double alpha_mov = 1.15;       // radians
  double alpha_btw = 0.1;        // radians
  double between_fraction = 0.25;  // strict

  void validate() const;
};

enum class ExtractorKind {
  Presence,          // groups: [group], force
  DefenderPresence,  // groups: [defended, defender], force (default enemy)
  Distance,          // groups: [friendly group, enemy group]
  RelativeCost,      // groups: [friendly group, enemy group]
  UnderAttack,       // groups: [group], force
  Advancing,         // groups: [group, other group], force of the first group
  Retreating,        // groups: [group, other group], force of the first group
  Between,           // groups: [barrier group, friendly group, enemy group]
  Action,            // action: logged action label
};

std::string_view to_string(ExtractorKind kind);

struct FeatureWiring {
  std::string name;
  ExtractorKind kind = ExtractorKind::Presence;
  FeatureRole role = FeatureRole::Condition;
  Force force = Force::Enemy;
  std::vector<std::string> groups;
  std::string action;
};

struct ExtractorConfig {
  Thresholds thresholds;
  std::vector<FeatureWiring> features;
  /// Every action label that may appear in an episode log.
  std::vector<std::string> actions;

  void validate(const GroupConfig& groups) const;
};

/// The extractor wiring file: groups, thresholds, features, declared actions.
struct FeatureConfig {
  GroupConfig groups;
  ExtractorConfig extractor;
};

FeatureConfig parse_feature_config(std::string_view json_text);
FeatureConfig load_feature_config(const std::filesystem::path& path);
std::string feature_config_to_json(const FeatureConfig& config);

/// Schema matching the config's feature list (categorical extractors get their
/// fixed label sets).
FeatureSchema schema_for(const ExtractorConfig& config);

using UnitSpan = std::span<const UnitSnapshot>;

/// Units of `force` whose type belongs to `group`.
std::vector<UnitSnapshot> select_units(UnitSpan snapshot, const GroupConfig& groups,
                                       std::string_view group, Force force);

/// Melee / Close / Far by min pairwise distance over the board diagonal;
/// Undefined when either side is empty.
std::string distance_category(UnitSpan friendly, UnitSpan enemy, double board_diagonal,
                              const Thresholds& cfg);

/// Disadvantage / Balanced / Advantage by friendly-to-enemy cost ratio;
/// Undefined when either side is empty.
std::string relative_cost_category(UnitSpan friendly, UnitSpan enemy, const Thresholds& cfg);

struct MovementFlags {
  bool advancing = false;
  bool retreating = false;
  bool operator==(const MovementFlags&) const = default;
};

/// Angle between the group's center-of-mass velocity and the direction from
/// the group toward the other group (both taken at the previous step).
MovementFlags relative_movement_flags(UnitSpan group_now, UnitSpan group_prev, UnitSpan other_now,
                                      UnitSpan other_prev, const Thresholds& cfg);

/// True iff more than `between_fraction` of (friendly, enemy, barrier) triples
/// have the barrier within `alpha_btw` of the friendly-to-enemy bearing.
bool between_flag(UnitSpan barrier, UnitSpan friendly, UnitSpan enemy, const Thresholds& cfg);

/// Total group health strictly decreased since the previous step.
bool under_attack_flag(UnitSpan group_now, UnitSpan group_prev);

/// One observation per log step. Throws DataError if a schema feature is not
/// wired or the log contains an undeclared action label.
Trace extract_trace(const EpisodeLog& log, const FeatureConfig& config, const FeatureSchema& schema);

TraceSet extract_traces(std::span<const EpisodeLog> logs, const FeatureConfig& config,
                        unsigned threads = 1);

}  // namespace stratmine
