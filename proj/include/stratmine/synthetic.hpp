#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stratmine/features.hpp"
#include "stratmine/trace_model.hpp"

namespace stratmine::synthetic {

inline constexpr int kBoardWidth = 12;
inline constexpr int kBoardHeight = 16;
inline constexpr double kBoardDiagonal = 20.0;
inline constexpr std::size_t kTimeLimit = 120;
/// Rows of the terrain band that a blocked lane closes to ground units.
inline constexpr int kBandLow = 8;
inline constexpr int kBandHigh = 9;
/// Air units count this many times their cost when comparing strength.
inline constexpr double kAirMultiplier = 3.0;

namespace unit {
inline constexpr std::string_view kMarine = "Marine";
inline constexpr std::string_view kBanshee = "Banshee";
inline constexpr std::string_view kCommandCenter = "CommandCenter";
inline constexpr std::string_view kTank = "Tank";
inline constexpr std::string_view kStarport = "Starport";
inline constexpr std::string_view kGuard = "Guard";
inline constexpr std::string_view kRock = "Rock";
}  // namespace unit

namespace action {
inline constexpr std::string_view kTargetGroundCc = "Target_Ground_CC";
inline constexpr std::string_view kTargetGroundStarport = "Target_Ground_Starport";
inline constexpr std::string_view kTargetAirCc = "Target_Air_CC";
inline constexpr std::string_view kMoveGround = "MoveGrid_Ground";
inline constexpr std::string_view kMoveAir = "MoveGrid_Air";
inline constexpr std::string_view kNoOpGround = "NoOp_Ground";
inline constexpr std::string_view kNoOpAir = "NoOp_Air";
}  // namespace action

enum class Policy { Expert, Random };
std::string_view to_string(Policy p);
Policy parse_policy(std::string_view s);

enum class TerminalCause { CcDestroyed, FriendlyDestroyed, Timeout };
std::string_view to_string(TerminalCause c);

/// Lanes are x in [0,4), [4,8), [8,12). The CC sits at the top, the squad
/// spawns at the bottom, the optional starport below the band in a side lane.
struct Scenario {
  std::uint64_t seed = 0;
  std::array<bool, 3> lane_blocked{};
  bool cc_defended = false;
  bool starport = false;
  int starport_lane = 0;  // 0 or 2
  int guards = 0;         // starport defenders, 1..4 when present
  int squad = 0;          // marines, 3..6
  int cc_x = 0;
  int squad_x = 0;

  bool operator==(const Scenario&) const = default;
};

struct EpisodeOutcome {
  TerminalCause cause = TerminalCause::Timeout;
  std::size_t steps = 0;
};

struct Episode {
  Scenario scenario;
  EpisodeLog log;
  EpisodeOutcome outcome;
};

Scenario generate_scenario(std::uint64_t seed);

/// Initial units of a scenario.
Snapshot initial_snapshot(const Scenario& s);

/// Prioritized expert rules evaluated on one snapshot:
///   1. mid lane clear and CC undefended      -> Target_Ground_CC
///   2. an air unit is available              -> Target_Air_CC
///   3. starport present, squad stronger       -> Target_Ground_Starport
///   4. some lane clear, stronger than CC guard -> Target_Ground_CC
///   5. otherwise                             -> NoOp_Ground
/// Blocked lanes are read from the rock units in the snapshot.
std::vector<std::string> expert_decision(const Snapshot& snapshot);

/// Simulates until the CC or the friendly force is destroyed or the time
/// limit is reached. The final snapshot carries no actions.
Episode run_episode(const Scenario& s, Policy policy, std::uint64_t seed);

/// Episode i uses seed mix_seed(seed + i) for both scenario and agent.
std::vector<Episode> generate_episodes(Policy policy, std::size_t n, std::uint64_t seed, unsigned threads = 1);

/// Groups and feature wiring matching this environment.
FeatureConfig default_feature_config();

/// seed,id,agent,lane_left,lane_mid,lane_right,cc_defended,starport,starport_lane,guards,squad,cause,steps
void write_manifest_csv(std::ostream& out, std::span<const Episode> episodes);

}  // namespace stratmine::synthetic
