#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace stratmine {

enum class FeatureKind { Boolean, Categorical };
enum class FeatureRole { Condition, Action };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(FeatureRole role);

/// One raw feature. Categorical features carry an ordered label list and are
/// one-hot expanded into `labels.size()` boolean columns named `name=label`.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Boolean;
  FeatureRole role = FeatureRole::Condition;
  std::vector<std::string> labels;

  bool operator==(const FeatureSpec&) const = default;
};

/// Ordered feature list plus the derived one-hot column layout.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Throws std::invalid_argument on duplicate names, bad identifiers or a
  /// categorical feature with fewer than two (or duplicate) labels.
  explicit FeatureSchema(std::vector<FeatureSpec> entries);

  const std::vector<FeatureSpec>& entries() const { return entries_; }
  std::size_t feature_count() const { return entries_.size(); }

  /// Number of boolean columns after one-hot expansion.
  std::size_t arity() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  FeatureRole column_role(std::size_t column) const { return column_roles_[column]; }
  std::optional<std::size_t> column_index(std::string_view column_name) const;
  std::vector<std::size_t> columns_with_role(FeatureRole role) const;

  /// First column of feature `feature`'s block.
  std::size_t block_offset(std::size_t feature) const { return offsets_[feature]; }
  std::size_t block_width(std::size_t feature) const;
  const FeatureSpec* find(std::string_view name) const;

  bool operator==(const FeatureSchema& other) const { return entries_ == other.entries_; }

 private:
  std::vector<FeatureSpec> entries_;
  std::vector<std::size_t> offsets_;
  std::vector<std::string> columns_;
  std::vector<FeatureRole> column_roles_;
  std::map<std::string, std::size_t, std::less<>> column_lookup_;
};

/// One boolean per expanded schema column, stored as 0/1 bytes.
using Observation = std::vector<std::uint8_t>;

struct Trace {
  std::string id;
  std::string agent;
  std::vector<Observation> steps;

  std::size_t length() const { return steps.size(); }
  bool value(std::size_t t, std::size_t column) const { return steps[t][column] != 0; }
  bool operator==(const Trace&) const = default;
};

struct TraceSet {
  FeatureSchema schema;
  std::vector<Trace> traces;

  std::size_t size() const { return traces.size(); }
  bool empty() const { return traces.empty(); }
  /// Throws DataError if a trace is empty, has the wrong arity, or breaks the
  /// exactly-one-hot rule on a categorical block.
  void validate() const;
};

enum class Force { Friendly, Enemy };
std::string_view to_string(Force force);

struct UnitSnapshot {
  std::int64_t uid = 0;
  std::string type;
  Force force = Force::Friendly;
  double x = 0.0;
  double y = 0.0;
  double health = 0.0;
  double cost = 0.0;

  bool operator==(const UnitSnapshot&) const = default;
};

using Snapshot = std::vector<UnitSnapshot>;

/// Raw per-step unit snapshots plus the action labels executed at each step.
struct EpisodeLog {
  std::string id;
  std::string agent;
  std::uint64_t seed = 0;
  std::vector<Snapshot> snapshots;
  std::vector<std::vector<std::string>> actions;

  std::size_t length() const { return snapshots.size(); }
  /// Throws DataError on length mismatch, empty log, duplicate uids in a step
  /// or negative health/cost.
  void validate() const;
  bool operator==(const EpisodeLog&) const = default;
};

using RawValue = std::variant<bool, std::string>;
using RawObservation = std::map<std::string, RawValue, std::less<>>;

/// Expands raw per-feature values into the schema's boolean columns.
/// Throws std::invalid_argument on a missing feature, an unknown label, or a
/// value of the wrong kind.
Observation one_hot_encode(const RawObservation& raw, const FeatureSchema& schema);

// Feature-trace JSONL. Every line carries the full feature header; all lines
// must agree on it.
TraceSet read_traces(std::istream& in, std::string_view source_name,
                     const std::optional<FeatureSchema>& expected_schema = std::nullopt);
TraceSet load_traces(const std::filesystem::path& path,
                     const std::optional<FeatureSchema>& expected_schema = std::nullopt);
void write_traces(std::ostream& out, const TraceSet& traces);
void save_traces(const std::filesystem::path& path, const TraceSet& traces);

// Episode-log JSONL.
std::vector<EpisodeLog> read_episodes(std::istream& in, std::string_view source_name);
std::vector<EpisodeLog> load_episodes(const std::filesystem::path& path);
void write_episodes(std::ostream& out, std::span<const EpisodeLog> logs);
void save_episodes(const std::filesystem::path& path, std::span<const EpisodeLog> logs);

/// Seeded random partition; |train| = round(ratio * n). Both halves keep the
/// input order. Throws std::invalid_argument unless 0 < ratio <= 1.
std::pair<TraceSet, TraceSet> split_train_eval(const TraceSet& traces, double ratio,
                                               std::uint64_t seed);

/// Index form of split_train_eval, shared with callers that split parallel data.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double ratio,
                                                                            std::uint64_t seed);

}  // namespace stratmine
