#include "stratmine/trace_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stratmine/error.hpp"
#include "file_io.hpp"
#include "stratmine/rng.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;
using detail::open_for_read;
using detail::open_for_write;

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

bool is_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

[[noreturn]] void fail_line(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw DataError(msg.str());
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "bool" || s == "boolean") return FeatureKind::Boolean;
  if (s == "categorical") return FeatureKind::Categorical;
  throw std::invalid_argument("unknown feature kind '" + s + "'");
}

FeatureRole parse_role(const std::string& s) {
  if (s == "condition") return FeatureRole::Condition;
  if (s == "action") return FeatureRole::Action;
  throw std::invalid_argument("unknown feature role '" + s + "'");
}

Force parse_force(const std::string& s) {
  if (s == "friendly") return Force::Friendly;
  if (s == "enemy") return Force::Enemy;
  throw std::invalid_argument("unknown force '" + s + "'");
}

json schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.entries()) {
    json entry;
    entry["name"] = f.name;
    entry["kind"] = f.kind == FeatureKind::Boolean ? "bool" : "categorical";
    if (f.kind == FeatureKind::Categorical) entry["labels"] = f.labels;
    entry["role"] = std::string(to_string(f.role));
    features.push_back(std::move(entry));
  }
  return features;
}

FeatureSchema schema_from_json(const json& features) {
  if (!features.is_array()) throw std::invalid_argument("\"features\" must be an array");
  std::vector<FeatureSpec> specs;
  for (const auto& entry : features) {
    FeatureSpec spec;
    spec.name = entry.at("name").get<std::string>();
    spec.kind = parse_kind(entry.at("kind").get<std::string>());
    spec.role = parse_role(entry.at("role").get<std::string>());
    if (spec.kind == FeatureKind::Categorical)
      spec.labels = entry.at("labels").get<std::vector<std::string>>();
    specs.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(specs));
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::Boolean ? "bool" : "categorical";
}

std::string_view to_string(FeatureRole role) {
  return role == FeatureRole::Condition ? "condition" : "action";
}

std::string_view to_string(Force force) { return force == Force::Friendly ? "friendly" : "enemy"; }

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> entries) : entries_(std::move(entries)) {
  std::set<std::string, std::less<>> names;
  for (const auto& f : entries_) {
    if (!is_identifier(f.name)) throw std::invalid_argument("invalid feature name '" + f.name + "'");
    if (!names.insert(f.name).second)
      throw std::invalid_argument("duplicate feature name '" + f.name + "'");
    offsets_.push_back(columns_.size());
    if (f.kind == FeatureKind::Boolean) {
      if (!f.labels.empty())
        throw std::invalid_argument("boolean feature '" + f.name + "' must not have labels");
      columns_.push_back(f.name);
      column_roles_.push_back(f.role);
      continue;
    }
    if (f.labels.size() < 2)
      throw std::invalid_argument("categorical feature '" + f.name + "' needs at least 2 labels");
    std::set<std::string> seen;
    for (const auto& label : f.labels) {
      if (!is_label(label))
        throw std::invalid_argument("invalid label '" + label + "' for feature '" + f.name + "'");
      if (!seen.insert(label).second)
        throw std::invalid_argument("duplicate label '" + label + "' for feature '" + f.name + "'");
      columns_.push_back(f.name + "=" + label);
      column_roles_.push_back(f.role);
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (!column_lookup_.emplace(columns_[c], c).second)
      throw std::invalid_argument("expanded column name collision '" + columns_[c] + "'");
  }
}

std::optional<std::size_t> FeatureSchema::column_index(std::string_view column_name) const {
  auto it = column_lookup_.find(column_name);
  if (it == column_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> FeatureSchema::columns_with_role(FeatureRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (column_roles_[c] == role) out.push_back(c);
  return out;
}

std::size_t FeatureSchema::block_width(std::size_t feature) const {
  const auto& f = entries_[feature];
  return f.kind == FeatureKind::Boolean ? 1 : f.labels.size();
}

const FeatureSpec* FeatureSchema::find(std::string_view name) const {
  for (const auto& f : entries_)
    if (f.name == name) return &f;
  return nullptr;
}

void TraceSet::validate() const {
  const std::size_t arity = schema.arity();
  for (const auto& trace : traces) {
    if (trace.steps.empty()) throw DataError("trace '" + trace.id + "' has no steps");
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      const auto& obs = trace.steps[t];
      if (obs.size() != arity)
        throw DataError("trace '" + trace.id + "' step " + std::to_string(t) + " has " +
                        std::to_string(obs.size()) + " values, schema arity is " +
                        std::to_string(arity));
      for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        if (schema.entries()[f].kind != FeatureKind::Categorical) continue;
        const auto begin = obs.begin() + static_cast<std::ptrdiff_t>(schema.block_offset(f));
        const auto hot = std::count_if(begin, begin + static_cast<std::ptrdiff_t>(schema.block_width(f)),
                                       [](std::uint8_t v) { return v != 0; });
        if (hot != 1)
          throw DataError("trace '" + trace.id + "' step " + std::to_string(t) + ": feature '" +
                          schema.entries()[f].name + "' is not exactly one-hot");
      }
    }
  }
}

void EpisodeLog::validate() const {
  if (snapshots.empty()) throw DataError("episode '" + id + "' has no steps");
  if (snapshots.size() != actions.size())
    throw DataError("episode '" + id + "' has " + std::to_string(snapshots.size()) +
                    " snapshots but " + std::to_string(actions.size()) + " action sets");
  for (std::size_t t = 0; t < snapshots.size(); ++t) {
    std::set<std::int64_t> uids;
    for (const auto& u : snapshots[t]) {
      if (!uids.insert(u.uid).second)
        throw DataError("episode '" + id + "' step " + std::to_string(t) + ": duplicate uid " +
                        std::to_string(u.uid));
      if (!(u.health >= 0.0) || !(u.cost >= 0.0))
        throw DataError("episode '" + id + "' step " + std::to_string(t) +
                        ": negative health or cost for uid " + std::to_string(u.uid));
    }
  }
}

Observation one_hot_encode(const RawObservation& raw, const FeatureSchema& schema) {
  Observation obs(schema.arity(), 0);
  for (std::size_t f = 0; f < schema.feature_count(); ++f) {
    const auto& spec = schema.entries()[f];
    auto it = raw.find(spec.name);
    if (it == raw.end()) throw std::invalid_argument("missing value for feature '" + spec.name + "'");
    const std::size_t offset = schema.block_offset(f);
    if (spec.kind == FeatureKind::Boolean) {
      const bool* b = std::get_if<bool>(&it->second);
      if (!b) throw std::invalid_argument("feature '" + spec.name + "' expects a boolean");
      obs[offset] = *b ? 1 : 0;
      continue;
    }
    const std::string* label = std::get_if<std::string>(&it->second);
    if (!label) throw std::invalid_argument("feature '" + spec.name + "' expects a label");
    auto pos = std::find(spec.labels.begin(), spec.labels.end(), *label);
    if (pos == spec.labels.end())
      throw std::invalid_argument("unknown label '" + *label + "' for feature '" + spec.name + "'");
    obs[offset + static_cast<std::size_t>(pos - spec.labels.begin())] = 1;
  }
  return obs;
}

TraceSet read_traces(std::istream& in, std::string_view source_name,
                     const std::optional<FeatureSchema>& expected_schema) {
  TraceSet out;
  bool have_schema = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const json record = json::parse(line);
      FeatureSchema schema = schema_from_json(record.at("features"));
      if (!have_schema) {
        if (expected_schema && !(schema == *expected_schema))
          fail_line(source_name, line_no, "feature header does not match the expected schema");
        out.schema = std::move(schema);
        have_schema = true;
      } else if (!(schema == out.schema)) {
        fail_line(source_name, line_no, "feature header differs from the first record");
      }
      Trace trace;
      trace.id = record.at("id").get<std::string>();
      trace.agent = record.at("agent").get<std::string>();
      const auto& steps = record.at("steps");
      if (!steps.is_array() || steps.empty()) fail_line(source_name, line_no, "trace has no steps");
      for (const auto& row : steps) {
        if (!row.is_array() || row.size() != out.schema.arity())
          fail_line(source_name, line_no,
                    "step row has " + std::to_string(row.is_array() ? row.size() : 0) +
                        " values for arity " + std::to_string(out.schema.arity()));
        Observation obs;
        obs.reserve(row.size());
        for (const auto& v : row) {
          const int bit = v.get<int>();
          if (bit != 0 && bit != 1) fail_line(source_name, line_no, "step values must be 0 or 1");
          obs.push_back(static_cast<std::uint8_t>(bit));
        }
        trace.steps.push_back(std::move(obs));
      }
      out.traces.push_back(std::move(trace));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      fail_line(source_name, line_no, e.what());
    }
  }
  if (out.traces.empty()) throw DataError(std::string(source_name) + ": no trace records");
  try {
    out.validate();
  } catch (const DataError& e) {
    throw DataError(std::string(source_name) + ": " + e.what());
  }
  return out;
}

TraceSet load_traces(const std::filesystem::path& path,
                     const std::optional<FeatureSchema>& expected_schema) {
  auto in = open_for_read(path);
  return read_traces(in, path.string(), expected_schema);
}

void write_traces(std::ostream& out, const TraceSet& traces) {
  const json features = schema_to_json(traces.schema);
  for (const auto& trace : traces.traces) {
    json record;
    record["id"] = trace.id;
    record["agent"] = trace.agent;
    record["features"] = features;
    json steps = json::array();
    for (const auto& obs : trace.steps) {
      json row = json::array();
      for (auto v : obs) row.push_back(static_cast<int>(v));
      steps.push_back(std::move(row));
    }
    record["steps"] = std::move(steps);
    out << record.dump() << '\n';
  }
}

void save_traces(const std::filesystem::path& path, const TraceSet& traces) {
  auto out = open_for_write(path);
  write_traces(out, traces);
}

std::vector<EpisodeLog> read_episodes(std::istream& in, std::string_view source_name) {
  std::vector<EpisodeLog> logs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const json record = json::parse(line);
      EpisodeLog log;
      log.id = record.at("id").get<std::string>();
      log.agent = record.at("agent").get<std::string>();
      log.seed = record.at("seed").get<std::uint64_t>();
      for (const auto& step : record.at("snapshots")) {
        Snapshot snap;
        for (const auto& u : step) {
          UnitSnapshot unit;
          unit.uid = u.at("uid").get<std::int64_t>();
          unit.type = u.at("type").get<std::string>();
          unit.force = parse_force(u.at("force").get<std::string>());
          unit.x = u.at("x").get<double>();
          unit.y = u.at("y").get<double>();
          unit.health = u.at("health").get<double>();
          unit.cost = u.at("cost").get<double>();
          snap.push_back(std::move(unit));
        }
        log.snapshots.push_back(std::move(snap));
      }
      for (const auto& step : record.at("actions"))
        log.actions.push_back(step.get<std::vector<std::string>>());
      log.validate();
      logs.push_back(std::move(log));
    } catch (const std::exception& e) {
      fail_line(source_name, line_no, e.what());
    }
  }
  if (logs.empty()) throw DataError(std::string(source_name) + ": no episode records");
  return logs;
}

std::vector<EpisodeLog> load_episodes(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_episodes(in, path.string());
}

void write_episodes(std::ostream& out, std::span<const EpisodeLog> logs) {
  for (const auto& log : logs) {
    json record;
    record["id"] = log.id;
    record["agent"] = log.agent;
    record["seed"] = log.seed;
    json snapshots = json::array();
    for (const auto& snap : log.snapshots) {
      json units = json::array();
      for (const auto& u : snap) {
        json unit;
        unit["uid"] = u.uid;
        unit["type"] = u.type;
        unit["force"] = std::string(to_string(u.force));
        unit["x"] = u.x;
        unit["y"] = u.y;
        unit["health"] = u.health;
        unit["cost"] = u.cost;
        units.push_back(std::move(unit));
      }
      snapshots.push_back(std::move(units));
    }
    record["snapshots"] = std::move(snapshots);
    record["actions"] = log.actions;
    out << record.dump() << '\n';
  }
}

void save_episodes(const std::filesystem::path& path, std::span<const EpisodeLog> logs) {
  auto out = open_for_write(path);
  write_episodes(out, logs);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double ratio,
                                                                            std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("split ratio must lie in (0, 1]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> eval(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(eval.begin(), eval.end());
  return {std::move(train), std::move(eval)};
}

std::pair<TraceSet, TraceSet> split_train_eval(const TraceSet& traces, double ratio,
                                               std::uint64_t seed) {
  auto [train_idx, eval_idx] = split_indices(traces.size(), ratio, seed);
  TraceSet train{traces.schema, {}};
  TraceSet eval{traces.schema, {}};
  for (auto i : train_idx) train.traces.push_back(traces.traces[i]);
  for (auto i : eval_idx) eval.traces.push_back(traces.traces[i]);
  return {std::move(train), std::move(eval)};
}

}  // namespace stratmine
