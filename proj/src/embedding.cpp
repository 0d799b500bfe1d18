#include "stratmine/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "file_io.hpp"
#include "stratmine/error.hpp"
#include "stratmine/parallel.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;

std::string Symbol::name(const FeatureSchema& schema) const {
  return schema.columns().at(column) + (value ? "=1" : "=0");
}

std::vector<Symbol> build_alphabet(const TraceSet& traces) {
  std::vector<Symbol> alphabet;
  for (std::size_t col : traces.schema.columns_with_role(FeatureRole::Action)) {
    bool seen[2] = {false, false};
    for (const Trace& tr : traces.traces) {
      for (const Observation& o : tr.steps) seen[o[col] != 0 ? 1 : 0] = true;
      if (seen[0] && seen[1]) break;
    }
    for (int v = 0; v < 2; ++v) {
      if (seen[v]) alphabet.push_back(Symbol{col, v == 1});
    }
  }
  return alphabet;
}

std::vector<double> feature_count_embedding(const Trace& trace, std::span<const std::size_t> columns,
                                            double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  std::vector<double> e(columns.size(), 0.0);
  double w = 1.0;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (trace.value(t, columns[i])) e[i] += w;
    }
    w *= gamma;
  }
  return e;
}

std::vector<double> sgt_embedding(const Trace& trace, std::span<const Symbol> alphabet, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  const std::size_t n = trace.length();
  const std::size_t k = alphabet.size();
  const double decay = std::exp(-kappa);
  auto present = [&](std::size_t t, const Symbol& s) { return trace.value(t, s.column) == s.value; };

  // For each v, weight[l] = sum_{m > l, v at m} decay^(m - l) and later[l] the
  // number of such m, filled right to left.
  std::vector<double> out(k * k, 0.0);
  if (n < 2) return out;
  std::vector<double> weight(n);
  std::vector<std::int64_t> later(n);
  for (std::size_t vi = 0; vi < k; ++vi) {
    const Symbol& v = alphabet[vi];
    weight[n - 1] = 0.0;
    later[n - 1] = 0;
    for (std::size_t l = n - 1; l-- > 0;) {
      const bool hit = present(l + 1, v);
      weight[l] = decay * ((hit ? 1.0 : 0.0) + weight[l + 1]);
      later[l] = later[l + 1] + (hit ? 1 : 0);
    }
    for (std::size_t ui = 0; ui < k; ++ui) {
      const Symbol& u = alphabet[ui];
      double num = 0.0;
      std::int64_t pairs = 0;
      for (std::size_t l = 0; l + 1 < n; ++l) {
        if (!present(l, u)) continue;
        num += weight[l];
        pairs += later[l];
      }
      out[ui * k + vi] = pairs > 0 ? num / static_cast<double>(pairs) : 0.0;
    }
  }
  return out;
}

std::vector<double> EmbeddingModel::raw_vector(const Trace& trace) const {
  std::vector<double> v = sgt_embedding(trace, alphabet, kappa);
  const auto fc = feature_count_embedding(trace, count_columns, gamma);
  v.insert(v.end(), fc.begin(), fc.end());
  return v;
}

namespace {

std::vector<std::vector<double>> raw_rows(const EmbeddingModel& model, const TraceSet& traces,
                                          unsigned threads) {
  std::vector<std::vector<double>> raw(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) { raw[i] = model.raw_vector(traces.traces[i]); });
  return raw;
}

EmbeddingMatrix assemble(const EmbeddingModel& model, const TraceSet& traces,
                         const std::vector<std::vector<double>>& raw, bool clamp) {
  EmbeddingMatrix m;
  m.model = model;
  m.scaling = model.scaling;
  for (std::size_t j : model.kept) m.columns.push_back(model.raw_columns[j]);
  m.rows.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    m.row_ids.push_back(traces.traces[i].id);
    std::vector<double> row(model.kept.size());
    for (std::size_t c = 0; c < model.kept.size(); ++c) {
      const ColumnScaling& s = model.scaling[c];
      double x = (raw[i][model.kept[c]] - s.min) / (s.max - s.min);
      if (clamp) x = std::clamp(x, 0.0, 1.0);
      row[c] = x;
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace

EmbeddingMatrix build_embedding_matrix(const TraceSet& traces, double gamma, double kappa, unsigned threads) {
  if (traces.size() < 2) throw std::invalid_argument("embedding needs at least two traces");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");

  EmbeddingModel model;
  model.schema = traces.schema;
  model.gamma = gamma;
  model.kappa = kappa;
  model.alphabet = build_alphabet(traces);
  model.count_columns = traces.schema.columns_with_role(FeatureRole::Condition);
  for (const Symbol& u : model.alphabet) {
    for (const Symbol& v : model.alphabet) {
      model.raw_columns.push_back("sgt:" + u.name(traces.schema) + "→" + v.name(traces.schema));
    }
  }
  for (std::size_t c : model.count_columns) model.raw_columns.push_back("fc:" + traces.schema.columns()[c]);

  const auto raw = raw_rows(model, traces, threads);
  std::vector<std::string> warnings;
  for (std::size_t j = 0; j < model.raw_columns.size(); ++j) {
    double lo = raw[0][j];
    double hi = raw[0][j];
    for (const auto& r : raw) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    if (lo == hi) continue;
    model.kept.push_back(j);
    model.scaling.push_back({lo, hi});
  }
  if (model.kept.empty()) warnings.push_back("every embedding column is constant; the matrix is empty");

  EmbeddingMatrix m = assemble(model, traces, raw, false);
  m.warnings = std::move(warnings);
  return m;
}

EmbeddingMatrix project(const EmbeddingModel& model, const TraceSet& traces, unsigned threads) {
  if (!(traces.schema == model.schema)) throw DataError("trace schema differs from the embedding schema");
  return assemble(model, traces, raw_rows(model, traces, threads), true);
}

void write_embedding(std::ostream& out, const EmbeddingMatrix& m) {
  json doc;
  doc["columns"] = m.columns;
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows.size(); ++i) rows.push_back({{"id", m.row_ids[i]}, {"values", m.rows[i]}});
  doc["rows"] = std::move(rows);
  json scaling = json::object();
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    scaling[m.columns[c]] = {{"min", m.scaling[c].min}, {"max", m.scaling[c].max}};
  }
  doc["scaling"] = std::move(scaling);
  out << doc.dump(1) << '\n';
}

void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  auto out = detail::open_for_write(path);
  write_embedding(out, m);
}

EmbeddingMatrix read_embedding(std::istream& in, std::string_view source_name) {
  const std::string source(source_name);
  EmbeddingMatrix m;
  try {
    const json doc = json::parse(in);
    m.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
      m.row_ids.push_back(r.at("id").get<std::string>());
      m.rows.push_back(r.at("values").get<std::vector<double>>());
      if (m.rows.back().size() != m.columns.size())
        throw DataError("row '" + m.row_ids.back() + "' has " + std::to_string(m.rows.back().size()) +
                        " values for " + std::to_string(m.columns.size()) + " columns");
    }
    const json& scaling = doc.at("scaling");
    for (const auto& c : m.columns) {
      const json& s = scaling.at(c);
      m.scaling.push_back({s.at("min").get<double>(), s.at("max").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
  return m;
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return read_embedding(in, path.string());
}

}  // namespace stratmine
