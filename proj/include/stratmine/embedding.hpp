#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stratmine/trace_model.hpp"

namespace stratmine {

/// A (column, truth value) pair of an action column.
struct Symbol {
  std::size_t column = 0;
  bool value = false;

  /// `column_name=0` or `column_name=1`.
  std::string name(const FeatureSchema& schema) const;
  auto operator<=>(const Symbol&) const = default;
};

/// Symbols of the action columns that occur in at least one trace, ordered by
/// column then value (0 before 1).
std::vector<Symbol> build_alphabet(const TraceSet& traces);

/// e_i = sum_t gamma^t f_i(t) for each listed column.
std::vector<double> feature_count_embedding(const Trace& trace, std::span<const std::size_t> columns,
                                            double gamma);

/// Set-extended sequence graph transform. Entry (u, v) at index
/// u * |alphabet| + v averages exp(-kappa * (m - l)) over all l < m with u
/// true at l and v true at m; 0 when no such pair exists.
std::vector<double> sgt_embedding(const Trace& trace, std::span<const Symbol> alphabet, double kappa);

struct ColumnScaling {
  double min = 0.0;
  double max = 1.0;
};

/// Everything needed to embed further traces into an existing column space.
struct EmbeddingModel {
  FeatureSchema schema;
  double gamma = 0.99;
  double kappa = 1.0;
  std::vector<Symbol> alphabet;
  std::vector<std::size_t> count_columns;
  std::vector<std::string> raw_columns;  // sgt block then fc block
  std::vector<std::size_t> kept;         // indices into raw_columns
  std::vector<ColumnScaling> scaling;    // parallel to kept

  /// Unscaled concatenated vector for one trace.
  std::vector<double> raw_vector(const Trace& trace) const;
};

struct EmbeddingMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<ColumnScaling> scaling;  // parallel to columns
  std::vector<std::string> warnings;
  EmbeddingModel model;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return columns.size(); }
};

/// Combined sgt + feature-count embedding, constant columns removed, every
/// remaining column min-max scaled to [0, 1]. Throws std::invalid_argument
/// with fewer than two traces or parameters out of range.
EmbeddingMatrix build_embedding_matrix(const TraceSet& traces, double gamma = 0.99, double kappa = 1.0,
                                       unsigned threads = 1);

/// Embeds `traces` with a fitted model; scaled values are clamped to [0, 1].
EmbeddingMatrix project(const EmbeddingModel& model, const TraceSet& traces, unsigned threads = 1);

void write_embedding(std::ostream& out, const EmbeddingMatrix& m);
void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& m);
/// Reads columns, rows and scaling. The fitted model is not persisted.
EmbeddingMatrix read_embedding(std::istream& in, std::string_view source_name);
EmbeddingMatrix load_embedding(const std::filesystem::path& path);

}  // namespace stratmine
