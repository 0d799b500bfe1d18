#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stratmine/embedding.hpp"

namespace stratmine {

/// 1 - cos(u, v), clamped to [0, 2]. Two zero vectors are at distance 0, a
/// zero and a non-zero vector at distance 1. Throws std::invalid_argument on a
/// length mismatch.
double cosine_distance(std::span<const double> u, std::span<const double> v);

/// Dense symmetric matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

DistanceMatrix pairwise_cosine(const std::vector<std::vector<double>>& rows, unsigned threads = 1);

/// One agglomeration. Leaves are 0..n-1; the cluster formed at step s gets id
/// n + s. `left` < `right` always.
struct MergeStep {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t id = 0;
  std::size_t size = 0;

  bool operator==(const MergeStep&) const = default;
};

/// Complete-linkage agglomerative clustering. At equal linkage distance the
/// lexicographically smallest (id, id) pair merges first. Throws
/// std::invalid_argument unless the matrix is symmetric, non-negative and has
/// a zero diagonal.
std::vector<MergeStep> hac_complete(const DistanceMatrix& dist);

struct Partition {
  std::size_t k = 0;
  std::vector<std::size_t> labels;  // in [0, k), numbered by first appearance

  std::vector<std::size_t> sizes() const;
};

/// State after n - k merges.
Partition cut_dendrogram(std::span<const MergeStep> merges, std::size_t n, std::size_t k);

/// (tr B / (k - 1)) / (tr W / (n - k)); +inf when tr W = 0 < tr B, 0 when both
/// vanish. Throws std::invalid_argument unless 2 <= k <= n - 1.
double calinski_harabasz(const std::vector<std::vector<double>>& points, const Partition& partition);

struct ClusterSelection {
  Partition partition;
  std::map<std::size_t, double> scores;  // k -> CH
  std::vector<MergeStep> merges;
  DistanceMatrix distances;
};

/// Sweeps k over [kmin, kmax] and keeps the highest score; ties go to the
/// smaller k. Throws std::invalid_argument unless 2 <= kmin <= kmax <= n - 1.
ClusterSelection select_partition(const std::vector<std::vector<double>>& points, std::size_t kmin,
                                  std::size_t kmax, unsigned threads = 1);

/// cluster JSON: {"k", "labels": {id: cluster}, "ch_scores": {"k": score}, "merges": [...]}
void write_clusters(std::ostream& out, const std::vector<std::string>& row_ids, const ClusterSelection& sel);
void save_clusters(const std::filesystem::path& path, const std::vector<std::string>& row_ids,
                   const ClusterSelection& sel);

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::pair<std::string, std::size_t>> labels;  // file order
  std::map<std::size_t, double> scores;
};
ClusterAssignment load_clusters(const std::filesystem::path& path);

/// Pairwise distances with rows and columns ordered by cluster, then input
/// order. Header row holds `label:id`.
void write_distances_csv(std::ostream& out, const std::vector<std::string>& row_ids, const Partition& partition,
                         const DistanceMatrix& dist);

}  // namespace stratmine
