#include "stratmine/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "file_io.hpp"
#include "stratmine/error.hpp"
#include "stratmine/parallel.hpp"
#include "text_format.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine distance of vectors with different lengths");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const bool uz = uu == 0.0;
  const bool vz = vv == 0.0;
  if (uz && vz) return 0.0;
  if (uz || vz) return 1.0;
  return std::clamp(1.0 - dot / (std::sqrt(uu) * std::sqrt(vv)), 0.0, 2.0);
}

DistanceMatrix pairwise_cosine(const std::vector<std::vector<double>>& rows, unsigned threads) {
  const std::size_t n = rows.size();
  DistanceMatrix d(n);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, cosine_distance(rows[i], rows[j]));
  });
  return d;
}

std::vector<MergeStep> hac_complete(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) throw std::invalid_argument("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double x = dist(i, j);
      if (!(x >= 0.0) || x != dist(j, i))
        throw std::invalid_argument("distance matrix must be symmetric and non-negative");
    }
  }

  // Slot i holds the currently active cluster id[i]; linkage distances live in
  // a slot-indexed copy updated with the max rule.
  std::vector<double> link(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) link[i * n + j] = dist(i, j);
  std::vector<std::size_t> id(n);
  std::vector<std::size_t> size(n, 1);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);

  std::vector<MergeStep> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  while (active.size() > 1) {
    using Best = std::tuple<double, std::size_t, std::size_t>;
    Best best{std::numeric_limits<double>::infinity(), 0, 0};
    std::size_t bi = 0;
    std::size_t bj = 0;
    bool found = false;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const std::size_t a = active[x];
        const std::size_t b = active[y];
        Best cand{link[a * n + b], std::min(id[a], id[b]), std::max(id[a], id[b])};
        if (!found || cand < best) {
          best = cand;
          bi = a;
          bj = b;
          found = true;
        }
      }
    }
    MergeStep step;
    step.left = std::get<1>(best);
    step.right = std::get<2>(best);
    step.distance = std::get<0>(best);
    step.id = n + merges.size();
    step.size = size[bi] + size[bj];
    merges.push_back(step);

    for (std::size_t c : active) {
      if (c == bi || c == bj) continue;
      const double m = std::max(link[bi * n + c], link[bj * n + c]);
      link[bi * n + c] = m;
      link[c * n + bi] = m;
    }
    id[bi] = step.id;
    size[bi] = step.size;
    active.erase(std::find(active.begin(), active.end(), bj));
  }
  return merges;
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> s(k, 0);
  for (std::size_t l : labels) ++s[l];
  return s;
}

Partition cut_dendrogram(std::span<const MergeStep> merges, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw std::invalid_argument("cluster count out of range");
  if (merges.size() + 1 != n) throw std::invalid_argument("dendrogram does not match the point count");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t s = 0; s < n - k; ++s) {
    parent[merges[s].left] = merges[s].id;
    parent[merges[s].right] = merges[s].id;
  }
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  Partition p;
  p.k = k;
  p.labels.resize(n);
  std::map<std::size_t, std::size_t> relabel;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = relabel.try_emplace(root(i), relabel.size());
    p.labels[i] = it->second;
  }
  return p;
}

double calinski_harabasz(const std::vector<std::vector<double>>& points, const Partition& partition) {
  const std::size_t n = points.size();
  const std::size_t k = partition.k;
  if (partition.labels.size() != n) throw std::invalid_argument("partition does not match the point count");
  if (k < 2 || k + 1 > n) throw std::invalid_argument("Calinski-Harabasz needs 2 <= k <= n - 1");
  const std::size_t dim = n > 0 ? points[0].size() : 0;

  std::vector<double> grand(dim, 0.0);
  std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = partition.labels[i];
    if (c >= k) throw std::invalid_argument("cluster label out of range");
    ++count[c];
    for (std::size_t d = 0; d < dim; ++d) {
      grand[d] += points[i][d];
      centroid[c][d] += points[i][d];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) throw std::invalid_argument("empty cluster");
    for (double& x : centroid[c]) x /= static_cast<double>(count[c]);
  }
  for (double& x : grand) x /= static_cast<double>(n);

  double between = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += (centroid[c][d] - grand[d]) * (centroid[c][d] - grand[d]);
    between += static_cast<double>(count[c]) * s;
  }
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ctr = centroid[partition.labels[i]];
    for (std::size_t d = 0; d < dim; ++d) within += (points[i][d] - ctr[d]) * (points[i][d] - ctr[d]);
  }
  if (within == 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

ClusterSelection select_partition(const std::vector<std::vector<double>>& points, std::size_t kmin,
                                  std::size_t kmax, unsigned threads) {
  const std::size_t n = points.size();
  if (kmin < 2 || kmin > kmax || kmax + 1 > n)
    throw std::invalid_argument("cluster sweep needs 2 <= kmin <= kmax <= n - 1");
  ClusterSelection sel;
  sel.distances = pairwise_cosine(points, threads);
  sel.merges = hac_complete(sel.distances);
  double best = -1.0;
  for (std::size_t k = kmin; k <= kmax; ++k) {
    Partition p = cut_dendrogram(sel.merges, n, k);
    const double score = calinski_harabasz(points, p);
    sel.scores[k] = score;
    if (score > best) {
      best = score;
      sel.partition = std::move(p);
    }
  }
  return sel;
}

namespace {

json score_value(double s) { return std::isinf(s) ? json(nullptr) : json(s); }

}  // namespace

void write_clusters(std::ostream& out, const std::vector<std::string>& row_ids, const ClusterSelection& sel) {
  json doc;
  doc["k"] = sel.partition.k;
  json labels = json::object();
  for (std::size_t i = 0; i < row_ids.size(); ++i) labels[row_ids[i]] = sel.partition.labels.at(i);
  doc["labels"] = std::move(labels);
  json scores = json::object();
  for (const auto& [k, s] : sel.scores) scores[std::to_string(k)] = score_value(s);
  doc["ch_scores"] = std::move(scores);
  json merges = json::array();
  for (const MergeStep& m : sel.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"distance", m.distance}, {"id", m.id},
                      {"size", m.size}});
  }
  doc["merges"] = std::move(merges);
  out << doc.dump(1) << '\n';
}

void save_clusters(const std::filesystem::path& path, const std::vector<std::string>& row_ids,
                   const ClusterSelection& sel) {
  auto out = detail::open_for_write(path);
  write_clusters(out, row_ids, sel);
}

ClusterAssignment load_clusters(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  ClusterAssignment a;
  try {
    const json doc = json::parse(in);
    a.k = doc.at("k").get<std::size_t>();
    for (const auto& [id, label] : doc.at("labels").items()) {
      const auto c = label.get<std::size_t>();
      if (c >= a.k) throw DataError("trace '" + id + "' has cluster " + std::to_string(c) + " >= k");
      a.labels.emplace_back(id, c);
    }
    if (doc.contains("ch_scores")) {
      for (const auto& [k, s] : doc.at("ch_scores").items()) {
        a.scores[std::stoul(k)] = s.is_null() ? std::numeric_limits<double>::infinity() : s.get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return a;
}

void write_distances_csv(std::ostream& out, const std::vector<std::string>& row_ids, const Partition& partition,
                         const DistanceMatrix& dist) {
  std::vector<std::size_t> order(row_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return partition.labels[a] < partition.labels[b]; });
  auto name = [&](std::size_t i) {
    return detail::csv_field(std::to_string(partition.labels[i]) + ":" + row_ids[i]);
  };
  out << "trace";
  for (std::size_t j : order) out << ',' << name(j);
  out << '\n';
  for (std::size_t i : order) {
    out << name(i);
    for (std::size_t j : order) out << ',' << detail::shortest(dist(i, j));
    out << '\n';
  }
}

}  // namespace stratmine
