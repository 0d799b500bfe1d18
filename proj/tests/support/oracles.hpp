#pragma once
// Independent reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stratmine/clustering.hpp"
#include "stratmine/embedding.hpp"
#include "stratmine/rng.hpp"
#include "stratmine/smtl.hpp"
#include "stratmine/trace_model.hpp"

namespace oracle {

using namespace stratmine;

// Direct recursive transcription of the finite-trace semantics.
inline bool holds(const smtl::Formula& f, const Trace& tr, const FeatureSchema& schema, std::size_t t) {
  using smtl::Op;
  const std::size_t n = tr.length();
  if (t >= n) return false;
  auto rate_ok = [&](std::uint64_t count, std::uint64_t len) {
    if (len == 0) return true;
    const std::int64_t r = f.rate() ? f.rate()->millionths() : 1'000'000;
    return static_cast<std::int64_t>(count) * 1'000'000 >= r * static_cast<std::int64_t>(len);
  };
  const std::uint64_t big = std::numeric_limits<std::uint32_t>::max();
  const std::uint64_t lo = f.interval() ? f.interval()->lo : 0;
  const std::uint64_t hi = f.interval() ? f.interval()->hi : big;
  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: return tr.value(t, *schema.column_index(f.atom_name()));
    case Op::Not: return !holds(f.lhs(), tr, schema, t);
    case Op::And: return holds(f.lhs(), tr, schema, t) && holds(f.rhs(), tr, schema, t);
    case Op::Or: return holds(f.lhs(), tr, schema, t) || holds(f.rhs(), tr, schema, t);
    case Op::Implies: return !holds(f.lhs(), tr, schema, t) || holds(f.rhs(), tr, schema, t);
    case Op::Next: return t + 1 < n && holds(f.lhs(), tr, schema, t + 1);
    case Op::Future:
      for (std::uint64_t s = t + lo; s <= std::min<std::uint64_t>(t + hi, n - 1); ++s)
        if (holds(f.lhs(), tr, schema, s)) return true;
      return false;
    case Op::Globally: {
      std::uint64_t count = 0, len = 0;
      for (std::uint64_t s = t + lo; s <= std::min<std::uint64_t>(t + hi, n - 1); ++s) {
        ++len;
        count += holds(f.lhs(), tr, schema, s);
      }
      return rate_ok(count, len);
    }
    case Op::Until:
      for (std::uint64_t s = t + lo; s <= std::min<std::uint64_t>(t + hi, n - 1); ++s) {
        if (!holds(f.rhs(), tr, schema, s)) continue;
        std::uint64_t count = 0;
        for (std::uint64_t u = t; u < s; ++u) count += holds(f.lhs(), tr, schema, u);
        if (rate_ok(count, s - t)) return true;
      }
      return false;
  }
  return false;
}

inline FeatureSchema boolean_schema(std::size_t features, FeatureRole role = FeatureRole::Condition) {
  std::vector<FeatureSpec> specs;
  for (std::size_t i = 0; i < features; ++i)
    specs.push_back(FeatureSpec{"f" + std::to_string(i), FeatureKind::Boolean, role, {}});
  return FeatureSchema(std::move(specs));
}

inline Trace random_trace(Rng& rng, std::size_t length, std::size_t arity, double density = 0.5,
                          std::string id = "t") {
  Trace tr{std::move(id), "test", {}};
  for (std::size_t t = 0; t < length; ++t) {
    Observation o(arity);
    for (auto& b : o) b = rng.bernoulli(density) ? 1 : 0;
    tr.steps.push_back(std::move(o));
  }
  return tr;
}

inline std::optional<smtl::Interval> random_interval(Rng& rng) {
  if (rng.below(3) == 0) return std::nullopt;
  const auto lo = static_cast<std::uint32_t>(rng.below(5));
  return smtl::Interval{lo, lo + static_cast<std::uint32_t>(rng.below(8))};
}

inline std::optional<smtl::Rate> random_rate(Rng& rng) {
  static const char* kRates[] = {"0.25", "0.5", "0.6", "0.7", "0.75", "0.9", "1.0", "0.333333"};
  if (rng.below(3) == 0) return std::nullopt;
  return smtl::Rate::parse(kRates[rng.below(8)]);
}

inline smtl::Formula random_formula(Rng& rng, std::size_t features, int depth) {
  using smtl::Formula;
  if (depth == 0 || rng.below(5) == 0) {
    const auto k = rng.below(features + 2);
    if (k == features) return Formula::constant(true);
    if (k == features + 1) return Formula::constant(false);
    return Formula::atom("f" + std::to_string(k));
  }
  auto sub = [&] { return random_formula(rng, features, depth - 1); };
  switch (rng.below(9)) {
    case 0: return Formula::negation(sub());
    case 1: return Formula::conjunction(sub(), sub());
    case 2: return Formula::disjunction(sub(), sub());
    case 3: return Formula::implication(sub(), sub());
    case 4: return Formula::next(sub());
    case 5: return Formula::future(sub(), random_interval(rng));
    case 6: return Formula::globally(sub(), random_interval(rng), random_rate(rng));
    default: {
      auto a = sub();
      return Formula::until(a, sub(), random_interval(rng), random_rate(rng));
    }
  }
}

// Set-extended SGT by enumerating every ordered timestep pair.
inline std::vector<double> sgt_pairs(const Trace& tr, const std::vector<Symbol>& alphabet, double kappa) {
  const std::size_t k = alphabet.size();
  std::vector<double> out(k * k, 0.0);
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < k; ++v) {
      double sum = 0.0;
      std::size_t pairs = 0;
      for (std::size_t l = 0; l < tr.length(); ++l)
        for (std::size_t m = l + 1; m < tr.length(); ++m) {
          if (tr.value(l, alphabet[u].column) != alphabet[u].value) continue;
          if (tr.value(m, alphabet[v].column) != alphabet[v].value) continue;
          sum += std::exp(-kappa * static_cast<double>(m - l));
          ++pairs;
        }
      out[u * k + v] = pairs ? sum / static_cast<double>(pairs) : 0.0;
    }
  return out;
}

// Classic single-sequence SGT over symbol indices 0..k-1.
inline std::vector<double> sgt_sequence(const std::vector<std::size_t>& seq, std::size_t k, double kappa) {
  std::vector<double> num(k * k, 0.0), den(k * k, 0.0);
  for (std::size_t l = 0; l < seq.size(); ++l)
    for (std::size_t m = l + 1; m < seq.size(); ++m) {
      num[seq[l] * k + seq[m]] += std::exp(-kappa * static_cast<double>(m - l));
      den[seq[l] * k + seq[m]] += 1.0;
    }
  for (std::size_t i = 0; i < k * k; ++i) num[i] = den[i] > 0 ? num[i] / den[i] : 0.0;
  return num;
}

// Complete linkage recomputing cluster distances from scratch at every step.
inline std::vector<MergeStep> complete_linkage(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});
  std::vector<MergeStep> merges;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    std::pair<std::size_t, std::size_t> best_ids{SIZE_MAX, SIZE_MAX};
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        double link = 0.0;
        for (auto a : active[i].second)
          for (auto b : active[j].second) link = std::max(link, d(a, b));
        const std::pair<std::size_t, std::size_t> ids = std::minmax(active[i].first, active[j].first);
        if (link < best || (link == best && ids < best_ids)) {
          best = link;
          best_ids = ids;
          bi = i;
          bj = j;
        }
      }
    std::vector<std::size_t> members = active[bi].second;
    members.insert(members.end(), active[bj].second.begin(), active[bj].second.end());
    merges.push_back(MergeStep{best_ids.first, best_ids.second, best, n + s, members.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back({n + s, std::move(members)});
  }
  return merges;
}

inline DistanceMatrix random_distances(Rng& rng, std::size_t n, bool coarse = false) {
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.set(i, j, coarse ? static_cast<double>(rng.below(4)) / 4.0 : rng.uniform());
  return d;
}

// Gaussian blobs on the positive orthant, one direction per blob.
inline std::vector<std::vector<double>> planted_blobs(Rng& rng, std::size_t blobs, std::size_t per_blob,
                                                      std::size_t dim, double spread) {
  std::vector<std::vector<double>> pts;
  for (std::size_t b = 0; b < blobs; ++b)
    for (std::size_t i = 0; i < per_blob; ++i) {
      std::vector<double> p(dim, 0.0);
      for (std::size_t c = 0; c < dim; ++c) p[c] = spread * rng.uniform();
      p[b % dim] += 1.0;
      pts.push_back(std::move(p));
    }
  return pts;
}

}  // namespace oracle
