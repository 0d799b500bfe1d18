#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "stratmine/clustering.hpp"

using namespace stratmine;

TEST_CASE("cosine distance") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1}, z{0, 0};
  CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
  CHECK(cosine_distance(a, b) == 1.0);
  CHECK(cosine_distance(a, c) == doctest::Approx(1 - 1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine_distance(z, z) == 0.0);
  CHECK(cosine_distance(a, z) == 1.0);
  CHECK(cosine_distance(std::vector<double>{1, 2}, std::vector<double>{-1, -2}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cosine_distance(a, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("hac small examples") {
  DistanceMatrix two(2);
  two.set(0, 1, 0.3);
  const auto m2 = hac_complete(two);
  REQUIRE(m2.size() == 1);
  CHECK(m2[0] == MergeStep{0, 1, 0.3, 2, 2});

  DistanceMatrix four(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) four.set(i, j, 1.0);
  four.set(0, 1, 0.1);
  four.set(2, 3, 0.1);
  const auto m4 = hac_complete(four);
  REQUIRE(m4.size() == 3);
  CHECK(m4[0] == MergeStep{0, 1, 0.1, 4, 2});
  CHECK(m4[1] == MergeStep{2, 3, 0.1, 5, 2});
  CHECK(m4[2] == MergeStep{4, 5, 1.0, 6, 4});

  DistanceMatrix flat(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) flat.set(i, j, 0.5);
  const auto mf = hac_complete(flat);
  CHECK(mf[0] == MergeStep{0, 1, 0.5, 4, 2});
  CHECK(mf[1] == MergeStep{2, 3, 0.5, 5, 2});
  CHECK(mf[2] == MergeStep{4, 5, 0.5, 6, 4});
}

TEST_CASE("hac rejects invalid matrices") {
  DistanceMatrix bad(3);
  bad.set(0, 1, -0.5);
  CHECK_THROWS_AS(hac_complete(bad), std::invalid_argument);
}

TEST_CASE("hac matches the brute-force reference") {
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng.below(7);
    const auto d = oracle::random_distances(rng, n, i % 2 == 0);
    const auto got = hac_complete(d);
    CHECK(got == oracle::complete_linkage(d));
    for (std::size_t s = 1; s < got.size(); ++s) CHECK(got[s].distance >= got[s - 1].distance);
  }
}

TEST_CASE("dendrogram cuts") {
  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 3 + rng.below(10);
    const auto merges = hac_complete(oracle::random_distances(rng, n));
    for (std::size_t k = 1; k <= n; ++k) {
      const Partition p = cut_dendrogram(merges, n, k);
      CHECK(p.k == k);
      const auto sizes = p.sizes();
      CHECK(std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
      CHECK(p.labels.front() == 0);
    }
    // two clusters are the two sides of the last merge
    const Partition two = cut_dendrogram(merges, n, 2);
    CHECK(two.sizes()[0] + two.sizes()[1] == n);
    const auto& last = merges.back();
    auto size_of = [&](std::size_t id) { return id < n ? std::size_t{1} : merges[id - n].size; };
    std::vector<std::size_t> want{size_of(last.left), size_of(last.right)};
    std::vector<std::size_t> have = two.sizes();
    std::sort(want.begin(), want.end());
    std::sort(have.begin(), have.end());
    CHECK(have == want);
  }
}

TEST_CASE("calinski-harabasz") {
  const std::vector<std::vector<double>> pts{{0.0}, {0.1}, {10.0}, {10.1}};
  CHECK(calinski_harabasz(pts, Partition{2, {0, 0, 1, 1}}) == doctest::Approx(20000.0).epsilon(1e-12));
  const std::vector<std::vector<double>> same(4, {1.0, 2.0});
  CHECK(calinski_harabasz(same, Partition{2, {0, 0, 1, 1}}) == 0.0);
  const std::vector<std::vector<double>> exact{{0.0}, {0.0}, {1.0}, {1.0}};
  CHECK(calinski_harabasz(exact, Partition{2, {0, 0, 1, 1}}) == std::numeric_limits<double>::infinity());
  CHECK_THROWS(calinski_harabasz(pts, Partition{1, {0, 0, 0, 0}}));
  CHECK_THROWS(calinski_harabasz(pts, Partition{4, {0, 1, 2, 3}}));

  // two tight blobs of three: the true split beats every other 2-partition
  const std::vector<std::vector<double>> six{{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}, {5.1, 5}, {5, 5.1}};
  const double truth = calinski_harabasz(six, Partition{2, {0, 0, 0, 1, 1, 1}});
  for (unsigned mask = 1; mask < 63; ++mask) {
    if (mask == 0b111000 || mask == 0b000111) continue;
    std::vector<std::size_t> labels(6);
    for (int b = 0; b < 6; ++b) labels[b] = (mask >> b) & 1U;
    std::vector<std::size_t> relabel(6);
    const std::size_t first = labels[0];
    for (int b = 0; b < 6; ++b) relabel[b] = labels[b] == first ? 0 : 1;
    CHECK(calinski_harabasz(six, Partition{2, relabel}) < truth);
  }
}

TEST_CASE("select_partition recovers planted blobs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    for (std::size_t k : {2, 4}) {
      const auto pts = oracle::planted_blobs(rng, k, 10, 6, 0.1);
      const auto sel = select_partition(pts, 2, 10);
      CHECK(sel.partition.k == k);
      CHECK(sel.scores.size() == 9);
    }
  }
  Rng rng(3);
  const auto pts = oracle::planted_blobs(rng, 3, 5, 4, 0.1);
  CHECK_THROWS(select_partition(pts, 5, 4));
  CHECK_THROWS(select_partition(pts, 2, pts.size()));
}

TEST_CASE("select_partition is invariant to row order up to relabelling") {
  Rng rng(77);
  const auto pts = oracle::planted_blobs(rng, 3, 8, 5, 0.3);
  const auto base = select_partition(pts, 2, 10);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::vector<double>> shuffled;
  for (auto i : perm) shuffled.push_back(pts[i]);
  const auto other = select_partition(shuffled, 2, 10);
  CHECK(other.partition.k == base.partition.k);
  std::map<std::size_t, std::size_t> mapping;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    auto [it, fresh] = mapping.emplace(base.partition.labels[perm[i]], other.partition.labels[i]);
    CHECK(it->second == other.partition.labels[i]);
  }
}

TEST_CASE("cluster JSON round trip keeps infinite scores") {
  const std::vector<std::vector<double>> pts{{1, 0}, {1, 0}, {0, 1}, {0, 1}, {1, 1}};
  const auto sel = select_partition(pts, 2, 4);
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  std::stringstream buf;
  write_clusters(buf, ids, sel);
  CHECK(buf.str().find("\"k\"") != std::string::npos);
  CHECK(sel.scores.at(3) == std::numeric_limits<double>::infinity());
  CHECK(sel.partition.k == 3);
}

TEST_CASE("pairwise distances do not depend on threads") {
  Rng rng(5);
  const auto pts = oracle::planted_blobs(rng, 3, 20, 8, 0.5);
  const auto a = pairwise_cosine(pts, 1), b = pairwise_cosine(pts, 4);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) CHECK(a(i, j) == b(i, j));
}
