#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "support.hpp"
#include "uiactions/postprocess.hpp"
#include "uiactions/tap_model.hpp"

using namespace uiactions;

namespace {

std::vector<ScoredPoint> random_points(nn::Rng& rng, int n) {
  std::vector<ScoredPoint> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = {rng.uniform(0, 144), rng.uniform(0, 256), rng.uniform()};
  return pts;
}

// Canonical partition: each point mapped to the smallest index in its cluster, noise to -1.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::vector<int> first(labels.size(), -1), out(labels.size(), -1);
  std::map<int, int> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = seen.emplace(labels[i], static_cast<int>(i));
    out[i] = it->second;
  }
  return out;
}

}  // namespace

TEST_CASE("dbscan core-point partition equals connected components of the core graph") {
  nn::Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, rng.integer(1, 40));
    const ClusterConfig cfg{rng.uniform(10, 60), rng.integer(1, 4)};
    const auto labels = dbscan(pts, cfg);
    const std::size_t n = pts.size();
    auto near = [&](std::size_t i, std::size_t j) {
      return std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) <= cfg.eps;
    };
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) {
      int c = 0;
      for (std::size_t j = 0; j < n; ++j) c += near(i, j);
      core[i] = c >= cfg.min_pts;
    }
    // Union-find over core points.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (core[i] && core[j] && near(i, j)) parent[find(i)] = find(j);
    for (std::size_t i = 0; i < n; ++i) {
      bool reachable = core[i];
      for (std::size_t j = 0; j < n && !reachable; ++j) reachable = core[j] && near(i, j);
      CHECK((labels[i] >= 0) == reachable);
      if (!core[i]) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (core[j]) CHECK((labels[i] == labels[j]) == (find(i) == find(j)));
    }
    // Cluster ids follow the order of each cluster's lowest core point.
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!core[i]) continue;
      if (labels[i] == next) ++next;
      else CHECK(labels[i] < next);
    }
  }
}

TEST_CASE("cluster representatives are per-cluster maxima ranked by confidence") {
  const std::vector<ScoredPoint> pts{{10, 10, 0.2}, {12, 11, 0.9}, {100, 200, 0.5}, {101, 201, 0.4}, {60, 60, 0.95}};
  const auto preds = cluster_points(pts, {5.0, 1}, 144, 256);
  REQUIRE(preds.size() == 3);
  CHECK(preds[0].x == doctest::Approx(60.0 / 144));
  CHECK(preds[0].confidence == doctest::Approx(0.95));
  CHECK(preds[1].x == doctest::Approx(12.0 / 144));
  CHECK(preds[2].y == doctest::Approx(200.0 / 256));
  for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds[i].rank == static_cast<int>(i) + 1);
  CHECK_NOTHROW(validate_predictions(preds));
}

TEST_CASE("clustering is invariant under input permutation") {
  nn::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = random_points(rng, rng.integer(1, 64));
    const auto a = cluster_points(pts, {}, 144, 256);
    const auto before = canonical(dbscan(pts, {}));
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<ScoredPoint> shuffled;
    for (auto i : perm) shuffled.push_back(pts[i]);
    CHECK(cluster_points(shuffled, {}, 144, 256) == a);
    // Same partition once mapped back to the original order.
    const auto after = dbscan(shuffled, {});
    std::vector<int> back(pts.size());
    for (std::size_t k = 0; k < perm.size(); ++k) back[perm[k]] = after[k];
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j) CHECK((before[i] == before[j]) == (back[i] == back[j]));
  }
}

TEST_CASE("cluster configuration is validated") {
  CHECK_THROWS_AS(dbscan({}, {0.0, 1}), Error);
  CHECK_THROWS_AS(dbscan({}, {1.0, 0}), Error);
  CHECK(dbscan({}, {}).empty());
  CHECK_THROWS_AS(cluster_points({{1, 1, 1}}, {}, 0, 10), Error);
}

TEST_CASE("cluster_predictions scales model coordinates to pixels") {
  ModelOutput raw;
  raw.pixel_width = 100;
  raw.pixel_height = 200;
  raw.coords = {{0.5, 0.5}, {0.51, 0.5}, {0.1, 0.1}};
  raw.probs = {0.7, 0.8, 0.6};
  const auto preds = cluster_predictions(raw, {5.0, 1});
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].x == doctest::Approx(0.51));
  CHECK(preds[1].y == doctest::Approx(0.1));
  raw.probs.pop_back();
  CHECK_THROWS_AS(cluster_predictions(raw), Error);
}
