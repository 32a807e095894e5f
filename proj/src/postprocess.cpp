#include "uiactions/postprocess.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <numeric>

#include "uiactions/tap_model.hpp"

namespace uiactions {

void ClusterConfig::validate() const {
  if (!(eps > 0.0)) throw Error("cluster eps must be positive");
  if (min_pts < 1) throw Error("cluster min_pts must be >= 1");
}

std::vector<int> dbscan(const std::vector<ScoredPoint>& pts, const ClusterConfig& cfg) {
  cfg.validate();
  const std::size_t n = pts.size();
  const double eps2 = cfg.eps * cfg.eps;
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      if (dx * dx + dy * dy <= eps2) neighbours[i].push_back(j);
    }
  const auto is_core = [&](std::size_t i) { return neighbours[i].size() >= static_cast<std::size_t>(cfg.min_pts); };

  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (!is_core(i)) {
      label[i] = -1;
      continue;
    }
    const int id = next_id++;
    label[i] = id;
    std::deque<std::size_t> frontier(neighbours[i].begin(), neighbours[i].end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (label[j] == -1) label[j] = id;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = id;
      if (is_core(j)) frontier.insert(frontier.end(), neighbours[j].begin(), neighbours[j].end());
    }
  }
  return label;
}

namespace {
// Higher confidence first; ties to lowest y, then lowest x.
bool more_confident(const ScoredPoint& a, const ScoredPoint& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}
}  // namespace

std::vector<TapPrediction> cluster_points(const std::vector<ScoredPoint>& pts, const ClusterConfig& cfg,
                                          double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) throw Error("cluster_points needs a positive pixel extent");
  const auto labels = dbscan(pts, cfg);
  const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::optional<ScoredPoint>> best(static_cast<std::size_t>(std::max(clusters, 0)));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& slot = best[static_cast<std::size_t>(labels[i])];
    if (!slot || more_confident(pts[i], *slot)) slot = pts[i];
  }
  std::vector<ScoredPoint> reps;
  for (const auto& b : best) reps.push_back(*b);
  std::sort(reps.begin(), reps.end(), more_confident);
  std::vector<TapPrediction> out;
  for (std::size_t r = 0; r < reps.size(); ++r)
    out.push_back({std::clamp(reps[r].x / width, 0.0, 1.0), std::clamp(reps[r].y / height, 0.0, 1.0),
                   std::clamp(reps[r].confidence, 0.0, 1.0), static_cast<int>(r) + 1});
  return out;
}

std::vector<TapPrediction> cluster_predictions(const ModelOutput& raw, const ClusterConfig& cfg) {
  if (raw.coords.size() != raw.probs.size()) throw Error("model output coords/probs length mismatch");
  std::vector<ScoredPoint> pts;
  pts.reserve(raw.coords.size());
  for (std::size_t i = 0; i < raw.coords.size(); ++i)
    pts.push_back({raw.coords[i].x * raw.pixel_width, raw.coords[i].y * raw.pixel_height, raw.probs[i]});
  if (pts.empty()) return {};
  return cluster_points(pts, cfg, raw.pixel_width, raw.pixel_height);
}

}  // namespace uiactions
