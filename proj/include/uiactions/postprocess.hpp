#pragma once

#include <vector>

#include "uiactions/types.hpp"

namespace uiactions {

struct ModelOutput;

struct ClusterConfig {
  double eps = 40.0;  // pixels at the model's input resolution
  int min_pts = 1;

  void validate() const;
};

struct ScoredPoint {
  double x = 0.0;  // pixels
  double y = 0.0;
  double confidence = 0.0;
};

/// DBSCAN labels; -1 marks noise (impossible when min_pts == 1).
/// Cluster ids are numbered in order of each cluster's lowest core-point index.
std::vector<int> dbscan(const std::vector<ScoredPoint>& points, const ClusterConfig& cfg);

/// One representative (the most confident point, ties to lowest y then x) per cluster,
/// ranked by confidence. `width`/`height` map pixel coordinates back to [0,1].
std::vector<TapPrediction> cluster_points(const std::vector<ScoredPoint>& points, const ClusterConfig& cfg,
                                          double width, double height);

/// Clusters raw model coordinates in model-input pixels.
std::vector<TapPrediction> cluster_predictions(const ModelOutput& raw, const ClusterConfig& cfg = {});

}  // namespace uiactions
