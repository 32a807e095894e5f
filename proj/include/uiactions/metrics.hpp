#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/types.hpp"

namespace uiactions {

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const { return end_s - start_s; }
};

/// Shot [start, end] frames -> [start / fps, (end + 1) / fps) seconds.
std::vector<TimeInterval> shot_intervals(const std::vector<Shot>& shots, double fps);

/// 2 |ours ∩ gt| / (|ours| + |gt|) with durations in seconds.
/// Both empty -> 1, exactly one empty -> 0.
double video_f1(const std::vector<TimeInterval>& ours, const std::vector<TimeInterval>& gt);

std::size_t edit_distance(std::span<const ActionType> a, std::span<const ActionType> b);

/// 100 * (1 - distance / max length), floored at 0; both empty -> 100.
double levenshtein_score(std::span<const ActionType> ours, std::span<const ActionType> gt);

/// Fraction of samples with any of the top-k predictions inside the ground-truth box.
/// Samples without predictions count as misses.
double precision_at_k(const std::vector<std::vector<TapPrediction>>& predictions,
                      const std::vector<BoundingBox>& gt_elements, int k);

struct EvalReport {
  double video_f1 = 0.0;
  double levenshtein_pct = 0.0;
  std::map<int, double> precision_at;  // k -> precision
  std::size_t location_samples = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Plain-text table with one row and a column per metric.
  std::string table() const;
};

}  // namespace uiactions
