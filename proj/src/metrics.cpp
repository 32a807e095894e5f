#include "uiactions/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace uiactions {

std::vector<TimeInterval> shot_intervals(const std::vector<Shot>& shots, double fps) {
  if (!(fps > 0.0)) throw Error("fps must be positive");
  std::vector<TimeInterval> out;
  out.reserve(shots.size());
  for (const auto& s : shots)
    out.push_back({static_cast<double>(s.start_frame) / fps, static_cast<double>(s.end_frame + 1) / fps});
  return out;
}

double video_f1(const std::vector<TimeInterval>& ours, const std::vector<TimeInterval>& gt) {
  if (ours.empty() && gt.empty()) return 1.0;
  if (ours.empty() || gt.empty()) return 0.0;
  double total_ours = 0.0, total_gt = 0.0, overlap = 0.0;
  for (const auto& a : ours) total_ours += a.duration();
  for (const auto& b : gt) total_gt += b.duration();
  for (const auto& a : ours)
    for (const auto& b : gt) overlap += std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double denom = total_ours + total_gt;
  return denom > 0.0 ? 2.0 * overlap / denom : 0.0;
}

std::size_t edit_distance(std::span<const ActionType> a, std::span<const ActionType> b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double levenshtein_score(std::span<const ActionType> ours, std::span<const ActionType> gt) {
  const std::size_t longest = std::max(ours.size(), gt.size());
  if (longest == 0) return 100.0;
  const double d = static_cast<double>(edit_distance(ours, gt));
  return std::max(0.0, 100.0 * (1.0 - d / static_cast<double>(longest)));
}

double precision_at_k(const std::vector<std::vector<TapPrediction>>& predictions,
                      const std::vector<BoundingBox>& gt_elements, int k) {
  if (k < 1) throw Error("precision@k requires k >= 1");
  if (predictions.size() != gt_elements.size()) throw Error("precision@k needs one ground truth per sample");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& preds = predictions[i];
    const std::size_t n = std::min(preds.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < n; ++r) {
      if (gt_elements[i].contains(preds[r].x, preds[r].y)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : precision_at) p[std::to_string(k)] = v;
  return {{"schema_version", 1},
          {"kind", "eval_report"},
          {"video_f1", video_f1},
          {"levenshtein_pct", levenshtein_pct},
          {"precision_at", p},
          {"location_samples", location_samples}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.video_f1 = j.at("video_f1").get<double>();
  r.levenshtein_pct = j.at("levenshtein_pct").get<double>();
  for (const auto& [k, v] : j.at("precision_at").items()) r.precision_at[std::stoi(k)] = v.get<double>();
  r.location_samples = j.value("location_samples", std::size_t{0});
  return r;
}

std::string EvalReport::table() const {
  std::string header = "| Video F1-score | Levenshtein |";
  std::string rule = "|---|---|";
  char buf[64];
  std::snprintf(buf, sizeof buf, "| %.2f%% | %.2f%% |", 100.0 * video_f1, levenshtein_pct);
  std::string row = buf;
  for (const auto& [k, v] : precision_at) {
    header += " Prec@" + std::to_string(k) + " |";
    rule += "---|";
    std::snprintf(buf, sizeof buf, " %.2f%% |", 100.0 * v);
    row += buf;
  }
  return header + "\n" + rule + "\n" + row + "\n";
}

}  // namespace uiactions
