#include "uiactions/shots.hpp"

#include <cmath>

namespace uiactions {

void ShotDetectorConfig::validate() const {
  if (!(steady_threshold > 0.0 && steady_threshold < 1.0)) throw Error("steady threshold must lie in (0,1)");
  if (!(steady_duration_s > 0.0)) throw Error("steady duration must be positive");
}

std::vector<Shot> detect_shots(const SimilaritySeries& series, const ShotDetectorConfig& config) {
  config.validate();
  if (!(series.fps > 0.0)) throw Error("similarity series fps must be positive");
  std::vector<Shot> shots;
  const auto& v = series.values;
  // Frames per steady duration; the epsilon keeps exact multiples inclusive.
  const double min_frames = config.steady_duration_s * series.fps - 1e-9;

  auto close_run = [&](std::size_t first_pair, std::size_t last_pair) {
    const std::size_t start = first_pair, end = last_pair + 1;
    if (static_cast<double>(end - start + 1) < min_frames) return;
    Shot s{start, end, end};
    if (config.keyframe_policy == KeyframePolicy::Middle) s.keyframe = start + (end - start) / 2;
    shots.push_back(s);
  };

  std::size_t i = 0;
  while (i < v.size()) {
    if (v[i] < config.steady_threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] >= config.steady_threshold) ++j;
    close_run(i, j);
    i = j + 1;
  }
  return shots;
}

}  // namespace uiactions
