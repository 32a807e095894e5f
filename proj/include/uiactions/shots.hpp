#pragma once

#include <vector>

#include "uiactions/types.hpp"

namespace uiactions {

enum class KeyframePolicy { Last, Middle };

struct ShotDetectorConfig {
  double steady_threshold = 0.95;
  double steady_duration_s = 1.0;
  KeyframePolicy keyframe_policy = KeyframePolicy::Last;

  void validate() const;
};

/// Maximal runs of frames whose consecutive similarities all reach the steady
/// threshold and whose displayed duration (frames / fps) reaches the steady duration.
std::vector<Shot> detect_shots(const SimilaritySeries& series, const ShotDetectorConfig& config = {});

}  // namespace uiactions
