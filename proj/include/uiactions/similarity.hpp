#pragma once

#include "uiactions/image.hpp"
#include "uiactions/types.hpp"

namespace uiactions {

struct SsimParams {
  int window = 11;
  double gaussian_sigma = 1.5;
  double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double dynamic_range = 255.0;
  // Frames wider than this are downscaled before comparison; 0 disables.
  int max_width = 0;

  void validate() const;
};

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B, no rounding.
LumaPlane rgb_to_luma(const RgbImage& image);

/// Mean of the Gaussian-windowed SSIM map over all fully contained windows, clamped to [0,1].
double ssim(const LumaPlane& a, const LumaPlane& b, const SsimParams& params = {});

/// Similarity of every consecutive frame pair, computed on luma.
SimilaritySeries similarity_series(const FrameSeries& video, const SsimParams& params = {});

/// Luma prepared for repeated SSIM comparisons (downscaled per params.max_width).
LumaPlane comparison_luma(const RgbImage& image, const SsimParams& params);

}  // namespace uiactions
