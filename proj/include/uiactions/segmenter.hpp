#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uiactions/shots.hpp"
#include "uiactions/similarity.hpp"
#include "uiactions/types.hpp"

namespace uiactions {

enum class RecoveryShape { Instant, Gradual };

/// Shape of the similarity signal between two consecutive shots.
struct TransitionSignature {
  double drop_depth = 1.0;  // minimum similarity inside the gap
  double drop_width_s = 0.0;
  double rising_s = 0.0;  // duration of rising moving-average steps after the minimum
  RecoveryShape recovery_shape = RecoveryShape::Instant;
  std::vector<double> gap_values;
};

struct SegmenterConfig {
  SsimParams ssim;
  ShotDetectorConfig shots;
  double drop_threshold = 0.6;     // "drastically low" similarity
  double min_scroll_s = 0.3;       // rising recovery needed for SCROLL
  double same_threshold = 0.95;    // keyframe equality for palindromes
  NormPoint backward_location{0.5, 0.97};
  double min_template_score = 0.5;
  double template_width_fraction = 0.6;
  double template_height_fraction = 0.3;

  void validate() const;
};

/// Builds the signature of a gap (similarities strictly between two shots).
TransitionSignature make_signature(std::span<const double> gap_values, double fps,
                                   const SegmenterConfig& config = {});

/// SCROLL when the drop recovers gradually, TAP otherwise (including empty gaps).
ActionType classify_transition(const TransitionSignature& sig, const SegmenterConfig& config = {});
double transition_confidence(const TransitionSignature& sig, const SegmenterConfig& config = {});

/// Last-in-first-out record of visited UI keyframes.
class BackwardStack {
 public:
  void push(std::size_t shot_index, LumaPlane keyframe);
  void pop();
  void replace_top(std::size_t shot_index, LumaPlane keyframe);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Entry directly beneath the top, if any.
  const LumaPlane* below_top() const;
  std::size_t top_shot() const { return entries_.back().shot; }

 private:
  struct Entry {
    std::size_t shot;
    LumaPlane keyframe;
  };
  std::vector<Entry> entries_;
};

/// Relabels palindromic TAP transitions (U1 -> U2 -> U1) as BACKWARD.
/// A SCROLL replaces the stack top (same screen, new content state).
std::vector<ActionType> resolve_backward(const std::vector<Shot>& shots, const std::vector<ActionType>& labels,
                                         const FrameSeries& frames, double same_threshold,
                                         const SsimParams& ssim_params = {});

/// Content displacement ui1 -> ui2 by normalized cross-correlation of a central
/// ui2 strip against ui1 along each axis. Empty when the best peak is below min_score.
std::optional<ScrollOffset> scroll_offset(const RgbImage& ui1, const RgbImage& ui2, const SegmenterConfig& config = {});

struct Segmentation {
  SimilaritySeries series;
  std::vector<Shot> shots;
  std::vector<ActionScene> scenes;
};

/// Full scene-generation pipeline: similarity, shots, per-gap classification,
/// palindrome resolution, and scroll offsets.
Segmentation segment(const FrameSeries& video, const SegmenterConfig& config = {});

}  // namespace uiactions
