#include "uiactions/segmenter.hpp"

#include <algorithm>
#include <cmath>

namespace uiactions {

void SegmenterConfig::validate() const {
  ssim.validate();
  shots.validate();
  if (!(drop_threshold > 0.0 && drop_threshold < 1.0)) throw Error("drop threshold must lie in (0,1)");
  if (!(min_scroll_s > 0.0)) throw Error("min_scroll_s must be positive");
  if (!(same_threshold > 0.0 && same_threshold <= 1.0)) throw Error("same threshold must lie in (0,1]");
  if (!(template_width_fraction > 0.0 && template_width_fraction <= 1.0) ||
      !(template_height_fraction > 0.0 && template_height_fraction <= 1.0))
    throw Error("template fractions must lie in (0,1]");
}

TransitionSignature make_signature(std::span<const double> gap, double fps, const SegmenterConfig& config) {
  if (!(fps > 0.0)) throw Error("fps must be positive");
  TransitionSignature sig;
  sig.gap_values.assign(gap.begin(), gap.end());
  sig.drop_width_s = static_cast<double>(gap.size()) / fps;
  if (gap.empty()) return sig;

  const auto min_it = std::min_element(gap.begin(), gap.end());
  sig.drop_depth = std::clamp(*min_it, 0.0, 1.0);
  const std::size_t argmin = static_cast<std::size_t>(min_it - gap.begin());

  // Trailing 3-frame moving average; partial windows at the start.
  std::vector<double> avg(gap.size());
  for (std::size_t i = 0; i < gap.size(); ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    double s = 0.0;
    for (std::size_t k = lo; k <= i; ++k) s += gap[k];
    avg[i] = s / static_cast<double>(i - lo + 1);
  }
  std::size_t rising = 0;
  for (std::size_t i = argmin + 1; i < gap.size(); ++i)
    if (avg[i] > avg[i - 1] + 1e-12) ++rising;
  sig.rising_s = static_cast<double>(rising) / fps;
  sig.recovery_shape =
      sig.rising_s + 1e-9 >= config.min_scroll_s ? RecoveryShape::Gradual : RecoveryShape::Instant;
  return sig;
}

ActionType classify_transition(const TransitionSignature& sig, const SegmenterConfig&) {
  if (sig.gap_values.empty()) return ActionType::Tap;
  return sig.recovery_shape == RecoveryShape::Gradual ? ActionType::Scroll : ActionType::Tap;
}

double transition_confidence(const TransitionSignature& sig, const SegmenterConfig& config) {
  if (sig.gap_values.empty()) return 0.5;
  if (classify_transition(sig, config) == ActionType::Scroll)
    return std::clamp(sig.rising_s / (2.0 * config.min_scroll_s), 0.5, 1.0);
  // A TAP whose drop is not drastically low is less certain.
  const double depth_score = std::clamp(1.0 - sig.drop_depth, 0.0, 1.0);
  return sig.drop_depth < config.drop_threshold ? std::max(depth_score, 0.5) : 0.5 * depth_score + 0.25;
}

void BackwardStack::push(std::size_t shot, LumaPlane keyframe) { entries_.push_back({shot, std::move(keyframe)}); }

void BackwardStack::pop() {
  if (entries_.empty()) throw Error("pop on empty backward stack");
  entries_.pop_back();
}

void BackwardStack::replace_top(std::size_t shot, LumaPlane keyframe) {
  if (entries_.empty()) {
    push(shot, std::move(keyframe));
    return;
  }
  entries_.back() = {shot, std::move(keyframe)};
}

const LumaPlane* BackwardStack::below_top() const {
  return entries_.size() >= 2 ? &entries_[entries_.size() - 2].keyframe : nullptr;
}

std::vector<ActionType> resolve_backward(const std::vector<Shot>& shots, const std::vector<ActionType>& labels,
                                         const FrameSeries& frames, double same_threshold,
                                         const SsimParams& ssim_params) {
  if (shots.empty() ? !labels.empty() : labels.size() != shots.size() - 1)
    throw Error("resolve_backward needs exactly one label per consecutive shot pair");
  std::vector<ActionType> out = labels;
  if (shots.empty()) return out;
  auto key_luma = [&](const Shot& s) {
    if (s.keyframe >= frames.size()) throw Error("shot keyframe beyond the video");
    return comparison_luma(frames[s.keyframe].pixels, ssim_params);
  };
  BackwardStack stack;
  stack.push(0, key_luma(shots[0]));
  for (std::size_t i = 1; i < shots.size(); ++i) {
    LumaPlane current = key_luma(shots[i]);
    if (labels[i - 1] == ActionType::Scroll) {
      stack.replace_top(i, std::move(current));
      continue;
    }
    const LumaPlane* previous = stack.below_top();
    if (previous && ssim(*previous, current, ssim_params) >= same_threshold) {
      out[i - 1] = ActionType::Backward;
      stack.pop();
    } else {
      stack.push(i, std::move(current));
    }
  }
  return out;
}

namespace {

// Zero-mean normalized cross-correlation of `tmpl` against `img` at (x, y).
double ncc_at(const LumaPlane& img, const LumaPlane& tmpl, double tmpl_mean, double tmpl_norm, int x, int y) {
  double sum = 0.0;
  for (int ty = 0; ty < tmpl.height; ++ty) {
    const double* row = &img.values[static_cast<std::size_t>(y + ty) * img.width + x];
    for (int tx = 0; tx < tmpl.width; ++tx) sum += row[tx];
  }
  const double mean = sum / static_cast<double>(tmpl.values.size());
  double cross = 0.0, energy = 0.0;
  for (int ty = 0; ty < tmpl.height; ++ty) {
    const double* row = &img.values[static_cast<std::size_t>(y + ty) * img.width + x];
    const double* trow = &tmpl.values[static_cast<std::size_t>(ty) * tmpl.width];
    for (int tx = 0; tx < tmpl.width; ++tx) {
      const double d = row[tx] - mean;
      cross += d * (trow[tx] - tmpl_mean);
      energy += d * d;
    }
  }
  if (energy <= 1e-9 || tmpl_norm <= 1e-9) return 0.0;
  return cross / std::sqrt(energy * tmpl_norm);
}

}  // namespace

std::optional<ScrollOffset> scroll_offset(const RgbImage& ui1, const RgbImage& ui2, const SegmenterConfig& config) {
  if (ui1.width() != ui2.width() || ui1.height() != ui2.height())
    throw Error("scroll_offset needs frames of identical size");
  const LumaPlane a = rgb_to_luma(ui1);
  const LumaPlane b = rgb_to_luma(ui2);
  const int w = a.width, h = a.height;
  const int tw = std::max(1, static_cast<int>(std::lround(w * config.template_width_fraction)));
  const int th = std::max(1, static_cast<int>(std::lround(h * config.template_height_fraction)));
  const int tx0 = (w - tw) / 2, ty0 = (h - th) / 2;

  LumaPlane tmpl(tw, th);
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x) tmpl.at(x, y) = b.at(tx0 + x, ty0 + y);
  double tmean = 0.0;
  for (double v : tmpl.values) tmean += v;
  tmean /= static_cast<double>(tmpl.values.size());
  double tnorm = 0.0;
  for (double v : tmpl.values) tnorm += (v - tmean) * (v - tmean);

  double best_v = -2.0, best_h = -2.0;
  int best_py = ty0, best_px = tx0;
  for (int py = 0; py + th <= h; ++py) {
    const double s = ncc_at(a, tmpl, tmean, tnorm, tx0, py);
    if (s > best_v || (s == best_v && std::abs(py - ty0) < std::abs(best_py - ty0))) {
      best_v = s;
      best_py = py;
    }
  }
  for (int px = 0; px + tw <= w; ++px) {
    const double s = ncc_at(a, tmpl, tmean, tnorm, px, ty0);
    if (s > best_h || (s == best_h && std::abs(px - tx0) < std::abs(best_px - tx0))) {
      best_h = s;
      best_px = px;
    }
  }
  const bool vertical = best_v >= best_h;
  const double peak = vertical ? best_v : best_h;
  if (peak < config.min_template_score) return std::nullopt;
  if (vertical) return ScrollOffset{0, ty0 - best_py};
  return ScrollOffset{tx0 - best_px, 0};
}

Segmentation segment(const FrameSeries& video, const SegmenterConfig& config) {
  config.validate();
  Segmentation out;
  out.series = similarity_series(video, config.ssim);
  out.shots = detect_shots(out.series, config.shots);
  if (out.shots.size() < 2) return out;

  std::vector<ActionType> labels;
  std::vector<double> confidences;
  for (std::size_t k = 0; k + 1 < out.shots.size(); ++k) {
    const std::size_t first = out.shots[k].end_frame, last = out.shots[k + 1].start_frame;
    const std::span<const double> gap(out.series.values.data() + first, last - first);
    const auto sig = make_signature(gap, video.fps(), config);
    labels.push_back(classify_transition(sig, config));
    confidences.push_back(transition_confidence(sig, config));
  }
  labels = resolve_backward(out.shots, labels, video, config.same_threshold, config.ssim);

  for (std::size_t k = 0; k < labels.size(); ++k) {
    ActionScene scene;
    scene.from_shot = out.shots[k];
    scene.to_shot = out.shots[k + 1];
    scene.action = labels[k];
    scene.confidence = confidences[k];
    if (scene.action == ActionType::Backward) {
      scene.tap_location = config.backward_location;
    } else if (scene.action == ActionType::Scroll) {
      scene.scroll_offset =
          scroll_offset(video[scene.from_shot.keyframe].pixels, video[scene.to_shot.keyframe].pixels, config);
    }
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

}  // namespace uiactions
