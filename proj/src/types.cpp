#include "uiactions/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uiactions {

std::string_view to_string(ActionType action) {
  switch (action) {
    case ActionType::Tap: return "TAP";
    case ActionType::Scroll: return "SCROLL";
    case ActionType::Backward: return "BACKWARD";
  }
  return "TAP";
}

ActionType parse_action_type(std::string_view name) {
  if (name == "TAP") return ActionType::Tap;
  if (name == "SCROLL") return ActionType::Scroll;
  if (name == "BACKWARD" || name == "BACK") return ActionType::Backward;
  throw Error("unknown action type: " + std::string(name));
}

std::string_view to_string(GroupRole role) {
  switch (role) {
    case GroupRole::List: return "list";
    case GroupRole::Tab: return "tab";
    case GroupRole::Card: return "card";
    case GroupRole::Frame: return "frame";
  }
  return "list";
}

GroupRole parse_group_role(std::string_view name) {
  if (name == "list") return GroupRole::List;
  if (name == "tab") return GroupRole::Tab;
  if (name == "card") return GroupRole::Card;
  if (name == "frame") return GroupRole::Frame;
  throw Error("unknown group role: " + std::string(name));
}

FrameSeries::FrameSeries(std::vector<Frame> frames, double fps, std::string source_id)
    : frames_(std::move(frames)), fps_(fps), source_id_(std::move(source_id)) {
  if (frames_.empty()) throw Error("frame series must not be empty");
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw Error("fps must be positive");
  const int w = frames_.front().pixels.width(), h = frames_.front().pixels.height();
  if (w < 1 || h < 1) throw Error("frames must be at least 1x1");
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    const auto& f = frames_[i];
    if (f.pixels.width() != w || f.pixels.height() != h)
      throw Error("frame " + std::to_string(i) + " has mismatched dimensions");
    if (i > 0 && !(f.timestamp_s > frames_[i - 1].timestamp_s))
      throw Error("timestamps must strictly increase (frame " + std::to_string(i) + ")");
    if (std::abs(f.timestamp_s - static_cast<double>(f.index) / fps_) > 1.0 / fps_)
      throw Error("timestamp of frame " + std::to_string(i) + " drifts more than one period");
  }
}

FrameSeries FrameSeries::from_images(std::vector<RgbImage> images, double fps, std::string source_id) {
  if (!(fps > 0.0)) throw Error("fps must be positive");
  std::vector<Frame> frames;
  frames.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    frames.push_back({i, static_cast<double>(i) / fps, std::move(images[i])});
  return FrameSeries(std::move(frames), fps, std::move(source_id));
}

void validate_shot(const Shot& shot) {
  if (shot.start_frame > shot.end_frame) throw Error("shot start after end");
  if (shot.keyframe < shot.start_frame || shot.keyframe > shot.end_frame)
    throw Error("shot keyframe outside its interval");
}

void validate_shot_list(const std::vector<Shot>& shots) {
  for (std::size_t i = 0; i < shots.size(); ++i) {
    validate_shot(shots[i]);
    if (i > 0 && shots[i].start_frame <= shots[i - 1].end_frame) {
      std::ostringstream os;
      os << "shots " << i - 1 << " [" << shots[i - 1].start_frame << "," << shots[i - 1].end_frame
         << "] and " << i << " [" << shots[i].start_frame << "," << shots[i].end_frame
         << "] overlap or are out of order";
      throw Error(os.str());
    }
  }
}

BoundingBox::BoundingBox(double xl, double yl, double xu, double yu)
    : x_lower_(xl), y_lower_(yl), x_upper_(xu), y_upper_(yu) {
  for (double v : {xl, yl, xu, yu})
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw Error("bounding box coordinates must lie in [0,1]");
  if (!(xl < xu) || !(yl < yu)) throw Error("bounding box requires lower < upper on both axes");
}

PixelRect BoundingBox::to_pixels(int w, int h) const {
  PixelRect r{static_cast<int>(std::lround(x_lower_ * w)), static_cast<int>(std::lround(y_lower_ * h)),
              static_cast<int>(std::lround(x_upper_ * w)), static_cast<int>(std::lround(y_upper_ * h))};
  return r;
}

BoundingBox BoundingBox::from_pixels(const PixelRect& r, int w, int h) {
  return BoundingBox(std::clamp(static_cast<double>(r.x0) / w, 0.0, 1.0),
                     std::clamp(static_cast<double>(r.y0) / h, 0.0, 1.0),
                     std::clamp(static_cast<double>(r.x1) / w, 0.0, 1.0),
                     std::clamp(static_cast<double>(r.y1) / h, 0.0, 1.0));
}

void validate_predictions(const std::vector<TapPrediction>& predictions) {
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (p.rank != static_cast<int>(i) + 1) throw Error("prediction ranks must be contiguous from 1");
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) throw Error("prediction confidence outside [0,1]");
    if (i > 0 && p.confidence > predictions[i - 1].confidence)
      throw Error("prediction confidences must not increase with rank");
  }
}

void validate_scene(const ActionScene& scene) {
  validate_shot(scene.from_shot);
  validate_shot(scene.to_shot);
  if (scene.from_shot.end_frame >= scene.to_shot.start_frame)
    throw Error("scene from_shot must end before to_shot starts");
  if (!(scene.confidence >= 0.0 && scene.confidence <= 1.0)) throw Error("scene confidence outside [0,1]");
  if (scene.action == ActionType::Scroll && scene.tap_location)
    throw Error("SCROLL scene must not carry a tap location");
  if (scene.action != ActionType::Scroll && scene.scroll_offset)
    throw Error("only SCROLL scenes carry a scroll offset");
  if (scene.action != ActionType::Tap && !scene.predictions.empty())
    throw Error("only TAP scenes carry location predictions");
  if (scene.tap_location) {
    const auto [x, y] = *scene.tap_location;
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) throw Error("tap location outside [0,1]^2");
  }
  validate_predictions(scene.predictions);
}

namespace {
void validate_element(const UiElement& e, double tol, int depth) {
  if (depth > 256) throw Error("view hierarchy too deep");
  for (const auto& c : e.children) {
    if (c.bounds.x_lower() < e.bounds.x_lower() - tol || c.bounds.y_lower() < e.bounds.y_lower() - tol ||
        c.bounds.x_upper() > e.bounds.x_upper() + tol || c.bounds.y_upper() > e.bounds.y_upper() + tol)
      throw Error("element '" + c.class_name + "' escapes its parent '" + e.class_name + "'");
    validate_element(c, tol, depth + 1);
  }
}
}  // namespace

void validate_hierarchy(const UiHierarchy& hierarchy, double tolerance) {
  validate_element(hierarchy.root, tolerance, 0);
}

bool TransitionSample::same_transition(const TransitionSample& o) const {
  return ui1 == o.ui1 && ui2 == o.ui2 && gt_bounds == o.gt_bounds && hierarchy == o.hierarchy &&
         ui2_hierarchy == o.ui2_hierarchy;
}

}  // namespace uiactions
