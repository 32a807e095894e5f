#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uiactions/image.hpp"

namespace uiactions {

enum class ActionType { Tap, Scroll, Backward };

std::string_view to_string(ActionType action);
ActionType parse_action_type(std::string_view name);

struct Frame {
  std::size_t index = 0;
  double timestamp_s = 0.0;
  RgbImage pixels;
};

/// Decoded video: frames in display order plus their rate.
class FrameSeries {
 public:
  FrameSeries() = default;
  FrameSeries(std::vector<Frame> frames, double fps, std::string source_id = {});

  /// Builds frames with index i and timestamp i / fps.
  static FrameSeries from_images(std::vector<RgbImage> images, double fps, std::string source_id = {});

  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  std::size_t size() const { return frames_.size(); }
  double fps() const { return fps_; }
  const std::string& source_id() const { return source_id_; }
  int width() const { return frames_.front().pixels.width(); }
  int height() const { return frames_.front().pixels.height(); }

 private:
  std::vector<Frame> frames_;
  double fps_ = 0.0;
  std::string source_id_;
};

/// values[i] = similarity(frame i, frame i + 1).
struct SimilaritySeries {
  std::vector<double> values;
  double fps = 0.0;
};

/// Inclusive frame interval of one steady, fully rendered UI.
struct Shot {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::size_t keyframe = 0;

  std::size_t frame_count() const { return end_frame - start_frame + 1; }
  bool operator==(const Shot&) const = default;
};

void validate_shot(const Shot& shot);
/// Throws naming the first overlapping or out-of-order pair.
void validate_shot_list(const std::vector<Shot>& shots);

/// Normalized [0,1] box; construction rejects degenerate or out-of-range bounds.
class BoundingBox {
 public:
  BoundingBox() = default;
  BoundingBox(double x_lower, double y_lower, double x_upper, double y_upper);

  double x_lower() const { return x_lower_; }
  double y_lower() const { return y_lower_; }
  double x_upper() const { return x_upper_; }
  double y_upper() const { return y_upper_; }
  double width() const { return x_upper_ - x_lower_; }
  double height() const { return y_upper_ - y_lower_; }
  double center_x() const { return 0.5 * (x_lower_ + x_upper_); }
  double center_y() const { return 0.5 * (y_lower_ + y_upper_); }

  /// Inclusive on every edge.
  bool contains(double x, double y) const {
    return x >= x_lower_ && x <= x_upper_ && y >= y_lower_ && y <= y_upper_;
  }
  PixelRect to_pixels(int image_width, int image_height) const;
  static BoundingBox from_pixels(const PixelRect& rect, int image_width, int image_height);

  bool operator==(const BoundingBox&) const = default;

 private:
  double x_lower_ = 0.0;
  double y_lower_ = 0.0;
  double x_upper_ = 1.0;
  double y_upper_ = 1.0;
};

struct NormPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const NormPoint&) const = default;
};

/// Content displacement between two frames, in pixels.
struct ScrollOffset {
  int dx = 0;
  int dy = 0;
  bool operator==(const ScrollOffset&) const = default;
};

struct TapPrediction {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  int rank = 1;
  bool operator==(const TapPrediction&) const = default;
};

/// Ranks must run 1..n and confidences must not increase with rank.
void validate_predictions(const std::vector<TapPrediction>& predictions);

struct ActionScene {
  Shot from_shot;
  Shot to_shot;
  ActionType action = ActionType::Tap;
  std::optional<NormPoint> tap_location;
  // Unset on a SCROLL scene means the offset could not be measured.
  std::optional<ScrollOffset> scroll_offset;
  double confidence = 1.0;
  std::vector<TapPrediction> predictions;
  // Ground-truth element (annotated traces only).
  std::optional<BoundingBox> target_bounds;

  bool operator==(const ActionScene&) const = default;
};

void validate_scene(const ActionScene& scene);

enum class GroupRole { List, Tab, Card, Frame };

std::string_view to_string(GroupRole role);
GroupRole parse_group_role(std::string_view name);

struct UiElement {
  std::string class_name;
  BoundingBox bounds;
  std::optional<std::string> text;
  std::optional<GroupRole> group_role;
  bool clickable = false;
  std::vector<UiElement> children;

  bool operator==(const UiElement&) const = default;
};

struct UiHierarchy {
  UiElement root;
  bool operator==(const UiHierarchy&) const = default;
};

/// Children must nest inside their parent within `tolerance` (normalized units).
void validate_hierarchy(const UiHierarchy& hierarchy, double tolerance = 0.01);

/// Tap training/eval record: UI-1 tapped inside gt_bounds produces UI-2.
struct TransitionSample {
  std::string id;
  std::string app_id;
  RgbImage ui1;
  RgbImage ui2;
  BoundingBox gt_bounds;
  std::optional<UiHierarchy> hierarchy;      // describes ui1
  std::optional<UiHierarchy> ui2_hierarchy;  // describes ui2
  std::string origin = "source";             // source | exchange | metamorphic

  bool same_transition(const TransitionSample& other) const;
};

}  // namespace uiactions
