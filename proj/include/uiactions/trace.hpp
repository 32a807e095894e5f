#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/types.hpp"

namespace uiactions {

inline constexpr int kTraceSchemaVersion = 1;

/// Everything the segmenter and location predictor produce for one video.
struct ActionTrace {
  std::string video_id;
  double fps = 30.0;
  std::size_t frame_count = 0;
  std::vector<Shot> shots;
  std::vector<ActionScene> scenes;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const ActionTrace&) const = default;
};

/// Checks shot ordering, per-scene invariants, and scene order.
void validate_trace(const ActionTrace& trace);

nlohmann::json serialize_trace(const ActionTrace& trace);
nlohmann::json serialize_trace(const std::vector<ActionScene>& scenes, double fps);
ActionTrace parse_trace(const nlohmann::json& doc);

ActionTrace load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const ActionTrace& trace);

// Shared JSON encodings, reused by manifests and the HTTP API.
nlohmann::json to_json(const BoundingBox& box);
BoundingBox bounding_box_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Shot& shot);
Shot shot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TapPrediction& p);
TapPrediction prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActionScene& scene);
ActionScene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UiElement& element);
UiElement element_from_json(const nlohmann::json& j);

/// Pretty-printed with a trailing newline; output is byte-stable for equal input.
std::string dump_json(const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace uiactions
