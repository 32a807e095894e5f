#include "uiactions/trace.hpp"

#include <fstream>
#include <sstream>

namespace uiactions {

using nlohmann::json;

json to_json(const BoundingBox& b) {
  return json::array({b.x_lower(), b.y_lower(), b.x_upper(), b.y_upper()});
}

BoundingBox bounding_box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("bounding box must be [x_lower, y_lower, x_upper, y_upper]");
  return BoundingBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

json to_json(const Shot& s) {
  return {{"start_frame", s.start_frame}, {"end_frame", s.end_frame}, {"keyframe", s.keyframe}};
}

Shot shot_from_json(const json& j) {
  Shot s{j.at("start_frame").get<std::size_t>(), j.at("end_frame").get<std::size_t>(),
         j.at("keyframe").get<std::size_t>()};
  validate_shot(s);
  return s;
}

json to_json(const TapPrediction& p) {
  return {{"rank", p.rank}, {"x", p.x}, {"y", p.y}, {"confidence", p.confidence}};
}

TapPrediction prediction_from_json(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("confidence").get<double>(),
          j.at("rank").get<int>()};
}

json to_json(const ActionScene& s) {
  json j{{"type", to_string(s.action)},
         {"from_shot", to_json(s.from_shot)},
         {"to_shot", to_json(s.to_shot)},
         {"confidence", s.confidence}};
  j["location"] = s.tap_location ? json::array({s.tap_location->x, s.tap_location->y}) : json(nullptr);
  j["scroll_offset"] =
      s.scroll_offset ? json::array({s.scroll_offset->dx, s.scroll_offset->dy}) : json(nullptr);
  json preds = json::array();
  for (const auto& p : s.predictions) preds.push_back(to_json(p));
  j["predictions"] = std::move(preds);
  if (s.target_bounds) j["target_bounds"] = to_json(*s.target_bounds);
  return j;
}

ActionScene scene_from_json(const json& j) {
  ActionScene s;
  s.action = parse_action_type(j.at("type").get<std::string>());
  s.from_shot = shot_from_json(j.at("from_shot"));
  s.to_shot = shot_from_json(j.at("to_shot"));
  s.confidence = j.value("confidence", 1.0);
  if (j.contains("location") && !j["location"].is_null()) {
    const auto& l = j["location"];
    s.tap_location = NormPoint{l.at(0).get<double>(), l.at(1).get<double>()};
  }
  if (j.contains("scroll_offset") && !j["scroll_offset"].is_null()) {
    const auto& o = j["scroll_offset"];
    s.scroll_offset = ScrollOffset{o.at(0).get<int>(), o.at(1).get<int>()};
  }
  if (j.contains("predictions"))
    for (const auto& p : j["predictions"]) s.predictions.push_back(prediction_from_json(p));
  if (j.contains("target_bounds") && !j["target_bounds"].is_null())
    s.target_bounds = bounding_box_from_json(j["target_bounds"]);
  validate_scene(s);
  return s;
}

json to_json(const UiElement& e) {
  json j{{"class", e.class_name}, {"bounds", to_json(e.bounds)}, {"clickable", e.clickable}};
  if (e.text) j["text"] = *e.text;
  if (e.group_role) j["group_role"] = to_string(*e.group_role);
  if (!e.children.empty()) {
    json kids = json::array();
    for (const auto& c : e.children) kids.push_back(to_json(c));
    j["children"] = std::move(kids);
  }
  return j;
}

UiElement element_from_json(const json& j) {
  UiElement e;
  e.class_name = j.at("class").get<std::string>();
  e.bounds = bounding_box_from_json(j.at("bounds"));
  e.clickable = j.value("clickable", false);
  if (j.contains("text") && j["text"].is_string()) e.text = j["text"].get<std::string>();
  if (j.contains("group_role") && j["group_role"].is_string())
    e.group_role = parse_group_role(j["group_role"].get<std::string>());
  if (j.contains("children"))
    for (const auto& c : j["children"]) e.children.push_back(element_from_json(c));
  return e;
}

void validate_trace(const ActionTrace& trace) {
  if (!(trace.fps > 0.0)) throw Error("trace fps must be positive");
  validate_shot_list(trace.shots);
  for (std::size_t i = 0; i < trace.scenes.size(); ++i) {
    validate_scene(trace.scenes[i]);
    if (i > 0) {
      const auto& prev = trace.scenes[i - 1];
      const auto& cur = trace.scenes[i];
      if (cur.from_shot.start_frame < prev.from_shot.start_frame)
        throw Error("scenes " + std::to_string(i - 1) + " and " + std::to_string(i) + " are out of order");
      if (cur.from_shot != prev.to_shot && cur.from_shot.start_frame <= prev.to_shot.end_frame)
        throw Error("scenes " + std::to_string(i - 1) + " and " + std::to_string(i) + " have overlapping shots");
    }
  }
}

json serialize_trace(const ActionTrace& trace) {
  validate_trace(trace);
  json shots = json::array();
  for (const auto& s : trace.shots) shots.push_back(to_json(s));
  json scenes = json::array();
  for (std::size_t i = 0; i < trace.scenes.size(); ++i) {
    json sj = to_json(trace.scenes[i]);
    sj["index"] = i;
    sj["start_s"] = static_cast<double>(trace.scenes[i].from_shot.end_frame) / trace.fps;
    sj["end_s"] = static_cast<double>(trace.scenes[i].to_shot.start_frame) / trace.fps;
    scenes.push_back(std::move(sj));
  }
  return {{"schema_version", kTraceSchemaVersion},
          {"kind", "action_trace"},
          {"video_id", trace.video_id},
          {"fps", trace.fps},
          {"frame_count", trace.frame_count},
          {"shots", std::move(shots)},
          {"scenes", std::move(scenes)},
          {"metadata", trace.metadata}};
}

json serialize_trace(const std::vector<ActionScene>& scenes, double fps) {
  ActionTrace t;
  t.fps = fps;
  t.scenes = scenes;
  for (const auto& s : scenes) {
    if (t.shots.empty() || t.shots.back() != s.from_shot) t.shots.push_back(s.from_shot);
    t.shots.push_back(s.to_shot);
  }
  if (!t.shots.empty()) t.frame_count = t.shots.back().end_frame + 1;
  return serialize_trace(t);
}

ActionTrace parse_trace(const json& doc) {
  if (!doc.is_object()) throw Error("trace document must be a JSON object");
  const int version = doc.value("schema_version", -1);
  if (version != kTraceSchemaVersion)
    throw Error("unsupported trace schema_version " + std::to_string(version) + " (expected " +
                std::to_string(kTraceSchemaVersion) + ")");
  ActionTrace t;
  t.video_id = doc.value("video_id", std::string{});
  t.fps = doc.at("fps").get<double>();
  t.frame_count = doc.value("frame_count", std::size_t{0});
  for (const auto& s : doc.at("shots")) t.shots.push_back(shot_from_json(s));
  for (const auto& s : doc.at("scenes")) t.scenes.push_back(scene_from_json(s));
  if (doc.contains("metadata")) t.metadata = doc["metadata"];
  validate_trace(t);
  return t;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << dump_json(j);
}

ActionTrace load_trace(const std::filesystem::path& path) { return parse_trace(read_json_file(path)); }

void save_trace(const std::filesystem::path& path, const ActionTrace& trace) {
  write_json_file(path, serialize_trace(trace));
}

}  // namespace uiactions
