#include "uiactions/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "uiactions/dataset.hpp"
#include "uiactions/image.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uiactions {

int default_port() {
  if (const char* env = std::getenv("UIACTIONS_PORT")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v < 65536) return static_cast<int>(v);
  }
  return kDefaultPort;
}

std::string_view to_string(MarkerStyle s) {
  switch (s) {
    case MarkerStyle::BoundingBox: return "BOUNDING_BOX";
    case MarkerStyle::Arrow: return "ARROW";
    case MarkerStyle::TapIcon: return "TAP_ICON";
    case MarkerStyle::ScrollIcon: return "SCROLL_ICON";
  }
  return "?";
}

MarkerStyle parse_marker_style(std::string_view name) {
  if (name == "BOUNDING_BOX") return MarkerStyle::BoundingBox;
  if (name == "ARROW") return MarkerStyle::Arrow;
  if (name == "TAP_ICON") return MarkerStyle::TapIcon;
  if (name == "SCROLL_ICON") return MarkerStyle::ScrollIcon;
  throw Error("unknown marker_style '" + std::string(name) + "'");
}

json error_json(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_unit(const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; }

json empty_doc(const std::string& video_id) {
  return {{"schema_version", kAnnotationSchemaVersion}, {"video_id", video_id}, {"annotations", json::array()}};
}

}  // namespace

json validate_annotation(const ActionTrace& trace, const json& entry) {
  if (!entry.is_object()) throw Error("annotation entry must be an object");
  const auto idx = entry.at("scene_index");
  if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
      idx.get<std::size_t>() >= trace.scenes.size())
    throw Error("scene_index " + idx.dump() + " does not reference a scene");
  const ActionType action = parse_action_type(entry.at("action").get<std::string>());
  parse_marker_style(entry.at("marker_style").get<std::string>());
  if (!entry.contains("author") || !entry["author"].is_string()) throw Error("annotation author must be a string");
  const bool has_location = entry.contains("location") && !entry["location"].is_null();
  const bool has_offset = entry.contains("offset") && !entry["offset"].is_null();
  if (has_location) {
    const auto& l = entry["location"];
    if (!l.is_array() || l.size() != 2 || !is_unit(l[0]) || !is_unit(l[1]))
      throw Error("location must be [x, y] with normalized coordinates");
  }
  if (has_offset) {
    const auto& o = entry["offset"];
    if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() || !o[1].is_number_integer())
      throw Error("offset must be [dx, dy] in pixels");
  }
  if (action == ActionType::Scroll ? has_location : has_offset)
    throw Error(std::string(to_string(action)) + " annotations carry " +
                (action == ActionType::Scroll ? "an offset, not a location" : "a location, not an offset"));
  json out = entry;
  if (!out.contains("timestamp") || out["timestamp"].is_null()) out["timestamp"] = utc_now();
  if (!out["timestamp"].is_string()) throw Error("timestamp must be an ISO-8601 string");
  return out;
}

AnnotationStore::AnnotationStore(fs::path dir) : dir_(std::move(dir)) {}

std::mutex& AnnotationStore::lock_for(const std::string& video_id) {
  std::lock_guard<std::mutex> g(table_mutex_);
  auto& m = locks_[video_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

json AnnotationStore::load(const std::string& video_id) const {
  const auto path = dir_ / (video_id + ".json");
  if (!fs::exists(path)) return empty_doc(video_id);
  return read_json_file(path);
}

json AnnotationStore::upsert(const ActionTrace& trace, const json& entries) {
  if (!entries.is_array()) throw Error("annotations must be an array");
  std::vector<json> checked;
  for (const auto& e : entries) checked.push_back(validate_annotation(trace, e));
  std::lock_guard<std::mutex> g(lock_for(trace.video_id));
  json doc = load(trace.video_id);
  std::map<std::size_t, json> by_scene;
  for (const auto& e : doc["annotations"]) by_scene[e.at("scene_index").get<std::size_t>()] = e;
  for (auto& e : checked) {
    const auto idx = e["scene_index"].get<std::size_t>();
    auto it = by_scene.find(idx);
    if (it != by_scene.end() && it->second.value("timestamp", "") > e["timestamp"].get<std::string>()) continue;
    by_scene[idx] = std::move(e);
  }
  doc["annotations"] = json::array();
  for (auto& [_, e] : by_scene) doc["annotations"].push_back(std::move(e));
  fs::create_directories(dir_);
  const auto tmp = dir_ / (trace.video_id + ".json.tmp");
  write_json_file(tmp, doc);
  fs::rename(tmp, dir_ / (trace.video_id + ".json"));
  return doc;
}

struct Service::Impl {
  httplib::Server server;
  std::string video_bytes;
  std::string video_mime;
  int port = 0;
};

namespace {

std::string mime_for(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".avi") return "video/x-msvideo";
  if (ext == ".mkv") return "video/x-matroska";
  if (ext == ".mov") return "video/quicktime";
  return "application/octet-stream";
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(dump_json(body), "application/json");
}

// Parses a non-negative integer query parameter; throws on malformed values.
std::optional<long long> int_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string v = req.get_param_value(name);
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || x < 0) throw Error(std::string("query parameter ") + name + " must be a non-negative integer");
  return x;
}

struct NotFound : Error {
  using Error::Error;
};

}  // namespace

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      trace_(load_trace(options_.trace)),
      video_(load_video(options_.video)),
      video_is_file_(!fs::is_directory(options_.video)),
      store_(options_.annotations),
      impl_(std::make_unique<Impl>()) {
  if (trace_.frame_count != 0 && trace_.frame_count != video_.size())
    throw Error("trace covers " + std::to_string(trace_.frame_count) + " frames but the video has " +
                std::to_string(video_.size()));
  if (options_.thumbnail_width < 1) throw Error("thumbnail width must be positive");
  if (video_is_file_) {
    std::ifstream in(options_.video, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    impl_->video_bytes = ss.str();
    impl_->video_mime = mime_for(options_.video);
  }

  auto& srv = impl_->server;
  const auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const NotFound& e) {
        send_json(res, error_json("not_found", e.what()), 404);
      } catch (const std::exception& e) {
        send_json(res, error_json("bad_request", e.what()), 400);
      }
    };
  };
  const auto scene_param = [this](const httplib::Request& req) {
    const auto s = int_param(req, "scene");
    if (!s) throw Error("missing query parameter scene");
    if (static_cast<std::size_t>(*s) >= trace_.scenes.size())
      throw NotFound("scene " + std::to_string(*s) + " does not exist");
    return static_cast<std::size_t>(*s);
  };

  srv.Get("/api/scenes", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, scenes()); }));
  srv.Get("/api/locations", guarded([this, scene_param](const httplib::Request& req, httplib::Response& res) {
            const auto scene = scene_param(req);
            const int k = static_cast<int>(int_param(req, "k").value_or(5));
            send_json(res, locations(scene, k));
          }));
  srv.Get("/api/thumbnail", guarded([this, scene_param](const httplib::Request& req, httplib::Response& res) {
            const auto scene = scene_param(req);
            const std::string which = req.has_param("shot") ? req.get_param_value("shot") : "from";
            if (which != "from" && which != "to") throw Error("shot must be 'from' or 'to'");
            const auto png = thumbnail(scene, which == "to");
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          }));
  srv.Get("/api/frame", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto idx = int_param(req, "index");
            if (!idx) throw Error("missing query parameter index");
            if (static_cast<std::size_t>(*idx) >= video_.size())
              throw NotFound("frame " + std::to_string(*idx) + " does not exist");
            const auto png = frame_png(static_cast<std::size_t>(*idx));
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          }));
  srv.Get("/api/video", guarded([this](const httplib::Request&, httplib::Response& res) {
            if (!video_is_file_)
              throw NotFound("video was loaded from a frame directory; fetch frames from /api/frame?index=N");
            res.set_content(impl_->video_bytes, impl_->video_mime);
          }));
  srv.Post("/api/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
             json body;
             try {
               body = json::parse(req.body);
             } catch (const json::exception& e) {
               throw Error(std::string("request body is not JSON: ") + e.what());
             }
             send_json(res, post_annotations(body));
           }));
  srv.Get("/api/export", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, export_annotations());
          }));
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& srv = impl_->server;
  if (options_.port == 0) {
    impl_->port = srv.bind_to_any_port(options_.host);
  } else {
    if (!srv.bind_to_port(options_.host, options_.port))
      throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    impl_->port = options_.port;
  }
  if (impl_->port <= 0) throw Error("cannot bind " + options_.host);
  return impl_->port;
}

void Service::serve() {
  if (impl_->port == 0) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

json Service::scenes() const {
  json list = json::array();
  for (std::size_t i = 0; i < trace_.scenes.size(); ++i) {
    const auto& s = trace_.scenes[i];
    list.push_back({{"index", i},
                    {"type", to_string(s.action)},
                    {"start_s", static_cast<double>(s.from_shot.end_frame) / trace_.fps},
                    {"end_s", static_cast<double>(s.to_shot.start_frame) / trace_.fps},
                    {"from_keyframe", s.from_shot.keyframe},
                    {"to_keyframe", s.to_shot.keyframe},
                    {"thumbnail", "/api/thumbnail?scene=" + std::to_string(i)}});
  }
  return {{"schema_version", kTraceSchemaVersion},
          {"video_id", trace_.video_id},
          {"fps", trace_.fps},
          {"frame_count", video_.size()},
          {"scenes", list}};
}

json Service::locations(std::size_t scene, int k) const {
  if (scene >= trace_.scenes.size()) throw NotFound("scene " + std::to_string(scene) + " does not exist");
  if (k < 1 || k > 5) throw Error("k must lie in [1, 5]");
  const auto& s = trace_.scenes[scene];
  json preds = json::array();
  for (std::size_t i = 0; i < s.predictions.size() && i < static_cast<std::size_t>(k); ++i)
    preds.push_back(to_json(s.predictions[i]));
  json j{{"schema_version", kTraceSchemaVersion}, {"scene", scene}, {"type", to_string(s.action)}, {"predictions", preds}};
  j["location"] = s.tap_location ? json::array({s.tap_location->x, s.tap_location->y}) : json(nullptr);
  j["scroll_offset"] = s.scroll_offset ? json::array({s.scroll_offset->dx, s.scroll_offset->dy}) : json(nullptr);
  return j;
}

std::vector<std::uint8_t> Service::thumbnail(std::size_t scene, bool to_shot) const {
  if (scene >= trace_.scenes.size()) throw NotFound("scene " + std::to_string(scene) + " does not exist");
  const auto& s = trace_.scenes[scene];
  const auto& img = video_[to_shot ? s.to_shot.keyframe : s.from_shot.keyframe].pixels;
  const int w = options_.thumbnail_width;
  const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(img.height()) * w / img.width())));
  return encode_png(resize(img, w, h));
}

std::vector<std::uint8_t> Service::frame_png(std::size_t index) const {
  if (index >= video_.size()) throw NotFound("frame " + std::to_string(index) + " does not exist");
  return encode_png(video_[index].pixels);
}

json Service::post_annotations(const json& body) {
  if (!body.is_object()) throw Error("request body must be an object");
  if (body.contains("video_id") && body["video_id"] != trace_.video_id)
    throw Error("annotations are for video '" + body["video_id"].dump() + "' but this service holds '" +
                trace_.video_id + "'");
  return store_.upsert(trace_, body.at("annotations"));
}

json Service::export_annotations() const { return store_.load(trace_.video_id); }

}  // namespace uiactions
