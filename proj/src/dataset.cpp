#include "uiactions/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

#include "uiactions/image.hpp"
#include "uiactions/nn.hpp"
#include "uiactions/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uiactions {

json sample_to_json(const TransitionSample& s, const std::string& ui1_path, const std::string& ui2_path) {
  json j{{"id", s.id},   {"app_id", s.app_id}, {"ui1", ui1_path}, {"ui2", ui2_path},
         {"gt_bounds", to_json(s.gt_bounds)}, {"origin", s.origin}};
  j["hierarchy"] = s.hierarchy ? to_json(s.hierarchy->root) : json(nullptr);
  j["ui2_hierarchy"] = s.ui2_hierarchy ? to_json(s.ui2_hierarchy->root) : json(nullptr);
  return j;
}

void save_manifest(const fs::path& dir, const std::vector<TransitionSample>& samples, const json& metadata) {
  fs::create_directories(dir / "images");
  std::set<std::string> ids;
  json entries = json::array();
  for (const auto& s : samples) {
    if (s.id.empty() || s.id.find_first_of("/\\") != std::string::npos)
      throw Error("sample id '" + s.id + "' cannot name a file");
    if (!ids.insert(s.id).second) throw Error("duplicate sample id " + s.id);
    const std::string p1 = "images/" + s.id + "_ui1.png", p2 = "images/" + s.id + "_ui2.png";
    write_png(dir / p1, s.ui1);
    write_png(dir / p2, s.ui2);
    entries.push_back(sample_to_json(s, p1, p2));
  }
  write_json_file(dir / "manifest.json", {{"schema_version", kManifestSchemaVersion},
                                          {"kind", "transition_manifest"},
                                          {"metadata", metadata},
                                          {"samples", entries}});
}

std::vector<TransitionSample> load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  const json doc = read_json_file(file);
  if (doc.value("kind", "") != "transition_manifest") throw Error(file.string() + " is not a transition manifest");
  if (doc.value("schema_version", 0) != kManifestSchemaVersion)
    throw Error(file.string() + ": unsupported manifest schema_version");
  const fs::path base = file.parent_path();
  std::vector<TransitionSample> out;
  for (const auto& e : doc.at("samples")) {
    TransitionSample s;
    s.id = e.at("id").get<std::string>();
    s.app_id = e.at("app_id").get<std::string>();
    s.ui1 = read_image(base / e.at("ui1").get<std::string>());
    s.ui2 = read_image(base / e.at("ui2").get<std::string>());
    s.gt_bounds = bounding_box_from_json(e.at("gt_bounds"));
    s.origin = e.value("origin", "source");
    if (e.contains("hierarchy") && !e["hierarchy"].is_null())
      s.hierarchy = UiHierarchy{element_from_json(e["hierarchy"])};
    if (e.contains("ui2_hierarchy") && !e["ui2_hierarchy"].is_null())
      s.ui2_hierarchy = UiHierarchy{element_from_json(e["ui2_hierarchy"])};
    out.push_back(std::move(s));
  }
  return out;
}

void SplitConfig::validate() const {
  if (train < 0.0 || val < 0.0 || test < 0.0) throw Error("split fractions must be >= 0");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
}

DatasetSplit split_by_app(const std::vector<TransitionSample>& samples, const SplitConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<std::size_t>> by_app;
  for (std::size_t i = 0; i < samples.size(); ++i) by_app[samples[i].app_id].push_back(i);
  std::vector<std::string> apps;
  for (const auto& [app, _] : by_app) apps.push_back(app);
  nn::Rng rng(cfg.seed);
  rng.shuffle(apps);

  DatasetSplit out;
  const double n = static_cast<double>(samples.size());
  double seen = 0.0;
  for (const auto& app : apps) {
    const auto& idx = by_app[app];
    const double mid = (seen + 0.5 * static_cast<double>(idx.size())) / n;
    seen += static_cast<double>(idx.size());
    auto& dst = mid < cfg.train ? out.train : (mid < cfg.train + cfg.val ? out.val : out.test);
    for (std::size_t i : idx) dst.push_back(samples[i]);
  }
  return out;
}

json IngestReport::to_json() const {
  return {{"traces", traces},
          {"samples", samples},
          {"skipped_swipes", skipped_swipes},
          {"skipped_unresolved", skipped_unresolved},
          {"skipped_malformed", skipped_malformed},
          {"warnings", warnings}};
}

namespace {

std::optional<GroupRole> role_for_class(const std::string& cls) {
  const auto has = [&](const char* s) { return cls.find(s) != std::string::npos; };
  if (has("ListView") || has("RecyclerView") || has("GridView")) return GroupRole::List;
  if (has("TabLayout") || has("TabWidget") || has("TabHost")) return GroupRole::Tab;
  if (has("CardView")) return GroupRole::Card;
  if (has("FrameLayout")) return GroupRole::Frame;
  return std::nullopt;
}

// Rico nodes carry pixel bounds; degenerate or invisible nodes are dropped with their subtree.
std::optional<UiElement> rico_element(const json& node, double W, double H) {
  if (!node.is_object() || !node.contains("bounds")) return std::nullopt;
  if (!node.value("visible-to-user", true)) return std::nullopt;
  const auto& b = node["bounds"];
  if (!b.is_array() || b.size() != 4) return std::nullopt;
  const double x0 = std::clamp(b[0].get<double>() / W, 0.0, 1.0), y0 = std::clamp(b[1].get<double>() / H, 0.0, 1.0);
  const double x1 = std::clamp(b[2].get<double>() / W, 0.0, 1.0), y1 = std::clamp(b[3].get<double>() / H, 0.0, 1.0);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  UiElement e;
  e.class_name = node.value("class", "");
  e.bounds = BoundingBox(x0, y0, x1, y1);
  e.clickable = node.value("clickable", false);
  if (node.contains("text") && node["text"].is_string() && !node["text"].get<std::string>().empty())
    e.text = node["text"].get<std::string>();
  e.group_role = role_for_class(e.class_name);
  if (node.contains("children") && node["children"].is_array())
    for (const auto& c : node["children"])
      if (auto child = rico_element(c, W, H)) e.children.push_back(std::move(*child));
  return e;
}

std::optional<UiHierarchy> rico_hierarchy(const fs::path& file) {
  const json doc = read_json_file(file);
  const json& root = doc.contains("activity") ? doc["activity"].at("root") : doc.at("root");
  const auto& b = root.at("bounds");
  const double W = b.at(2).get<double>() - b.at(0).get<double>(), H = b.at(3).get<double>() - b.at(1).get<double>();
  if (!(W > 0.0) || !(H > 0.0)) return std::nullopt;
  auto e = rico_element(root, W, H);
  if (!e) return std::nullopt;
  return UiHierarchy{std::move(*e)};
}

// Smallest element containing the point, preferring clickable ones.
const UiElement* resolve_target(const UiElement& e, double x, double y, const UiElement* best, bool clickable_only) {
  if (!e.bounds.contains(x, y)) return best;
  if (!clickable_only || e.clickable) {
    const double area = e.bounds.width() * e.bounds.height();
    if (!best || area < best->bounds.width() * best->bounds.height()) best = &e;
  }
  for (const auto& c : e.children) best = resolve_target(c, x, y, best, clickable_only);
  return best;
}

fs::path find_screenshot(const fs::path& trace, const std::string& id) {
  for (const char* ext : {".jpg", ".png", ".jpeg"}) {
    const auto p = trace / "screenshots" / (id + ext);
    if (fs::exists(p)) return p;
  }
  return {};
}

void ingest_trace(const fs::path& trace, const std::string& app_id, IngestResult& out) {
  ++out.report.traces;
  json gestures;
  try {
    gestures = read_json_file(trace / "gestures.json");
  } catch (const std::exception& e) {
    ++out.report.skipped_malformed;
    out.report.warnings.push_back(trace.string() + ": " + e.what());
    return;
  }
  if (!gestures.is_object()) {
    ++out.report.skipped_malformed;
    out.report.warnings.push_back(trace.string() + ": gestures.json is not an object");
    return;
  }
  std::vector<std::pair<long long, std::string>> screens;
  for (const auto& [key, _] : gestures.items()) {
    try {
      screens.emplace_back(std::stoll(key), key);
    } catch (const std::exception&) {
      screens.emplace_back(0, key);
    }
  }
  std::sort(screens.begin(), screens.end());
  const std::string trace_name = trace.filename().string();
  for (std::size_t i = 0; i + 1 < screens.size(); ++i) {
    const std::string& id = screens[i].second;
    const std::string& next = screens[i + 1].second;
    try {
      const auto& pts = gestures[id];
      if (!pts.is_array() || pts.empty()) continue;
      if (pts.size() != 1) {
        ++out.report.skipped_swipes;
        continue;
      }
      const double x = pts[0].at(0).get<double>(), y = pts[0].at(1).get<double>();
      const auto s1 = find_screenshot(trace, id), s2 = find_screenshot(trace, next);
      const auto h1_path = trace / "view_hierarchies" / (id + ".json");
      if (s1.empty() || s2.empty() || !fs::exists(h1_path)) {
        ++out.report.skipped_unresolved;
        continue;
      }
      auto h1 = rico_hierarchy(h1_path);
      const UiElement* target = h1 ? resolve_target(h1->root, x, y, nullptr, true) : nullptr;
      if (!target) {
        ++out.report.skipped_unresolved;
        continue;
      }
      TransitionSample s;
      s.id = app_id + "-" + trace_name + "-" + id;
      s.app_id = app_id;
      s.gt_bounds = target->bounds;
      s.ui1 = read_image(s1);
      s.ui2 = read_image(s2);
      s.hierarchy = std::move(h1);
      const auto h2_path = trace / "view_hierarchies" / (next + ".json");
      if (fs::exists(h2_path)) s.ui2_hierarchy = rico_hierarchy(h2_path);
      out.samples.push_back(std::move(s));
      ++out.report.samples;
    } catch (const std::exception& e) {
      ++out.report.skipped_malformed;
      out.report.warnings.push_back(trace.string() + " screen " + id + ": " + e.what());
    }
  }
}

}  // namespace

IngestResult ingest_rico(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("Rico trace directory not found: " + dir.string());
  IngestResult out;
  std::vector<fs::path> traces;
  if (fs::exists(dir / "gestures.json")) {
    traces.push_back(dir);
  } else {
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "gestures.json") traces.push_back(e.path().parent_path());
  }
  std::sort(traces.begin(), traces.end());
  for (const auto& t : traces) {
    const bool nested = t != dir && t.parent_path() != dir;
    const std::string app = nested ? t.parent_path().filename().string() : t.filename().string();
    ingest_trace(t, app, out);
  }
  if (traces.empty()) out.report.warnings.push_back("no traces found under " + dir.string());
  return out;
}

std::string video_id_for(const fs::path& path) {
  const fs::path p = path.has_filename() ? path : path.parent_path();
  return fs::is_directory(p) ? p.filename().string() : p.stem().string();
}

FrameSeries load_video(const fs::path& path) {
  if (!fs::exists(path)) throw Error("video not found: " + path.string());
  const std::string id = video_id_for(path);
  if (fs::is_directory(path)) {
    double fps = 0.0;
    const auto meta = path / "meta.json";
    if (!fs::exists(meta)) throw Error(path.string() + ": frame directory needs a meta.json with fps");
    fps = read_json_file(meta).at("fps").get<double>();
    if (!(fps > 0.0)) throw Error(meta.string() + ": fps must be positive");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".png" || ext == ".PNG")) files.push_back(e.path());
    }
    if (files.empty()) throw Error(path.string() + ": no PNG frames");
    std::sort(files.begin(), files.end());
    std::vector<RgbImage> images;
    images.reserve(files.size());
    for (const auto& f : files) {
      images.push_back(read_image(f));
      if (images.back().width() != images.front().width() || images.back().height() != images.front().height())
        throw Error(f.string() + ": frame size differs from the first frame");
    }
    return FrameSeries::from_images(std::move(images), fps, id);
  }
  cv::VideoCapture cap(path.string());
  if (!cap.isOpened()) throw Error("cannot decode video " + path.string());
  const double fps = cap.get(cv::CAP_PROP_FPS);
  if (!(fps > 0.0)) throw Error(path.string() + ": container reports no frame rate");
  std::vector<RgbImage> images;
  cv::Mat bgr;
  while (cap.read(bgr)) {
    if (bgr.empty()) break;
    if (bgr.type() != CV_8UC3) throw Error(path.string() + ": unsupported pixel format");
    RgbImage img(bgr.cols, bgr.rows);
    auto bytes = img.bytes();
    for (int y = 0; y < bgr.rows; ++y) {
      const auto* row = bgr.ptr<std::uint8_t>(y);
      for (int x = 0; x < bgr.cols; ++x) {
        auto* p = &bytes[(static_cast<std::size_t>(y) * bgr.cols + x) * 3];
        p[0] = row[x * 3 + 2];
        p[1] = row[x * 3 + 1];
        p[2] = row[x * 3];
      }
    }
    images.push_back(std::move(img));
  }
  if (images.empty()) throw Error(path.string() + ": no decodable frames");
  return FrameSeries::from_images(std::move(images), fps, id);
}

void save_frame_directory(const fs::path& dir, const FrameSeries& video) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < video.size(); ++i) {
    std::snprintf(name, sizeof name, "%06zu.png", i);
    write_png(dir / name, video[i].pixels);
  }
  write_json_file(dir / "meta.json", {{"fps", video.fps()}});
}

}  // namespace uiactions
