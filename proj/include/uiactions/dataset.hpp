#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/types.hpp"

namespace uiactions {

inline constexpr int kManifestSchemaVersion = 1;

/// Writes `<dir>/manifest.json` plus `<dir>/images/<id>_ui{1,2}.png`.
void save_manifest(const std::filesystem::path& dir, const std::vector<TransitionSample>& samples,
                   const nlohmann::json& metadata = nlohmann::json::object());
/// Accepts the manifest file or its directory; image paths resolve relative to the manifest.
std::vector<TransitionSample> load_manifest(const std::filesystem::path& path);

/// Manifest entry without pixels (image fields hold the given relative paths).
nlohmann::json sample_to_json(const TransitionSample& sample, const std::string& ui1_path,
                              const std::string& ui2_path);

struct SplitConfig {
  double train = 0.85;
  double val = 0.08;
  double test = 0.07;
  std::uint64_t seed = 13;

  void validate() const;
};

struct DatasetSplit {
  std::vector<TransitionSample> train;
  std::vector<TransitionSample> val;
  std::vector<TransitionSample> test;
};

/// Whole apps go to one split. Apps are shuffled with the seed, then each app lands in the split
/// containing the midpoint of its cumulative sample range.
DatasetSplit split_by_app(const std::vector<TransitionSample>& samples, const SplitConfig& cfg = {});

struct IngestReport {
  std::size_t traces = 0;
  std::size_t samples = 0;
  std::size_t skipped_swipes = 0;
  std::size_t skipped_unresolved = 0;
  std::size_t skipped_malformed = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct IngestResult {
  std::vector<TransitionSample> samples;
  IngestReport report;
};

/// Reads Rico-style interaction traces: `gestures.json` (screen id -> list of normalized points),
/// `screenshots/<id>.{jpg,png}` and `view_hierarchies/<id>.json`. `dir` is one trace or a tree of them;
/// a trace nested as `<app>/<trace>` takes `<app>` as its app id.
IngestResult ingest_rico(const std::filesystem::path& dir);

struct VideoMeta {
  double fps = 30.0;
};

/// Decodes a video container, or reads a directory of frames ordered by file name with a
/// `meta.json` sidecar holding {"fps": ...}.
FrameSeries load_video(const std::filesystem::path& path);
std::string video_id_for(const std::filesystem::path& path);

/// Writes numbered PNG frames and the fps sidecar.
void save_frame_directory(const std::filesystem::path& dir, const FrameSeries& video);

}  // namespace uiactions
