#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "uiactions/trace.hpp"
#include "uiactions/types.hpp"

namespace uiactions {

inline constexpr int kAnnotationSchemaVersion = 1;
inline constexpr int kDefaultPort = 8765;

/// UIACTIONS_PORT when set to a valid port, else kDefaultPort.
int default_port();

enum class MarkerStyle { BoundingBox, Arrow, TapIcon, ScrollIcon };
std::string_view to_string(MarkerStyle style);
MarkerStyle parse_marker_style(std::string_view name);

/// File-backed annotation documents, one `<video_id>.json` per video. Writes for the same
/// video are serialized; a stored entry is only replaced by one with an equal or later timestamp.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path dir);

  nlohmann::json load(const std::string& video_id) const;
  /// Validates `entries` against `trace`, merges them by scene_index, persists, and returns the document.
  nlohmann::json upsert(const ActionTrace& trace, const nlohmann::json& entries);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::mutex& lock_for(const std::string& video_id);

  std::filesystem::path dir_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Checks one annotation entry; returns it with `timestamp` filled when absent.
nlohmann::json validate_annotation(const ActionTrace& trace, const nlohmann::json& entry);

struct ServiceOptions {
  std::filesystem::path trace;        // trace+loc.json
  std::filesystem::path video;        // container file or frame directory
  std::filesystem::path annotations = "annotations";
  std::string host = "127.0.0.1";
  int port = kDefaultPort;            // 0 picks a free port
  int thumbnail_width = 160;
};

/// HTTP/JSON API over one trace and its video. Artifacts are read once and never written.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and returns the bound port; serve() then blocks until stop().
  int bind();
  void serve();
  void stop();

  // Endpoint bodies, usable without a socket.
  nlohmann::json scenes() const;
  nlohmann::json locations(std::size_t scene, int k) const;
  std::vector<std::uint8_t> thumbnail(std::size_t scene, bool to_shot) const;
  std::vector<std::uint8_t> frame_png(std::size_t index) const;
  nlohmann::json post_annotations(const nlohmann::json& body);
  nlohmann::json export_annotations() const;

  const ActionTrace& trace() const { return trace_; }

 private:
  struct Impl;
  ServiceOptions options_;
  ActionTrace trace_;
  FrameSeries video_;
  bool video_is_file_ = false;
  AnnotationStore store_;
  std::unique_ptr<Impl> impl_;
};

/// Error payload shared by every endpoint: {"error": {"code", "message"}}.
nlohmann::json error_json(const std::string& code, const std::string& message);

}  // namespace uiactions
