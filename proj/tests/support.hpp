#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "uiactions/image.hpp"
#include "uiactions/nn.hpp"

namespace uiactions::testing {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "uiactions") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline RgbImage random_image(nn::Rng& rng, int w, int h) {
  RgbImage img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.integer(0, 255));
  return img;
}

inline double rel_error(double a, double b) {
  const double denom = std::abs(a) + std::abs(b);
  return denom < 1e-12 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace uiactions::testing
