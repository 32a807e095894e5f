#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uiactions {

/// Thrown for any violated input contract across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Pixel-aligned integer rectangle, half-open: [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const PixelRect&) const = default;
};

/// Interleaved 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb pixel(int x, int y) const {
    const auto* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set_pixel(int x, int y, Rgb c) {
    auto* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  void fill_rect(const PixelRect& rect, Rgb color);
  RgbImage crop(const PixelRect& rect) const;
  void paste(const RgbImage& patch, int x, int y);

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel double-precision plane, row-major.
struct LumaPlane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  LumaPlane() = default;
  LumaPlane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Area-averaging resize when shrinking, bilinear when enlarging.
RgbImage resize(const RgbImage& src, int width, int height);
LumaPlane resize(const LumaPlane& src, int width, int height);

/// Aspect-preserving fit of an image into a fixed canvas, centered, zero padded.
struct Letterbox {
  RgbImage image;
  double scale = 1.0;   // input pixels per source pixel
  double offset_x = 0;  // content origin inside the canvas
  double offset_y = 0;
  int content_width = 0;
  int content_height = 0;

  // Source-normalized [0,1] <-> canvas-normalized [0,1].
  double to_canvas_x(double source_norm_x) const;
  double to_canvas_y(double source_norm_y) const;
  double to_source_x(double canvas_norm_x) const;
  double to_source_y(double canvas_norm_y) const;
};

Letterbox letterbox(const RgbImage& src, int canvas_width, int canvas_height);

/// Image file I/O (PNG/JPEG via OpenCV codecs).
RgbImage read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

}  // namespace uiactions
