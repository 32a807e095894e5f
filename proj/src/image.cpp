#include "uiactions/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace uiactions {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error("image dimensions must be non-negative");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

void RgbImage::fill_rect(const PixelRect& rect, Rgb color) {
  const int x0 = std::max(rect.x0, 0), x1 = std::min(rect.x1, width_);
  const int y0 = std::max(rect.y0, 0), y1 = std::min(rect.y1, height_);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) set_pixel(x, y, color);
}

RgbImage RgbImage::crop(const PixelRect& rect) const {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > width_ || rect.y1 > height_ || rect.empty())
    throw Error("crop rectangle outside image");
  RgbImage out(rect.width(), rect.height());
  for (int y = 0; y < rect.height(); ++y)
    for (int x = 0; x < rect.width(); ++x) out.set_pixel(x, y, pixel(rect.x0 + x, rect.y0 + y));
  return out;
}

void RgbImage::paste(const RgbImage& patch, int x, int y) {
  for (int py = 0; py < patch.height(); ++py) {
    const int ty = y + py;
    if (ty < 0 || ty >= height_) continue;
    for (int px = 0; px < patch.width(); ++px) {
      const int tx = x + px;
      if (tx < 0 || tx >= width_) continue;
      set_pixel(tx, ty, patch.pixel(px, py));
    }
  }
}

namespace {

// Separable resampling of an interleaved raster with `channels` doubles per pixel.
std::vector<double> resample(const std::vector<double>& src, int sw, int sh, int channels, int dw,
                             int dh) {
  struct Tap {
    int index;
    double weight;
  };
  auto taps_for = [](int src_len, int dst_len) {
    std::vector<std::vector<Tap>> taps(dst_len);
    const double ratio = static_cast<double>(src_len) / dst_len;
    for (int d = 0; d < dst_len; ++d) {
      if (ratio > 1.0) {
        // box filter over the source footprint
        const double lo = d * ratio, hi = (d + 1) * ratio;
        double total = 0;
        for (int s = static_cast<int>(std::floor(lo)); s < static_cast<int>(std::ceil(hi)); ++s) {
          const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
          if (w > 0 && s < src_len) {
            taps[d].push_back({s, w});
            total += w;
          }
        }
        for (auto& t : taps[d]) t.weight /= total;
      } else {
        const double pos = std::clamp((d + 0.5) * ratio - 0.5, 0.0, src_len - 1.0);
        const int s0 = static_cast<int>(std::floor(pos));
        const int s1 = std::min(s0 + 1, src_len - 1);
        const double f = pos - s0;
        taps[d].push_back({s0, 1.0 - f});
        if (s1 != s0) taps[d].push_back({s1, f});
      }
    }
    return taps;
  };
  const auto xt = taps_for(sw, dw);
  const auto yt = taps_for(sh, dh);
  std::vector<double> horiz(static_cast<std::size_t>(sh) * dw * channels, 0.0);
  for (int y = 0; y < sh; ++y)
    for (int x = 0; x < dw; ++x)
      for (const auto& t : xt[x])
        for (int c = 0; c < channels; ++c)
          horiz[(static_cast<std::size_t>(y) * dw + x) * channels + c] +=
              t.weight * src[(static_cast<std::size_t>(y) * sw + t.index) * channels + c];
  std::vector<double> out(static_cast<std::size_t>(dh) * dw * channels, 0.0);
  for (int y = 0; y < dh; ++y)
    for (const auto& t : yt[y])
      for (int x = 0; x < dw; ++x)
        for (int c = 0; c < channels; ++c)
          out[(static_cast<std::size_t>(y) * dw + x) * channels + c] +=
              t.weight * horiz[(static_cast<std::size_t>(t.index) * dw + x) * channels + c];
  return out;
}

}  // namespace

RgbImage resize(const RgbImage& src, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("resize target must be positive");
  if (src.width() == width && src.height() == height) return src;
  std::vector<double> in(src.bytes().begin(), src.bytes().end());
  const auto out = resample(in, src.width(), src.height(), 3, width, height);
  RgbImage dst(width, height);
  auto bytes = dst.bytes();
  for (std::size_t i = 0; i < out.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(out[i]), 0L, 255L));
  return dst;
}

LumaPlane resize(const LumaPlane& src, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("resize target must be positive");
  if (src.width == width && src.height == height) return src;
  LumaPlane dst(width, height);
  dst.values = resample(src.values, src.width, src.height, 1, width, height);
  return dst;
}

double Letterbox::to_canvas_x(double v) const {
  return (offset_x + v * content_width) / image.width();
}
double Letterbox::to_canvas_y(double v) const {
  return (offset_y + v * content_height) / image.height();
}
double Letterbox::to_source_x(double v) const {
  return (v * image.width() - offset_x) / content_width;
}
double Letterbox::to_source_y(double v) const {
  return (v * image.height() - offset_y) / content_height;
}

Letterbox letterbox(const RgbImage& src, int canvas_width, int canvas_height) {
  if (src.empty()) throw Error("cannot letterbox an empty image");
  Letterbox lb;
  lb.scale = std::min(static_cast<double>(canvas_width) / src.width(),
                      static_cast<double>(canvas_height) / src.height());
  lb.content_width = std::clamp(static_cast<int>(std::lround(src.width() * lb.scale)), 1, canvas_width);
  lb.content_height =
      std::clamp(static_cast<int>(std::lround(src.height() * lb.scale)), 1, canvas_height);
  const int ox = (canvas_width - lb.content_width) / 2;
  const int oy = (canvas_height - lb.content_height) / 2;
  lb.offset_x = ox;
  lb.offset_y = oy;
  lb.image = RgbImage(canvas_width, canvas_height);
  lb.image.paste(resize(src, lb.content_width, lb.content_height), ox, oy);
  return lb;
}

RgbImage read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error("cannot decode image: " + path.string());
  RgbImage img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) img.set_pixel(x, y, {row[x][2], row[x][1], row[x][0]});
  }
  return img;
}

namespace {
cv::Mat to_bgr(const RgbImage& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb p = image.pixel(x, y);
      row[x] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  return bgr;
}
}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (!cv::imwrite(path.string(), to_bgr(image))) throw Error("cannot write image: " + path.string());
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", to_bgr(image), buf)) throw Error("png encoding failed");
  return buf;
}

}  // namespace uiactions
