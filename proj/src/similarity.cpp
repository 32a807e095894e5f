#include "uiactions/similarity.hpp"

#include <algorithm>
#include <cmath>

namespace uiactions {

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) throw Error("SSIM window must be odd and >= 3");
  if (!(gaussian_sigma > 0.0)) throw Error("SSIM gaussian sigma must be positive");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw Error("SSIM constants must be positive");
  if (max_width < 0) throw Error("max_width must be non-negative");
}

LumaPlane rgb_to_luma(const RgbImage& image) {
  LumaPlane out(image.width(), image.height());
  const auto bytes = image.bytes();
  for (std::size_t i = 0, p = 0; p < out.values.size(); ++p, i += 3) {
    const double y = 0.299 * bytes[i] + 0.587 * bytes[i + 1] + 0.114 * bytes[i + 2];
    out.values[p] = std::clamp(y, 0.0, 255.0);
  }
  return out;
}

LumaPlane comparison_luma(const RgbImage& image, const SsimParams& params) {
  LumaPlane y = rgb_to_luma(image);
  if (params.max_width > 0 && y.width > params.max_width) {
    const int h = std::max(1, static_cast<int>(std::lround(
                                  static_cast<double>(y.height) * params.max_width / y.width)));
    y = resize(y, params.max_width, h);
  }
  return y;
}

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(window);
  const int r = window / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// "Valid" separable convolution: output is (w - n + 1) x (h - n + 1).
class ValidFilter {
 public:
  ValidFilter(int width, int height, const SsimParams& p)
      : w_(width), h_(height), n_(p.window), kernel_(gaussian_kernel(p.window, p.gaussian_sigma)),
        tmp_(static_cast<std::size_t>(height) * (width - p.window + 1)) {}

  int out_width() const { return w_ - n_ + 1; }
  int out_height() const { return h_ - n_ + 1; }

  std::vector<double> apply(const std::vector<double>& src) {
    const int ow = out_width(), oh = out_height();
    for (int y = 0; y < h_; ++y) {
      double* row = &tmp_[static_cast<std::size_t>(y) * ow];
      const double* srow = &src[static_cast<std::size_t>(y) * w_];
      std::fill(row, row + ow, 0.0);
      for (int k = 0; k < n_; ++k) {
        const double wk = kernel_[k];
        for (int x = 0; x < ow; ++x) row[x] += wk * srow[x + k];
      }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y) {
      double* orow = &out[static_cast<std::size_t>(y) * ow];
      for (int k = 0; k < n_; ++k) {
        const double wk = kernel_[k];
        const double* trow = &tmp_[static_cast<std::size_t>(y + k) * ow];
        for (int x = 0; x < ow; ++x) orow[x] += wk * trow[x];
      }
    }
    return out;
  }

 private:
  int w_, h_, n_;
  std::vector<double> kernel_;
  std::vector<double> tmp_;
};

// Local first and second moments of one plane.
struct PlaneMoments {
  std::vector<double> mean;
  std::vector<double> mean_sq;
};

PlaneMoments moments(const LumaPlane& p, ValidFilter& f) {
  std::vector<double> sq(p.values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = p.values[i] * p.values[i];
  return {f.apply(p.values), f.apply(sq)};
}

double ssim_from_moments(const LumaPlane& a, const PlaneMoments& ma, const LumaPlane& b,
                         const PlaneMoments& mb, ValidFilter& f, const SsimParams& p) {
  std::vector<double> prod(a.values.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.values[i] * b.values[i];
  const auto cross = f.apply(prod);
  double total = 0.0;
  for (std::size_t i = 0; i < cross.size(); ++i) {
    const double mu_a = ma.mean[i], mu_b = mb.mean[i];
    const double var_a = ma.mean_sq[i] - mu_a * mu_a;
    const double var_b = mb.mean_sq[i] - mu_b * mu_b;
    const double cov = cross[i] - mu_a * mu_b;
    const double num = (2.0 * mu_a * mu_b + p.c1) * (2.0 * cov + p.c2);
    const double den = (mu_a * mu_a + mu_b * mu_b + p.c1) * (var_a + var_b + p.c2);
    total += num / den;
  }
  const double mean = total / static_cast<double>(cross.size());
  return std::clamp(mean, 0.0, 1.0);
}

void check_pair(const LumaPlane& a, const LumaPlane& b, const SsimParams& p) {
  p.validate();
  if (a.width != b.width || a.height != b.height)
    throw Error("SSIM inputs differ in size: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  if (a.width < p.window || a.height < p.window)
    throw Error("SSIM input smaller than the " + std::to_string(p.window) + "-pixel window");
}

}  // namespace

double ssim(const LumaPlane& a, const LumaPlane& b, const SsimParams& params) {
  check_pair(a, b, params);
  ValidFilter filter(a.width, a.height, params);
  const auto ma = moments(a, filter);
  const auto mb = moments(b, filter);
  return ssim_from_moments(a, ma, b, mb, filter, params);
}

SimilaritySeries similarity_series(const FrameSeries& video, const SsimParams& params) {
  params.validate();
  if (video.size() < 2) throw Error("similarity series needs at least two frames");
  SimilaritySeries series;
  series.fps = video.fps();
  series.values.reserve(video.size() - 1);

  LumaPlane prev = comparison_luma(video[0].pixels, params);
  check_pair(prev, prev, params);
  ValidFilter filter(prev.width, prev.height, params);
  PlaneMoments prev_m = moments(prev, filter);
  for (std::size_t i = 1; i < video.size(); ++i) {
    LumaPlane cur = comparison_luma(video[i].pixels, params);
    PlaneMoments cur_m = moments(cur, filter);
    series.values.push_back(ssim_from_moments(prev, prev_m, cur, cur_m, filter, params));
    prev = std::move(cur);
    prev_m = std::move(cur_m);
  }
  return series;
}

}  // namespace uiactions
