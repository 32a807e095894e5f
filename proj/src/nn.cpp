#include "uiactions/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace uiactions::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int Rng::integer(int lo, int hi) {
  if (hi < lo) throw Error("empty integer range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
  // Box-Muller; the first uniform is kept away from zero.
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor image_to_tensor(const RgbImage& image) {
  Tensor t(3, image.height(), image.width());
  const auto bytes = image.bytes();
  const std::size_t plane = static_cast<std::size_t>(image.width()) * image.height();
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c) t.data[c * plane + p] = bytes[p * 3 + c] / 255.0 - 0.5;
  return t;
}

Parameter::Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
  std::size_t count = 1;
  for (int d : shape) count *= static_cast<std::size_t>(d);
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

// --- Conv2d -----------------------------------------------------------------

namespace {
struct ConvCache : Tape::Entry {
  RowMat cols;
  int in_c = 0, in_h = 0, in_w = 0;
};

struct ReluCache : Tape::Entry {
  Tensor output;
};

struct PoolCache : Tape::Entry {
  std::vector<std::size_t> argmax;
  int in_c = 0, in_h = 0, in_w = 0;
};
}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding)
    : weight(name + ".weight", {out_channels, in_channels, kernel, kernel}),
      bias(name + ".bias", {out_channels}),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw Error("invalid convolution geometry for " + name);
}

Tensor Conv2d::forward(const Tensor& x, Tape* tape) const {
  if (x.c != in_) throw Error(weight.name + ": expected " + std::to_string(in_) + " input channels");
  const int oh = out_size(x.h), ow = out_size(x.w);
  if (oh < 1 || ow < 1) throw Error(weight.name + ": input too small");
  const int k = kernel_;
  const Eigen::Index rows = static_cast<Eigen::Index>(in_) * k * k;
  const Eigen::Index cols_n = static_cast<Eigen::Index>(oh) * ow;

  RowMat cols(rows, cols_n);
  for (int ci = 0; ci < in_; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* dst = cols.data() + ((static_cast<Eigen::Index>(ci) * k + ky) * k + kx) * cols_n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ - padding_ + ky;
          double* drow = dst + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= x.h) {
            std::fill(drow, drow + ow, 0.0);
            continue;
          }
          const double* srow = &x.data[(static_cast<std::size_t>(ci) * x.h + iy) * x.w];
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ - padding_ + kx;
            drow[ox] = (ix >= 0 && ix < x.w) ? srow[ix] : 0.0;
          }
        }
      }

  Tensor y(out_, oh, ow);
  Eigen::Map<const RowMat> w(weight.value.data(), out_, rows);
  Eigen::Map<RowMat> ym(y.data.data(), out_, cols_n);
  ym.noalias() = w * cols;
  for (int o = 0; o < out_; ++o) ym.row(o).array() += bias.value[o];

  if (tape) {
    auto& c = tape->push<ConvCache>();
    c.cols = std::move(cols);
    c.in_c = x.c;
    c.in_h = x.h;
    c.in_w = x.w;
  }
  return y;
}

Tensor Conv2d::backward(Tape& tape, const Tensor& grad_out) {
  auto cache = tape.pop<ConvCache>();
  const int k = kernel_;
  const Eigen::Index rows = static_cast<Eigen::Index>(in_) * k * k;
  const int oh = grad_out.h, ow = grad_out.w;
  const Eigen::Index cols_n = static_cast<Eigen::Index>(oh) * ow;

  Eigen::Map<const RowMat> dy(grad_out.data.data(), out_, cols_n);
  Eigen::Map<RowMat> dw(weight.grad.data(), out_, rows);
  dw.noalias() += dy * cache->cols.transpose();
  for (int o = 0; o < out_; ++o) bias.grad[o] += dy.row(o).sum();

  Eigen::Map<const RowMat> w(weight.value.data(), out_, rows);
  RowMat dcols = w.transpose() * dy;

  Tensor dx(cache->in_c, cache->in_h, cache->in_w);
  for (int ci = 0; ci < in_; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* src = dcols.data() + ((static_cast<Eigen::Index>(ci) * k + ky) * k + kx) * cols_n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= dx.h) continue;
          double* drow = &dx.data[(static_cast<std::size_t>(ci) * dx.h + iy) * dx.w];
          const double* srow = src + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix >= 0 && ix < dx.w) drow[ix] += srow[ox];
          }
        }
      }
  return dx;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Conv2d::init(Rng& rng) { init(rng, 1.0); }

void Conv2d::init(Rng& rng, double gain) {
  const double fan_in = static_cast<double>(in_) * kernel_ * kernel_;
  const double std_dev = gain * std::sqrt(2.0 / fan_in);
  for (auto& v : weight.value) v = std_dev * rng.normal();
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

// --- Relu / MaxPool ---------------------------------------------------------

Tensor Relu::forward(const Tensor& x, Tape* tape) const {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  if (tape) tape->push<ReluCache>().output = y;
  return y;
}

Tensor Relu::backward(Tape& tape, const Tensor& grad_out) {
  auto cache = tape.pop<ReluCache>();
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (!(cache->output.data[i] > 0.0)) dx.data[i] = 0.0;
  return dx;
}

Tensor MaxPool2::forward(const Tensor& x, Tape* tape) const {
  const int oh = x.h / 2, ow = x.w / 2;
  if (oh < 1 || ow < 1) throw Error("max pool input too small");
  Tensor y(x.c, oh, ow);
  std::vector<std::size_t> argmax(y.size());
  for (int c = 0; c < x.c; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        std::size_t best = (static_cast<std::size_t>(c) * x.h + 2 * oy) * x.w + 2 * ox;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (static_cast<std::size_t>(c) * x.h + 2 * oy + dy) * x.w + 2 * ox + dx;
            if (x.data[idx] > x.data[best]) best = idx;
          }
        const std::size_t o = (static_cast<std::size_t>(c) * oh + oy) * ow + ox;
        y.data[o] = x.data[best];
        argmax[o] = best;
      }
  if (tape) {
    auto& c = tape->push<PoolCache>();
    c.argmax = std::move(argmax);
    c.in_c = x.c;
    c.in_h = x.h;
    c.in_w = x.w;
  }
  return y;
}

Tensor MaxPool2::backward(Tape& tape, const Tensor& grad_out) {
  auto cache = tape.pop<PoolCache>();
  Tensor dx(cache->in_c, cache->in_h, cache->in_w);
  for (std::size_t o = 0; o < grad_out.data.size(); ++o) dx.data[cache->argmax[o]] += grad_out.data[o];
  return dx;
}

// --- Residual blocks --------------------------------------------------------

namespace {
void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw Error("residual shapes differ");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}
}  // namespace

BasicBlock::BasicBlock(const std::string& name, int in_channels, int out_channels, int stride)
    : conv1_(name + ".conv1", in_channels, out_channels, 3, stride, 1),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1, 1) {
  if (stride != 1 || in_channels != out_channels)
    projection_ = std::make_unique<Conv2d>(name + ".proj", in_channels, out_channels, 1, stride, 0);
}

Tensor BasicBlock::forward(const Tensor& x, Tape* tape) const {
  Relu relu;
  Tensor h = relu.forward(conv1_.forward(x, tape), tape);
  Tensor y = conv2_.forward(h, tape);
  add_inplace(y, projection_ ? projection_->forward(x, tape) : x);
  return relu.forward(y, tape);
}

Tensor BasicBlock::backward(Tape& tape, const Tensor& grad_out) {
  Relu relu;
  const Tensor g = relu.backward(tape, grad_out);
  Tensor shortcut = projection_ ? projection_->backward(tape, g) : g;
  Tensor dx = conv1_.backward(tape, relu.backward(tape, conv2_.backward(tape, g)));
  add_inplace(dx, shortcut);
  return dx;
}

void BasicBlock::collect(std::vector<Parameter*>& out) {
  conv1_.collect(out);
  conv2_.collect(out);
  if (projection_) projection_->collect(out);
}

void BasicBlock::init(Rng& rng) {
  conv1_.init(rng, 1.0);
  conv2_.init(rng, 0.5);
  if (projection_) projection_->init(rng, 1.0);
}

Bottleneck::Bottleneck(const std::string& name, int in_channels, int mid_channels, int out_channels, int stride)
    : conv1_(name + ".conv1", in_channels, mid_channels, 1, 1, 0),
      conv2_(name + ".conv2", mid_channels, mid_channels, 3, stride, 1),
      conv3_(name + ".conv3", mid_channels, out_channels, 1, 1, 0) {
  if (stride != 1 || in_channels != out_channels)
    projection_ = std::make_unique<Conv2d>(name + ".proj", in_channels, out_channels, 1, stride, 0);
}

Tensor Bottleneck::forward(const Tensor& x, Tape* tape) const {
  Relu relu;
  Tensor h = relu.forward(conv1_.forward(x, tape), tape);
  h = relu.forward(conv2_.forward(h, tape), tape);
  Tensor y = conv3_.forward(h, tape);
  add_inplace(y, projection_ ? projection_->forward(x, tape) : x);
  return relu.forward(y, tape);
}

Tensor Bottleneck::backward(Tape& tape, const Tensor& grad_out) {
  Relu relu;
  const Tensor g = relu.backward(tape, grad_out);
  Tensor shortcut = projection_ ? projection_->backward(tape, g) : g;
  Tensor d = conv3_.backward(tape, g);
  d = conv2_.backward(tape, relu.backward(tape, d));
  Tensor dx = conv1_.backward(tape, relu.backward(tape, d));
  add_inplace(dx, shortcut);
  return dx;
}

void Bottleneck::collect(std::vector<Parameter*>& out) {
  conv1_.collect(out);
  conv2_.collect(out);
  conv3_.collect(out);
  if (projection_) projection_->collect(out);
}

void Bottleneck::init(Rng& rng) {
  conv1_.init(rng, 1.0);
  conv2_.init(rng, 1.0);
  conv3_.init(rng, 0.5);
  if (projection_) projection_->init(rng, 1.0);
}

// --- Sequential -------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, Tape* tape) const {
  Tensor h = x;
  for (const auto& l : layers_) h = l->forward(h, tape);
  return h;
}

Tensor Sequential::backward(Tape& tape, const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(tape, g);
  return g;
}

void Sequential::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect(out);
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

// --- Linear -----------------------------------------------------------------

Linear::Linear(std::string name, int in_features, int out_features)
    : weight(name + ".weight", {out_features, in_features}), bias(name + ".bias", {out_features}),
      in_(in_features), out_(out_features) {}

std::vector<double> Linear::forward(const std::vector<double>& x, int rows) const {
  Eigen::Map<const RowMat> xm(x.data(), rows, in_);
  Eigen::Map<const RowMat> w(weight.value.data(), out_, in_);
  std::vector<double> y(static_cast<std::size_t>(rows) * out_);
  Eigen::Map<RowMat> ym(y.data(), rows, out_);
  ym.noalias() = xm * w.transpose();
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < out_; ++o) ym(r, o) += bias.value[o];
  return y;
}

std::vector<double> Linear::backward(const std::vector<double>& x, const std::vector<double>& grad_out, int rows) {
  Eigen::Map<const RowMat> xm(x.data(), rows, in_);
  Eigen::Map<const RowMat> dy(grad_out.data(), rows, out_);
  Eigen::Map<RowMat> dw(weight.grad.data(), out_, in_);
  dw.noalias() += dy.transpose() * xm;
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < out_; ++o) bias.grad[o] += dy(r, o);
  Eigen::Map<const RowMat> w(weight.value.data(), out_, in_);
  std::vector<double> dx(static_cast<std::size_t>(rows) * in_);
  Eigen::Map<RowMat> dxm(dx.data(), rows, in_);
  dxm.noalias() = dy * w;
  return dx;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Linear::init(Rng& rng, double gain) {
  const double std_dev = gain * std::sqrt(2.0 / in_);
  for (auto& v : weight.value) v = std_dev * rng.normal();
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

// --- Pooling ----------------------------------------------------------------

namespace {
struct BilinearTap {
  int x0, y0, x1, y1;
  double wx, wy;
};

// Feature cell j is centered at j + 0.5.
BilinearTap bilinear(const Tensor& f, double u, double v) {
  const double gx = std::clamp(u - 0.5, 0.0, static_cast<double>(f.w - 1));
  const double gy = std::clamp(v - 0.5, 0.0, static_cast<double>(f.h - 1));
  const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
  return {x0, y0, std::min(x0 + 1, f.w - 1), std::min(y0 + 1, f.h - 1), gx - x0, gy - y0};
}
}  // namespace

std::vector<double> roi_align(const Tensor& feat, double x0, double y0, double x1, double y1, int bins) {
  std::vector<double> out(static_cast<std::size_t>(feat.c) * bins * bins);
  const double bw = (x1 - x0) / bins, bh = (y1 - y0) / bins;
  for (int by = 0; by < bins; ++by)
    for (int bx = 0; bx < bins; ++bx) {
      const auto t = bilinear(feat, x0 + (bx + 0.5) * bw, y0 + (by + 0.5) * bh);
      for (int c = 0; c < feat.c; ++c) {
        const double v = (1 - t.wy) * ((1 - t.wx) * feat.at(c, t.y0, t.x0) + t.wx * feat.at(c, t.y0, t.x1)) +
                         t.wy * ((1 - t.wx) * feat.at(c, t.y1, t.x0) + t.wx * feat.at(c, t.y1, t.x1));
        out[(static_cast<std::size_t>(c) * bins + by) * bins + bx] = v;
      }
    }
  return out;
}

void roi_align_backward(Tensor& grad, const std::vector<double>& g, double x0, double y0, double x1, double y1,
                        int bins) {
  const double bw = (x1 - x0) / bins, bh = (y1 - y0) / bins;
  for (int by = 0; by < bins; ++by)
    for (int bx = 0; bx < bins; ++bx) {
      const auto t = bilinear(grad, x0 + (bx + 0.5) * bw, y0 + (by + 0.5) * bh);
      for (int c = 0; c < grad.c; ++c) {
        const double d = g[(static_cast<std::size_t>(c) * bins + by) * bins + bx];
        grad.at(c, t.y0, t.x0) += d * (1 - t.wy) * (1 - t.wx);
        grad.at(c, t.y0, t.x1) += d * (1 - t.wy) * t.wx;
        grad.at(c, t.y1, t.x0) += d * t.wy * (1 - t.wx);
        grad.at(c, t.y1, t.x1) += d * t.wy * t.wx;
      }
    }
}

std::vector<double> global_average(const Tensor& feat) {
  std::vector<double> out(feat.c, 0.0);
  const std::size_t plane = static_cast<std::size_t>(feat.h) * feat.w;
  for (int c = 0; c < feat.c; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += feat.data[c * plane + i];
    out[c] = s / static_cast<double>(plane);
  }
  return out;
}

void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg, int step, double grad_scale) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, step);
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    if (p->adam_m.size() != p->size()) {
      p->adam_m.assign(p->size(), 0.0);
      p->adam_v.assign(p->size(), 0.0);
    }
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i] * grad_scale + cfg.weight_decay * p->value[i];
      p->adam_m[i] = cfg.beta1 * p->adam_m[i] + (1 - cfg.beta1) * g;
      p->adam_v[i] = cfg.beta2 * p->adam_v[i] + (1 - cfg.beta2) * g * g;
      p->value[i] -= cfg.lr * (p->adam_m[i] / bc1) / (std::sqrt(p->adam_v[i] / bc2) + cfg.eps);
    }
  }
}

}  // namespace uiactions::nn
