#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "uiactions/image.hpp"

// Minimal CPU layers with explicit backward passes, sized for desk-scale training.
namespace uiactions::nn {

/// Portable seeded generator: mt19937_64 plus distribution code that does not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi].
  int integer(int lo, int hi);
  double normal();
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Channel-major (C, H, W) activation.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : c(channels), h(height), w(width), data(static_cast<std::size_t>(channels) * height * width, fill) {}

  std::size_t size() const { return data.size(); }
  double& at(int ch, int y, int x) { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

/// Pixels scaled to [-0.5, 0.5], RGB channel planes.
Tensor image_to_tensor(const RgbImage& image);

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s);
  std::size_t size() const { return value.size(); }
  void zero_grad();
};

/// Per-call activation caches, consumed in reverse order by backward().
class Tape {
 public:
  struct Entry {
    virtual ~Entry() = default;
  };

  template <typename T>
  T& push() {
    auto owned = std::make_unique<T>();
    T& ref = *owned;
    entries_.push_back(std::move(owned));
    return ref;
  }
  template <typename T>
  std::unique_ptr<T> pop() {
    if (entries_.empty()) throw Error("backward pass ran past the start of the tape");
    std::unique_ptr<Entry> e = std::move(entries_.back());
    entries_.pop_back();
    auto* typed = dynamic_cast<T*>(e.get());
    if (!typed) throw Error("tape entry type mismatch in backward pass");
    e.release();
    return std::unique_ptr<T>(typed);
  }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<std::unique_ptr<Entry>> entries_;
};

class Module {
 public:
  virtual ~Module() = default;
  /// `tape` may be null for inference.
  virtual Tensor forward(const Tensor& x, Tape* tape) const = 0;
  /// Returns the input gradient and accumulates parameter gradients.
  virtual Tensor backward(Tape& tape, const Tensor& grad_out) = 0;
  virtual void collect(std::vector<Parameter*>& out) = 0;
  virtual void init(Rng& rng) = 0;
};

class Conv2d : public Module {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding);

  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& out) override;
  void init(Rng& rng) override;
  /// He-normal init scaled by `gain`.
  void init(Rng& rng, double gain);

  int out_size(int in) const { return (in + 2 * padding_ - kernel_) / stride_ + 1; }

  Parameter weight;
  Parameter bias;

 private:
  int in_, out_, kernel_, stride_, padding_;
};

class Relu : public Module {
 public:
  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>&) override {}
  void init(Rng&) override {}
};

/// 2x2 max pooling with stride 2 (odd trailing rows/cols dropped).
class MaxPool2 : public Module {
 public:
  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>&) override {}
  void init(Rng&) override {}
};

/// relu(conv3x3(relu(conv3x3_s(x))) + shortcut(x)); 1x1 projection when shape changes.
class BasicBlock : public Module {
 public:
  BasicBlock(const std::string& name, int in_channels, int out_channels, int stride);
  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& out) override;
  void init(Rng& rng) override;

 private:
  Conv2d conv1_, conv2_;
  std::unique_ptr<Conv2d> projection_;
};

/// 1x1 reduce, 3x3 (strided), 1x1 expand, plus shortcut.
class Bottleneck : public Module {
 public:
  Bottleneck(const std::string& name, int in_channels, int mid_channels, int out_channels, int stride);
  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& out) override;
  void init(Rng& rng) override;

 private:
  Conv2d conv1_, conv2_, conv3_;
  std::unique_ptr<Conv2d> projection_;
};

class Sequential : public Module {
 public:
  void add(std::unique_ptr<Module> m) { layers_.push_back(std::move(m)); }
  Tensor forward(const Tensor& x, Tape* tape) const override;
  Tensor backward(Tape& tape, const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& out) override;
  void init(Rng& rng) override;
  std::size_t size() const { return layers_.size(); }
  Module& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Module>> layers_;
};

/// Fully connected layer over a batch of row vectors.
class Linear {
 public:
  Linear(std::string name, int in_features, int out_features);
  /// x: rows x in (row-major), returns rows x out.
  std::vector<double> forward(const std::vector<double>& x, int rows) const;
  /// Accumulates parameter gradients; returns rows x in input gradient.
  std::vector<double> backward(const std::vector<double>& x, const std::vector<double>& grad_out, int rows);
  void collect(std::vector<Parameter*>& out);
  void init(Rng& rng, double gain = 1.0);
  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Parameter weight;
  Parameter bias;

 private:
  int in_, out_;
};

/// Bilinear RoI pooling: `bins` x `bins` samples at bin centers of a box given in
/// feature-map coordinates. Output layout: channel-major, then bin row, then bin col.
std::vector<double> roi_align(const Tensor& feat, double x0, double y0, double x1, double y1, int bins);
void roi_align_backward(Tensor& grad_feat, const std::vector<double>& grad_out, double x0, double y0, double x1,
                        double y1, int bins);

std::vector<double> global_average(const Tensor& feat);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// One Adam update over all trainable parameters; `step` is 1-based.
void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg, int step, double grad_scale);

}  // namespace uiactions::nn
