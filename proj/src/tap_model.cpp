#include "uiactions/tap_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uiactions/metrics.hpp"
#include "uiactions/trace.hpp"

namespace uiactions {

using nlohmann::json;

std::string_view to_string(EncoderPreset preset) {
  return preset == EncoderPreset::DeskSmall ? "DESK_SMALL" : "PAPER_RESNET101";
}

EncoderPreset parse_encoder_preset(std::string_view name) {
  if (name == "DESK_SMALL") return EncoderPreset::DeskSmall;
  if (name == "PAPER_RESNET101") return EncoderPreset::PaperResnet101;
  throw Error("unknown encoder preset: " + std::string(name));
}

std::vector<EncoderStage> encoder_layout(EncoderPreset preset) {
  if (preset == EncoderPreset::DeskSmall) return {{"basic", 2, 16, 2}, {"basic", 4, 32, 2}};
  // ResNet-101 through its fourth stage (stride 16, as used for region proposals).
  return {{"bottleneck", 3, 256, 1}, {"bottleneck", 4, 512, 2}, {"bottleneck", 23, 1024, 2}};
}

namespace {
int stem_channels(EncoderPreset p) { return p == EncoderPreset::DeskSmall ? 16 : 64; }
}  // namespace

int EncoderConfig::feature_channels() const { return encoder_layout(preset).back().out_channels; }

void EncoderConfig::validate() const {
  if (input_height < total_stride() || input_width < total_stride())
    throw Error("encoder input must be at least one stride in each dimension");
  if (input_height % total_stride() != 0 || input_width % total_stride() != 0)
    throw Error("encoder input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                " is not divisible by the encoder stride " + std::to_string(total_stride()));
  const int stages = static_cast<int>(encoder_layout(preset).size()) + 1;
  if (frozen_stages < 0 || frozen_stages > stages) throw Error("frozen_stages out of range");
}

void AnchorConfig::validate() const {
  if (scales.empty() || ratios.empty()) throw Error("anchor scales and ratios must be non-empty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw Error("anchor scales must be positive");
    if (i > 0 && !(scales[i] > scales[i - 1])) throw Error("anchor scales must be ascending");
  }
  for (double r : ratios)
    if (!(r > 0.0)) throw Error("anchor ratios must be positive");
  if (proposals_kept < 1) throw Error("proposals_kept must be >= 1");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw Error("nms_iou must lie in (0,1]");
  if (pre_nms_top < proposals_kept) throw Error("pre_nms_top must be >= proposals_kept");
}

json TapModelConfig::to_json() const {
  return {{"encoder",
           {{"input_height", encoder.input_height},
            {"input_width", encoder.input_width},
            {"preset", to_string(encoder.preset)},
            {"frozen_stages", encoder.frozen_stages}}},
          {"anchors",
           {{"scales", anchors.scales},
            {"ratios", anchors.ratios},
            {"proposals_kept", anchors.proposals_kept},
            {"nms_iou", anchors.nms_iou},
            {"pre_nms_top", anchors.pre_nms_top}}},
          {"head", {{"pool_bins", head.pool_bins}, {"hidden", head.hidden}}}};
}

TapModelConfig TapModelConfig::from_json(const json& j) {
  TapModelConfig c;
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    c.encoder.input_height = e.value("input_height", c.encoder.input_height);
    c.encoder.input_width = e.value("input_width", c.encoder.input_width);
    c.encoder.preset = parse_encoder_preset(e.value("preset", std::string("DESK_SMALL")));
    c.encoder.frozen_stages = e.value("frozen_stages", 0);
  }
  if (j.contains("anchors")) {
    const auto& a = j["anchors"];
    c.anchors.scales = a.value("scales", c.anchors.scales);
    c.anchors.ratios = a.value("ratios", c.anchors.ratios);
    c.anchors.proposals_kept = a.value("proposals_kept", c.anchors.proposals_kept);
    c.anchors.nms_iou = a.value("nms_iou", c.anchors.nms_iou);
    c.anchors.pre_nms_top = a.value("pre_nms_top", c.anchors.pre_nms_top);
  }
  if (j.contains("head")) {
    c.head.pool_bins = j["head"].value("pool_bins", c.head.pool_bins);
    c.head.hidden = j["head"].value("hidden", c.head.hidden);
  }
  return c;
}

// --- Boxes and proposals ----------------------------------------------------

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box clip_box(const Box& b, double w, double h) {
  return {std::clamp(b.x0, 0.0, w), std::clamp(b.y0, 0.0, h), std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h)};
}

std::vector<Box> generate_anchors(int feat_h, int feat_w, int stride, const AnchorConfig& cfg) {
  cfg.validate();
  std::vector<Box> out;
  out.reserve(static_cast<std::size_t>(feat_h) * feat_w * cfg.per_cell());
  for (int y = 0; y < feat_h; ++y)
    for (int x = 0; x < feat_w; ++x) {
      const double cx = (x + 0.5) * stride, cy = (y + 0.5) * stride;
      for (double s : cfg.scales)
        for (double r : cfg.ratios) {
          const double w = s * std::sqrt(r), h = s / std::sqrt(r);
          out.push_back({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
        }
    }
  return out;
}

std::vector<Proposal> select_proposals(const std::vector<Box>& anchors, std::span<const double> scores,
                                       double image_w, double image_h, const AnchorConfig& cfg) {
  if (anchors.size() != scores.size()) throw Error("one score per anchor required");
  std::vector<std::size_t> order;
  std::vector<Box> clipped(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    clipped[i] = clip_box(anchors[i], image_w, image_h);
    if (clipped[i].width() >= 1.0 && clipped[i].height() >= 1.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (order.size() > static_cast<std::size_t>(cfg.pre_nms_top)) order.resize(cfg.pre_nms_top);

  std::vector<Proposal> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (const auto& k : kept)
      if (iou(k.box, clipped[idx]) > cfg.nms_iou) {
        suppressed = true;
        break;
      }
    if (suppressed) continue;
    kept.push_back({clipped[idx], scores[idx], idx});
    if (kept.size() == static_cast<std::size_t>(cfg.proposals_kept)) break;
  }
  return kept;
}

// --- Loss -------------------------------------------------------------------

double smooth_l1(double d, double beta) {
  const double a = std::abs(d);
  return a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
}

namespace {
double smooth_l1_grad(double d, double beta) {
  if (std::abs(d) < beta) return d / beta;
  return d > 0 ? 1.0 : -1.0;
}
}  // namespace

LossBreakdown tailored_loss(double x, double y, std::array<double, 2> logits, const BoundingBox& gt, int label,
                            LossGradient* grad, double beta) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(logits[0]) || !std::isfinite(logits[1]))
    throw Error("tailored_loss received a non-finite input");
  if (label != 0 && label != 1) throw Error("tailored_loss label must be 0 or 1");
  if (!(beta > 0.0)) throw Error("smooth-L1 beta must be positive");

  LossBreakdown out;
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  out.loss_cls = lse - logits[static_cast<std::size_t>(label)];
  if (grad) {
    *grad = {};
    for (int k = 0; k < 2; ++k)
      grad->logits[static_cast<std::size_t>(k)] = std::exp(logits[static_cast<std::size_t>(k)] - lse) - (k == label ? 1.0 : 0.0);
  }
  if (label == 1) {
    if (x < gt.x_lower() || x > gt.x_upper()) {
      const double d = x - gt.center_x();
      out.loss_reg_x = smooth_l1(d, beta);
      if (grad) grad->x = smooth_l1_grad(d, beta);
    }
    if (y < gt.y_lower() || y > gt.y_upper()) {
      const double d = y - gt.center_y();
      out.loss_reg_y = smooth_l1(d, beta);
      if (grad) grad->y = smooth_l1_grad(d, beta);
    }
  }
  out.total = out.loss_cls + out.loss_reg_x + out.loss_reg_y;
  return out;
}

// --- Model ------------------------------------------------------------------

TapModel::TapModel(const TapModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.encoder.validate();
  cfg_.anchors.validate();
  if (cfg_.head.pool_bins < 1 || cfg_.head.hidden < 1) throw Error("invalid head configuration");
  build(seed);
}

void TapModel::build(std::uint64_t seed) {
  const auto preset = cfg_.encoder.preset;
  const int c0 = stem_channels(preset);
  const int stem_k = preset == EncoderPreset::DeskSmall ? 3 : 7;
  stem_.add(std::make_unique<nn::Conv2d>("encoder.stem", 3, c0, stem_k, 2, stem_k / 2));
  stem_.add(std::make_unique<nn::Relu>());
  stem_.add(std::make_unique<nn::MaxPool2>());
  int in = c0;
  const auto layout = encoder_layout(preset);
  for (std::size_t s = 0; s < layout.size(); ++s) {
    const auto& st = layout[s];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string name = "encoder.s" + std::to_string(s + 1) + "b" + std::to_string(b);
      const int stride = b == 0 ? st.stride : 1;
      if (st.block == "basic")
        body_.add(std::make_unique<nn::BasicBlock>(name, in, st.out_channels, stride));
      else
        body_.add(std::make_unique<nn::Bottleneck>(name, in, st.out_channels / 4, st.out_channels, stride));
      body_stage_.push_back(static_cast<int>(s) + 1);
      in = st.out_channels;
    }
  }
  const int rpn_mid = std::min(in, 256);
  auto rpn_conv = std::make_unique<nn::Conv2d>("rpn.conv", in, rpn_mid, 3, 1, 1);
  auto rpn_out = std::make_unique<nn::Conv2d>("rpn.objectness", rpn_mid, cfg_.anchors.per_cell(), 1, 1, 0);
  const int bins = cfg_.head.pool_bins;
  fc_ = std::make_unique<nn::Linear>("head.fc", head_width(), cfg_.head.hidden);
  cls_ = std::make_unique<nn::Linear>("head.cls", cfg_.head.hidden, 2);
  reg_ = std::make_unique<nn::Linear>("head.reg", cfg_.head.hidden, 2);
  (void)bins;

  nn::Rng rng(seed);
  stem_.init(rng);
  body_.init(rng);
  rpn_conv->init(rng, 1.0);
  rpn_out->init(rng, 0.1);
  rpn_.add(std::move(rpn_conv));
  rpn_.add(std::make_unique<nn::Relu>());
  rpn_.add(std::move(rpn_out));
  fc_->init(rng, 1.0);
  cls_->init(rng, 0.5);
  reg_->init(rng, 0.05);

  auto freeze = [](nn::Module& m) {
    std::vector<nn::Parameter*> ps;
    m.collect(ps);
    for (auto* p : ps) p->trainable = false;
  };
  if (cfg_.encoder.frozen_stages > 0) freeze(stem_);
  for (std::size_t i = 0; i < body_.size(); ++i)
    if (body_stage_[i] < cfg_.encoder.frozen_stages) freeze(body_[i]);
}

EncodedImage TapModel::encode_levels(const nn::Tensor& input, nn::Tape* tape) const {
  if (input.c != 3 || input.h != cfg_.encoder.input_height || input.w != cfg_.encoder.input_width)
    throw Error("encoder input must be 3x" + std::to_string(cfg_.encoder.input_height) + "x" +
                std::to_string(cfg_.encoder.input_width));
  EncodedImage out;
  out.low = stem_.forward(input, tape);
  out.high = body_.forward(out.low, tape);
  return out;
}

nn::Tensor TapModel::encode_tensor(const nn::Tensor& input, nn::Tape* tape) const {
  return encode_levels(input, tape).high;
}

nn::Tensor TapModel::encode(const RgbImage& image) const {
  const auto lb = letterbox(image, cfg_.encoder.input_width, cfg_.encoder.input_height);
  return encode_tensor(nn::image_to_tensor(lb.image), nullptr);
}

nn::Tensor TapModel::backward_levels(nn::Tape& tape, const nn::Tensor& grad_high, const nn::Tensor* grad_low) {
  nn::Tensor g = body_.backward(tape, grad_high);
  if (grad_low) {
    if (!g.same_shape(*grad_low)) throw Error("low-level gradient shape mismatch");
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += grad_low->data[i];
  }
  return stem_.backward(tape, g);
}

nn::Tensor TapModel::backward_encoder(nn::Tape& tape, const nn::Tensor& grad) {
  return backward_levels(tape, grad, nullptr);
}

GlobalFeatures global_features(const EncodedImage& image) {
  return {nn::global_average(image.low), nn::global_average(image.high)};
}

nn::Tensor TapModel::rpn_logits(const nn::Tensor& feat, nn::Tape* tape) const { return rpn_.forward(feat, tape); }

nn::Tensor TapModel::backward_rpn(nn::Tape& tape, const nn::Tensor& grad) { return rpn_.backward(tape, grad); }

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> anchor_scores(const nn::Tensor& logits) {
  std::vector<double> scores;
  scores.reserve(logits.size());
  for (int y = 0; y < logits.h; ++y)
    for (int x = 0; x < logits.w; ++x)
      for (int a = 0; a < logits.c; ++a) scores.push_back(sigmoid(logits.at(a, y, x)));
  return scores;
}
}  // namespace

std::vector<Proposal> TapModel::propose_regions(const nn::Tensor& feat) const {
  const auto logits = rpn_logits(feat, nullptr);
  const auto anchors = generate_anchors(feat.h, feat.w, cfg_.encoder.total_stride(), cfg_.anchors);
  const auto scores = anchor_scores(logits);
  return select_proposals(anchors, scores, cfg_.encoder.input_width, cfg_.encoder.input_height, cfg_.anchors);
}

namespace {

// Appends [pooled bins | global | |bin - global| per bin] for one feature level.
void append_level(std::vector<double>& row, const std::vector<double>& pooled, const std::vector<double>& global,
                  std::size_t cells) {
  row.insert(row.end(), pooled.begin(), pooled.end());
  row.insert(row.end(), global.begin(), global.end());
  for (std::size_t k = 0; k < global.size(); ++k)
    for (std::size_t q = 0; q < cells; ++q) row.push_back(std::abs(pooled[k * cells + q] - global[k]));
}

std::size_t level_width(std::size_t channels, std::size_t cells) { return channels * (2 * cells + 1); }

// Inverse of append_level: returns the pooled-bin gradient and accumulates into `dglobal`.
std::vector<double> level_backward(const double* in, const double* d, std::size_t channels, std::size_t cells,
                                   std::vector<double>& dglobal) {
  const std::size_t pooled = channels * cells;
  const double* g = in + pooled;
  const double* d_agree = d + pooled + channels;
  std::vector<double> dp(d, d + pooled);
  for (std::size_t k = 0; k < channels; ++k) {
    dglobal[k] += d[pooled + k];
    for (std::size_t q = 0; q < cells; ++q) {
      const double v = in[k * cells + q];
      const double sign = v > g[k] ? 1.0 : (v < g[k] ? -1.0 : 0.0);
      dp[k * cells + q] += d_agree[k * cells + q] * sign;
      dglobal[k] -= d_agree[k * cells + q] * sign;
    }
  }
  return dp;
}

}  // namespace

int TapModel::head_width() const {
  const int c = cfg_.encoder.feature_channels(), c0 = stem_channels(cfg_.encoder.preset);
  const int bins = cfg_.head.pool_bins;
  const std::size_t cells = static_cast<std::size_t>(bins) * bins;
  return static_cast<int>(level_width(static_cast<std::size_t>(c), cells) +
                          level_width(static_cast<std::size_t>(c0), cells)) + 4;
}

// Row layout: per level (final, then stem) [RoI bins | UI-2 means | |bin - UI-2 mean|], then geometry. The
// absolute differences vanish where part of the RoI looks like UI-2.
TapModel::HeadPass TapModel::head_forward(const EncodedImage& ui1, const GlobalFeatures& ui2,
                                          const std::vector<Box>& rois) const {
  const int bins = cfg_.head.pool_bins;
  const std::size_t cells = static_cast<std::size_t>(bins) * bins;
  const double stride = cfg_.encoder.total_stride(), low_stride = kLowStride;
  const double W = cfg_.encoder.input_width, H = cfg_.encoder.input_height;
  const int c = cfg_.encoder.feature_channels(), c0 = stem_channels(cfg_.encoder.preset);
  if (ui1.high.c != c || ui1.low.c != c0 || ui2.high.size() != static_cast<std::size_t>(c) ||
      ui2.low.size() != static_cast<std::size_t>(c0))
    throw Error("head inputs do not match the encoder channels");
  HeadPass pass;
  pass.rows = static_cast<int>(rois.size());
  pass.input.reserve(rois.size() * static_cast<std::size_t>(head_width()));
  for (const auto& r : rois) {
    append_level(pass.input,
                 nn::roi_align(ui1.high, r.x0 / stride, r.y0 / stride, r.x1 / stride, r.y1 / stride, bins),
                 ui2.high, cells);
    append_level(pass.input,
                 nn::roi_align(ui1.low, r.x0 / low_stride, r.y0 / low_stride, r.x1 / low_stride,
                               r.y1 / low_stride, bins),
                 ui2.low, cells);
    pass.input.push_back(r.center_x() / W - 0.5);
    pass.input.push_back(r.center_y() / H - 0.5);
    pass.input.push_back(r.width() / W);
    pass.input.push_back(r.height() / H);
  }
  if (pass.rows == 0) return pass;
  pass.hidden = fc_->forward(pass.input, pass.rows);
  for (auto& v : pass.hidden) v = v > 0.0 ? v : 0.0;
  const auto cls = cls_->forward(pass.hidden, pass.rows);
  const auto reg = reg_->forward(pass.hidden, pass.rows);
  pass.output.resize(static_cast<std::size_t>(pass.rows) * 4);
  for (int r = 0; r < pass.rows; ++r) {
    pass.output[r * 4 + 0] = cls[r * 2 + 0];
    pass.output[r * 4 + 1] = cls[r * 2 + 1];
    pass.output[r * 4 + 2] = reg[r * 2 + 0];
    pass.output[r * 4 + 3] = reg[r * 2 + 1];
  }
  return pass;
}

HeadGradient::HeadGradient(const EncodedImage& ui1)
    : ui1_high(ui1.high.c, ui1.high.h, ui1.high.w),
      ui1_low(ui1.low.c, ui1.low.h, ui1.low.w),
      ui2{std::vector<double>(static_cast<std::size_t>(ui1.low.c), 0.0),
          std::vector<double>(static_cast<std::size_t>(ui1.high.c), 0.0)} {}

void TapModel::head_backward(const HeadPass& pass, const std::vector<double>& grad_output,
                             const std::vector<Box>& rois, HeadGradient& grad) {
  if (pass.rows == 0) return;
  const int rows = pass.rows;
  if (grad_output.size() != static_cast<std::size_t>(rows) * 4) throw Error("head gradient has the wrong size");
  std::vector<double> dcls(static_cast<std::size_t>(rows) * 2), dreg(static_cast<std::size_t>(rows) * 2);
  for (int r = 0; r < rows; ++r) {
    dcls[r * 2] = grad_output[r * 4];
    dcls[r * 2 + 1] = grad_output[r * 4 + 1];
    dreg[r * 2] = grad_output[r * 4 + 2];
    dreg[r * 2 + 1] = grad_output[r * 4 + 3];
  }
  auto dh = cls_->backward(pass.hidden, dcls, rows);
  const auto dh_reg = reg_->backward(pass.hidden, dreg, rows);
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] = pass.hidden[i] > 0.0 ? dh[i] + dh_reg[i] : 0.0;
  const auto dx = fc_->backward(pass.input, dh, rows);

  const int bins = cfg_.head.pool_bins;
  const std::size_t cells = static_cast<std::size_t>(bins) * bins;
  const double stride = cfg_.encoder.total_stride(), low_stride = kLowStride;
  const std::size_t c = grad.ui2.high.size(), c0 = grad.ui2.low.size();
  const std::size_t low0 = level_width(c, cells);
  const std::size_t width = static_cast<std::size_t>(fc_->in_features());
  for (int r = 0; r < rows; ++r) {
    const double* d = &dx[r * width];
    const double* in = &pass.input[r * width];
    const auto dhigh = level_backward(in, d, c, cells, grad.ui2.high);
    const auto dlow = level_backward(in + low0, d + low0, c0, cells, grad.ui2.low);
    const auto& b = rois[static_cast<std::size_t>(r)];
    nn::roi_align_backward(grad.ui1_high, dhigh, b.x0 / stride, b.y0 / stride, b.x1 / stride, b.y1 / stride, bins);
    nn::roi_align_backward(grad.ui1_low, dlow, b.x0 / low_stride, b.y0 / low_stride, b.x1 / low_stride,
                           b.y1 / low_stride, bins);
  }
}

ModelOutput TapModel::predict_locations(const RgbImage& ui1, const RgbImage& ui2) const {
  const int W = cfg_.encoder.input_width, H = cfg_.encoder.input_height;
  const auto lb1 = letterbox(ui1, W, H);
  const auto lb2 = letterbox(ui2, W, H);
  const auto f1 = encode_levels(nn::image_to_tensor(lb1.image), nullptr);
  const auto f2 = encode_levels(nn::image_to_tensor(lb2.image), nullptr);
  const auto proposals = propose_regions(f1.high);
  std::vector<Box> boxes;
  for (const auto& p : proposals) boxes.push_back(p.box);
  const auto pass = head_forward(f1, global_features(f2), boxes);

  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> prob(proposals.size());
  for (std::size_t r = 0; r < proposals.size(); ++r) {
    const double l0 = pass.output[r * 4], l1 = pass.output[r * 4 + 1];
    prob[r] = 1.0 / (1.0 + std::exp(l0 - l1));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prob[a] > prob[b]; });

  ModelOutput out;
  out.pixel_width = lb1.content_width;
  out.pixel_height = lb1.content_height;
  for (std::size_t r : order) {
    const auto& b = boxes[r];
    const double cx = b.center_x() / W + pass.output[r * 4 + 2];
    const double cy = b.center_y() / H + pass.output[r * 4 + 3];
    out.coords.push_back({std::clamp(lb1.to_source_x(cx), 0.0, 1.0), std::clamp(lb1.to_source_y(cy), 0.0, 1.0)});
    out.probs.push_back(prob[r]);
    out.rois.push_back(proposals[r]);
  }
  return out;
}

std::vector<nn::Parameter*> TapModel::parameters() {
  std::vector<nn::Parameter*> ps;
  stem_.collect(ps);
  body_.collect(ps);
  rpn_.collect(ps);
  fc_->collect(ps);
  cls_->collect(ps);
  reg_->collect(ps);
  return ps;
}

std::size_t TapModel::parameter_count() const {
  std::size_t n = 0;
  for (auto* p : const_cast<TapModel*>(this)->parameters()) n += p->size();
  return n;
}

void TapModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

json TapModel::checkpoint(const json& metadata) const {
  json params = json::object();
  for (auto* p : const_cast<TapModel*>(this)->parameters())
    params[p->name] = {{"shape", p->shape}, {"values", p->value}};
  return {{"schema_version", 1},
          {"kind", "tap_model_checkpoint"},
          {"architecture", {{"name", kArchitecture}, {"version", kArchitectureVersion}}},
          {"config", cfg_.to_json()},
          {"parameters", std::move(params)},
          {"metadata", metadata}};
}

TapModel TapModel::from_checkpoint(const json& doc) {
  if (doc.value("kind", std::string{}) != "tap_model_checkpoint") throw Error("not a tap model checkpoint");
  const auto& arch = doc.at("architecture");
  const std::string name = arch.value("name", std::string{"?"});
  const int version = arch.value("version", -1);
  if (name != kArchitecture || version != kArchitectureVersion)
    throw Error("checkpoint architecture " + name + " v" + std::to_string(version) +
                " does not match this build's " + kArchitecture + " v" + std::to_string(kArchitectureVersion));
  TapModel model(TapModelConfig::from_json(doc.at("config")), 1);
  const auto& params = doc.at("parameters");
  for (auto* p : model.parameters()) {
    if (!params.contains(p->name)) throw Error("checkpoint is missing parameter " + p->name);
    const auto& entry = params[p->name];
    if (entry.at("shape").get<std::vector<int>>() != p->shape)
      throw Error("checkpoint parameter " + p->name + " has a mismatched shape");
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != p->size()) throw Error("checkpoint parameter " + p->name + " has the wrong length");
    p->value = std::move(values);
  }
  return model;
}

void TapModel::save(const std::filesystem::path& path, const json& metadata) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint(metadata).dump() << "\n";
}

TapModel TapModel::load(const std::filesystem::path& path) { return from_checkpoint(read_json_file(path)); }

// --- Training ---------------------------------------------------------------

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", adam.lr},
          {"seed", seed},
          {"rpn_samples", rpn_samples},
          {"rpn_positive_iou", rpn_positive_iou},
          {"rpn_negative_iou", rpn_negative_iou},
          {"head_positive_iou", head_positive_iou},
          {"max_positive_rois", max_positive_rois},
          {"negative_ratio", negative_ratio},
          {"jittered_gt_rois", jittered_gt_rois},
          {"rpn_weight", rpn_weight},
          {"cluster_eps", cluster.eps},
          {"cluster_min_pts", cluster.min_pts},
          {"eval_k", eval_k}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.seed = j.value("seed", c.seed);
  c.rpn_samples = j.value("rpn_samples", c.rpn_samples);
  c.rpn_positive_iou = j.value("rpn_positive_iou", c.rpn_positive_iou);
  c.rpn_negative_iou = j.value("rpn_negative_iou", c.rpn_negative_iou);
  c.head_positive_iou = j.value("head_positive_iou", c.head_positive_iou);
  c.max_positive_rois = j.value("max_positive_rois", c.max_positive_rois);
  c.negative_ratio = j.value("negative_ratio", c.negative_ratio);
  c.jittered_gt_rois = j.value("jittered_gt_rois", c.jittered_gt_rois);
  c.rpn_weight = j.value("rpn_weight", c.rpn_weight);
  c.cluster.eps = j.value("cluster_eps", c.cluster.eps);
  c.cluster.min_pts = j.value("cluster_min_pts", c.cluster.min_pts);
  c.eval_k = j.value("eval_k", c.eval_k);
  return c;
}

json EpochMetrics::to_json() const {
  json p = json::object();
  for (const auto& [k, v] : val_precision) p[std::to_string(k)] = v;
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"loss_cls", loss_cls},
          {"loss_reg", loss_reg},
          {"rpn_loss", rpn_loss},
          {"val_precision_at", p}};
}

namespace {

struct PreparedSample {
  const TransitionSample* source = nullptr;
  nn::Tensor ui1;
  nn::Tensor ui2;
  Box gt_px;
  BoundingBox gt_canvas;
  std::vector<Box> tappable_px;
};

void collect_clickable(const UiElement& e, std::vector<BoundingBox>& out) {
  if (e.clickable && e.children.empty()) out.push_back(e.bounds);
  for (const auto& c : e.children) collect_clickable(c, out);
}

PreparedSample prepare(const TransitionSample& s, const TapModelConfig& cfg) {
  const int W = cfg.encoder.input_width, H = cfg.encoder.input_height;
  const auto lb1 = letterbox(s.ui1, W, H);
  const auto lb2 = letterbox(s.ui2, W, H);
  auto to_canvas = [&](const BoundingBox& b) {
    return Box{lb1.to_canvas_x(b.x_lower()) * W, lb1.to_canvas_y(b.y_lower()) * H, lb1.to_canvas_x(b.x_upper()) * W,
               lb1.to_canvas_y(b.y_upper()) * H};
  };
  PreparedSample p;
  p.source = &s;
  p.ui1 = nn::image_to_tensor(lb1.image);
  p.ui2 = nn::image_to_tensor(lb2.image);
  p.gt_px = to_canvas(s.gt_bounds);
  p.gt_canvas = BoundingBox(std::clamp(p.gt_px.x0 / W, 0.0, 1.0), std::clamp(p.gt_px.y0 / H, 0.0, 1.0),
                            std::clamp(p.gt_px.x1 / W, 0.0, 1.0), std::clamp(p.gt_px.y1 / H, 0.0, 1.0));
  std::vector<BoundingBox> clickable;
  if (s.hierarchy) collect_clickable(s.hierarchy->root, clickable);
  for (const auto& b : clickable) p.tappable_px.push_back(to_canvas(b));
  p.tappable_px.push_back(p.gt_px);
  return p;
}

// Gradient of a channel mean, spread evenly over the plane.
void spread_global(nn::Tensor& grad, const std::vector<double>& dmean) {
  const std::size_t plane = static_cast<std::size_t>(grad.h) * grad.w;
  for (int c = 0; c < grad.c; ++c)
    for (std::size_t i = 0; i < plane; ++i) grad.data[c * plane + i] = dmean[c] / static_cast<double>(plane);
}

struct StepLoss {
  double tailored = 0.0, cls = 0.0, reg = 0.0, rpn = 0.0;
};

template <typename T>
std::vector<T> take_shuffled(std::vector<T> v, std::size_t n, nn::Rng& rng) {
  rng.shuffle(v);
  if (v.size() > n) v.resize(n);
  std::sort(v.begin(), v.end());
  return v;
}

StepLoss train_step(TapModel& model, const PreparedSample& p, const std::vector<Box>& anchors,
                    const TrainConfig& cfg, nn::Rng& rng) {
  const auto& mcfg = model.config();
  const double W = mcfg.encoder.input_width, H = mcfg.encoder.input_height;
  StepLoss loss;

  nn::Tape t1, t2, tr;
  const EncodedImage e1 = model.encode_levels(p.ui1, &t1);
  const EncodedImage e2 = model.encode_levels(p.ui2, &t2);
  const nn::Tensor& f1 = e1.high;
  const nn::Tensor logits = model.rpn_logits(f1, &tr);
  const int per_cell = mcfg.anchors.per_cell();

  // Region proposal targets.
  std::vector<Box> clipped(anchors.size());
  std::vector<int> label(anchors.size(), -1);
  std::vector<double> best_for_box(p.tappable_px.size(), 0.0);
  std::vector<std::size_t> best_anchor(p.tappable_px.size(), 0);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    clipped[i] = clip_box(anchors[i], W, H);
    if (clipped[i].width() < 1.0 || clipped[i].height() < 1.0) continue;
    double best = 0.0;
    for (std::size_t b = 0; b < p.tappable_px.size(); ++b) {
      const double v = iou(clipped[i], p.tappable_px[b]);
      best = std::max(best, v);
      if (v > best_for_box[b]) {
        best_for_box[b] = v;
        best_anchor[b] = i;
      }
    }
    if (best >= cfg.rpn_positive_iou) label[i] = 1;
    else if (best < cfg.rpn_negative_iou) label[i] = 0;
  }
  for (std::size_t b = 0; b < p.tappable_px.size(); ++b)
    if (best_for_box[b] > 0.0) label[best_anchor[b]] = 1;
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == 1) pos.push_back(i);
    else if (label[i] == 0) neg.push_back(i);
  }
  const std::size_t rpn_n = static_cast<std::size_t>(cfg.rpn_samples);
  pos = take_shuffled(std::move(pos), rpn_n / 2, rng);
  neg = take_shuffled(std::move(neg), rpn_n - pos.size(), rng);

  nn::Tensor dlogits(logits.c, logits.h, logits.w);
  const double rpn_count = static_cast<double>(pos.size() + neg.size());
  auto rpn_term = [&](std::size_t idx, double target) {
    const int a = static_cast<int>(idx % per_cell);
    const int cell = static_cast<int>(idx / per_cell);
    const int y = cell / logits.w, x = cell % logits.w;
    const double z = logits.at(a, y, x);
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss.rpn += (softplus - target * z) / rpn_count;
    dlogits.at(a, y, x) += cfg.rpn_weight * (sigmoid(z) - target) / rpn_count;
  };
  for (std::size_t i : pos) rpn_term(i, 1.0);
  for (std::size_t i : neg) rpn_term(i, 0.0);

  // Location head on current proposals plus ground-truth RoIs.
  std::vector<Box> rois;
  for (const auto& pr : select_proposals(anchors, anchor_scores(logits), W, H, mcfg.anchors)) rois.push_back(pr.box);
  rois.push_back(p.gt_px);
  for (int j = 0; j < cfg.jittered_gt_rois; ++j) {
    const double gw = p.gt_px.width(), gh = p.gt_px.height();
    const double cx = p.gt_px.center_x() + rng.uniform(-0.15, 0.15) * gw;
    const double cy = p.gt_px.center_y() + rng.uniform(-0.15, 0.15) * gh;
    const double sw = gw * rng.uniform(0.85, 1.2), sh = gh * rng.uniform(0.85, 1.2);
    rois.push_back(clip_box({cx - sw / 2, cy - sh / 2, cx + sw / 2, cy + sh / 2}, W, H));
  }
  const auto pass = model.head_forward(e1, global_features(e2), rois);

  std::vector<std::size_t> head_pos, head_neg;
  auto coord = [&](std::size_t r) {
    return std::pair{rois[r].center_x() / W + pass.output[r * 4 + 2], rois[r].center_y() / H + pass.output[r * 4 + 3]};
  };
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const auto [x, y] = coord(r);
    if (iou(rois[r], p.gt_px) >= cfg.head_positive_iou) head_pos.push_back(r);
    else if (!p.gt_canvas.contains(x, y)) head_neg.push_back(r);
  }
  head_pos = take_shuffled(std::move(head_pos), static_cast<std::size_t>(cfg.max_positive_rois), rng);
  head_neg = take_shuffled(
      std::move(head_neg),
      static_cast<std::size_t>(std::ceil(cfg.negative_ratio * static_cast<double>(std::max<std::size_t>(head_pos.size(), 1)))),
      rng);

  std::vector<double> dout(pass.output.size(), 0.0);
  const double n_sel = static_cast<double>(head_pos.size() + head_neg.size());
  auto head_term = [&](std::size_t r, int lbl) {
    const auto [x, y] = coord(r);
    LossGradient g;
    const auto lb = tailored_loss(x, y, {pass.output[r * 4], pass.output[r * 4 + 1]}, p.gt_canvas, lbl, &g);
    loss.tailored += lb.total / n_sel;
    loss.cls += lb.loss_cls / n_sel;
    loss.reg += (lb.loss_reg_x + lb.loss_reg_y) / n_sel;
    dout[r * 4] = g.logits[0] / n_sel;
    dout[r * 4 + 1] = g.logits[1] / n_sel;
    dout[r * 4 + 2] = g.x / n_sel;
    dout[r * 4 + 3] = g.y / n_sel;
  };
  for (std::size_t r : head_pos) head_term(r, 1);
  for (std::size_t r : head_neg) head_term(r, 0);

  HeadGradient hg(e1);
  model.head_backward(pass, dout, rois, hg);
  const nn::Tensor drpn = model.backward_rpn(tr, dlogits);
  for (std::size_t i = 0; i < hg.ui1_high.data.size(); ++i) hg.ui1_high.data[i] += drpn.data[i];
  model.backward_levels(t1, hg.ui1_high, &hg.ui1_low);
  nn::Tensor d2_high(e2.high.c, e2.high.h, e2.high.w), d2_low(e2.low.c, e2.low.h, e2.low.w);
  spread_global(d2_high, hg.ui2.high);
  spread_global(d2_low, hg.ui2.low);
  model.backward_levels(t2, d2_high, &d2_low);
  return loss;
}

}  // namespace

std::vector<std::vector<TapPrediction>> predict_ranked(const TapModel& model,
                                                       const std::vector<TransitionSample>& samples,
                                                       const ClusterConfig& cluster) {
  std::vector<std::vector<TapPrediction>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(cluster_predictions(model.predict_locations(s.ui1, s.ui2), cluster));
  return out;
}

TrainResult train(std::vector<TransitionSample> train_set, const std::vector<TransitionSample>& val_set,
                  const TapModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train_set.empty()) throw Error("training split is empty");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw Error("epochs and batch size must be >= 1");
  std::stable_sort(train_set.begin(), train_set.end(),
                   [](const TransitionSample& a, const TransitionSample& b) { return a.id < b.id; });

  nn::Rng rng(cfg.seed);
  TrainResult result{TapModel(model_cfg, rng.next()), {}};
  TapModel& model = result.model;
  const auto& mcfg = model.config();
  const int fh = mcfg.encoder.input_height / mcfg.encoder.total_stride();
  const int fw = mcfg.encoder.input_width / mcfg.encoder.total_stride();
  const auto anchors = generate_anchors(fh, fw, mcfg.encoder.total_stride(), mcfg.anchors);

  std::vector<PreparedSample> prepared;
  prepared.reserve(train_set.size());
  for (const auto& s : train_set) prepared.push_back(prepare(s, mcfg));

  const auto params = model.parameters();
  int step = 0;
  std::vector<std::size_t> order(prepared.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    EpochMetrics m;
    m.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      model.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& p = prepared[order[i]];
        const auto l = train_step(model, p, anchors, cfg, rng);
        if (!std::isfinite(l.tailored) || !std::isfinite(l.rpn))
          throw Error("non-finite loss at epoch " + std::to_string(epoch) + " on sample '" + p.source->id +
                      "' (tailored=" + std::to_string(l.tailored) + ", rpn=" + std::to_string(l.rpn) + ")");
        m.train_loss += l.tailored;
        m.loss_cls += l.cls;
        m.loss_reg += l.reg;
        m.rpn_loss += l.rpn;
      }
      nn::adam_step(params, cfg.adam, ++step, 1.0 / static_cast<double>(end - start));
    }
    const double n = static_cast<double>(prepared.size());
    m.train_loss /= n;
    m.loss_cls /= n;
    m.loss_reg /= n;
    m.rpn_loss /= n;
    if (!val_set.empty()) {
      const auto preds = predict_ranked(model, val_set, cfg.cluster);
      std::vector<BoundingBox> gts;
      for (const auto& s : val_set) gts.push_back(s.gt_bounds);
      for (int k : cfg.eval_k) m.val_precision[k] = precision_at_k(preds, gts, k);
    }
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace uiactions
