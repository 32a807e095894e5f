#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/nn.hpp"
#include "uiactions/postprocess.hpp"
#include "uiactions/types.hpp"

namespace uiactions {

enum class EncoderPreset { DeskSmall, PaperResnet101 };

std::string_view to_string(EncoderPreset preset);
EncoderPreset parse_encoder_preset(std::string_view name);

struct EncoderConfig {
  int input_height = 256;
  int input_width = 144;
  EncoderPreset preset = EncoderPreset::DeskSmall;
  // Stages [0, frozen_stages) keep their weights during training.
  int frozen_stages = 0;

  int total_stride() const { return 16; }
  int feature_channels() const;
  void validate() const;
};

/// One residual stage of an encoder preset.
struct EncoderStage {
  std::string block;  // "basic" or "bottleneck"
  int blocks = 0;
  int out_channels = 0;
  int stride = 1;
};

/// Stem (conv + max pool, stride 4) followed by these stages.
std::vector<EncoderStage> encoder_layout(EncoderPreset preset);

struct AnchorConfig {
  std::vector<double> scales{32, 64, 128, 256, 512};
  std::vector<double> ratios{1, 2, 4, 8};  // width : height
  int proposals_kept = 64;
  double nms_iou = 0.7;
  int pre_nms_top = 600;

  int per_cell() const { return static_cast<int>(scales.size() * ratios.size()); }
  void validate() const;
};

struct HeadConfig {
  int pool_bins = 2;
  int hidden = 64;
};

struct TapModelConfig {
  EncoderConfig encoder;
  AnchorConfig anchors;
  HeadConfig head;

  nlohmann::json to_json() const;
  static TapModelConfig from_json(const nlohmann::json& j);
};

/// Axis-aligned box in model-input pixels.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);
Box clip_box(const Box& b, double width, double height);

/// Anchors for every feature cell; index = (row * feat_w + col) * per_cell + scale_idx * |ratios| + ratio_idx.
std::vector<Box> generate_anchors(int feat_h, int feat_w, int stride, const AnchorConfig& cfg);

struct Proposal {
  Box box;
  double objectness = 0.0;
  std::size_t anchor = 0;
};

/// Clips anchors, orders by score (ties by anchor index), applies greedy NMS, keeps top K.
std::vector<Proposal> select_proposals(const std::vector<Box>& anchors, std::span<const double> scores,
                                       double image_width, double image_height, const AnchorConfig& cfg);

/// Unclustered head output, ordered by transit probability.
struct ModelOutput {
  std::vector<NormPoint> coords;  // normalized to the source image
  std::vector<double> probs;
  std::vector<Proposal> rois;     // the RoI behind each coordinate
  double pixel_width = 0.0;       // source content extent in model-input pixels
  double pixel_height = 0.0;
};

struct LossBreakdown {
  double loss_cls = 0.0;
  double loss_reg_x = 0.0;
  double loss_reg_y = 0.0;
  double total = 0.0;
};

struct LossGradient {
  double x = 0.0, y = 0.0;
  std::array<double, 2> logits{0.0, 0.0};
};

double smooth_l1(double d, double beta = 1.0);

/// Two-class cross-entropy plus, for positives, a smooth-L1 pull toward the bound
/// midpoint on each axis where the coordinate falls outside the bound.
LossBreakdown tailored_loss(double x, double y, std::array<double, 2> logits, const BoundingBox& gt, int label,
                            LossGradient* grad = nullptr, double beta = 1.0);

/// Stem (stride 4) and final (stride 16) activations of one image.
struct EncodedImage {
  nn::Tensor low;
  nn::Tensor high;
};

/// Channel means at both levels; the UI-2 summary fed to the head.
struct GlobalFeatures {
  std::vector<double> low;
  std::vector<double> high;
};

GlobalFeatures global_features(const EncodedImage& image);

/// Accumulators for head_backward.
struct HeadGradient {
  explicit HeadGradient(const EncodedImage& ui1);
  nn::Tensor ui1_high;
  nn::Tensor ui1_low;
  GlobalFeatures ui2;
};

class TapModel {
 public:
  explicit TapModel(const TapModelConfig& cfg = {}, std::uint64_t seed = 1);
  TapModel(TapModel&&) noexcept = default;
  TapModel& operator=(TapModel&&) noexcept = default;

  const TapModelConfig& config() const { return cfg_; }

  /// Letterboxes the raster to the configured input size and encodes it.
  nn::Tensor encode(const RgbImage& image) const;
  nn::Tensor encode_tensor(const nn::Tensor& input, nn::Tape* tape) const;
  EncodedImage encode_levels(const nn::Tensor& input, nn::Tape* tape) const;
  nn::Tensor backward_encoder(nn::Tape& tape, const nn::Tensor& grad);
  /// Backward through both levels; `grad_low` (optional) joins at the stem output.
  nn::Tensor backward_levels(nn::Tape& tape, const nn::Tensor& grad_high, const nn::Tensor* grad_low);

  /// Objectness logits, shape (anchors per cell, feat_h, feat_w).
  nn::Tensor rpn_logits(const nn::Tensor& feat, nn::Tape* tape) const;
  nn::Tensor backward_rpn(nn::Tape& tape, const nn::Tensor& grad);

  std::vector<Proposal> propose_regions(const nn::Tensor& feat) const;

  ModelOutput predict_locations(const RgbImage& ui1, const RgbImage& ui2) const;

  /// Head forward over RoIs (model-input pixels); returns rows of [logit0, logit1, dx, dy].
  struct HeadPass {
    std::vector<double> input;   // rows x head input width
    std::vector<double> hidden;  // post-ReLU
    std::vector<double> output;  // rows x 4
    int rows = 0;
  };
  HeadPass head_forward(const EncodedImage& ui1, const GlobalFeatures& ui2, const std::vector<Box>& rois) const;
  /// Accumulates head parameter gradients and adds feature gradients into `grad`.
  void head_backward(const HeadPass& pass, const std::vector<double>& grad_output, const std::vector<Box>& rois,
                     HeadGradient& grad);
  int head_width() const;

  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();

  nlohmann::json checkpoint(const nlohmann::json& metadata = nlohmann::json::object()) const;
  static TapModel from_checkpoint(const nlohmann::json& doc);
  void save(const std::filesystem::path& path, const nlohmann::json& metadata = nlohmann::json::object()) const;
  static TapModel load(const std::filesystem::path& path);

  static constexpr const char* kArchitecture = "tap-locator";
  static constexpr int kArchitectureVersion = 1;
  static constexpr int kLowStride = 4;

 private:
  void build(std::uint64_t seed);

  TapModelConfig cfg_;
  nn::Sequential stem_;             // stage 0
  nn::Sequential body_;             // residual stages
  std::vector<int> body_stage_;     // stage index per body block
  nn::Sequential rpn_;
  std::unique_ptr<nn::Linear> fc_;   // shared layer
  std::unique_ptr<nn::Linear> cls_;  // transit logits
  std::unique_ptr<nn::Linear> reg_;  // coordinate offsets from the RoI center
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 4;
  nn::AdamConfig adam{};
  std::uint64_t seed = 7;
  int rpn_samples = 64;
  double rpn_positive_iou = 0.5;
  double rpn_negative_iou = 0.3;
  double head_positive_iou = 0.5;
  int max_positive_rois = 16;
  double negative_ratio = 3.0;
  int jittered_gt_rois = 2;
  double rpn_weight = 1.0;
  ClusterConfig cluster{};
  std::vector<int> eval_k{1, 3, 5};

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean tailored loss
  double loss_cls = 0.0;
  double loss_reg = 0.0;
  double rpn_loss = 0.0;
  std::map<int, double> val_precision;

  nlohmann::json to_json() const;
  bool operator==(const EpochMetrics&) const = default;
};

struct TrainResult {
  TapModel model;
  std::vector<EpochMetrics> history;
};

/// Deterministic given cfg.seed; sample order is canonicalized by id before shuffling.
TrainResult train(std::vector<TransitionSample> train_set, const std::vector<TransitionSample>& val_set,
                  const TapModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Predicts and clusters; returns ranked predictions per sample.
std::vector<std::vector<TapPrediction>> predict_ranked(const TapModel& model,
                                                       const std::vector<TransitionSample>& samples,
                                                       const ClusterConfig& cluster = {});

}  // namespace uiactions
