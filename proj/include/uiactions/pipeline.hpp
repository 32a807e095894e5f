#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/augmentation.hpp"
#include "uiactions/dataset.hpp"
#include "uiactions/metrics.hpp"
#include "uiactions/segmenter.hpp"
#include "uiactions/tap_model.hpp"
#include "uiactions/trace.hpp"

// End-to-end commands shared by the CLI, the Python module, and the acceptance suite.
namespace uiactions {

struct PipelineConfig {
  SegmenterConfig segmenter;
  ClusterConfig cluster;
  int top_k = 5;
  TapModelConfig model;
  TrainConfig train;
  SplitConfig split;
  AugmentConfig augment;

  void validate() const;
  nlohmann::json to_json() const;
  /// Applies the keys present in `overrides` on top of `base`; unknown keys are errors.
  static PipelineConfig from_json(const nlohmann::json& overrides, const PipelineConfig& base);
  static PipelineConfig from_json(const nlohmann::json& overrides) { return from_json(overrides, PipelineConfig{}); }
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Segments a video into shots and typed scenes.
ActionTrace segment_video(const FrameSeries& video, const PipelineConfig& cfg = {});

/// Adds top-k clustered predictions to TAP scenes (rank-1 becomes the scene location)
/// and the fixed navigation-bar location to BACKWARD scenes.
ActionTrace predict_trace(const ActionTrace& trace, const FrameSeries& video, const TapModel& model,
                          const PipelineConfig& cfg = {});

struct TrainOutcome {
  TrainResult result;
  DatasetSplit split;
  std::optional<AugmentationReport> augmentation;
};

/// Splits by app, optionally augments the training split, and trains.
TrainOutcome train_from_samples(const std::vector<TransitionSample>& samples, bool augment,
                                const PipelineConfig& cfg = {},
                                const OppositeLexicon& lexicon = OppositeLexicon::defaults(),
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Shot-level F1, action-sequence Levenshtein, and Precision@k over TAP scenes whose ground truth
/// carries target bounds. Scenes pair up by overlapping transition gaps.
EvalReport evaluate_trace(const ActionTrace& predicted, const ActionTrace& truth, const std::vector<int>& ks = {1, 3, 5});

}  // namespace uiactions
