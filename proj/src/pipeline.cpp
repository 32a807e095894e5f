#include "uiactions/pipeline.hpp"

#include <algorithm>

namespace uiactions {

using nlohmann::json;

namespace {

json segmenter_json(const SegmenterConfig& c) {
  return {{"ssim",
           {{"window", c.ssim.window},
            {"gaussian_sigma", c.ssim.gaussian_sigma},
            {"c1", c.ssim.c1},
            {"c2", c.ssim.c2},
            {"dynamic_range", c.ssim.dynamic_range},
            {"max_width", c.ssim.max_width}}},
          {"shots",
           {{"steady_threshold", c.shots.steady_threshold},
            {"steady_duration_s", c.shots.steady_duration_s},
            {"keyframe_policy", c.shots.keyframe_policy == KeyframePolicy::Last ? "last" : "middle"}}},
          {"drop_threshold", c.drop_threshold},
          {"min_scroll_s", c.min_scroll_s},
          {"same_threshold", c.same_threshold},
          {"backward_location", json::array({c.backward_location.x, c.backward_location.y})},
          {"min_template_score", c.min_template_score},
          {"template_width_fraction", c.template_width_fraction},
          {"template_height_fraction", c.template_height_fraction}};
}

SegmenterConfig segmenter_from_json(const json& j) {
  SegmenterConfig c;
  const auto& s = j.at("ssim");
  c.ssim.window = s.at("window").get<int>();
  c.ssim.gaussian_sigma = s.at("gaussian_sigma").get<double>();
  c.ssim.c1 = s.at("c1").get<double>();
  c.ssim.c2 = s.at("c2").get<double>();
  c.ssim.dynamic_range = s.at("dynamic_range").get<double>();
  c.ssim.max_width = s.at("max_width").get<int>();
  const auto& sh = j.at("shots");
  c.shots.steady_threshold = sh.at("steady_threshold").get<double>();
  c.shots.steady_duration_s = sh.at("steady_duration_s").get<double>();
  const auto policy = sh.at("keyframe_policy").get<std::string>();
  if (policy != "last" && policy != "middle") throw Error("keyframe_policy must be 'last' or 'middle'");
  c.shots.keyframe_policy = policy == "last" ? KeyframePolicy::Last : KeyframePolicy::Middle;
  c.drop_threshold = j.at("drop_threshold").get<double>();
  c.min_scroll_s = j.at("min_scroll_s").get<double>();
  c.same_threshold = j.at("same_threshold").get<double>();
  const auto& b = j.at("backward_location");
  c.backward_location = {b.at(0).get<double>(), b.at(1).get<double>()};
  c.min_template_score = j.at("min_template_score").get<double>();
  c.template_width_fraction = j.at("template_width_fraction").get<double>();
  c.template_height_fraction = j.at("template_height_fraction").get<double>();
  return c;
}

// Rejects override keys that the full configuration does not have.
void check_keys(const json& overrides, const json& base, const std::string& prefix) {
  if (!overrides.is_object()) throw Error("configuration " + (prefix.empty() ? "root" : prefix) + " must be an object");
  for (const auto& [key, value] : overrides.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw Error("unknown configuration key " + path);
    if (base[key].is_object()) check_keys(value, base[key], path);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  segmenter.validate();
  cluster.validate();
  if (top_k < 1 || top_k > 5) throw Error("top_k must lie in [1, 5]");
  model.encoder.validate();
  model.anchors.validate();
  split.validate();
  augment.validate();
}

json PipelineConfig::to_json() const {
  return {{"segmenter", segmenter_json(segmenter)},
          {"cluster", {{"eps", cluster.eps}, {"min_pts", cluster.min_pts}}},
          {"top_k", top_k},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"seed", split.seed}}},
          {"augment",
           {{"budget_fraction", augment.budget_fraction},
            {"seed", augment.seed},
            {"width_tolerance", augment.exchange.width_tolerance},
            {"height_tolerance", augment.exchange.height_tolerance},
            {"include_unmoved", augment.exchange.include_unmoved}}}};
}

PipelineConfig PipelineConfig::from_json(const json& overrides, const PipelineConfig& base) {
  json full = base.to_json();
  check_keys(overrides, full, "");
  full.merge_patch(overrides);
  PipelineConfig c;
  try {
    c.segmenter = segmenter_from_json(full.at("segmenter"));
    c.cluster.eps = full.at("cluster").at("eps").get<double>();
    c.cluster.min_pts = full.at("cluster").at("min_pts").get<int>();
    c.top_k = full.at("top_k").get<int>();
    c.model = TapModelConfig::from_json(full.at("model"));
    c.train = TrainConfig::from_json(full.at("train"));
    const auto& sp = full.at("split");
    c.split = {sp.at("train").get<double>(), sp.at("val").get<double>(), sp.at("test").get<double>(),
               sp.at("seed").get<std::uint64_t>()};
    const auto& a = full.at("augment");
    c.augment.budget_fraction = a.at("budget_fraction").get<double>();
    c.augment.seed = a.at("seed").get<std::uint64_t>();
    c.augment.exchange.width_tolerance = a.at("width_tolerance").get<double>();
    c.augment.exchange.height_tolerance = a.at("height_tolerance").get<double>();
    c.augment.exchange.include_unmoved = a.at("include_unmoved").get<bool>();
  } catch (const json::exception& e) {
    throw Error(std::string("invalid configuration: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

ActionTrace segment_video(const FrameSeries& video, const PipelineConfig& cfg) {
  if (video.size() == 0) throw Error("video has no frames");
  auto seg = segment(video, cfg.segmenter);
  ActionTrace t;
  t.video_id = video.source_id();
  t.fps = video.fps();
  t.frame_count = video.size();
  t.shots = std::move(seg.shots);
  t.scenes = std::move(seg.scenes);
  t.metadata = {{"generator", "uiactions"}, {"stage", "segment"}, {"segmenter", segmenter_json(cfg.segmenter)}};
  validate_trace(t);
  return t;
}

ActionTrace predict_trace(const ActionTrace& trace, const FrameSeries& video, const TapModel& model,
                          const PipelineConfig& cfg) {
  cfg.cluster.validate();
  if (trace.frame_count != 0 && trace.frame_count != video.size())
    throw Error("trace covers " + std::to_string(trace.frame_count) + " frames but the video has " +
                std::to_string(video.size()));
  ActionTrace out = trace;
  for (auto& scene : out.scenes) {
    if (scene.to_shot.keyframe >= video.size()) throw Error("scene keyframe beyond the end of the video");
    if (scene.action == ActionType::Tap) {
      const auto raw = model.predict_locations(video[scene.from_shot.keyframe].pixels,
                                               video[scene.to_shot.keyframe].pixels);
      auto preds = cluster_predictions(raw, cfg.cluster);
      if (preds.size() > static_cast<std::size_t>(cfg.top_k)) preds.resize(static_cast<std::size_t>(cfg.top_k));
      scene.predictions = preds;
      if (!preds.empty()) scene.tap_location = NormPoint{preds.front().x, preds.front().y};
    } else if (scene.action == ActionType::Backward) {
      scene.tap_location = cfg.segmenter.backward_location;
    }
  }
  out.metadata["prediction"] = {{"architecture", TapModel::kArchitecture},
                                {"architecture_version", TapModel::kArchitectureVersion},
                                {"top_k", cfg.top_k},
                                {"cluster", {{"eps", cfg.cluster.eps}, {"min_pts", cfg.cluster.min_pts}}}};
  validate_trace(out);
  return out;
}

TrainOutcome train_from_samples(const std::vector<TransitionSample>& samples, bool augment, const PipelineConfig& cfg,
                                const OppositeLexicon& lexicon,
                                const std::function<void(const EpochMetrics&)>& on_epoch) {
  TrainOutcome out{TrainResult{TapModel(cfg.model), {}}, split_by_app(samples, cfg.split), std::nullopt};
  if (out.split.train.empty()) throw Error("training split is empty");
  std::vector<TransitionSample> train_set = out.split.train;
  if (augment) {
    auto aug = augment_dataset(train_set, lexicon, cfg.augment);
    out.augmentation = aug.report;
    train_set = std::move(aug.samples);
  }
  TrainConfig tc = cfg.train;
  tc.cluster = cfg.cluster;
  out.result = train(std::move(train_set), out.split.val, cfg.model, tc, on_epoch);
  return out;
}

namespace {

// Frames strictly between the two shots of a scene.
std::pair<std::size_t, std::size_t> gap(const ActionScene& s) { return {s.from_shot.end_frame, s.to_shot.start_frame}; }

}  // namespace

EvalReport evaluate_trace(const ActionTrace& predicted, const ActionTrace& truth, const std::vector<int>& ks) {
  if (predicted.video_id != truth.video_id)
    throw Error("prediction is for video '" + predicted.video_id + "' but ground truth is for '" + truth.video_id + "'");
  if (predicted.frame_count != 0 && truth.frame_count != 0 && predicted.frame_count != truth.frame_count)
    throw Error("prediction and ground truth disagree on the frame count");
  EvalReport r;
  r.video_f1 = video_f1(shot_intervals(predicted.shots, predicted.fps), shot_intervals(truth.shots, truth.fps));
  std::vector<ActionType> ours, gt;
  for (const auto& s : predicted.scenes) ours.push_back(s.action);
  for (const auto& s : truth.scenes) gt.push_back(s.action);
  r.levenshtein_pct = levenshtein_score(ours, gt);

  std::vector<std::vector<TapPrediction>> preds;
  std::vector<BoundingBox> targets;
  for (const auto& g : truth.scenes) {
    if (g.action != ActionType::Tap || !g.target_bounds) continue;
    const auto [g0, g1] = gap(g);
    const ActionScene* match = nullptr;
    std::size_t best = 0;
    for (const auto& p : predicted.scenes) {
      const auto [p0, p1] = gap(p);
      const std::size_t lo = std::max(g0, p0), hi = std::min(g1, p1);
      const std::size_t overlap = hi >= lo ? hi - lo + 1 : 0;
      if (overlap > best) {
        best = overlap;
        match = &p;
      }
    }
    preds.push_back(match && match->action == ActionType::Tap ? match->predictions : std::vector<TapPrediction>{});
    targets.push_back(*g.target_bounds);
  }
  r.location_samples = targets.size();
  if (!targets.empty())
    for (int k : ks) r.precision_at[k] = precision_at_k(preds, targets, k);
  return r;
}

}  // namespace uiactions
