#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uiactions/dataset.hpp"
#include "uiactions/pipeline.hpp"
#include "uiactions/service.hpp"
#include "uiactions/synthetic.hpp"

namespace fs = std::filesystem;
using namespace uiactions;

namespace {

PipelineConfig config_from(const std::string& path) {
  return path.empty() ? PipelineConfig{} : PipelineConfig::load(path);
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract tap, scroll, and backward actions from app screen recordings"};
  app.require_subcommand(1);

  std::string video, out, config, trace, model, manifest, pred, gt, lexicon, dir, host = "127.0.0.1", annotations = "annotations";
  bool augment = false;
  int port = default_port();
  std::uint64_t seed = 1;
  int count = 200, actions = 6;

  auto* seg = app.add_subcommand("segment", "Split a recording into shots and action scenes");
  seg->add_option("video", video, "Video file or directory of PNG frames with meta.json")->required();
  seg->add_option("--out", out, "Output trace JSON")->required();
  seg->add_option("--config", config, "Pipeline configuration overrides (JSON)");

  auto* pr = app.add_subcommand("predict", "Add ranked tap locations to a trace");
  pr->add_option("--trace", trace, "Trace from segment")->required();
  pr->add_option("--video", video, "The recording the trace was made from")->required();
  pr->add_option("--model", model, "Tap model checkpoint")->required();
  pr->add_option("--out", out, "Output trace JSON")->required();
  pr->add_option("--config", config, "Pipeline configuration overrides (JSON)");

  auto* tr = app.add_subcommand("train", "Train the tap model on a transition manifest");
  tr->add_option("--manifest", manifest, "Manifest file or directory")->required();
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_flag("--augment", augment, "Add exchange and metamorphic samples to the training split");
  tr->add_option("--lexicon", lexicon, "Opposite-semantics lexicon (JSON)");
  tr->add_option("--config", config, "Pipeline configuration overrides (JSON)");

  auto* ev = app.add_subcommand("eval", "Score a predicted trace against ground truth");
  ev->add_option("--pred", pred, "Predicted trace")->required();
  ev->add_option("--gt", gt, "Ground-truth trace")->required();
  ev->add_option("--out", out, "Write the EvalReport JSON here as well");

  auto* ing = app.add_subcommand("ingest-rico", "Convert Rico-style interaction traces into a manifest");
  ing->add_option("dir", dir, "Trace directory")->required();
  ing->add_option("--out", out, "Output manifest directory")->required();

  auto* sv = app.add_subcommand("synth-video", "Render a scripted synthetic recording with its ground truth");
  sv->add_option("--seed", seed, "Script seed");
  sv->add_option("--actions", actions, "Number of actions");
  sv->add_option("--out", out, "Output directory (frames/ and gt.json)")->required();

  auto* st = app.add_subcommand("synth-transitions", "Render a synthetic tap-transition manifest");
  st->add_option("--seed", seed, "Corpus seed");
  st->add_option("--count", count, "Number of samples");
  st->add_option("--out", out, "Output manifest directory")->required();

  auto* srv = app.add_subcommand("serve", "Serve a trace and its video to the annotator");
  srv->add_option("--trace", trace, "Trace with predictions")->required();
  srv->add_option("--video", video, "The recording")->required();
  srv->add_option("--annotations", annotations, "Annotation store directory");
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--port", port, "Port (default from UIACTIONS_PORT, else 8765)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seg) {
      const auto cfg = config_from(config);
      save_trace(out, segment_video(load_video(video), cfg));
    } else if (*pr) {
      const auto cfg = config_from(config);
      const auto t = load_trace(trace);
      save_trace(out, predict_trace(t, load_video(video), TapModel::load(model), cfg));
    } else if (*tr) {
      const auto cfg = config_from(config);
      const auto lex = lexicon.empty() ? OppositeLexicon::defaults() : OppositeLexicon::load(lexicon);
      const auto samples = load_manifest(manifest);
      auto outcome = train_from_samples(samples, augment, cfg, lex, [](const EpochMetrics& m) {
        std::cerr << m.to_json().dump() << "\n";
      });
      nlohmann::json meta{{"train_samples", outcome.split.train.size()},
                          {"val_samples", outcome.split.val.size()},
                          {"test_samples", outcome.split.test.size()},
                          {"train_config", cfg.train.to_json()}};
      nlohmann::json history = nlohmann::json::array();
      for (const auto& m : outcome.result.history) history.push_back(m.to_json());
      meta["history"] = history;
      if (outcome.augmentation) {
        meta["augmentation"] = outcome.augmentation->to_json();
        std::cout << dump_json(outcome.augmentation->to_json());
      }
      outcome.result.model.save(out, meta);
    } else if (*ev) {
      const auto report = evaluate_trace(load_trace(pred), load_trace(gt));
      if (!out.empty()) write_json_file(out, report.to_json());
      std::cout << report.table();
    } else if (*ing) {
      auto result = ingest_rico(dir);
      for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
      save_manifest(out, result.samples, {{"source", "rico"}, {"ingest", result.report.to_json()}});
      std::cout << dump_json(result.report.to_json());
    } else if (*sv) {
      const auto rendered = synth::render_video(synth::random_script(seed, actions));
      auto truth = rendered.truth;
      truth.video_id = "frames";
      save_frame_directory(fs::path(out) / "frames", rendered.frames);
      save_trace(fs::path(out) / "gt.json", truth);
    } else if (*st) {
      save_manifest(out, synth::render_transition_dataset(count, seed), {{"source", "synthetic"}, {"seed", seed}});
    } else if (*srv) {
      ServiceOptions opts;
      opts.trace = trace;
      opts.video = video;
      opts.annotations = annotations;
      opts.host = host;
      opts.port = port;
      Service service(opts);
      const int bound = service.bind();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << service.trace().video_id << " on http://" << host << ":" << bound << "\n";
      service.serve();
      g_service = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
