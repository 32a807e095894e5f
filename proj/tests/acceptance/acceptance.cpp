#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <string>

#include "oracles.hpp"
#include "support.hpp"
#include "uiactions/augmentation.hpp"
#include "uiactions/metrics.hpp"
#include "uiactions/pipeline.hpp"
#include "uiactions/postprocess.hpp"
#include "uiactions/segmenter.hpp"
#include "uiactions/similarity.hpp"
#include "uiactions/synthetic.hpp"
#include "uiactions/tap_model.hpp"

using namespace uiactions;
using testing::rel_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects named checks and prints one verdict line per criterion.
class Verdict {
 public:
  explicit Verdict(std::string name) : name_(std::move(name)) {}

  void check(bool ok, const std::string& what) {
    std::printf("  %-58s %s\n", what.c_str(), ok ? "ok" : "VIOLATED");
    ok_ = ok_ && ok;
  }
  void note(const std::string& text) { std::printf("  %s\n", text.c_str()); }
  int finish() const {
    std::printf("[%s] %s\n", name_.c_str(), ok_ ? "PASS" : "FAIL");
    return ok_ ? 0 : 1;
  }

 private:
  std::string name_;
  bool ok_ = true;
};

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int segmentation() {
  Verdict v("segmentation");
  const auto t0 = Clock::now();
  double min_f1 = 1.0, mean_f1 = 0.0, min_lev = 100.0;
  int perfect = 0;
  constexpr int kVideos = 50;
  for (int i = 0; i < kVideos; ++i) {
    const auto script = synth::random_script(1000 + static_cast<std::uint64_t>(i), 6);
    const auto rendered = synth::render_video(script);
    const auto seg = segment(rendered.frames);
    std::vector<ActionType> ours, gt;
    for (const auto& s : seg.scenes) ours.push_back(s.action);
    for (const auto& s : rendered.truth.scenes) gt.push_back(s.action);
    const double f1 = video_f1(shot_intervals(seg.shots, script.fps), shot_intervals(rendered.truth.shots, script.fps));
    const double lev = levenshtein_score(ours, gt);
    min_f1 = std::min(min_f1, f1);
    min_lev = std::min(min_lev, lev);
    mean_f1 += f1 / kVideos;
    perfect += lev == 100.0;
  }
  const double elapsed = seconds_since(t0);
  v.note("50 videos, 6 actions each, 30 fps, default thresholds");
  v.check(min_f1 >= 0.95, fmt("minimum Video F1 %.4f >= 0.95", min_f1));
  v.note(fmt("mean Video F1 %.4f", mean_f1));
  v.check(min_lev == 100.0, fmt("minimum Levenshtein score %.2f%% == 100%%", min_lev));
  v.note("videos with an exact action sequence: " + std::to_string(perfect) + "/50");
  v.check(elapsed < 60.0, fmt("runtime %.1f s < 60 s", elapsed));
  return v.finish();
}

int ssim_criterion() {
  Verdict v("ssim");
  nn::Rng rng(101);
  bool identity = true;
  for (int i = 0; i < 20; ++i) {
    const auto l = rgb_to_luma(testing::random_image(rng, rng.integer(11, 40), rng.integer(11, 40)));
    identity = identity && ssim(l, l) == 1.0;
  }
  v.check(identity, "ssim(x, x) == 1.0 exactly on 20 random frames");

  const SsimParams p;
  double worst_closed = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = rng.uniform(0, 255), b = rng.uniform(0, 255);
    const double expected = (2 * a * b + p.c1) / (a * a + b * b + p.c1);
    worst_closed = std::max(worst_closed, std::abs(ssim(LumaPlane(24, 16, a), LumaPlane(24, 16, b)) - expected));
  }
  v.check(worst_closed < 1e-9, fmt("constant planes vs closed form: max |err| %.2e < 1e-9", worst_closed));

  double worst_sym = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int w = rng.integer(11, 48), h = rng.integer(11, 48);
    const auto a = rgb_to_luma(testing::random_image(rng, w, h));
    const auto b = rgb_to_luma(testing::random_image(rng, w, h));
    worst_sym = std::max(worst_sym, std::abs(ssim(a, b) - ssim(b, a)));
  }
  v.check(worst_sym < 1e-12, fmt("symmetry on 100 random pairs: max |diff| %.2e < 1e-12", worst_sym));
  return v.finish();
}

int metrics_criterion() {
  Verdict v("metrics");
  // Every sequence over {TAP, SCROLL, BACKWARD} of length 0..6.
  std::vector<std::vector<ActionType>> seqs{{}};
  for (std::size_t start = 0; start < seqs.size(); ++start) {
    if (seqs[start].size() == 6) continue;
    for (int s = 0; s < 3; ++s) {
      auto next = seqs[start];
      next.push_back(static_cast<ActionType>(s));
      seqs.push_back(std::move(next));
    }
  }
  std::size_t mismatches = 0, pairs = 0;
  for (const auto& a : seqs)
    for (const auto& b : seqs) {
      ++pairs;
      const std::size_t d = testing::dp_edit_distance(a, b);
      const std::size_t longest = std::max(a.size(), b.size());
      const double expected = longest == 0 ? 100.0 : 100.0 * (1.0 - static_cast<double>(d) / static_cast<double>(longest));
      if (edit_distance(a, b) != d || levenshtein_score(a, b) != expected) ++mismatches;
    }
  v.check(mismatches == 0, std::to_string(pairs) + " exhaustive sequence pairs match the DP oracle");

  using IV = std::vector<TimeInterval>;
  const std::vector<std::tuple<IV, IV, double>> crafted{
      {{{0, 1}}, {{0, 1}}, 1.0},
      {{{0, 2}}, {{1, 3}}, 2.0 * 1.0 / 4.0},
      {{{0, 1}, {2, 3}}, {{0, 3}}, 2.0 * 2.0 / 5.0},
      {{}, {}, 1.0},
      {{}, {{0, 1}}, 0.0},
      {{{0, 1}}, {{1, 2}}, 0.0},
      {{{0, 4}}, {{1, 2}, {3, 3.5}}, 2.0 * 1.5 / 5.5},
      {{{0.5, 1.5}, {2, 2.25}}, {{1, 2.5}}, 2.0 * 0.75 / 2.75},
      {{{0, 1}, {1, 2}}, {{0.5, 1.5}}, 2.0 * 1.0 / 3.0},
      {{{0, 10}}, {{2.5, 5}, {7.5, 8.75}}, 2.0 * 3.75 / 13.75},
  };
  int exact = 0;
  for (const auto& [ours, gt, expected] : crafted) exact += video_f1(ours, gt) == expected;
  v.check(exact == 10, std::to_string(exact) + "/10 crafted interval sets match exactly");

  nn::Rng rng(303);
  int monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.integer(1, 20);
    std::vector<std::vector<TapPrediction>> preds(static_cast<std::size_t>(n));
    std::vector<BoundingBox> gt;
    for (auto& p : preds) {
      const double x0 = rng.uniform(0, 0.8), y0 = rng.uniform(0, 0.8);
      gt.emplace_back(x0, y0, x0 + rng.uniform(0.05, 0.2), y0 + rng.uniform(0.05, 0.2));
      const int k = rng.integer(0, 8);
      double conf = 1.0;
      for (int r = 1; r <= k; ++r) {
        conf *= rng.uniform(0.5, 1.0);
        p.push_back({rng.uniform(), rng.uniform(), conf, r});
      }
    }
    bool ok = true;
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
      const double pk = precision_at_k(preds, gt, k);
      ok = ok && pk >= prev;
      prev = pk;
    }
    monotone += ok;
  }
  v.check(monotone == 1000, std::to_string(monotone) + "/1000 random prediction sets monotone in k");
  return v.finish();
}

int loss_criterion() {
  Verdict v("loss");
  const BoundingBox gt(0.4, 0.4, 0.6, 0.6);
  const auto inside = tailored_loss(0.45, 0.55, {1.3, -0.2}, gt, 1);
  v.check(inside.loss_reg_x == 0.0 && inside.loss_reg_y == 0.0, "positive inside the bound: regression term is zero");
  const auto outside = tailored_loss(0.05, 0.5, {0.0, 0.0}, gt, 1);
  v.check(std::abs(outside.loss_reg_x - 0.5 * 0.45 * 0.45) < 1e-9,
          fmt("outside, quadratic zone: 0.5 d^2 (err %.1e)", std::abs(outside.loss_reg_x - 0.5 * 0.45 * 0.45)));
  v.check(std::abs(outside.loss_cls - std::log(2.0)) < 1e-9, "cross-entropy at p = 0.5 equals ln 2");

  nn::Rng rng(404);
  double worst = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 500; ++trial) {
    const double x = rng.uniform(-0.3, 1.3), y = rng.uniform(-0.3, 1.3);
    if (std::min({std::abs(x - 0.4), std::abs(x - 0.6), std::abs(y - 0.4), std::abs(y - 0.6)}) < 1e-4) continue;
    const std::array<double, 2> z{rng.uniform(-4, 4), rng.uniform(-4, 4)};
    const int label = rng.integer(0, 1);
    LossGradient g;
    tailored_loss(x, y, z, gt, label, &g);
    const auto f = [&](double xx, double yy, double a, double b) { return tailored_loss(xx, yy, {a, b}, gt, label).total; };
    worst = std::max({worst, rel_error((f(x + h, y, z[0], z[1]) - f(x - h, y, z[0], z[1])) / (2 * h), g.x),
                      rel_error((f(x, y + h, z[0], z[1]) - f(x, y - h, z[0], z[1])) / (2 * h), g.y),
                      rel_error((f(x, y, z[0] + h, z[1]) - f(x, y, z[0] - h, z[1])) / (2 * h), g.logits[0]),
                      rel_error((f(x, y, z[0], z[1] + h) - f(x, y, z[0], z[1] - h)) / (2 * h), g.logits[1])});
  }
  v.check(worst < 1e-4, fmt("loss gradient vs finite differences: max rel err %.2e < 1e-4", worst));

  TapModelConfig probe_cfg;
  probe_cfg.encoder.input_height = 32;
  probe_cfg.encoder.input_width = 32;
  TapModel probe(probe_cfg, 3);
  nn::Tensor x(3, 32, 32);
  for (auto& val : x.data) val = rng.uniform(-0.5, 0.5);
  const auto y = probe.encode_tensor(x, nullptr);
  std::vector<double> w(y.size());
  for (auto& val : w) val = rng.uniform(-1, 1);
  const auto f = [&](const nn::Tensor& in) {
    const auto o = probe.encode_tensor(in, nullptr);
    return std::inner_product(o.data.begin(), o.data.end(), w.begin(), 0.0);
  };
  nn::Tape tape;
  probe.encode_tensor(x, &tape);
  nn::Tensor g(y.c, y.h, y.w);
  g.data = w;
  probe.zero_grad();
  const auto dx = probe.backward_encoder(tape, g);
  double enc_worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    const auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(x.size()) - 1));
    auto a = x, b = x;
    a.data[i] += 1e-6;
    b.data[i] -= 1e-6;
    enc_worst = std::max(enc_worst, rel_error((f(a) - f(b)) / 2e-6, dx.data[i]));
  }
  for (auto* p : probe.parameters()) {
    if (p->name.rfind("encoder", 0) != 0) continue;
    for (int k = 0; k < 3; ++k) {
      const auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(p->size()) - 1));
      const double o = p->value[i];
      p->value[i] = o + 1e-6;
      const double fp = f(x);
      p->value[i] = o - 1e-6;
      const double fm = f(x);
      p->value[i] = o;
      if (std::abs(fp - fm) / 2e-6 + std::abs(p->grad[i]) > 1e-8)
        enc_worst = std::max(enc_worst, rel_error((fp - fm) / 2e-6, p->grad[i]));
    }
  }
  v.check(enc_worst < 1e-3, fmt("encoder probe (3x32x32) vs finite differences: max rel err %.2e < 1e-3", enc_worst));
  return v.finish();
}

int desk_model() {
  Verdict v("desk_model");
  const auto data = synth::render_transition_dataset(200, 42);
  const PipelineConfig cfg;
  const auto t0 = Clock::now();
  const auto out = train_from_samples(data, true, cfg, OppositeLexicon::defaults(), [](const EpochMetrics& m) {
    if (m.epoch % 10 == 0) std::printf("  epoch %d: %s\n", m.epoch, m.to_json().dump().c_str());
    std::fflush(stdout);
  });
  const double elapsed = seconds_since(t0);
  auto held = out.split.val;
  held.insert(held.end(), out.split.test.begin(), out.split.test.end());
  const auto preds = predict_ranked(out.result.model, held, cfg.cluster);
  std::vector<BoundingBox> gt;
  for (const auto& s : held) gt.push_back(s.gt_bounds);
  const double p1 = precision_at_k(preds, gt, 1), p5 = precision_at_k(preds, gt, 5);
  v.note("split train/val/test = " + std::to_string(out.split.train.size()) + "/" + std::to_string(out.split.val.size()) +
         "/" + std::to_string(out.split.test.size()) + " samples (app-level)");
  v.note("augmentation " + out.augmentation->to_json().dump());
  v.note("held-out samples (val + test): " + std::to_string(held.size()));
  v.check(p1 >= 0.80, fmt("held-out Precision@1 %.3f >= 0.80", p1));
  v.check(p5 >= 0.95, fmt("held-out Precision@5 %.3f >= 0.95", p5));
  v.check(elapsed < 1800.0, fmt("training time %.0f s < 1800 s", elapsed));
  return v.finish();
}

int postprocess_criterion() {
  Verdict v("postprocess");
  nn::Rng rng(606);
  int partition_ok = 0, reps_ok = 0, perm_ok = 0;
  const ClusterConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(1, 64);
    std::vector<ScoredPoint> pts(static_cast<std::size_t>(n));
    // Mix spread-out and tightly grouped points so clusters of every size occur.
    const double spread = rng.uniform() < 0.5 ? 144.0 : 60.0;
    for (auto& p : pts) p = {rng.uniform(0, spread), rng.uniform(0, spread * 16 / 9), rng.uniform()};
    const auto labels = dbscan(pts, cfg);
    const auto comps = testing::reachability_components(pts, cfg.eps);
    partition_ok += testing::same_partition(labels, comps);

    // One representative per component: its confidence maximum.
    std::map<std::size_t, ScoredPoint> best;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto it = best.find(comps[i]);
      if (it == best.end() || pts[i].confidence > it->second.confidence) best[comps[i]] = pts[i];
    }
    std::vector<ScoredPoint> expected;
    for (const auto& [_, p] : best) expected.push_back(p);
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
    const auto preds = cluster_points(pts, cfg, 144, 256);
    bool reps = preds.size() == expected.size();
    for (std::size_t r = 0; reps && r < preds.size(); ++r)
      reps = preds[r].confidence == expected[r].confidence && preds[r].x == std::clamp(expected[r].x / 144, 0.0, 1.0) &&
             preds[r].y == std::clamp(expected[r].y / 256, 0.0, 1.0) && preds[r].rank == static_cast<int>(r) + 1;
    reps_ok += reps;

    auto shuffled = pts;
    rng.shuffle(shuffled);
    perm_ok += cluster_points(shuffled, cfg, 144, 256) == preds;
  }
  v.check(partition_ok == 200, std::to_string(partition_ok) + "/200 partitions equal the eps-reachability oracle");
  v.check(reps_ok == 200, std::to_string(reps_ok) + "/200 representative sets are per-cluster confidence maxima");
  v.check(perm_ok == 200, std::to_string(perm_ok) + "/200 outputs invariant under input permutation");
  return v.finish();
}

int augmentation_criterion() {
  Verdict v("augmentation");
  const auto corpus = synth::render_transition_dataset(200, 42);
  std::size_t swaps = 0, clean = 0;
  for (const auto& s : corpus)
    for (const auto& x : element_exchange(s)) {
      ++swaps;
      const auto [r1, r2] = testing::exchanged_rects(s, x);
      clean += testing::changed_outside(s.ui1, x.ui1, r1, r2) == 0 && x.ui2 == s.ui2;
    }
  v.check(swaps > 0 && clean == swaps,
          std::to_string(clean) + "/" + std::to_string(swaps) + " exchanges leave pixels outside the swap untouched");

  synth::TransitionOptions toggles;
  toggles.toggle_fraction = 1.0;
  const auto toggle_corpus = synth::render_transition_dataset(100, 77, toggles);
  std::size_t applicable = 0, involutive = 0;
  for (const auto& s : toggle_corpus) {
    const auto once = metamorphic_augment(s);
    if (!once) continue;
    ++applicable;
    const auto twice = metamorphic_augment(*once);
    involutive += twice && twice->same_transition(s) && twice->id == s.id && once->ui1 == s.ui2 && once->ui2 == s.ui1;
  }
  v.check(applicable == 100 && involutive == 100,
          std::to_string(involutive) + "/" + std::to_string(applicable) + " applicable samples: metamorphic is an involution");

  bool within = true;
  std::string ratios;
  for (const auto* src : {&corpus, &toggle_corpus}) {
    for (std::size_t n : {std::size_t{7}, std::size_t{50}, src->size()}) {
      const std::vector<TransitionSample> part(src->begin(), src->begin() + static_cast<std::ptrdiff_t>(n));
      const auto aug = augment_dataset(part, OppositeLexicon::defaults());
      const std::size_t added = aug.samples.size() - part.size();
      within = within && added <= static_cast<std::size_t>(std::floor(0.26 * static_cast<double>(n) + 1e-9)) &&
               aug.report.ratio_added <= 0.26;
      ratios += fmt(" %.3f", aug.report.ratio_added);
    }
  }
  v.check(within, "added samples <= floor(0.26 N) on 6 corpora (ratios" + ratios + ")");
  return v.finish();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<int()>> criteria{
      {"segmentation", segmentation},   {"ssim", ssim_criterion},          {"metrics", metrics_criterion},
      {"loss", loss_criterion},         {"desk_model", desk_model},        {"postprocess", postprocess_criterion},
      {"augmentation", augmentation_criterion},
  };
  if (argc != 2 || !criteria.count(argv[1])) {
    std::cerr << "usage: acceptance <criterion>\ncriteria:";
    for (const auto& [name, _] : criteria) std::cerr << " " << name;
    std::cerr << "\n";
    return 2;
  }
  try {
    return criteria.at(argv[1])();
  } catch (const std::exception& e) {
    std::printf("  error: %s\n[%s] FAIL\n", e.what(), argv[1]);
    return 1;
  }
}
