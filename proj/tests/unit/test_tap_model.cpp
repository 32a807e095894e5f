#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "uiactions/synthetic.hpp"
#include "uiactions/tap_model.hpp"

using namespace uiactions;
using testing::rel_error;

TEST_CASE("iou closed forms") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  CHECK(iou({0, 0, 1, 1}, {1, 0, 2, 1}) == 0.0);
}

TEST_CASE("anchors follow the documented index layout") {
  AnchorConfig cfg;
  const auto a = generate_anchors(3, 2, 16, cfg);
  REQUIRE(a.size() == 3u * 2u * 20u);
  // Cell (row 1, col 1), scale 64, ratio 4: width 128, height 32 around (24, 24).
  const auto& box = a[(1 * 2 + 1) * 20 + 1 * 4 + 2];
  CHECK(box.center_x() == doctest::Approx(24));
  CHECK(box.center_y() == doctest::Approx(24));
  CHECK(box.width() == doctest::Approx(128));
  CHECK(box.height() == doctest::Approx(32));
  AnchorConfig bad;
  bad.scales.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("proposal selection satisfies the greedy NMS properties") {
  nn::Rng rng(3);
  AnchorConfig cfg;
  cfg.proposals_kept = 32;
  const auto anchors = generate_anchors(16, 9, 16, cfg);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> scores(anchors.size());
    for (auto& s : scores) s = rng.normal();
    const auto kept = select_proposals(anchors, scores, 144, 256, cfg);
    REQUIRE(!kept.empty());
    CHECK(kept.size() <= 32u);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      CHECK(kept[i].box == clip_box(anchors[kept[i].anchor], 144, 256));
      if (i > 0) CHECK(kept[i].objectness <= kept[i - 1].objectness);
      for (std::size_t j = 0; j < i; ++j) CHECK(iou(kept[i].box, kept[j].box) <= cfg.nms_iou);
    }
    // Any valid anchor scoring above the last kept one was suppressed by a kept, higher-scored box.
    const double floor = kept.back().objectness;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      const Box c = clip_box(anchors[a], 144, 256);
      if (scores[a] <= floor || c.width() < 1 || c.height() < 1) continue;
      if (std::any_of(kept.begin(), kept.end(), [&](const Proposal& p) { return p.anchor == a; })) continue;
      bool covered = false;
      for (const auto& p : kept) covered = covered || (p.objectness >= scores[a] && iou(p.box, c) > cfg.nms_iou);
      CHECK(covered);
    }
  }
  CHECK_THROWS_AS(select_proposals(anchors, std::vector<double>(3), 144, 256, cfg), Error);
}

TEST_CASE("smooth L1 closed forms") {
  CHECK(smooth_l1(0.5) == doctest::Approx(0.125));
  CHECK(smooth_l1(-2.0) == doctest::Approx(1.5));
  CHECK(smooth_l1(0.2, 0.1) == doctest::Approx(0.15));
}

TEST_CASE("tailored loss closed forms") {
  const BoundingBox gt(0.4, 0.4, 0.6, 0.6);
  // Positive inside the bound: only cross-entropy, ln 2 at equal logits.
  auto l = tailored_loss(0.5, 0.45, {0.0, 0.0}, gt, 1);
  CHECK(std::abs(l.loss_cls - std::log(2.0)) < 1e-9);
  CHECK(l.loss_reg_x == 0.0);
  CHECK(l.loss_reg_y == 0.0);
  // Outside on x only: 0.5 d^2 in the quadratic zone, d measured to the midpoint.
  l = tailored_loss(0.1, 0.5, {0.0, 0.0}, gt, 1);
  CHECK(std::abs(l.loss_reg_x - 0.5 * 0.4 * 0.4) < 1e-9);
  CHECK(l.loss_reg_y == 0.0);
  CHECK(std::abs(l.total - (std::log(2.0) + 0.08)) < 1e-9);
  // Negatives carry no regression term.
  l = tailored_loss(0.1, 0.9, {2.0, -1.0}, gt, 0);
  CHECK(l.loss_reg_x == 0.0);
  CHECK(std::abs(l.loss_cls - std::log(1.0 + std::exp(-3.0))) < 1e-9);
  CHECK_THROWS_AS(tailored_loss(0.1, 0.1, {0, 0}, gt, 2), Error);
  CHECK_THROWS_AS(tailored_loss(NAN, 0.1, {0, 0}, gt, 1), Error);
}

TEST_CASE("tailored loss gradients match finite differences") {
  nn::Rng rng(4);
  const BoundingBox gt(0.3, 0.2, 0.5, 0.35);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(-0.2, 1.2), y = rng.uniform(-0.2, 1.2);
    const std::array<double, 2> z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const int label = rng.integer(0, 1);
    // Skip points within h of a bound edge, where the loss has a kink.
    if (std::abs(x - 0.3) < 1e-4 || std::abs(x - 0.5) < 1e-4 || std::abs(y - 0.2) < 1e-4 || std::abs(y - 0.35) < 1e-4)
      continue;
    LossGradient g;
    tailored_loss(x, y, z, gt, label, &g);
    auto f = [&](double xx, double yy, double z0, double z1) { return tailored_loss(xx, yy, {z0, z1}, gt, label).total; };
    CHECK(rel_error((f(x + h, y, z[0], z[1]) - f(x - h, y, z[0], z[1])) / (2 * h), g.x) < 1e-4);
    CHECK(rel_error((f(x, y + h, z[0], z[1]) - f(x, y - h, z[0], z[1])) / (2 * h), g.y) < 1e-4);
    CHECK(rel_error((f(x, y, z[0] + h, z[1]) - f(x, y, z[0] - h, z[1])) / (2 * h), g.logits[0]) < 1e-4);
    CHECK(rel_error((f(x, y, z[0], z[1] + h) - f(x, y, z[0], z[1] - h)) / (2 * h), g.logits[1]) < 1e-4);
  }
}

TEST_CASE("roi align backward matches finite differences") {
  nn::Rng rng(5);
  nn::Tensor feat(3, 6, 7);
  for (auto& v : feat.data) v = rng.uniform(-1, 1);
  const double x0 = 0.7, y0 = 1.2, x1 = 4.9, y1 = 4.4;
  const auto out = roi_align(feat, x0, y0, x1, y1, 2);
  REQUIRE(out.size() == 12u);
  std::vector<double> w(out.size());
  for (auto& v : w) v = rng.uniform(-1, 1);
  nn::Tensor grad(3, 6, 7);
  roi_align_backward(grad, w, x0, y0, x1, y1, 2);
  for (std::size_t i = 0; i < feat.size(); ++i) {
    auto a = feat, b = feat;
    a.data[i] += 1e-6;
    b.data[i] -= 1e-6;
    const auto oa = roi_align(a, x0, y0, x1, y1, 2), ob = roi_align(b, x0, y0, x1, y1, 2);
    double num = 0;
    for (std::size_t k = 0; k < w.size(); ++k) num += w[k] * (oa[k] - ob[k]) / 2e-6;
    CHECK(std::abs(num - grad.data[i]) < 1e-7);
  }
}

TEST_CASE("linear layer gradients match finite differences") {
  nn::Rng rng(6);
  nn::Linear lin("fc", 5, 3);
  lin.init(rng);
  std::vector<double> x(2 * 5), w(2 * 3);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : w) v = rng.uniform(-1, 1);
  auto f = [&](const std::vector<double>& in) {
    const auto o = lin.forward(in, 2);
    double s = 0;
    for (std::size_t i = 0; i < o.size(); ++i) s += w[i] * o[i];
    return s;
  };
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  const auto gx = lin.backward(x, w, 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto a = x, b = x;
    a[i] += 1e-6;
    b[i] -= 1e-6;
    CHECK(rel_error((f(a) - f(b)) / 2e-6, gx[i]) < 1e-6);
  }
  for (std::size_t i = 0; i < lin.weight.size(); ++i) {
    const double o = lin.weight.value[i];
    lin.weight.value[i] = o + 1e-6;
    const double fp = f(x);
    lin.weight.value[i] = o - 1e-6;
    const double fm = f(x);
    lin.weight.value[i] = o;
    CHECK(rel_error((fp - fm) / 2e-6, lin.weight.grad[i]) < 1e-6);
  }
}

TEST_CASE("encoder backward matches finite differences on a small probe") {
  TapModelConfig c;
  c.encoder.input_height = 32;
  c.encoder.input_width = 32;
  TapModel m(c, 3);
  nn::Rng rng(5);
  nn::Tensor x(3, 32, 32);
  for (auto& v : x.data) v = rng.uniform(-0.5, 0.5);
  const auto y = m.encode_tensor(x, nullptr);
  std::vector<double> w(y.size());
  for (auto& v : w) v = rng.uniform(-1, 1);
  auto f = [&](const nn::Tensor& in) {
    const auto o = m.encode_tensor(in, nullptr);
    double s = 0;
    for (std::size_t i = 0; i < o.size(); ++i) s += w[i] * o.data[i];
    return s;
  };
  nn::Tape tape;
  m.encode_tensor(x, &tape);
  nn::Tensor g(y.c, y.h, y.w);
  g.data = w;
  m.zero_grad();
  const auto dx = m.backward_encoder(tape, g);
  CHECK(tape.empty());
  double worst = 0;
  for (int k = 0; k < 40; ++k) {
    const auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(x.size()) - 1));
    auto a = x, b = x;
    a.data[i] += 1e-6;
    b.data[i] -= 1e-6;
    worst = std::max(worst, rel_error((f(a) - f(b)) / 2e-6, dx.data[i]));
  }
  CHECK(worst < 1e-3);
  worst = 0;
  for (auto* p : m.parameters()) {
    if (p->name.rfind("encoder", 0) != 0) continue;
    for (int k = 0; k < 2; ++k) {
      const auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(p->size()) - 1));
      const double o = p->value[i];
      p->value[i] = o + 1e-6;
      const double fp = f(x);
      p->value[i] = o - 1e-6;
      const double fm = f(x);
      p->value[i] = o;
      if (std::abs(fp - fm) / 2e-6 + std::abs(p->grad[i]) > 1e-8) worst = std::max(worst, rel_error((fp - fm) / 2e-6, p->grad[i]));
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("head backward matches finite differences for RoI and UI-2 features") {
  TapModel m({}, 3);
  nn::Rng rng(5);
  EncodedImage e;
  e.high = nn::Tensor(32, 16, 9);
  e.low = nn::Tensor(16, 64, 36);
  for (auto& v : e.high.data) v = rng.uniform(0, 1);
  for (auto& v : e.low.data) v = rng.uniform(0, 1);
  GlobalFeatures g{std::vector<double>(16), std::vector<double>(32)};
  for (auto& v : g.low) v = rng.uniform(0, 1);
  for (auto& v : g.high) v = rng.uniform(0, 1);
  const std::vector<Box> rois{{10, 20, 60, 50}, {30, 100, 130, 140}, {0, 0, 144, 30}};
  std::vector<double> w(12);
  for (auto& v : w) v = rng.uniform(-1, 1);
  auto f = [&](const EncodedImage& a, const GlobalFeatures& b) {
    const auto p = m.head_forward(a, b, rois);
    double s = 0;
    for (int i = 0; i < 12; ++i) s += w[static_cast<std::size_t>(i)] * p.output[static_cast<std::size_t>(i)];
    return s;
  };
  const auto pass = m.head_forward(e, g, rois);
  CHECK(static_cast<int>(pass.input.size()) == pass.rows * m.head_width());
  HeadGradient hg(e);
  m.zero_grad();
  m.head_backward(pass, w, rois, hg);
  double worst = 0;
  for (int t = 0; t < 60; ++t) {
    auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(e.low.size()) - 1));
    auto a = e, b = e;
    a.low.data[i] += 1e-5;
    b.low.data[i] -= 1e-5;
    worst = std::max(worst, rel_error((f(a, g) - f(b, g)) / 2e-5, hg.ui1_low.data[i]));
    i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(e.high.size()) - 1));
    a = e;
    b = e;
    a.high.data[i] += 1e-5;
    b.high.data[i] -= 1e-5;
    worst = std::max(worst, rel_error((f(a, g) - f(b, g)) / 2e-5, hg.ui1_high.data[i]));
  }
  for (std::size_t i = 0; i < 32; ++i) {
    auto a = g, b = g;
    a.high[i] += 1e-5;
    b.high[i] -= 1e-5;
    worst = std::max(worst, rel_error((f(e, a) - f(e, b)) / 2e-5, hg.ui2.high[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("checkpoints round-trip parameters and predictions") {
  const auto data = synth::render_transition_dataset(2, 9);
  TapModel m({}, 17);
  testing::TempDir dir;
  m.save(dir / "m.json", {{"note", "unit"}});
  const auto back = TapModel::load(dir / "m.json");
  CHECK(back.parameter_count() == m.parameter_count());
  const auto a = m.predict_locations(data[0].ui1, data[0].ui2);
  const auto b = back.predict_locations(data[0].ui1, data[0].ui2);
  CHECK(a.coords == b.coords);
  CHECK(a.probs == b.probs);

  auto doc = m.checkpoint();
  doc["kind"] = "something_else";
  CHECK_THROWS_AS(TapModel::from_checkpoint(doc), Error);
  CHECK_THROWS_AS(TapModel::load(dir / "missing.json"), Error);
}

TEST_CASE("model outputs are ranked probabilities in the unit square") {
  const auto data = synth::render_transition_dataset(1, 4);
  const TapModel m({}, 2);
  const auto out = m.predict_locations(data[0].ui1, data[0].ui2);
  REQUIRE(!out.coords.empty());
  CHECK(out.coords.size() == out.probs.size());
  CHECK(out.coords.size() <= 64u);
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    CHECK(out.probs[i] >= 0.0);
    CHECK(out.probs[i] <= 1.0);
    CHECK(out.coords[i].x >= 0.0);
    CHECK(out.coords[i].x <= 1.0);
    if (i > 0) CHECK(out.probs[i] <= out.probs[i - 1]);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = synth::render_transition_dataset(4, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  const auto a = train(data, {data[0]}, {}, cfg);
  const auto b = train(data, {data[0]}, {}, cfg);
  REQUIRE(a.history.size() == 1);
  CHECK(a.history == b.history);
  CHECK(a.model.checkpoint().dump() == b.model.checkpoint().dump());
  CHECK(std::isfinite(a.history[0].train_loss));
  // Input order does not matter: samples are canonicalized by id.
  auto reversed = data;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(train(reversed, {}, {}, cfg).model.checkpoint().dump() == a.model.checkpoint().dump());
  CHECK_THROWS_AS(train({}, {}, {}, cfg), Error);
}

TEST_CASE("train config JSON round-trips") {
  TrainConfig c;
  c.epochs = 3;
  c.adam.lr = 5e-4;
  c.eval_k = {1, 2};
  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.epochs == 3);
  CHECK(back.adam.lr == 5e-4);
  CHECK(back.eval_k == std::vector<int>{1, 2});
  const auto mc = TapModelConfig::from_json(TapModelConfig{}.to_json());
  CHECK(mc.encoder.input_width == 144);
  CHECK(mc.anchors.per_cell() == 20);
}
