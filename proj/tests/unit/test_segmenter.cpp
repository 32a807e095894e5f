#include <doctest.h>

#include "support.hpp"
#include "uiactions/segmenter.hpp"
#include "uiactions/shots.hpp"
#include "uiactions/synthetic.hpp"

using namespace uiactions;

namespace {

// Brute-force shot oracle: every maximal run of frames joined by steady similarities.
std::vector<Shot> oracle_shots(const std::vector<double>& v, double fps, double thr, double dur) {
  std::vector<Shot> out;
  const std::size_t frames = v.size() + 1;
  std::size_t start = 0;
  for (std::size_t f = 1; f <= frames; ++f) {
    const bool joined = f < frames && v[f - 1] >= thr;
    if (!joined) {
      const std::size_t end = f - 1;
      if (static_cast<double>(end - start + 1) / fps >= dur - 1e-9) out.push_back({start, end, end});
      start = f;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("shot detection matches a brute-force run oracle on random series") {
  nn::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(rng.integer(0, 80)));
    for (auto& x : v) x = rng.uniform() < 0.85 ? rng.uniform(0.95, 1.0) : rng.uniform(0.0, 0.949);
    const double fps = rng.uniform() < 0.5 ? 10.0 : 30.0;
    CHECK(detect_shots({v, fps}) == oracle_shots(v, fps, 0.95, 1.0));
  }
}

TEST_CASE("keyframe policy chooses the last or middle frame") {
  std::vector<double> v(20, 1.0);
  ShotDetectorConfig cfg;
  auto shots = detect_shots({v, 10.0}, cfg);
  REQUIRE(shots.size() == 1);
  CHECK(shots[0] == Shot{0, 20, 20});
  cfg.keyframe_policy = KeyframePolicy::Middle;
  shots = detect_shots({v, 10.0}, cfg);
  CHECK(shots[0].keyframe == 10);
}

TEST_CASE("a run shorter than the steady duration is not a shot") {
  std::vector<double> v(8, 1.0);
  CHECK(detect_shots({v, 10.0}).empty());
  v.push_back(1.0);  // ten frames at 10 fps reach exactly one second
  CHECK(detect_shots({v, 10.0}).size() == 1);
}

TEST_CASE("instant drops are TAP and gradual recoveries are SCROLL") {
  const std::vector<double> tap{0.2, 0.9};
  auto sig = make_signature(tap, 30.0);
  CHECK(sig.drop_depth == doctest::Approx(0.2));
  CHECK(classify_transition(sig) == ActionType::Tap);

  std::vector<double> scroll{0.3};
  for (int i = 1; i <= 12; ++i) scroll.push_back(0.3 + 0.05 * i);
  sig = make_signature(scroll, 30.0);
  CHECK(sig.rising_s >= 0.3);
  CHECK(sig.recovery_shape == RecoveryShape::Gradual);
  CHECK(classify_transition(sig) == ActionType::Scroll);

  CHECK(classify_transition(make_signature(std::vector<double>{}, 30.0)) == ActionType::Tap);
}

TEST_CASE("rising time counts steps of the moving average after the minimum") {
  // Nine strictly increasing values after the minimum give nine rising steps.
  std::vector<double> gap{0.1};
  for (int i = 1; i <= 9; ++i) gap.push_back(0.1 + 0.1 * i);
  const auto sig = make_signature(gap, 30.0);
  CHECK(sig.rising_s == doctest::Approx(9.0 / 30.0));
  CHECK(sig.recovery_shape == RecoveryShape::Gradual);
}

TEST_CASE("confidence stays within [0,1]") {
  nn::Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> gap(static_cast<std::size_t>(rng.integer(0, 20)));
    for (auto& g : gap) g = rng.uniform();
    const double c = transition_confidence(make_signature(gap, 30.0));
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("backward stack pushes, pops and replaces") {
  BackwardStack s;
  CHECK_THROWS_AS(s.pop(), Error);
  s.push(0, LumaPlane(2, 2, 1.0));
  CHECK(s.below_top() == nullptr);
  s.push(1, LumaPlane(2, 2, 2.0));
  REQUIRE(s.below_top() != nullptr);
  CHECK(s.below_top()->at(0, 0) == 1.0);
  s.replace_top(5, LumaPlane(2, 2, 3.0));
  CHECK(s.size() == 2);
  CHECK(s.top_shot() == 5);
  s.pop();
  CHECK(s.top_shot() == 0);
}

TEST_CASE("palindromic taps resolve to BACKWARD") {
  nn::Rng rng(13);
  const auto a = testing::random_image(rng, 24, 24), b = testing::random_image(rng, 24, 24),
             c = testing::random_image(rng, 24, 24);
  // Keyframes A B A C A: the second and fourth transitions return.
  const auto frames = FrameSeries::from_images({a, b, a, c, a}, 1.0);
  std::vector<Shot> shots;
  for (std::size_t i = 0; i < 5; ++i) shots.push_back({i, i, i});
  const std::vector<ActionType> taps(4, ActionType::Tap);
  const auto out = resolve_backward(shots, taps, frames, 0.95);
  CHECK(out == std::vector<ActionType>{ActionType::Tap, ActionType::Backward, ActionType::Tap, ActionType::Backward});

  // A scroll on B replaces the top, so returning to A is still BACKWARD.
  const auto b2 = testing::random_image(rng, 24, 24);
  const auto frames2 = FrameSeries::from_images({a, b, b2, a}, 1.0);
  std::vector<Shot> shots2;
  for (std::size_t i = 0; i < 4; ++i) shots2.push_back({i, i, i});
  const auto out2 = resolve_backward(shots2, {ActionType::Tap, ActionType::Scroll, ActionType::Tap}, frames2, 0.95);
  CHECK(out2 == std::vector<ActionType>{ActionType::Tap, ActionType::Scroll, ActionType::Backward});

  CHECK_THROWS_AS(resolve_backward(shots, {ActionType::Tap}, frames, 0.95), Error);
}

TEST_CASE("scroll offset recovers a vertical content shift") {
  nn::Rng rng(14);
  const auto tall = testing::random_image(rng, 60, 200);
  const RgbImage ui1 = tall.crop({0, 40, 60, 160});
  const RgbImage ui2 = tall.crop({0, 70, 60, 190});  // content moved up by 30 px
  const auto off = scroll_offset(ui1, ui2);
  REQUIRE(off.has_value());
  CHECK(off->dx == 0);
  CHECK(off->dy == -30);
}

TEST_CASE("segmenting a rendered script reproduces its actions and shots") {
  const auto rendered = synth::render_video(synth::random_script(21, 6));
  const auto seg = segment(rendered.frames);
  REQUIRE(seg.scenes.size() == rendered.truth.scenes.size());
  for (std::size_t i = 0; i < seg.scenes.size(); ++i) {
    CHECK(seg.scenes[i].action == rendered.truth.scenes[i].action);
    if (seg.scenes[i].action == ActionType::Backward) {
      REQUIRE(seg.scenes[i].tap_location.has_value());
      CHECK(seg.scenes[i].tap_location->y == doctest::Approx(0.97));
    }
  }
  CHECK(seg.shots.size() == rendered.truth.shots.size());
}
