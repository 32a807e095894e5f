#include <doctest.h>

#include "support.hpp"
#include "uiactions/synthetic.hpp"

using namespace uiactions;

TEST_CASE("random scripts are valid and seeded") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = synth::random_script(seed, 6);
    CHECK_NOTHROW(s.validate());
    CHECK(s.actions.size() == 6u);
    CHECK(s.steady_s.size() == 7u);
  }
  CHECK(synth::random_script(5, 6).actions.size() == synth::random_script(5, 6).actions.size());
  synth::Script bad = synth::random_script(1, 3);
  bad.steady_s.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rendered videos are deterministic and carry a valid ground truth") {
  const auto a = synth::render_video(synth::random_script(7, 5));
  const auto b = synth::render_video(synth::random_script(7, 5));
  REQUIRE(a.frames.size() == b.frames.size());
  CHECK(a.frames[a.frames.size() / 2].pixels == b.frames[b.frames.size() / 2].pixels);
  CHECK_NOTHROW(validate_trace(a.truth));
  CHECK(a.truth.scenes.size() == 5u);
  CHECK(a.truth.frame_count == a.frames.size());
  for (const auto& s : a.truth.scenes)
    if (s.action == ActionType::Tap) CHECK(s.target_bounds.has_value());
}

TEST_CASE("transition samples are well formed") {
  synth::TransitionOptions o;
  o.toggle_fraction = 0.5;
  const auto data = synth::render_transition_dataset(30, 8, o);
  REQUIRE(data.size() == 30u);
  for (const auto& s : data) {
    CHECK(s.ui1.width() == 144);
    CHECK(s.ui2.height() == 256);
    REQUIRE(s.hierarchy.has_value());
    CHECK_NOTHROW(validate_hierarchy(*s.hierarchy));
    CHECK(s.gt_bounds.width() > 0.0);
    CHECK(s.origin == "source");
  }
  CHECK(data[0].app_id == data[4].app_id);
  CHECK(data[0].app_id != data[5].app_id);
  const auto again = synth::render_transition_dataset(30, 8, o);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(again[i].same_transition(data[i]));
}

TEST_CASE("bitmap text has the documented width") {
  CHECK(synth::text_width("AB", 2) > synth::text_width("AB", 1));
  CHECK(synth::text_width("") == 0);
  RgbImage img(30, 10, {255, 255, 255});
  synth::draw_text(img, 1, 1, "HI", {0, 0, 0});
  int dark = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 30; ++x) dark += img.pixel(x, y) == Rgb{0, 0, 0};
  CHECK(dark > 0);
}
