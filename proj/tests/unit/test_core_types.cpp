#include <doctest.h>

#include "support.hpp"
#include "uiactions/trace.hpp"
#include "uiactions/types.hpp"

using namespace uiactions;

TEST_CASE("bounding boxes reject degenerate or out-of-range bounds") {
  CHECK_THROWS_AS(BoundingBox(0.5, 0.1, 0.5, 0.2), Error);
  CHECK_THROWS_AS(BoundingBox(0.6, 0.1, 0.5, 0.2), Error);
  CHECK_THROWS_AS(BoundingBox(-0.1, 0.1, 0.5, 0.2), Error);
  CHECK_THROWS_AS(BoundingBox(0.1, 0.1, 0.5, 1.2), Error);
  CHECK_NOTHROW(BoundingBox(0.0, 0.0, 1.0, 1.0));
}

TEST_CASE("bounding box containment is inclusive on every edge") {
  const BoundingBox b(0.2, 0.3, 0.4, 0.6);
  CHECK(b.contains(0.2, 0.3));
  CHECK(b.contains(0.4, 0.6));
  CHECK(b.contains(0.3, 0.45));
  CHECK_FALSE(b.contains(0.19999, 0.4));
  CHECK_FALSE(b.contains(0.3, 0.60001));
  CHECK(b.center_x() == doctest::Approx(0.3));
  CHECK(b.width() == doctest::Approx(0.2));
}

TEST_CASE("pixel conversion round-trips aligned boxes") {
  const PixelRect r{10, 20, 50, 60};
  const auto b = BoundingBox::from_pixels(r, 100, 200);
  CHECK(b.x_lower() == doctest::Approx(0.1));
  CHECK(b.y_upper() == doctest::Approx(0.3));
  CHECK(b.to_pixels(100, 200) == r);
}

TEST_CASE("shots validate ordering and keyframe placement") {
  CHECK_NOTHROW(validate_shot({0, 10, 10}));
  CHECK_THROWS_AS(validate_shot({5, 4, 4}), Error);
  CHECK_THROWS_AS(validate_shot({0, 10, 11}), Error);
  CHECK_NOTHROW(validate_shot_list({{0, 10, 10}, {12, 20, 20}}));
  CHECK_THROWS_AS(validate_shot_list({{0, 10, 10}, {10, 20, 20}}), Error);
  CHECK_THROWS_AS(validate_shot_list({{12, 20, 20}, {0, 10, 10}}), Error);
}

TEST_CASE("prediction ranks run 1..n with non-increasing confidence") {
  CHECK_NOTHROW(validate_predictions({{0.1, 0.1, 0.9, 1}, {0.2, 0.2, 0.9, 2}, {0.3, 0.3, 0.1, 3}}));
  CHECK_THROWS_AS(validate_predictions({{0.1, 0.1, 0.5, 1}, {0.2, 0.2, 0.9, 2}}), Error);
  CHECK_THROWS_AS(validate_predictions({{0.1, 0.1, 0.9, 2}}), Error);
}

TEST_CASE("scene invariants tie payloads to action types") {
  ActionScene s;
  s.from_shot = {0, 30, 30};
  s.to_shot = {35, 70, 70};
  s.action = ActionType::Tap;
  s.tap_location = NormPoint{0.5, 0.5};
  CHECK_NOTHROW(validate_scene(s));
  s.scroll_offset = ScrollOffset{0, 10};
  CHECK_THROWS_AS(validate_scene(s), Error);
  s.scroll_offset.reset();
  s.to_shot = {20, 70, 70};
  CHECK_THROWS_AS(validate_scene(s), Error);
}

TEST_CASE("action and group role names round-trip") {
  for (auto a : {ActionType::Tap, ActionType::Scroll, ActionType::Backward})
    CHECK(parse_action_type(to_string(a)) == a);
  for (auto g : {GroupRole::List, GroupRole::Tab, GroupRole::Card, GroupRole::Frame})
    CHECK(parse_group_role(to_string(g)) == g);
  CHECK_THROWS_AS(parse_action_type("SWIPE"), Error);
}

TEST_CASE("hierarchies must nest within tolerance") {
  UiHierarchy h;
  h.root.class_name = "Root";
  h.root.bounds = BoundingBox(0, 0, 1, 1);
  UiElement child;
  child.class_name = "Button";
  child.bounds = BoundingBox(0.1, 0.1, 0.3, 0.2);
  h.root.children.push_back(child);
  CHECK_NOTHROW(validate_hierarchy(h));
  UiHierarchy bad = h;
  bad.root.bounds = BoundingBox(0.2, 0.2, 1, 1);
  CHECK_THROWS_AS(validate_hierarchy(bad), Error);
}

TEST_CASE("letterbox coordinate maps are mutual inverses") {
  const RgbImage src(100, 300, {10, 20, 30});
  const auto lb = letterbox(src, 144, 256);
  CHECK(lb.image.width() == 144);
  CHECK(lb.image.height() == 256);
  for (double v : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    CHECK(lb.to_source_x(lb.to_canvas_x(v)) == doctest::Approx(v).epsilon(1e-12));
    CHECK(lb.to_source_y(lb.to_canvas_y(v)) == doctest::Approx(v).epsilon(1e-12));
  }
  // Padding stays black, content keeps its color.
  CHECK(lb.image.pixel(0, 128) == Rgb{0, 0, 0});
  CHECK(lb.image.pixel(72, 128) == Rgb{10, 20, 30});
}

TEST_CASE("png encoding round-trips pixels") {
  nn::Rng rng(3);
  const auto img = testing::random_image(rng, 17, 9);
  testing::TempDir dir;
  write_png(dir / "a.png", img);
  CHECK(read_image(dir / "a.png") == img);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), Error);
}

TEST_CASE("resize to the same size is the identity and constant images stay constant") {
  nn::Rng rng(4);
  const auto img = testing::random_image(rng, 12, 8);
  CHECK(resize(img, 12, 8) == img);
  const RgbImage flat(40, 40, {7, 8, 9});
  const auto small = resize(flat, 13, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x) CHECK(small.pixel(x, y) == Rgb{7, 8, 9});
}

TEST_CASE("trace documents round-trip through JSON") {
  ActionTrace t;
  t.video_id = "v";
  t.fps = 30;
  t.frame_count = 100;
  t.shots = {{0, 30, 30}, {40, 99, 99}};
  ActionScene s;
  s.from_shot = t.shots[0];
  s.to_shot = t.shots[1];
  s.tap_location = NormPoint{0.25, 0.75};
  s.predictions = {{0.25, 0.75, 0.9, 1}, {0.5, 0.5, 0.2, 2}};
  s.target_bounds = BoundingBox(0.2, 0.7, 0.3, 0.8);
  t.scenes = {s};
  const auto doc = serialize_trace(t);
  CHECK(doc["kind"] == "action_trace");
  CHECK(doc["scenes"][0]["start_s"].get<double>() == doctest::Approx(1.0));
  const auto back = parse_trace(doc);
  CHECK(back == t);
  CHECK(dump_json(serialize_trace(back)) == dump_json(doc));

  auto wrong = doc;
  wrong["schema_version"] = 2;
  CHECK_THROWS_AS(parse_trace(wrong), Error);
}

TEST_CASE("trace validation rejects overlapping scenes") {
  ActionTrace t;
  t.shots = {{0, 30, 30}, {40, 60, 60}, {70, 99, 99}};
  ActionScene a, b;
  a.from_shot = t.shots[0];
  a.to_shot = t.shots[2];
  b.from_shot = t.shots[1];
  b.to_shot = t.shots[2];
  t.scenes = {a, b};
  CHECK_THROWS_AS(validate_trace(t), Error);
}
