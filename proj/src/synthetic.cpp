#include "uiactions/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "uiactions/nn.hpp"

namespace uiactions::synth {

namespace {

// 3x5 glyphs, rows top to bottom.
const std::map<char, std::string_view>& glyphs() {
  static const std::map<char, std::string_view> g{
      {'A', "010101111101101"}, {'B', "110101110101110"}, {'C', "011100100100011"}, {'D', "110101101101110"},
      {'E', "111100110100111"}, {'F', "111100110100100"}, {'G', "011100101101011"}, {'H', "101101111101101"},
      {'I', "111010010010111"}, {'J', "001001001101010"}, {'K', "101101110101101"}, {'L', "100100100100111"},
      {'M', "101111111101101"}, {'N', "110101101101101"}, {'O', "010101101101010"}, {'P', "110101110100100"},
      {'Q', "010101101110011"}, {'R', "110101110101101"}, {'S', "011100010001110"}, {'T', "111010010010010"},
      {'U', "101101101101111"}, {'V', "101101101101010"}, {'W', "101101111111101"}, {'X', "101101010101101"},
      {'Y', "101101010010010"}, {'Z', "111001010100111"}, {'0', "111101101101111"}, {'1', "010110010010111"},
      {'2', "110001010100111"}, {'3', "110001010001110"}, {'4', "101101111001001"}, {'5', "111100110001110"},
      {'6', "011100111101111"}, {'7', "111001010010010"}, {'8', "111101111101111"}, {'9', "111101111001110"},
      {'-', "000000111000000"}, {'.', "000000000000010"}};
  return g;
}

const std::array<std::string_view, 24> kWords{"HOME", "MAIL", "MAPS", "NEWS", "SHOP", "CHAT", "STAR", "SAVE",
                                              "SEND", "EDIT", "LIST", "MORE", "FEED", "INFO", "HELP", "CART",
                                              "MENU", "FILE", "LIVE", "TOP",  "NEW",  "GO",   "BUY",  "ADD"};

const std::array<Rgb, 6> kBackgrounds{{{250, 250, 250}, {238, 241, 245}, {245, 240, 230},
                                       {232, 245, 233}, {240, 236, 248}, {225, 232, 240}}};

Rgb mix(Rgb a, Rgb b, double t) {
  auto ch = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + (static_cast<double>(y) - x) * t));
  };
  return {ch(a.r, b.r), ch(a.g, b.g), ch(a.b, b.b)};
}

Rgb text_on(Rgb c) {
  const double luma = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
  return luma > 150 ? Rgb{20, 20, 20} : Rgb{255, 255, 255};
}

std::string pick_word(nn::Rng& rng) { return std::string(kWords[static_cast<std::size_t>(rng.integer(0, kWords.size() - 1))]); }

BoundingBox normalized(const PixelRect& r, int w, int h) { return BoundingBox::from_pixels(r, w, h); }

// --- Scrollable pages for recordings -----------------------------------------

struct Row {
  PixelRect rect;  // page coordinates below the header
  Rgb color;
  std::string label;
};

struct Page {
  Rgb background;
  Rgb header;
  std::string title;
  std::vector<Row> rows;
  int content_height = 0;
};

struct ViewState {
  int page = 0;
  int scroll = 0;
  bool operator==(const ViewState&) const = default;
};

int header_height(int h) { return std::max(8, h / 8); }

Page make_page(std::uint64_t seed, int id, int w, int h) {
  nn::Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(id) * 0xBF58476D1CE4E5B9ULL + 17);
  Page p;
  p.background = kBackgrounds[static_cast<std::size_t>(rng.integer(0, kBackgrounds.size() - 1))];
  p.header = mix(kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))], {0, 0, 0}, 0.25);
  p.title = pick_word(rng) + std::to_string(id % 10);
  const int view = h - header_height(h);
  const int margin = std::max(3, w / 18);
  int y = margin;
  while (true) {
    const int rh = rng.integer(h * 13 / 96, h * 20 / 96);
    if (y + rh > 3 * view) break;
    Row r;
    r.rect = {margin + rng.integer(0, margin), y, w - margin - rng.integer(0, margin), y + rh};
    r.color = kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))];
    r.label = pick_word(rng);
    p.rows.push_back(r);
    y += rh + rng.integer(margin, 3 * margin);
  }
  p.content_height = std::max(y, view);
  return p;
}

int max_scroll(const Page& p, int h) { return std::max(0, p.content_height - (h - header_height(h))); }

PixelRect on_screen(const Row& r, int scroll, int h) {
  const int top = header_height(h) - scroll;
  return {r.rect.x0, r.rect.y0 + top, r.rect.x1, r.rect.y1 + top};
}

std::vector<std::size_t> visible_rows(const Page& p, int scroll, int h) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto r = on_screen(p.rows[i], scroll, h);
    if (r.y0 >= header_height(h) && r.y1 <= h) out.push_back(i);
  }
  return out;
}

RgbImage render_page(const Page& p, int scroll, int w, int h) {
  RgbImage img(w, h, p.background);
  const int scale = std::max(1, w / 54);
  for (const auto& row : p.rows) {
    const auto r = on_screen(row, scroll, h);
    if (r.y1 <= header_height(h) || r.y0 >= h) continue;
    img.fill_rect(r, mix(row.color, {255, 255, 255}, 0.55));
    const int icon = r.height() - 2 * scale * 2;
    img.fill_rect({r.x0 + 2 * scale, r.y0 + 2 * scale, r.x0 + 2 * scale + icon, r.y0 + 2 * scale + icon}, row.color);
    draw_text(img, r.x0 + 4 * scale + icon, r.y0 + r.height() / 2 - 5 * scale / 2, row.label, {30, 30, 30}, scale);
  }
  img.fill_rect({0, 0, w, header_height(h)}, p.header);
  draw_text(img, 3 * scale, header_height(h) / 2 - 5 * scale / 2, p.title, text_on(p.header), scale);
  return img;
}

RgbImage render_skeleton(int w, int h) {
  RgbImage img(w, h, {236, 236, 236});
  img.fill_rect({0, 0, w, header_height(h)}, {200, 200, 200});
  const int margin = std::max(3, w / 18);
  for (int y = header_height(h) + margin; y + h / 10 < h; y += h / 10 + margin)
    img.fill_rect({margin, y, w - margin, y + h / 10}, {216, 216, 216});
  return img;
}

double ease_out_cubic(double t) { return 1.0 - std::pow(1.0 - t, 3.0); }

void add_noise(RgbImage& img, int amplitude, nn::Rng& rng) {
  if (amplitude <= 0) return;
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + rng.integer(-amplitude, amplitude), 0, 255));
}

}  // namespace

int text_width(std::string_view text, int scale) {
  return text.empty() ? 0 : static_cast<int>(text.size()) * 4 * scale - scale;
}

void draw_text(RgbImage& image, int x, int y, std::string_view text, Rgb color, int scale) {
  const auto& g = glyphs();
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    const auto it = g.find(c);
    if (it == g.end()) continue;
    const int gx = x + static_cast<int>(i) * 4 * scale;
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 3; ++col)
        if (it->second[static_cast<std::size_t>(row * 3 + col)] == '1')
          image.fill_rect({gx + col * scale, y + row * scale, gx + (col + 1) * scale, y + (row + 1) * scale}, color);
  }
}

void Script::validate() const {
  if (width < 32 || height < 32) throw Error("script frame size must be at least 32x32");
  if (!(fps > 0.0)) throw Error("script fps must be positive");
  if (steady_s.size() != actions.size() + 1)
    throw Error("script needs one steady duration per UI state (" + std::to_string(actions.size() + 1) + ")");
  for (double s : steady_s)
    if (!(s > 0.0)) throw Error("steady duration must be positive");
  if (!(scroll_s > 0.0)) throw Error("scroll duration must be positive");
  if (noise < 0) throw Error("noise amplitude must be non-negative");
  for (const auto& a : actions)
    if (a.loading_s < 0.0) throw Error("loading duration must be non-negative");
}

RenderedVideo render_video(const Script& script) {
  script.validate();
  const int w = script.width, h = script.height;
  std::vector<Page> pages{make_page(script.seed, 0, w, h)};
  std::vector<ViewState> stack{{0, 0}};
  std::vector<RgbImage> images;
  std::vector<Shot> shots;
  std::vector<ActionScene> scenes;

  auto frames_for = [&](double seconds) { return static_cast<std::size_t>(std::max(1L, std::lround(seconds * script.fps))); };
  auto current = [&] { return stack.back(); };

  for (std::size_t i = 0; i <= script.actions.size(); ++i) {
    const std::size_t start = images.size();
    const std::size_t n = frames_for(script.steady_s[i]);
    const RgbImage steady = render_page(pages[static_cast<std::size_t>(current().page)], current().scroll, w, h);
    for (std::size_t k = 0; k < n; ++k) images.push_back(steady);
    shots.push_back({start, start + n - 1, start + n - 1});
    if (!scenes.empty()) scenes.back().to_shot = shots.back();
    if (i == script.actions.size()) break;

    const auto& action = script.actions[i];
    ActionScene scene;
    scene.from_shot = shots.back();
    scene.action = action.type;
    const Page& page = pages[static_cast<std::size_t>(current().page)];
    switch (action.type) {
      case ActionType::Tap: {
        const auto visible = visible_rows(page, current().scroll, h);
        if (action.target < 0 || static_cast<std::size_t>(action.target) >= visible.size())
          throw Error("TAP target " + std::to_string(action.target) + " is not a visible element of the current UI");
        const auto rect = on_screen(page.rows[visible[static_cast<std::size_t>(action.target)]], current().scroll, h);
        scene.target_bounds = normalized(rect, w, h);
        scene.tap_location = NormPoint{scene.target_bounds->center_x(), scene.target_bounds->center_y()};
        if (action.loading_s > 0.0) {
          const RgbImage skeleton = render_skeleton(w, h);
          const long m = std::lround(action.loading_s * script.fps);
          for (long k = 0; k < m; ++k) images.push_back(skeleton);
        }
        const int id = static_cast<int>(pages.size());
        pages.push_back(make_page(script.seed, id, w, h));
        stack.push_back({id, 0});
        break;
      }
      case ActionType::Scroll: {
        if (action.dx != 0) throw Error("only vertical scrolling is rendered");
        if (action.dy == 0) throw Error("SCROLL needs a non-zero displacement");
        const int from = current().scroll, to = from - action.dy;
        if (to < 0 || to > max_scroll(page, h)) throw Error("SCROLL moves past the end of the page");
        const long m = std::max(2L, std::lround(script.scroll_s * script.fps));
        for (long k = 1; k < m; ++k) {
          const double t = ease_out_cubic(static_cast<double>(k) / static_cast<double>(m));
          images.push_back(render_page(page, from + static_cast<int>(std::lround((to - from) * t)), w, h));
        }
        stack.back().scroll = to;
        scene.scroll_offset = ScrollOffset{action.dx, action.dy};
        break;
      }
      case ActionType::Backward:
        if (stack.size() < 2) throw Error("BACKWARD with nothing to return to");
        stack.pop_back();
        scene.tap_location = NormPoint{0.5, 0.97};
        break;
    }
    scenes.push_back(scene);
  }

  nn::Rng noise_rng(script.seed ^ 0xD1B54A32D192ED03ULL);
  for (auto& img : images) add_noise(img, script.noise, noise_rng);

  RenderedVideo out;
  out.truth.video_id = "synthetic-" + std::to_string(script.seed);
  out.truth.fps = script.fps;
  out.truth.frame_count = images.size();
  out.truth.shots = shots;
  out.truth.scenes = scenes;
  out.truth.metadata = {{"generator", "synthetic"}, {"seed", script.seed}};
  validate_trace(out.truth);
  out.frames = FrameSeries::from_images(std::move(images), script.fps, out.truth.video_id);
  return out;
}

Script random_script(std::uint64_t seed, int actions, const ScriptOptions& o) {
  if (actions < 0) throw Error("action count must be non-negative");
  nn::Rng rng(seed);
  Script s;
  s.seed = seed;
  s.width = o.width;
  s.height = o.height;
  s.fps = o.fps;
  s.noise = o.noise;
  std::vector<Page> pages{make_page(seed, 0, o.width, o.height)};
  std::vector<ViewState> stack{{0, 0}};
  s.steady_s.push_back(rng.uniform(o.steady_min_s, o.steady_max_s));
  for (int i = 0; i < actions; ++i) {
    const ViewState cur = stack.back();
    const Page& page = pages[static_cast<std::size_t>(cur.page)];
    const int room_down = max_scroll(page, o.height) - cur.scroll, room_up = cur.scroll;
    const bool can_scroll = std::max(room_down, room_up) >= o.scroll_min_px;
    const bool can_back = stack.size() >= 2;
    const double r = rng.uniform() * (0.4 + (can_scroll ? 0.3 : 0.0) + (can_back ? 0.3 : 0.0));
    ScriptAction a;
    if (r < 0.4) {
      a.type = ActionType::Tap;
      a.target = rng.integer(0, static_cast<int>(visible_rows(page, cur.scroll, o.height).size()) - 1);
      if (rng.uniform() < o.loading_probability) a.loading_s = rng.uniform(0.3, 0.5);
      const int id = static_cast<int>(pages.size());
      pages.push_back(make_page(seed, id, o.width, o.height));
      stack.push_back({id, 0});
    } else if (can_scroll && r < 0.7) {
      a.type = ActionType::Scroll;
      const bool down = room_down >= o.scroll_min_px && (room_up < o.scroll_min_px || rng.uniform() < 0.6);
      const int amount = rng.integer(o.scroll_min_px, std::min(o.scroll_max_px, down ? room_down : room_up));
      a.dy = down ? -amount : amount;
      stack.back().scroll = cur.scroll - a.dy;
    } else {
      a.type = ActionType::Backward;
      stack.pop_back();
    }
    s.actions.push_back(a);
    s.steady_s.push_back(rng.uniform(o.steady_min_s, o.steady_max_s));
  }
  return s;
}

// --- Tap transitions ----------------------------------------------------------

namespace {

struct Placed {
  UiElement node;
  PixelRect rect;
  Rgb color;
  bool toggle = false;
  bool on = false;
};

void draw_button(RgbImage& img, const Placed& e, int scale) {
  img.fill_rect(e.rect, e.color);
  if (e.node.text) {
    const int tw = text_width(*e.node.text, scale);
    draw_text(img, e.rect.x0 + (e.rect.width() - tw) / 2, e.rect.y0 + (e.rect.height() - 5 * scale) / 2, *e.node.text,
              text_on(e.color), scale);
  }
}

void draw_toggle(RgbImage& img, const Placed& e, bool on) {
  const Rgb track = on ? e.color : Rgb{176, 176, 184};
  img.fill_rect(e.rect, track);
  const int k = e.rect.height() - 4;
  const int kx = on ? e.rect.x1 - 2 - k : e.rect.x0 + 2;
  img.fill_rect({kx, e.rect.y0 + 2, kx + k, e.rect.y0 + 2 + k}, {255, 255, 255});
}

UiElement leaf(std::string cls, const PixelRect& r, int w, int h, bool clickable, std::optional<std::string> text = {}) {
  UiElement e;
  e.class_name = std::move(cls);
  e.bounds = normalized(r, w, h);
  e.clickable = clickable;
  e.text = std::move(text);
  return e;
}

struct AppTheme {
  Rgb background;
  Rgb header;
  std::string title;
  bool tabs = true;
};

}  // namespace

std::vector<TransitionSample> render_transition_dataset(int n, std::uint64_t seed, const TransitionOptions& o) {
  if (n < 1) throw Error("transition dataset size must be >= 1");
  if (o.samples_per_app < 1) throw Error("samples_per_app must be >= 1");
  if (!(o.toggle_fraction >= 0.0 && o.toggle_fraction <= 1.0)) throw Error("toggle_fraction must lie in [0,1]");
  const int W = o.width, H = o.height;
  if (W < 96 || H < 160) throw Error("transition screens must be at least 96x160");
  const int scale = std::max(1, W / 72);
  nn::Rng rng(seed);
  std::vector<TransitionSample> out;
  AppTheme theme;

  for (int i = 0; i < n; ++i) {
    if (i % o.samples_per_app == 0) {
      theme.background = kBackgrounds[static_cast<std::size_t>(rng.integer(0, kBackgrounds.size() - 1))];
      theme.header = mix(kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))], {0, 0, 0}, 0.35);
      theme.title = pick_word(rng);
      theme.tabs = rng.uniform() < 0.5;
    }
    std::vector<std::size_t> colors(kPalette.size());
    for (std::size_t c = 0; c < colors.size(); ++c) colors[c] = c;
    rng.shuffle(colors);
    std::size_t next_color = 0;
    auto take_color = [&] { return kPalette[colors[next_color++]]; };

    const int header_h = H / 10;
    std::vector<Placed> clickables;
    UiElement group;
    group.group_role = theme.tabs ? GroupRole::Tab : GroupRole::List;
    group.class_name = theme.tabs ? "TabLayout" : "ListView";
    int group_bottom = 0;
    if (theme.tabs) {
      const int count = rng.integer(3, 4);
      const int y0 = header_h + 2, th = H / 9;
      const int tw = (W - 8) / count;
      for (int t = 0; t < count; ++t) {
        Placed p;
        p.rect = {4 + t * tw + 1, y0, 4 + (t + 1) * tw - 1, y0 + th};
        p.color = take_color();
        p.node = leaf("Tab", p.rect, W, H, true, pick_word(rng));
        clickables.push_back(p);
      }
      group.bounds = normalized({4, y0, 4 + count * tw, y0 + th}, W, H);
      group_bottom = y0 + th;
    } else {
      const int count = rng.integer(3, 4);
      const int y0 = header_h + H / 32, rh = H / 10, gap = H / 40;
      for (int t = 0; t < count; ++t) {
        Placed p;
        p.rect = {W / 18, y0 + t * (rh + gap), W - W / 18, y0 + t * (rh + gap) + rh};
        p.color = take_color();
        p.node = leaf("ListItem", p.rect, W, H, true, pick_word(rng));
        clickables.push_back(p);
      }
      group.bounds = normalized({W / 18, y0, W - W / 18, y0 + count * (rh + gap) - gap}, W, H);
      group_bottom = y0 + count * (rh + gap) - gap;
    }

    // Free cells below the group: two columns.
    const int top = group_bottom + H / 24, bottom = H - H / 32;
    const int rows = std::max(1, (bottom - top) / (H / 8));
    std::vector<std::pair<int, int>> cells;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < 2; ++c) cells.emplace_back(r, c);
    rng.shuffle(cells);
    const int cell_w = W / 2, cell_h = (bottom - top) / rows;
    std::size_t next_cell = 0;
    auto cell_rect = [&](int w, int h) {
      const auto [r, c] = cells[next_cell++ % cells.size()];
      const int cx0 = c * cell_w, cy0 = top + r * cell_h;
      const int x = cx0 + rng.integer(2, std::max(2, cell_w - w - 2));
      const int y = cy0 + rng.integer(1, std::max(1, cell_h - h - 1));
      return PixelRect{x, y, x + w, y + h};
    };

    const bool toggle_sample = rng.uniform() < o.toggle_fraction;
    const bool with_toggle = toggle_sample || rng.uniform() < 0.15;
    const int buttons = std::min({rng.integer(1, 3), static_cast<int>(cells.size()) - 1 - (with_toggle ? 1 : 0),
                                  static_cast<int>(kPalette.size() - clickables.size()) - (with_toggle ? 1 : 0)});
    for (int b = 0; b < buttons; ++b) {
      Placed p;
      p.rect = cell_rect(rng.integer(W * 28 / 100, W * 42 / 100), rng.integer(H * 7 / 100, H * 10 / 100));
      p.color = take_color();
      p.node = leaf("Button", p.rect, W, H, true, pick_word(rng));
      clickables.push_back(p);
    }
    if (with_toggle) {
      Placed p;
      p.rect = cell_rect(W / 4, H * 6 / 100);
      p.color = take_color();
      p.toggle = true;
      p.on = rng.uniform() < 0.5;
      const bool media = rng.uniform() < 0.5;
      p.node = leaf(media ? "ToggleButton" : "Switch", p.rect, W, H, true,
                    media ? (p.on ? "pause" : "play") : (p.on ? "on" : "off"));
      clickables.push_back(p);
    }
    const PixelRect image_rect = cell_rect(W * 3 / 10, H * 8 / 100);

    // UI-1.
    RgbImage ui1(W, H, theme.background);
    ui1.fill_rect({0, 0, W, header_h}, theme.header);
    draw_text(ui1, 3 * scale, (header_h - 5 * scale) / 2, theme.title, text_on(theme.header), scale);
    ui1.fill_rect(image_rect, {205, 205, 210});
    for (const auto& c : clickables) {
      if (c.toggle) draw_toggle(ui1, c, c.on);
      else draw_button(ui1, c, scale);
    }

    UiHierarchy h1;
    h1.root = leaf("FrameLayout", {0, 0, W, H}, W, H, false);
    h1.root.children.push_back(leaf("TextView", {0, 0, W, header_h}, W, H, false, theme.title));
    for (const auto& c : clickables)
      if (c.node.class_name == "Tab" || c.node.class_name == "ListItem") group.children.push_back(c.node);
    h1.root.children.push_back(group);
    for (const auto& c : clickables)
      if (c.node.class_name != "Tab" && c.node.class_name != "ListItem") h1.root.children.push_back(c.node);
    h1.root.children.push_back(leaf("ImageView", image_rect, W, H, false));

    // Target and UI-2.
    std::size_t target = 0;
    if (toggle_sample) {
      target = clickables.size() - 1;
    } else {
      const std::size_t plain = clickables.size() - (with_toggle ? 1 : 0);
      target = static_cast<std::size_t>(rng.integer(0, static_cast<int>(plain) - 1));
    }
    const Placed& tapped = clickables[target];
    RgbImage ui2;
    UiHierarchy h2;
    if (tapped.toggle) {
      ui2 = ui1;
      draw_toggle(ui2, tapped, !tapped.on);
      h2 = h1;
      const std::string flipped = tapped.node.class_name == "Switch" ? (tapped.on ? "off" : "on")
                                                                      : (tapped.on ? "play" : "pause");
      for (auto& child : h2.root.children)
        if (child.bounds == tapped.node.bounds && child.class_name == tapped.node.class_name) child.text = flipped;
    } else {
      const Rgb bg = mix(tapped.color, {255, 255, 255}, 0.15);
      ui2 = RgbImage(W, H, bg);
      const Rgb hdr = mix(tapped.color, {0, 0, 0}, 0.3);
      ui2.fill_rect({0, 0, W, header_h}, hdr);
      draw_text(ui2, 3 * scale, (header_h - 5 * scale) / 2, *tapped.node.text, text_on(hdr), scale);
      h2.root = leaf("FrameLayout", {0, 0, W, H}, W, H, false);
      h2.root.children.push_back(leaf("TextView", {0, 0, W, header_h}, W, H, false, tapped.node.text));
      const int cards = rng.integer(2, 4);
      int y = header_h + H / 24;
      for (int c = 0; c < cards && y + H / 8 < H; ++c) {
        const int ch = rng.integer(H / 12, H / 6);
        const PixelRect r{W / 16, y, W - W / 16, std::min(H - 2, y + ch)};
        ui2.fill_rect(r, {252, 252, 252});
        draw_text(ui2, r.x0 + 2 * scale, r.y0 + 2 * scale, pick_word(rng), {60, 60, 60}, scale);
        h2.root.children.push_back(leaf("CardView", r, W, H, false));
        y = r.y1 + H / 32;
      }
    }

    TransitionSample s;
    char id[64];
    std::snprintf(id, sizeof id, "syn-%llu-%05d", static_cast<unsigned long long>(seed), i);
    s.id = id;
    std::snprintf(id, sizeof id, "app-%llu-%04d", static_cast<unsigned long long>(seed), i / o.samples_per_app);
    s.app_id = id;
    s.ui1 = std::move(ui1);
    s.ui2 = std::move(ui2);
    s.gt_bounds = tapped.node.bounds;
    s.hierarchy = std::move(h1);
    s.ui2_hierarchy = std::move(h2);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace uiactions::synth
