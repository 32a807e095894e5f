#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "uiactions/trace.hpp"
#include "uiactions/types.hpp"

// Seeded generators for screen recordings and tap transitions with known ground truth.
namespace uiactions::synth {

// Near the corners of the RGB cube so every pair stays linearly separable.
inline constexpr std::array<Rgb, 7> kPalette{{{222, 38, 38},
                                              {36, 176, 60},
                                              {38, 78, 232},
                                              {240, 204, 24},
                                              {204, 48, 204},
                                              {24, 196, 208},
                                              {36, 36, 44}}};

/// Draws text with a 3x5 bitmap font scaled by `scale`; unknown glyphs render as blanks.
void draw_text(RgbImage& image, int x, int y, std::string_view text, Rgb color, int scale = 1);
int text_width(std::string_view text, int scale = 1);

struct ScriptAction {
  ActionType type = ActionType::Tap;
  int target = 0;          // TAP: index into the visible tappable rows
  int dx = 0, dy = 0;      // SCROLL: content displacement in pixels
  double loading_s = 0.0;  // TAP: skeleton screen shown before the new UI
};

struct Script {
  std::uint64_t seed = 1;
  int width = 108;
  int height = 192;
  double fps = 30.0;
  std::vector<double> steady_s;  // one per UI state, actions.size() + 1 entries
  std::vector<ScriptAction> actions;
  double scroll_s = 0.8;
  int noise = 0;  // per-channel uniform noise amplitude

  void validate() const;
};

struct RenderedVideo {
  FrameSeries frames;
  ActionTrace truth;  // scripted shots and scenes
};

RenderedVideo render_video(const Script& script);

struct ScriptOptions {
  int width = 108;
  int height = 192;
  double fps = 30.0;
  double steady_min_s = 1.3;
  double steady_max_s = 2.0;
  double loading_probability = 0.3;
  int scroll_min_px = 30;
  int scroll_max_px = 60;
  int noise = 0;
};

/// Random valid script with `actions` entries mixing TAP, SCROLL, and BACKWARD.
Script random_script(std::uint64_t seed, int actions, const ScriptOptions& options = {});

struct TransitionOptions {
  int width = 144;
  int height = 256;
  double toggle_fraction = 0.0;  // in-place Switch/ToggleButton taps; 0 gives the plain button corpus
  int samples_per_app = 5;
};

/// `n` tap transitions; the tapped element's color identifies UI-2, toggles flip in place.
std::vector<TransitionSample> render_transition_dataset(int n, std::uint64_t seed,
                                                        const TransitionOptions& options = {});

}  // namespace uiactions::synth
