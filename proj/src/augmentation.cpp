#include "uiactions/augmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "uiactions/image.hpp"
#include "uiactions/nn.hpp"

namespace uiactions {

void ExchangeConfig::validate() const {
  if (!(width_tolerance >= 0.0) || !(height_tolerance >= 0.0)) throw Error("exchange tolerances must be >= 0");
}

namespace {

constexpr double kNest = 1e-9;

bool inside(const BoundingBox& inner, const BoundingBox& outer) {
  return inner.x_lower() >= outer.x_lower() - kNest && inner.y_lower() >= outer.y_lower() - kNest &&
         inner.x_upper() <= outer.x_upper() + kNest && inner.y_upper() <= outer.y_upper() + kNest;
}

BoundingBox remap(const BoundingBox& b, const BoundingBox& from, const BoundingBox& to) {
  const double sx = to.width() / from.width(), sy = to.height() / from.height();
  const auto mx = [&](double x) { return std::clamp(to.x_lower() + (x - from.x_lower()) * sx, 0.0, 1.0); };
  const auto my = [&](double y) { return std::clamp(to.y_lower() + (y - from.y_lower()) * sy, 0.0, 1.0); };
  return BoundingBox(mx(b.x_lower()), my(b.y_lower()), mx(b.x_upper()), my(b.y_upper()));
}

void remap_tree(UiElement& e, const BoundingBox& from, const BoundingBox& to) {
  e.bounds = remap(e.bounds, from, to);
  for (auto& c : e.children) remap_tree(c, from, to);
}

bool similar(const UiElement& a, const UiElement& b, const ExchangeConfig& cfg) {
  if (a.class_name != b.class_name) return false;
  const auto close = [](double x, double y, double tol) { return std::abs(x - y) <= tol * std::max(x, y) + kNest; };
  return close(a.bounds.width(), b.bounds.width(), cfg.width_tolerance) &&
         close(a.bounds.height(), b.bounds.height(), cfg.height_tolerance);
}

// Pre-order walk yielding every group container, addressed by child-index path.
void collect_groups(const UiElement& e, std::vector<int>& path, std::vector<std::vector<int>>& out) {
  if (e.group_role) out.push_back(path);
  for (std::size_t i = 0; i < e.children.size(); ++i) {
    path.push_back(static_cast<int>(i));
    collect_groups(e.children[i], path, out);
    path.pop_back();
  }
}

template <typename Node>
Node& at_path(Node& root, const std::vector<int>& path) {
  Node* e = &root;
  for (int i : path) e = &e->children[static_cast<std::size_t>(i)];
  return *e;
}

// Copies `src` pixels of rectangle `from` into rectangle `to`, resampling when the sizes differ.
void transplant(RgbImage& dst, const RgbImage& src, const PixelRect& from, const PixelRect& to) {
  auto patch = src.crop(from);
  if (patch.width() != to.width() || patch.height() != to.height()) patch = resize(patch, to.width(), to.height());
  dst.paste(patch, to.x0, to.y0);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

const UiElement* smallest_clickable(const UiElement& e, double x, double y, const UiElement* best) {
  if (!e.bounds.contains(x, y)) return best;
  if (e.clickable) {
    const double area = e.bounds.width() * e.bounds.height();
    if (!best || area < best->bounds.width() * best->bounds.height()) best = &e;
  }
  for (const auto& c : e.children) best = smallest_clickable(c, x, y, best);
  return best;
}

}  // namespace

std::vector<TransitionSample> element_exchange(const TransitionSample& sample, const ExchangeConfig& cfg) {
  cfg.validate();
  std::vector<TransitionSample> out;
  if (!sample.hierarchy) return out;
  const int W = sample.ui1.width(), H = sample.ui1.height();
  std::vector<std::vector<int>> groups;
  std::vector<int> path;
  collect_groups(sample.hierarchy->root, path, groups);

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& kids = at_path(sample.hierarchy->root, groups[g]).children;
    for (std::size_t i = 0; i < kids.size(); ++i)
      for (std::size_t j = i + 1; j < kids.size(); ++j) {
        if (!similar(kids[i], kids[j], cfg)) continue;
        const BoundingBox bi = kids[i].bounds, bj = kids[j].bounds;
        const PixelRect ri = bi.to_pixels(W, H), rj = bj.to_pixels(W, H);
        if (ri.empty() || rj.empty()) continue;

        const bool in_i = inside(sample.gt_bounds, bi), in_j = inside(sample.gt_bounds, bj);
        const bool moved = in_i || in_j;
        if (!moved && !cfg.include_unmoved) continue;

        TransitionSample s = sample;
        transplant(s.ui1, sample.ui1, rj, ri);
        transplant(s.ui1, sample.ui1, ri, rj);
        auto& group = at_path(s.hierarchy->root, groups[g]);
        UiElement a = kids[j], b = kids[i];
        remap_tree(a, bj, bi);
        remap_tree(b, bi, bj);
        group.children[i] = std::move(a);
        group.children[j] = std::move(b);
        if (in_i) s.gt_bounds = remap(sample.gt_bounds, bi, bj);
        else if (in_j) s.gt_bounds = remap(sample.gt_bounds, bj, bi);
        s.origin = moved ? "exchange" : "exchange-context";
        s.id = sample.id + "~x" + std::to_string(g) + "." + std::to_string(i) + "." + std::to_string(j);
        out.push_back(std::move(s));
      }
  }
  return out;
}

bool OppositeLexicon::matches(const UiElement& element) const {
  const std::string cls = lower(element.class_name);
  const std::string text = element.text ? lower(*element.text) : std::string();
  for (const auto& p : pairs) {
    for (const auto& c : p.classes)
      if (lower(c) == cls) return true;
    if (!text.empty())
      for (const auto& t : p.texts)
        if (lower(t) == text) return true;
  }
  return false;
}

OppositeLexicon OppositeLexicon::defaults() {
  return from_json(nlohmann::json::parse(R"({
    "version": 1,
    "pairs": [
      {"name": "play-pause", "classes": ["ToggleButton"], "texts": ["play", "pause"]},
      {"name": "on-off", "classes": ["Switch", "SwitchCompat", "SwitchMaterial"], "texts": ["on", "off"]},
      {"name": "selected-unselected", "classes": ["CheckBox", "RadioButton", "CheckedTextView"],
       "texts": ["selected", "unselected", "checked", "unchecked"]},
      {"name": "start-stop", "classes": [], "texts": ["start", "stop"]},
      {"name": "show-hide", "classes": [], "texts": ["show", "hide"]},
      {"name": "expand-collapse", "classes": [], "texts": ["expand", "collapse"]},
      {"name": "mute-unmute", "classes": [], "texts": ["mute", "unmute"]},
      {"name": "like-unlike", "classes": [], "texts": ["like", "unlike"]},
      {"name": "follow-unfollow", "classes": [], "texts": ["follow", "unfollow"]},
      {"name": "lock-unlock", "classes": [], "texts": ["lock", "unlock"]}
    ]
  })"));
}

OppositeLexicon OppositeLexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array())
    throw Error("lexicon must be an object with a 'pairs' array");
  OppositeLexicon lex;
  for (const auto& p : j["pairs"]) {
    OppositePair pair;
    pair.name = p.value("name", "");
    if (p.contains("classes")) pair.classes = p["classes"].get<std::vector<std::string>>();
    if (p.contains("texts")) pair.texts = p["texts"].get<std::vector<std::string>>();
    if (pair.classes.empty() && pair.texts.empty())
      throw Error("lexicon pair '" + pair.name + "' has neither classes nor texts");
    lex.pairs.push_back(std::move(pair));
  }
  return lex;
}

OppositeLexicon OppositeLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("lexicon " + path.string() + ": " + e.what());
  }
}

nlohmann::json OppositeLexicon::to_json() const {
  nlohmann::json pairs_json = nlohmann::json::array();
  for (const auto& p : pairs) pairs_json.push_back({{"name", p.name}, {"classes", p.classes}, {"texts", p.texts}});
  return {{"version", 1}, {"pairs", pairs_json}};
}

std::optional<UiElement> tapped_element(const UiHierarchy& hierarchy, const BoundingBox& target) {
  const auto* e = smallest_clickable(hierarchy.root, target.center_x(), target.center_y(), nullptr);
  if (!e) return std::nullopt;
  return *e;
}

std::optional<TransitionSample> metamorphic_augment(const TransitionSample& sample, const OppositeLexicon& lexicon) {
  if (!sample.hierarchy) return std::nullopt;
  const auto element = tapped_element(*sample.hierarchy, sample.gt_bounds);
  if (!element || !lexicon.matches(*element)) return std::nullopt;
  TransitionSample r = sample;
  std::swap(r.ui1, r.ui2);
  std::swap(r.hierarchy, r.ui2_hierarchy);
  static constexpr std::string_view kSuffix = "~rev";
  if (r.id.size() > kSuffix.size() && r.id.ends_with(kSuffix)) r.id.resize(r.id.size() - kSuffix.size());
  else r.id += kSuffix;
  r.origin = "metamorphic";
  return r;
}

void AugmentConfig::validate() const {
  exchange.validate();
  if (!(budget_fraction >= 0.0)) throw Error("augmentation budget fraction must be >= 0");
}

nlohmann::json AugmentationReport::to_json() const {
  return {{"source_count", source_count},
          {"exchange_count", exchange_count},
          {"metamorphic_count", metamorphic_count},
          {"ratio_added", ratio_added}};
}

AugmentedDataset augment_dataset(const std::vector<TransitionSample>& source, const OppositeLexicon& lexicon,
                                 const AugmentConfig& cfg) {
  cfg.validate();
  AugmentedDataset out;
  out.samples = source;
  out.report.source_count = source.size();
  const auto budget = static_cast<std::size_t>(std::floor(cfg.budget_fraction * static_cast<double>(source.size()) + 1e-9));

  std::vector<TransitionSample> tiers[3];
  for (const auto& s : source) {
    if (auto m = metamorphic_augment(s, lexicon)) tiers[0].push_back(std::move(*m));
    for (auto& x : element_exchange(s, cfg.exchange)) tiers[x.origin == "exchange" ? 1 : 2].push_back(std::move(x));
  }
  nn::Rng rng(cfg.seed);
  for (auto& tier : tiers) {
    std::sort(tier.begin(), tier.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    rng.shuffle(tier);
    for (auto& s : tier) {
      if (out.samples.size() - source.size() >= budget) break;
      (s.origin == "metamorphic" ? out.report.metamorphic_count : out.report.exchange_count)++;
      out.samples.push_back(std::move(s));
    }
  }
  out.report.ratio_added =
      source.empty() ? 0.0
                     : static_cast<double>(out.report.exchange_count + out.report.metamorphic_count) / source.size();
  return out;
}

}  // namespace uiactions
