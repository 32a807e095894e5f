#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "uiactions/postprocess.hpp"
#include "uiactions/types.hpp"

// Independent reference implementations the library is checked against.
namespace uiactions::testing {

/// Wagner-Fischer table over the full (n+1) x (m+1) grid.
inline std::size_t dp_edit_distance(const std::vector<ActionType>& a, const std::vector<ActionType>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

/// Connected components of the eps-graph (DBSCAN with min_pts = 1) by union-find.
inline std::vector<std::size_t> reachability_components(const std::vector<ScoredPoint>& pts, double eps) {
  std::vector<std::size_t> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) <= eps) parent[find(i)] = find(j);
  std::vector<std::size_t> root(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) root[i] = find(i);
  return root;
}

/// True when labels and components induce the same partition.
inline bool same_partition(const std::vector<int>& labels, const std::vector<std::size_t>& comps) {
  if (labels.size() != comps.size()) return false;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      if ((labels[i] == labels[j]) != (comps[i] == comps[j])) return false;
  return true;
}

/// Pixel rectangles of the two siblings an exchange sample swapped, decoded from its
/// "~x<group>.<i>.<j>" id suffix against the source hierarchy (pre-order group numbering).
inline std::pair<PixelRect, PixelRect> exchanged_rects(const TransitionSample& source, const TransitionSample& swapped) {
  const auto pos = swapped.id.rfind("~x");
  if (pos == std::string::npos) throw Error("not an exchange sample: " + swapped.id);
  int g = -1, i = -1, j = -1;
  if (std::sscanf(swapped.id.c_str() + pos, "~x%d.%d.%d", &g, &i, &j) != 3) throw Error("bad exchange id " + swapped.id);
  std::vector<const UiElement*> groups;
  std::function<void(const UiElement&)> walk = [&](const UiElement& e) {
    if (e.group_role) groups.push_back(&e);
    for (const auto& c : e.children) walk(c);
  };
  walk(source.hierarchy->root);
  const auto& kids = groups.at(static_cast<std::size_t>(g))->children;
  const int W = source.ui1.width(), H = source.ui1.height();
  return {kids.at(static_cast<std::size_t>(i)).bounds.to_pixels(W, H),
          kids.at(static_cast<std::size_t>(j)).bounds.to_pixels(W, H)};
}

/// Number of pixels that differ outside the two rectangles.
inline std::size_t changed_outside(const RgbImage& a, const RgbImage& b, const PixelRect& r1, const PixelRect& r2) {
  const auto in = [](const PixelRect& r, int x, int y) { return x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1; };
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (!in(r1, x, y) && !in(r2, x, y) && !(a.pixel(x, y) == b.pixel(x, y))) ++n;
  return n;
}

}  // namespace uiactions::testing
