#pragma once

// Test-only reference implementations. Each one is written independently of the
// library code path it checks: no shared helpers beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gridocr/features.hpp"
#include "gridocr/knn.hpp"
#include "gridocr/raster.hpp"

namespace oracle {

// Netpbm writer: integer samples in [0, maxval], plain or raw.
inline std::vector<std::uint8_t> write_pgm(int w, int h, const std::vector<unsigned>& samples, unsigned maxval,
                                           bool plain) {
  std::string header = std::string(plain ? "P2" : "P5") + "\n# oracle\n" + std::to_string(w) + " " +
                       std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (plain) {
      const std::string s = std::to_string(samples[i]) + ((i + 1) % static_cast<std::size_t>(w) == 0 ? "\n" : " ");
      out.insert(out.end(), s.begin(), s.end());
    } else if (maxval < 256) {
      out.push_back(static_cast<std::uint8_t>(samples[i]));
    } else {
      out.push_back(static_cast<std::uint8_t>(samples[i] >> 8));
      out.push_back(static_cast<std::uint8_t>(samples[i] & 0xFF));
    }
  }
  return out;
}

using Grid = std::vector<std::vector<int>>;  // [row][col], 0/1

inline Grid to_grid(const gridocr::BitImage& img) {
  Grid g(static_cast<std::size_t>(img.height()), std::vector<int>(static_cast<std::size_t>(img.width())));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = img.at(x, y);
  return g;
}

inline gridocr::BitImage from_grid(const Grid& g) {
  gridocr::BitImage img(static_cast<int>(g[0].size()), static_cast<int>(g.size()));
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x) img.set(static_cast<int>(x), static_cast<int>(y), g[y][x] != 0);
  return img;
}

// Textbook Zhang-Suen on a copy padded with a one-pixel background frame.
inline Grid zhang_suen(Grid g) {
  const std::size_t h = g.size() + 2, w = g[0].size() + 2;
  Grid p(h, std::vector<int>(w, 0));
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x) p[y + 1][x + 1] = g[y][x];
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      Grid del(h, std::vector<int>(w, 0));
      for (std::size_t i = 1; i + 1 < h; ++i) {
        for (std::size_t j = 1; j + 1 < w; ++j) {
          if (!p[i][j]) continue;
          const int p2 = p[i - 1][j], p3 = p[i - 1][j + 1], p4 = p[i][j + 1], p5 = p[i + 1][j + 1];
          const int p6 = p[i + 1][j], p7 = p[i + 1][j - 1], p8 = p[i][j - 1], p9 = p[i - 1][j - 1];
          const int B = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          const int A = (!p2 && p3) + (!p3 && p4) + (!p4 && p5) + (!p5 && p6) + (!p6 && p7) + (!p7 && p8) +
                        (!p8 && p9) + (!p9 && p2);
          const int m1 = step == 0 ? p2 * p4 * p6 : p2 * p4 * p8;
          const int m2 = step == 0 ? p4 * p6 * p8 : p2 * p6 * p8;
          if (B >= 2 && B <= 6 && A == 1 && m1 == 0 && m2 == 0) del[i][j] = 1;
        }
      }
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
          if (del[i][j]) {
            p[i][j] = 0;
            changed = true;
          }
    }
  }
  Grid out(g.size(), std::vector<int>(g[0].size()));
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x) out[y][x] = p[y + 1][x + 1];
  return out;
}

// Number of 8- (or 4-) connected foreground components (flood fill).
inline int components(const Grid& g, int connectivity = 8) {
  const int h = static_cast<int>(g.size()), w = static_cast<int>(g[0].size());
  std::vector<int> seen(static_cast<std::size_t>(h * w), 0);
  int count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] || seen[static_cast<std::size_t>(y * w + x)])
        continue;
      ++count;
      std::vector<std::pair<int, int>> stack{{x, y}};
      seen[static_cast<std::size_t>(y * w + x)] = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (connectivity == 4 && dx != 0 && dy != 0) continue;
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!g[static_cast<std::size_t>(ny)][static_cast<std::size_t>(nx)] ||
                seen[static_cast<std::size_t>(ny * w + nx)])
              continue;
            seen[static_cast<std::size_t>(ny * w + nx)] = 1;
            stack.emplace_back(nx, ny);
          }
      }
    }
  return count;
}

inline int components8(const Grid& g) { return components(g, 8); }

// Bounding box by tracking extrema over a full scan; {-1,...} when blank.
inline gridocr::BoundingBox scan_box(const gridocr::BitImage& img) {
  int min_x = 1 << 30, max_x = -1, min_y = 1 << 30, max_y = -1;
  for (std::size_t i = 0; i < img.bits().size(); ++i) {
    if (!img.bits()[i]) continue;
    const int x = static_cast<int>(i % static_cast<std::size_t>(img.width()));
    const int y = static_cast<int>(i / static_cast<std::size_t>(img.width()));
    min_x = std::min(min_x, x), max_x = std::max(max_x, x);
    min_y = std::min(min_y, y), max_y = std::max(max_y, y);
  }
  return {min_x, max_x, min_y, max_y};
}

// Which cell (row-major index) pixel (x, y) of the box falls into, found by
// comparing against floating-point rounded boundaries.
inline int cell_of(int x, int y, const gridocr::BoundingBox& box, const gridocr::GridSpec& spec) {
  const double w = box.width(), h = box.height();
  auto bound = [](int i, double extent, int parts) { return static_cast<int>(std::floor(i * extent / parts + 0.5)); };
  int col = -1, row = -1;
  for (int i = 0; i < spec.cols; ++i)
    if (x - box.min_x >= bound(i, w, spec.cols) && x - box.min_x < bound(i + 1, w, spec.cols)) col = i;
  for (int j = 0; j < spec.rows; ++j)
    if (y - box.min_y >= bound(j, h, spec.rows) && y - box.min_y < bound(j + 1, h, spec.rows)) row = j;
  if (col < 0 || row < 0) return -1;
  return row * spec.cols + col;
}

// Mean features by assigning every box pixel to its cell.
inline std::vector<double> mean_by_assignment(const gridocr::BitImage& img, const gridocr::GridSpec& spec) {
  const auto box = scan_box(img);
  std::vector<double> on(spec.cell_count(), 0.0), area(spec.cell_count(), 0.0);
  for (int y = box.min_y; y <= box.max_y; ++y)
    for (int x = box.min_x; x <= box.max_x; ++x) {
      const auto c = static_cast<std::size_t>(cell_of(x, y, box, spec));
      area[c] += 1;
      on[c] += img.at(x, y);
    }
  std::vector<double> out(spec.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = area[c] > 0 ? on[c] / area[c] : 0.0;
  return out;
}

// Gradient features: derivative arrays over the crop, then per-pixel assignment.
inline std::vector<double> gradient_by_assignment(const gridocr::GrayImage& img, const gridocr::BoundingBox& box,
                                                  const gridocr::GridSpec& spec) {
  const int w = box.width(), h = box.height();
  std::vector<std::vector<double>> f(static_cast<std::size_t>(h), std::vector<double>(static_cast<std::size_t>(w)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      f[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = img.at(box.min_x + x, box.min_y + y);
  auto at = [&](int x, int y) { return f[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]; };
  std::vector<double> out(2 * spec.cell_count(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = 0, gy = 0;
      if (w > 1) gx = x == 0 ? at(1, y) - at(0, y) : x == w - 1 ? at(x, y) - at(x - 1, y) : 0.5 * (at(x + 1, y) - at(x - 1, y));
      if (h > 1) gy = y == 0 ? at(x, 1) - at(x, 0) : y == h - 1 ? at(x, y) - at(x, y - 1) : 0.5 * (at(x, y + 1) - at(x, y - 1));
      const auto c = static_cast<std::size_t>(cell_of(box.min_x + x, box.min_y + y, box, spec));
      out[2 * c] = std::max(out[2 * c], std::fabs(gx));
      out[2 * c + 1] = std::max(out[2 * c + 1], std::fabs(gy));
    }
  return out;
}

// Sort everything by (distance, id) and take the first k.
inline gridocr::NeighborSet brute_knn(const std::vector<gridocr::LabeledPoint>& pts, const std::vector<double>& q,
                                      std::size_t k) {
  struct Row {
    double sq;
    std::size_t id;
    int label;
  };
  std::vector<Row> rows;
  for (const auto& p : pts) {
    double s = 0;
    for (std::size_t i = 0; i < q.size(); ++i) s += (p.vector[i] - q[i]) * (p.vector[i] - q[i]);
    rows.push_back({s, p.id, p.label});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.sq < b.sq || (a.sq == b.sq && a.id < b.id); });
  gridocr::NeighborSet out;
  for (std::size_t i = 0; i < std::min(k, rows.size()); ++i) out.push_back({rows[i].id, rows[i].label, std::sqrt(rows[i].sq)});
  return out;
}

// Count multiplicities; among labels with the top count, pick the one with the
// smallest neighbour index.
inline int vote_by_counting(const gridocr::NeighborSet& ns) {
  std::map<int, int> count;
  std::map<int, std::size_t> first;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ++count[ns[i].label];
    if (!first.count(ns[i].label)) first[ns[i].label] = i;
  }
  int best_label = -1, best_count = -1;
  std::size_t best_first = 0;
  for (auto [label, c] : count)
    if (c > best_count || (c == best_count && first[label] < best_first))
      best_label = label, best_count = c, best_first = first[label];
  return best_label;
}

inline gridocr::BitImage random_bits(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution on(density);
  gridocr::BitImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, on(rng));
  return img;
}

inline gridocr::GrayImage random_gray(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  gridocr::GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, u(rng));
  return img;
}

// Stroke-like grayscale glyph: a few thick anti-aliased segments on a background
// of 0 (light ink), placed at a random offset.
inline gridocr::GrayImage random_glyph(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  gridocr::GrayImage img(w, h, 0.0);
  const int strokes = 2 + static_cast<int>(u(rng) * 3);
  const double ox = 2 + u(rng) * (w - 16), oy = 2 + u(rng) * (h - 22);
  for (int s = 0; s < strokes; ++s) {
    const double x0 = ox + u(rng) * 12, y0 = oy + u(rng) * 18, x1 = ox + u(rng) * 12, y1 = oy + u(rng) * 18;
    const double radius = 1.0 + u(rng) * 1.5;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double vx = x1 - x0, vy = y1 - y0;
        const double len2 = vx * vx + vy * vy;
        double t = len2 > 0 ? ((x - x0) * vx + (y - y0) * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = x - (x0 + t * vx), dy = y - (y0 + t * vy);
        const double v = std::clamp(radius + 0.5 - std::sqrt(dx * dx + dy * dy), 0.0, 1.0);
        img.set(x, y, std::max(img.at(x, y), v));
      }
  }
  return img;
}

inline gridocr::GrayImage pad(const gridocr::GrayImage& img, int left, int top, int right, int bottom, double fill) {
  gridocr::GrayImage out(img.width() + left + right, img.height() + top + bottom, fill);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.set(x + left, y + top, img.at(x, y));
  return out;
}

}  // namespace oracle
