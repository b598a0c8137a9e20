#pragma once

// Effective-region cropping and grid (zoning) feature extractors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridocr/raster.hpp"

namespace gridocr {

// The image has no foreground pixel, so no effective region exists.
class BlankImageError : public std::runtime_error {
 public:
  explicit BlankImageError(const std::string& what = "blank image: no foreground pixels")
      : std::runtime_error(what) {}
};

// Inclusive, 0-based pixel bounds.
struct BoundingBox {
  int min_x = 0;
  int max_x = 0;
  int min_y = 0;
  int max_y = 0;

  int width() const noexcept { return max_x - min_x + 1; }
  int height() const noexcept { return max_y - min_y + 1; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// cols = vertical divisions (cells across), rows = horizontal divisions (cells down).
struct GridSpec {
  int cols = 4;
  int rows = 8;

  GridSpec() = default;
  GridSpec(int c, int r) : cols(c), rows(r) {
    if (c < 1 || r < 1) throw std::invalid_argument("GridSpec: cols and rows must be >= 1");
  }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Parses "CxR", e.g. "4x8".
inline GridSpec parse_grid(const std::string& s) {
  const auto x = s.find_first_of("xX");
  auto bad = [&] { return std::invalid_argument("bad grid '" + s + "' (expected CxR, e.g. 4x8)"); };
  if (x == std::string::npos || x == 0 || x + 1 == s.size()) throw bad();
  const auto digits = [](const std::string& t) {
    return !t.empty() && t.size() < 7 && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const std::string c = s.substr(0, x), r = s.substr(x + 1);
  if (!digits(c) || !digits(r)) throw bad();
  const int cols = std::stoi(c), rows = std::stoi(r);
  if (cols < 1 || rows < 1) throw bad();
  return GridSpec(cols, rows);
}

inline std::string to_string(const GridSpec& g) { return std::to_string(g.cols) + "x" + std::to_string(g.rows); }

enum class FeatureKind { mean, gradient };

inline const char* to_string(FeatureKind k) noexcept { return k == FeatureKind::mean ? "mean" : "gradient"; }

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "mean") return FeatureKind::mean;
  if (s == "gradient") return FeatureKind::gradient;
  throw std::invalid_argument("unknown feature kind '" + s + "' (expected mean or gradient)");
}

// Feature-length law: one value per cell for mean, a (dx, dy) pair per cell for gradient.
inline std::size_t feature_length(FeatureKind kind, const GridSpec& grid) noexcept {
  return (kind == FeatureKind::mean ? 1 : 2) * grid.cell_count();
}

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::mean;
  GridSpec grid;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Half-open cell rectangle in image coordinates.
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  long area() const noexcept { return static_cast<long>(width()) * height(); }
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

// Tightest box around every foreground pixel.
inline BoundingBox effective_region(const BitImage& img) {
  BoundingBox box{img.width(), -1, img.height(), -1};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!img.at(x, y)) continue;
      box.min_x = std::min(box.min_x, x);
      box.max_x = std::max(box.max_x, x);
      box.min_y = std::min(box.min_y, y);
      box.max_y = std::max(box.max_y, y);
    }
  }
  if (box.max_x < 0) throw BlankImageError();
  return box;
}

// round(i * extent / parts), halves rounded up, in exact integer arithmetic.
inline int partition_boundary(int i, int extent, int parts) noexcept {
  const long long num = 2LL * i * extent + parts;
  return static_cast<int>(num / (2LL * parts));
}

// Row-major (top-left first) tiling of the box; cells may have zero area.
inline std::vector<CellRect> grid_cells(const BoundingBox& box, const GridSpec& spec) {
  const int w = box.width();
  const int h = box.height();
  std::vector<CellRect> cells;
  cells.reserve(spec.cell_count());
  for (int j = 0; j < spec.rows; ++j) {
    const int y0 = box.min_y + partition_boundary(j, h, spec.rows);
    const int y1 = box.min_y + partition_boundary(j + 1, h, spec.rows);
    for (int i = 0; i < spec.cols; ++i) {
      const int x0 = box.min_x + partition_boundary(i, w, spec.cols);
      const int x1 = box.min_x + partition_boundary(i + 1, w, spec.cols);
      cells.push_back({x0, y0, x1, y1});
    }
  }
  return cells;
}

// Foreground density of each cell over the effective region; zero-area cells yield 0.
inline FeatureVector mean_features(const BitImage& img, const GridSpec& spec) {
  const BoundingBox box = effective_region(img);
  FeatureVector out{{}, FeatureKind::mean, spec};
  out.values.reserve(spec.cell_count());
  for (const CellRect& cell : grid_cells(box, spec)) {
    if (cell.area() == 0) {
      out.values.push_back(0.0);
      continue;
    }
    long on = 0;
    for (int y = cell.y0; y < cell.y1; ++y)
      for (int x = cell.x0; x < cell.x1; ++x) on += img.at(x, y);
    out.values.push_back(static_cast<double>(on) / static_cast<double>(cell.area()));
  }
  return out;
}

namespace detail {

// Derivative along one axis of the cropped region: central (f(p+1)-f(p-1))/2 inside,
// one-sided at the region border, 0 when the region is a single pixel wide.
inline double region_derivative(double before, double here, double after, int pos, int extent) noexcept {
  if (extent < 2) return 0.0;
  if (pos == 0) return after - here;
  if (pos == extent - 1) return here - before;
  return (after - before) / 2.0;
}

}  // namespace detail

// Max |d/dx| and max |d/dy| of the grayscale image inside each cell, computed on the
// crop to `box`. Values are interleaved (dx, dy) per cell.
inline FeatureVector gradient_features(const GrayImage& img, const BoundingBox& box, const GridSpec& spec) {
  if (box.min_x < 0 || box.min_y < 0 || box.max_x >= img.width() || box.max_y >= img.height() ||
      box.min_x > box.max_x || box.min_y > box.max_y)
    throw std::invalid_argument("gradient_features: bounding box outside image");
  const int w = box.width();
  const int h = box.height();
  auto f = [&](int rx, int ry) { return img.at(box.min_x + rx, box.min_y + ry); };
  auto dx = [&](int rx, int ry) {
    return detail::region_derivative(rx > 0 ? f(rx - 1, ry) : 0.0, f(rx, ry), rx + 1 < w ? f(rx + 1, ry) : 0.0, rx, w);
  };
  auto dy = [&](int rx, int ry) {
    return detail::region_derivative(ry > 0 ? f(rx, ry - 1) : 0.0, f(rx, ry), ry + 1 < h ? f(rx, ry + 1) : 0.0, ry, h);
  };

  FeatureVector out{{}, FeatureKind::gradient, spec};
  out.values.reserve(2 * spec.cell_count());
  for (const CellRect& cell : grid_cells(box, spec)) {
    double max_dx = 0.0;
    double max_dy = 0.0;
    for (int y = cell.y0; y < cell.y1; ++y) {
      for (int x = cell.x0; x < cell.x1; ++x) {
        max_dx = std::max(max_dx, std::abs(dx(x - box.min_x, y - box.min_y)));
        max_dy = std::max(max_dy, std::abs(dy(x - box.min_x, y - box.min_y)));
      }
    }
    out.values.push_back(max_dx);
    out.values.push_back(max_dy);
  }
  return out;
}

}  // namespace gridocr
