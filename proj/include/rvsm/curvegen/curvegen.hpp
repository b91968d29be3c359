#pragma once

// Synthetic normal-vs-shaky planar curves.
//
// A sample is a random triangle or quadrangle outline. Shaky samples have the
// outline displaced along its normal by a smooth random field before the
// geometric augmentations (rotation, shear/scale) run on the polyline; the
// elastic distortion runs on the raster last.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/nn/network.hpp"
#include "rvsm/random.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm::curvegen {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Points in unit coordinates; closed polylines join the last point to the first.
struct Polyline {
  std::vector<Point> points;
  bool closed = false;
};

enum class ShapeKind { triangle, quadrangle };
enum class CurveLabel : int { normal = 0, shaky = 1 };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::triangle;
  std::vector<Point> vertices;
  bool convex_required = false;
};

struct AugmentParams {
  double rotation_max = 20.0 * std::numbers::pi / 180.0;  ///< radians
  double shear_max = 0.15;
  double scale_min = 0.85;
  double scale_max = 1.15;
  double elastic_sigma = 4.0;  ///< px
  double elastic_alpha = 6.0;  ///< px
  double shaky_amplitude = 2.5;   ///< px, RMS normal displacement
  double shaky_wavelength = 6.0;  ///< px, Gaussian correlation width

  /// All magnitudes zero: the augmentation pipeline is the identity.
  static AugmentParams none() {
    AugmentParams p;
    p.rotation_max = 0.0;
    p.shear_max = 0.0;
    p.scale_min = p.scale_max = 1.0;
    p.elastic_alpha = 0.0;
    return p;
  }

  void validate() const {
    const double values[] = {rotation_max, shear_max, scale_min, scale_max, elastic_sigma,
                             elastic_alpha, shaky_amplitude, shaky_wavelength};
    for (double v : values)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("augmentation parameters must be finite and >= 0");
    if (!(scale_min > 0.5 && scale_max < 1.5 && scale_min <= scale_max))
      throw InvalidParameter("scale range must satisfy 0.5 < scale_min <= scale_max < 1.5");
    if (shaky_amplitude > 0.0 && !(shaky_wavelength > 0.0))
      throw InvalidParameter("shaky_wavelength must be > 0 when shaky_amplitude > 0");
    if (elastic_alpha > 0.0 && !(elastic_sigma > 0.0))
      throw InvalidParameter("elastic_sigma must be > 0 when elastic_alpha > 0");
  }
};

/// size x size grid of 0/1 pixels, row-major, row 0 at the top.
class BinaryImage {
 public:
  BinaryImage() = default;
  explicit BinaryImage(std::size_t size) : size_(size), pixels_(size * size, 0) {}

  std::size_t size() const noexcept { return size_; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * size_ + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * size_ + col]; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

  std::size_t foreground() const {
    return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
  }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct CurveSample {
  BinaryImage image;
  CurveLabel label = CurveLabel::normal;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinForeground = 40;
inline constexpr double kMinVertexDistance = 0.15;
inline constexpr int kMaxPolygonAttempts = 100;
inline constexpr double kMarginFraction = 0.1;

/// Pixels per unit coordinate on a size x size grid with a 10% margin.
inline double pixels_per_unit(std::size_t size) {
  return static_cast<double>(size) * (1.0 - 2.0 * kMarginFraction);
}

namespace detail {

inline double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline bool on_segment(Point p, Point q, Point r) {
  return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
         q.y <= std::max(p.y, r.y);
}

}  // namespace detail

/// True when closed segments [p1,p2] and [p3,p4] share a point.
inline bool segments_intersect(Point p1, Point p2, Point p3, Point p4) {
  using detail::cross;
  const double d1 = cross(p3, p4, p1), d2 = cross(p3, p4, p2);
  const double d3 = cross(p1, p2, p3), d4 = cross(p1, p2, p4);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && detail::on_segment(p3, p1, p4)) return true;
  if (d2 == 0 && detail::on_segment(p3, p2, p4)) return true;
  if (d3 == 0 && detail::on_segment(p1, p3, p2)) return true;
  if (d4 == 0 && detail::on_segment(p1, p4, p2)) return true;
  return false;
}

/// Non-adjacent edges of the closed polygon never touch.
inline bool is_simple_polygon(const std::vector<Point>& v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  // Degenerate (collinear) triangles have no non-adjacent pairs to test.
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) area2 += v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y;
  return std::abs(area2) > 1e-9;
}

inline bool is_convex_polygon(const std::vector<Point>& v) {
  const std::size_t n = v.size();
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = detail::cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
    const int s = (c > 0) - (c < 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return true;
}

/// Random simple polygon with vertices in [0,1]^2, pairwise >= 0.15 apart.
inline ShapeSpec sample_polygon(ShapeKind kind, Rng& rng, bool convex_required = false) {
  const std::size_t n = kind == ShapeKind::triangle ? 3 : 4;
  for (int attempt = 0; attempt < kMaxPolygonAttempts; ++attempt) {
    std::vector<Point> v(n);
    for (auto& p : v) p = {rng.uniform(), rng.uniform()};
    bool spread = true;
    for (std::size_t i = 0; i < n && spread; ++i)
      for (std::size_t j = i + 1; j < n && spread; ++j)
        spread = std::hypot(v[i].x - v[j].x, v[i].y - v[j].y) >= kMinVertexDistance;
    if (!spread || !is_simple_polygon(v)) continue;
    if (convex_required && !is_convex_polygon(v)) continue;
    return {kind, std::move(v), convex_required};
  }
  throw GenerationError("could not sample a simple polygon in " + std::to_string(kMaxPolygonAttempts) +
                        " attempts");
}

/// Closed outline of the polygon with consecutive points at most `spacing` apart.
inline Polyline densify_edges(const std::vector<Point>& vertices, double spacing) {
  if (vertices.empty()) throw InvalidInput("densify_edges: no vertices");
  if (!(spacing > 0.0)) throw InvalidParameter("densify_edges: spacing must be > 0");
  Polyline out{{}, true};
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = vertices[i], b = vertices[(i + 1) % n];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(steps);
      out.points.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

/// Point spacing used for outlines on a size x size raster (half a pixel).
inline double outline_spacing(std::size_t size) { return 0.5 / pixels_per_unit(size); }

namespace detail {

/// Normalized Gaussian taps for sigma (in samples), radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

/// Displaces each point along the local normal by a smooth random field:
/// white noise convolved with a Gaussian whose +-2 sigma span is
/// `shaky_wavelength` px, rescaled to RMS `shaky_amplitude` px and clipped at
/// 4x that amplitude.
inline Polyline shaky_perturb(const Polyline& line, const AugmentParams& params, Rng& rng, std::size_t size = 100) {
  if (params.shaky_amplitude == 0.0 || line.points.size() < 3) return line;
  const std::size_t n = line.points.size();
  const double ppu = pixels_per_unit(size);

  // Mean arc-length spacing in px sets the kernel width in samples.
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    length += std::hypot(line.points[i + 1].x - line.points[i].x, line.points[i + 1].y - line.points[i].y);
  if (line.closed) length += std::hypot(line.points[0].x - line.points[n - 1].x, line.points[0].y - line.points[n - 1].y);
  const double spacing_px = length * ppu / static_cast<double>(line.closed ? n : n - 1);
  const double sigma_px = params.shaky_wavelength / 4.0;
  const auto kernel = detail::gaussian_kernel(std::max(sigma_px / std::max(spacing_px, 1e-9), 0.5));
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);

  std::vector<double> noise(n);
  for (double& v : noise) v = rng.normal();
  std::vector<double> field(n, 0.0);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      std::ptrdiff_t j = i + k;
      if (line.closed) {
        j = ((j % sn) + sn) % sn;
      } else {
        j = std::clamp<std::ptrdiff_t>(j, 0, sn - 1);
      }
      acc += kernel[static_cast<std::size_t>(k + radius)] * noise[static_cast<std::size_t>(j)];
    }
    field[static_cast<std::size_t>(i)] = acc;
  }
  double ms = 0.0;
  for (double v : field) ms += v * v;
  const double rms = std::sqrt(ms / static_cast<double>(n));
  const double clip = 4.0 * params.shaky_amplitude;

  Polyline out = line;
  for (std::size_t i = 0; i < n; ++i) {
    const Point prev = line.closed ? line.points[(i + n - 1) % n] : line.points[i == 0 ? 0 : i - 1];
    const Point next = line.closed ? line.points[(i + 1) % n] : line.points[std::min(i + 1, n - 1)];
    const double tx = next.x - prev.x, ty = next.y - prev.y;
    const double tn = std::hypot(tx, ty);
    if (tn == 0.0) continue;
    const double disp_px = std::clamp(field[i] / rms * params.shaky_amplitude, -clip, clip);
    const double d = disp_px / ppu;
    out.points[i].x += -ty / tn * d;
    out.points[i].y += tx / tn * d;
  }
  return out;
}

/// Rotation by `angle` radians about the unit-square center.
inline Polyline rotate_by(const Polyline& line, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Polyline out = line;
  for (auto& p : out.points) {
    const double x = p.x - 0.5, y = p.y - 0.5;
    p = {0.5 + c * x - s * y, 0.5 + s * x + c * y};
  }
  return out;
}

/// Shear along x followed by per-axis scaling, about the unit-square center.
inline Polyline affine_by(const Polyline& line, double shear, double scale_x, double scale_y) {
  Polyline out = line;
  for (auto& p : out.points) {
    const double x = p.x - 0.5, y = p.y - 0.5;
    p = {0.5 + scale_x * (x + shear * y), 0.5 + scale_y * y};
  }
  return out;
}

/// Random rotation, uniform in [-rotation_max, rotation_max].
inline Polyline rotate(const Polyline& line, const AugmentParams& params, Rng& rng) {
  if (params.rotation_max == 0.0) return line;
  return rotate_by(line, rng.uniform(-params.rotation_max, params.rotation_max));
}

/// Random shear in [-shear_max, shear_max] and per-axis scale in [scale_min, scale_max].
inline Polyline affine_transform(const Polyline& line, const AugmentParams& params, Rng& rng) {
  if (params.shear_max == 0.0 && params.scale_min == 1.0 && params.scale_max == 1.0) return line;
  const double shear = rng.uniform(-params.shear_max, params.shear_max);
  const double sx = rng.uniform(params.scale_min, params.scale_max);
  const double sy = rng.uniform(params.scale_min, params.scale_max);
  return affine_by(line, shear, sx, sy);
}

/// 8-connected 1-px line drawing of consecutive points; unit coordinates map
/// onto the grid inside a 10% margin (x to columns, y to rows).
inline BinaryImage rasterize(const Polyline& line, std::size_t size = 100) {
  if (line.points.empty()) throw InvalidInput("rasterize: empty polyline");
  if (size == 0) throw InvalidParameter("rasterize: size must be positive");
  BinaryImage img(size);
  const double margin = kMarginFraction * static_cast<double>(size);
  const double ppu = pixels_per_unit(size);
  auto to_px = [&](Point p) {
    return std::pair<long, long>{std::lround(margin + p.y * ppu), std::lround(margin + p.x * ppu)};
  };
  const auto limit = static_cast<long>(size);
  auto plot = [&](long r, long c) {
    if (r >= 0 && r < limit && c >= 0 && c < limit)
      img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1;
  };
  auto draw = [&](std::pair<long, long> a, std::pair<long, long> b) {
    auto [r0, c0] = a;
    const auto [r1, c1] = b;
    const long dc = std::abs(c1 - c0), dr = -std::abs(r1 - r0);
    const long sc = c0 < c1 ? 1 : -1, sr = r0 < r1 ? 1 : -1;
    long err = dc + dr;
    while (true) {
      plot(r0, c0);
      if (r0 == r1 && c0 == c1) break;
      const long e2 = 2 * err;
      if (e2 >= dr) {
        err += dr;
        c0 += sc;
      }
      if (e2 <= dc) {
        err += dc;
        r0 += sr;
      }
    }
  };
  const auto& pts = line.points;
  if (pts.size() == 1) plot(to_px(pts[0]).first, to_px(pts[0]).second);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) draw(to_px(pts[i]), to_px(pts[i + 1]));
  if (line.closed && pts.size() > 2) draw(to_px(pts.back()), to_px(pts.front()));
  return img;
}

namespace detail {

/// Separable Gaussian blur with clamp-to-edge boundaries.
inline std::vector<double> blur(const std::vector<double>& field, std::size_t size, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(size);
  std::vector<double> tmp(field.size()), out(field.size());
  for (std::ptrdiff_t r = 0; r < n; ++r)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               field[static_cast<std::size_t>(r * n + std::clamp<std::ptrdiff_t>(c + k, 0, n - 1))];
      tmp[static_cast<std::size_t>(r * n + c)] = acc;
    }
  for (std::ptrdiff_t r = 0; r < n; ++r)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r + k, 0, n - 1) * n + c)];
      out[static_cast<std::size_t>(r * n + c)] = acc;
    }
  return out;
}

}  // namespace detail

/// Elastic distortion: uniform(-1,1) per-pixel displacements, Gaussian-smoothed
/// with width elastic_sigma, scaled by elastic_alpha, nearest-neighbour resampled.
inline BinaryImage elastic_distort(const BinaryImage& image, const AugmentParams& params, Rng& rng) {
  if (params.elastic_alpha == 0.0) return image;
  const std::size_t n = image.size();
  std::vector<double> dx(n * n), dy(n * n);
  for (double& v : dx) v = rng.uniform(-1.0, 1.0);
  for (double& v : dy) v = rng.uniform(-1.0, 1.0);
  dx = detail::blur(dx, n, params.elastic_sigma);
  dy = detail::blur(dy, n, params.elastic_sigma);
  BinaryImage out(n);
  const auto limit = static_cast<long>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      const long sr = std::lround(static_cast<double>(r) + params.elastic_alpha * dy[i]);
      const long sc = std::lround(static_cast<double>(c) + params.elastic_alpha * dx[i]);
      if (sr >= 0 && sr < limit && sc >= 0 && sc < limit)
        out.at(r, c) = image.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  return out;
}

/// Horizontal plus vertical 0<->1 transitions.
inline std::size_t total_variation(const BinaryImage& image) {
  const std::size_t n = image.size();
  std::size_t tv = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      if (c + 1 < n && image.at(r, c) != image.at(r, c + 1)) ++tv;
      if (r + 1 < n && image.at(r, c) != image.at(r + 1, c)) ++tv;
    }
  return tv;
}

/// True when all foreground pixels form one 8-connected component.
inline bool is_8_connected(const BinaryImage& image) {
  const std::size_t n = image.size();
  const std::size_t total = image.foreground();
  if (total == 0) return true;
  std::vector<std::uint8_t> seen(n * n, 0);
  std::queue<std::pair<std::size_t, std::size_t>> q;
  for (std::size_t i = 0; i < n * n && q.empty(); ++i)
    if (image.pixels()[i]) {
      q.emplace(i / n, i % n);
      seen[i] = 1;
    }
  std::size_t visited = 0;
  while (!q.empty()) {
    const auto [r, c] = q.front();
    q.pop();
    ++visited;
    for (long dr = -1; dr <= 1; ++dr)
      for (long dc = -1; dc <= 1; ++dc) {
        const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(n) || cc >= static_cast<long>(n)) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * n + static_cast<std::size_t>(cc);
        if (image.pixels()[j] && !seen[j]) {
          seen[j] = 1;
          q.emplace(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        }
      }
  }
  return visited == total;
}

/// One sample as a pure function of (label, seed, params, size). Rasters with
/// fewer than 40 foreground pixels are discarded and redrawn from the same stream.
inline CurveSample generate_sample(CurveLabel label, std::uint64_t seed, const AugmentParams& params,
                                   std::size_t size = 100) {
  params.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxPolygonAttempts; ++attempt) {
    const ShapeKind kind = rng.below(2) == 0 ? ShapeKind::triangle : ShapeKind::quadrangle;
    const ShapeSpec shape = sample_polygon(kind, rng);
    Polyline line = densify_edges(shape.vertices, outline_spacing(size));
    if (label == CurveLabel::shaky) line = shaky_perturb(line, params, rng, size);
    line = rotate(line, params, rng);
    line = affine_transform(line, params, rng);
    BinaryImage img = elastic_distort(rasterize(line, size), params, rng);
    if (img.foreground() >= kMinForeground) return {std::move(img), label, seed};
  }
  throw GenerationError("no usable raster after " + std::to_string(kMaxPolygonAttempts) + " attempts");
}

/// Labels alternate normal/shaky by index; seed of sample i in `split` is
/// derive_seed(seed, split, i).
inline std::vector<CurveSample> generate_split(std::size_t count, const std::string& split, const AugmentParams& params,
                                               std::uint64_t seed, std::size_t size = 100) {
  std::vector<CurveSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = i % 2 == 0 ? CurveLabel::normal : CurveLabel::shaky;
    out.push_back(generate_sample(label, derive_seed(seed, split, i), params, size));
  }
  return out;
}

inline std::pair<std::vector<CurveSample>, std::vector<CurveSample>> generate_dataset(
    std::size_t n_train, std::size_t n_test, const AugmentParams& params, std::uint64_t seed, std::size_t size = 100) {
  if (n_train < 2 || n_test < 2) throw InvalidParameter("generate_dataset: each split needs at least 2 samples");
  if (size < 8) throw InvalidParameter("generate_dataset: image size must be >= 8");
  params.validate();
  return {generate_split(n_train, "train", params, seed, size), generate_split(n_test, "test", params, seed, size)};
}

/// [1, size, size] tensors of 0/1 values, ready for the network.
inline nn::ImageDataset to_image_dataset(const std::vector<CurveSample>& samples) {
  nn::ImageDataset out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const std::size_t n = s.image.size();
    Tensor t({1, n, n});
    for (std::size_t i = 0; i < n * n; ++i) t[i] = s.image.pixels()[i];
    out.push_back({std::move(t), static_cast<int>(s.label)});
  }
  return out;
}

}  // namespace rvsm::curvegen
