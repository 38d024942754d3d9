#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bpp/errors.hpp"

namespace bpp {

inline constexpr int kMaxDim = 8;

/// Axis-aligned box in up to kMaxDim dimensions.
struct Box {
  int dim = 0;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  static Box from_extents(const std::vector<double>& extents) {
    if (extents.empty() || extents.size() > kMaxDim)
      throw invalid_parameter("Box: dimension out of range");
    Box b;
    b.dim = static_cast<int>(extents.size());
    for (int j = 0; j < b.dim; ++j) {
      if (!(extents[j] > 0.0)) throw invalid_parameter("Box: degenerate extent");
      b.lo[j] = 0.0;
      b.hi[j] = extents[j];
    }
    return b;
  }

  static Box centered_cube(int d, double half) {
    Box b;
    b.dim = d;
    for (int j = 0; j < d; ++j) {
      b.lo[j] = -half;
      b.hi[j] = half;
    }
    return b;
  }

  double volume() const {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) v *= hi[j] - lo[j];
    return v;
  }

  bool nondegenerate() const {
    if (dim < 1) return false;
    for (int j = 0; j < dim; ++j)
      if (!(hi[j] > lo[j])) return false;
    return true;
  }

  bool contains(const double* p) const {
    for (int j = 0; j < dim; ++j)
      if (p[j] < lo[j] || p[j] > hi[j]) return false;
    return true;
  }

  Box inflated(double m) const {
    Box b = *this;
    for (int j = 0; j < dim; ++j) {
      b.lo[j] -= m;
      b.hi[j] += m;
    }
    return b;
  }

  Box translated(const double* v) const {
    Box b = *this;
    for (int j = 0; j < dim; ++j) {
      b.lo[j] += v[j];
      b.hi[j] += v[j];
    }
    return b;
  }

  /// Radius of the smallest sup-norm ball around the origin containing the box.
  double supnorm_radius() const {
    double r = 0.0;
    for (int j = 0; j < dim; ++j)
      r = std::max(r, std::max(std::abs(lo[j]), std::abs(hi[j])));
    return r;
  }
};

/// Time-discretized path: dim coordinates per vertex, flat storage.
struct Polyline {
  int dim = 0;
  double step = 0.0;     // grid spacing in time
  double horizon = 0.0;  // total time covered
  std::vector<double> coords;

  int count() const { return dim == 0 ? 0 : static_cast<int>(coords.size()) / dim; }
  int segments() const { return std::max(0, count() - 1); }
  const double* point(int i) const { return coords.data() + std::size_t(i) * dim; }
  double* point(int i) { return coords.data() + std::size_t(i) * dim; }
};

inline double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) {
    double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline double euclid_dist(const double* a, const double* b, int dim) {
  return std::sqrt(sq_dist(a, b, dim));
}

inline double sup_norm(const double* a, int dim) {
  double m = 0.0;
  for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(a[j]));
  return m;
}

inline double euclid_norm(const double* a, int dim) {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) s += a[j] * a[j];
  return std::sqrt(s);
}

/// Minimum Euclidean distance between closed segments [a0,a1] and [b0,b1].
/// Closest-point parameters are clamped to [0,1] on both segments;
/// degenerate (point) segments are fine.
double segment_segment_distance(const double* a0, const double* a1,
                                const double* b0, const double* b1, int dim);

/// Distance from a point to a closed axis-aligned box (0 inside).
inline double point_box_distance(const double* p, const Box& box) {
  double s = 0.0;
  for (int j = 0; j < box.dim; ++j) {
    double d = 0.0;
    if (p[j] < box.lo[j]) d = box.lo[j] - p[j];
    else if (p[j] > box.hi[j]) d = p[j] - box.hi[j];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Minimum distance from the closed segment [a,b] to an axis-aligned box.
/// The box may be degenerate in some axes (a face or an edge).
double segment_box_distance(const double* a, const double* b, const Box& box);

}  // namespace bpp
