#include "bpp/geom.hpp"

#include <algorithm>

namespace bpp {

double segment_segment_distance(const double* a0, const double* a1,
                                const double* b0, const double* b1, int dim) {
  // Closest points of two segments (clamped quadratic minimization).
  double d1[kMaxDim], d2[kMaxDim], r[kMaxDim];
  for (int j = 0; j < dim; ++j) {
    d1[j] = a1[j] - a0[j];
    d2[j] = b1[j] - b0[j];
    r[j] = a0[j] - b0[j];
  }
  double a = 0, e = 0, f = 0, c = 0, b = 0;
  for (int j = 0; j < dim; ++j) {
    a += d1[j] * d1[j];
    e += d2[j] * d2[j];
    f += d2[j] * r[j];
    c += d1[j] * r[j];
    b += d1[j] * d2[j];
  }
  auto clamp01 = [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); };
  double s, t;
  if (a == 0.0 && e == 0.0) {
    s = t = 0.0;
  } else if (a == 0.0) {
    s = 0.0;
    t = clamp01(f / e);
  } else if (e == 0.0) {
    t = 0.0;
    s = clamp01(-c / a);
  } else {
    double denom = a * e - b * b;
    s = denom > 0.0 ? clamp01((b * f - c * e) / denom) : 0.0;
    t = (b * s + f) / e;
    if (t < 0.0) {
      t = 0.0;
      s = clamp01(-c / a);
    } else if (t > 1.0) {
      t = 1.0;
      s = clamp01((b - c) / a);
    }
  }
  double sum = 0.0;
  for (int j = 0; j < dim; ++j) {
    double d = (a0[j] + s * d1[j]) - (b0[j] + t * d2[j]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double segment_box_distance(const double* a, const double* b, const Box& box) {
  // dist(p(s), box) is convex in s; ternary search with early exit at zero.
  double pt[kMaxDim];
  auto eval = [&](double s) {
    for (int j = 0; j < box.dim; ++j) pt[j] = a[j] + s * (b[j] - a[j]);
    return point_box_distance(pt, box);
  };
  double lo = 0.0, hi = 1.0;
  double flo = eval(0.0), fhi = eval(1.0);
  if (flo == 0.0 || fhi == 0.0) return 0.0;
  for (int it = 0; it < 96; ++it) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    double f1 = eval(m1), f2 = eval(m2);
    if (f1 == 0.0 || f2 == 0.0) return 0.0;
    if (f1 < f2) {
      hi = m2;
      fhi = f2;
    } else {
      lo = m1;
      flo = f1;
    }
  }
  return std::min({flo, fhi, eval(0.5 * (lo + hi))});
}

}  // namespace bpp
