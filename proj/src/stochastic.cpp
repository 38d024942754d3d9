#include "bpp/stochastic.hpp"

#include <algorithm>
#include <cmath>

#include "bpp/mathutil.hpp"

namespace bpp {

RadiusDistribution RadiusDistribution::deterministic(double r) {
  if (!(r >= 0.0)) throw invalid_parameter("RadiusDistribution: negative radius");
  RadiusDistribution rd;
  rd.kind = Kind::Deterministic;
  rd.value = r;
  return rd;
}

RadiusDistribution RadiusDistribution::sup_of_brownian(double t, double r_offset,
                                                       int d) {
  if (!(t >= 0.0) || !(r_offset >= 0.0) || d < 1)
    throw invalid_parameter("RadiusDistribution: bad SupOfBrownian parameters");
  RadiusDistribution rd;
  rd.kind = Kind::SupOfBrownian;
  rd.horizon = t;
  rd.value = r_offset;
  rd.dim = d;
  return rd;
}

RadiusDistribution RadiusDistribution::empirical(std::vector<double> samples) {
  if (samples.empty()) throw invalid_parameter("RadiusDistribution: empty sample list");
  for (double s : samples)
    if (!(s >= 0.0)) throw invalid_parameter("RadiusDistribution: negative sample");
  RadiusDistribution rd;
  rd.kind = Kind::Empirical;
  rd.samples = std::move(samples);
  std::sort(rd.samples.begin(), rd.samples.end());
  return rd;
}

RadiusDistribution RadiusDistribution::exponential_tail(double c, double r0) {
  if (!(c > 0.0) || !(r0 > 0.0))
    throw invalid_parameter("RadiusDistribution: tail constants must be positive");
  RadiusDistribution rd;
  rd.kind = Kind::ExponentialTail;
  rd.tail_c = c;
  rd.tail_r0 = r0;
  return rd;
}

bool RadiusDistribution::bounded_support() const {
  switch (kind) {
    case Kind::Deterministic:
    case Kind::Empirical:
      return true;
    case Kind::SupOfBrownian:
      return horizon == 0.0;
    case Kind::ExponentialTail:
      return false;
  }
  return false;
}

double RadiusDistribution::support_bound() const {
  switch (kind) {
    case Kind::Deterministic:
      return value;
    case Kind::Empirical:
      return samples.back();
    case Kind::SupOfBrownian:
      if (horizon == 0.0) return value;
      throw invalid_parameter("support_bound: unbounded support");
    case Kind::ExponentialTail:
      throw invalid_parameter("support_bound: unbounded support");
  }
  return 0.0;
}

double RadiusDistribution::tail(double x) const {
  if (x <= 0.0) return 1.0;
  switch (kind) {
    case Kind::Deterministic:
      return x <= value ? 1.0 : 0.0;
    case Kind::Empirical: {
      auto it = std::lower_bound(samples.begin(), samples.end(), x);
      return double(samples.end() - it) / double(samples.size());
    }
    case Kind::SupOfBrownian: {
      if (x <= value) return 1.0;
      if (horizon == 0.0) return 0.0;
      double l = (x - value) / std::sqrt(double(dim));
      return std::min(1.0, 4.0 * dim * normal_sf(l / std::sqrt(horizon)));
    }
    case Kind::ExponentialTail:
      if (x <= tail_r0) return 1.0;
      return std::exp(-tail_c * x);
  }
  return 0.0;
}

double RadiusDistribution::sample(RngStream& stream, double step) const {
  switch (kind) {
    case Kind::Deterministic:
      return value;
    case Kind::Empirical: {
      std::uint64_t i = stream.next_u64() % samples.size();
      return samples[i];
    }
    case Kind::SupOfBrownian: {
      double origin[kMaxDim] = {0.0};
      Polyline p = sample_brownian_path(origin, dim, horizon, step, stream);
      return sup_radius(p) + value;
    }
    case Kind::ExponentialTail: {
      // max(R0, Exp(C)); survival exactly min(1, exp(-C x)) beyond R0.
      double e = -std::log(stream.next_unit()) / tail_c;
      return std::max(tail_r0, e);
    }
  }
  return 0.0;
}

PointSet sample_poisson_points(const Box& window, double intensity,
                               RngStream stream) {
  if (intensity < 0.0) throw invalid_parameter("sample_poisson_points: negative intensity");
  if (!window.nondegenerate()) throw invalid_parameter("sample_poisson_points: degenerate window");
  PointSet ps;
  ps.dim = window.dim;
  ps.window = window;
  ps.intensity = intensity;
  std::uint64_t n = stream.next_poisson(intensity * window.volume());
  ps.coords.resize(std::size_t(n) * window.dim);
  for (std::uint64_t i = 0; i < n; ++i)
    for (int j = 0; j < window.dim; ++j)
      ps.coords[std::size_t(i) * window.dim + j] =
          stream.next_uniform(window.lo[j], window.hi[j]);
  return ps;
}

namespace {

int step_count(double horizon, double step) {
  if (horizon == 0.0) return 0;
  // Absorb floating noise so that horizon = k*step gives exactly k steps.
  return static_cast<int>(std::ceil(horizon / step - 1e-9));
}

}  // namespace

Polyline sample_brownian_path(const double* start, int dim, double horizon,
                              double step, RngStream stream) {
  if (!(step > 0.0)) throw invalid_parameter("sample_brownian_path: step must be positive");
  if (horizon < 0.0) throw invalid_parameter("sample_brownian_path: negative horizon");
  if (dim < 1 || dim > kMaxDim) throw invalid_parameter("sample_brownian_path: bad dimension");
  int n = step_count(horizon, step);
  Polyline p;
  p.dim = dim;
  p.step = step;
  p.horizon = horizon;
  p.coords.resize(std::size_t(n + 1) * dim);
  for (int j = 0; j < dim; ++j) p.coords[j] = start[j];
  double prev_time = 0.0;
  for (int i = 1; i <= n; ++i) {
    double now = std::min(double(i) * step, horizon);
    double sd = std::sqrt(now - prev_time);
    const double* prev = p.point(i - 1);
    double* cur = p.point(i);
    for (int j = 0; j < dim; ++j) cur[j] = prev[j] + sd * stream.next_normal();
    prev_time = now;
  }
  return p;
}

Polyline sample_brownian_bridge(const double* a, const double* a_bar, int dim,
                                double delta, double step, RngStream stream) {
  if (!(delta > 0.0)) throw invalid_parameter("sample_brownian_bridge: delta must be positive");
  if (!(step > 0.0) || step > delta)
    throw invalid_parameter("sample_brownian_bridge: step must lie in (0, delta]");
  Polyline p = sample_brownian_path(a, dim, delta, step, stream);
  int last = p.count() - 1;
  double drift[kMaxDim];
  for (int j = 0; j < dim; ++j) drift[j] = p.point(last)[j] - a_bar[j];
  for (int i = 1; i < last; ++i) {
    double s = std::min(double(i) * step, delta) / delta;
    double* cur = p.point(i);
    for (int j = 0; j < dim; ++j) cur[j] -= s * drift[j];
  }
  // Pin the endpoint exactly rather than through the rounded correction.
  for (int j = 0; j < dim; ++j) p.point(last)[j] = a_bar[j];
  return p;
}

double hitting_probability_halfline(double z, double t) {
  if (z < 0.0 || t < 0.0) throw invalid_parameter("hitting_probability_halfline: negative input");
  if (t == 0.0) return z == 0.0 ? 1.0 : 0.0;
  if (z == 0.0) return 1.0;
  return 2.0 * normal_sf(z / std::sqrt(t));
}

SlabIntensity slab_intensity_sum(double t, int k_max) {
  if (!(t > 0.0) || k_max < 1) throw invalid_parameter("slab_intensity_sum: bad parameters");
  SlabIntensity out;
  out.lower_bound = std::sqrt(2.0 * t / kPi) - 1.0;
  for (int k = 1; k <= k_max; ++k) {
    out.value += integrate_adaptive(
        [t](double z) { return hitting_probability_halfline(z, t); },
        double(k - 1), double(k));
  }
  return out;
}

double sup_radius(const Polyline& path) {
  if (path.count() == 0) throw invalid_parameter("sup_radius: empty path");
  const double* start = path.point(0);
  double best = 0.0;
  for (int i = 1; i < path.count(); ++i)
    best = std::max(best, sq_dist(start, path.point(i), path.dim));
  return std::sqrt(best);
}

double radius_moment_bound(double t, int d, double eps) {
  if (!(t > 0.0) || !(eps > 0.0) || d < 1)
    throw invalid_parameter("radius_moment_bound: bad parameters");
  // Substituting y = u^d turns the integrand into d u^(d-2) exp(-u^2/(2td)),
  // integrated over u in [eps, inf). Truncate where the Gaussian factor dies.
  double td = t * double(d);
  double cutoff = std::max(eps * 2.0, 40.0 * std::sqrt(td));
  double integral = integrate_adaptive(
      [d, td](double u) {
        return double(d) * std::pow(u, double(d - 2)) *
               std::exp(-u * u / (2.0 * td));
      },
      eps, cutoff);
  return std::pow(eps, double(d)) +
         4.0 * double(d) * std::sqrt(td / (2.0 * kPi)) * integral;
}

double gouere_safe_intensity(double moment, double c_const) {
  if (!(moment > 0.0) || !(c_const > 0.0))
    throw invalid_parameter("gouere_safe_intensity: inputs must be positive");
  return c_const / moment;
}

}  // namespace bpp
