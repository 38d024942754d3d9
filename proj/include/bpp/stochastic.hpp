#pragma once

#include <cstdint>
#include <vector>

#include "bpp/geom.hpp"
#include "bpp/rng.hpp"

namespace bpp {

/// Poisson cloud in a box.
struct PointSet {
  int dim = 0;
  Box window;
  double intensity = 0.0;
  std::vector<double> coords;

  int count() const { return dim == 0 ? 0 : static_cast<int>(coords.size()) / dim; }
  const double* point(int i) const { return coords.data() + std::size_t(i) * dim; }
};

/// Radius law of the ball attached to each Poisson point, as a tagged
/// variant. Deterministic/Empirical carry actual radii; SupOfBrownian is
/// the law of sup_{s<=t} |B_s| + r; ExponentialTail is the envelope family
/// rho([x,inf)) <= exp(-C x) for x >= R0 (an atom at R0 plus an exponential
/// tail beyond it).
struct RadiusDistribution {
  enum class Kind { Deterministic, SupOfBrownian, Empirical, ExponentialTail };

  Kind kind = Kind::Deterministic;
  double value = 0.0;     // Deterministic radius / SupOfBrownian offset
  double horizon = 0.0;   // SupOfBrownian time
  int dim = 0;            // SupOfBrownian dimension
  double tail_c = 0.0;    // ExponentialTail C
  double tail_r0 = 0.0;   // ExponentialTail R0
  std::vector<double> samples;

  static RadiusDistribution deterministic(double r);
  static RadiusDistribution sup_of_brownian(double t, double r_offset, int d);
  static RadiusDistribution empirical(std::vector<double> samples);
  static RadiusDistribution exponential_tail(double c, double r0);

  bool bounded_support() const;
  double support_bound() const;

  /// Upper bound on P(radius >= x), used by margin and tail-series math.
  /// For SupOfBrownian this is the per-coordinate reflection union bound
  /// min(1, 4d (1 - Phi(((x-r)/sqrt(d))/sqrt(t)))).
  double tail(double x) const;

  /// Draws one radius. SupOfBrownian simulates a discretized path with the
  /// given step and takes its sup displacement plus the offset.
  double sample(RngStream& stream, double step) const;
};

/// Homogeneous Poisson cloud of the given intensity in the window.
PointSet sample_poisson_points(const Box& window, double intensity,
                               RngStream stream);

/// Euler-discretized Brownian path: i.i.d. Gaussian increments of
/// per-coordinate variance step, the final increment truncated to the
/// residual time. start has box-free dimension dim.
Polyline sample_brownian_path(const double* start, int dim, double horizon,
                              double step, RngStream stream);

/// Brownian bridge from a to a_bar over [0,delta]: a free path is sampled
/// and corrected by W_s = B_s - (s/delta)(B_delta - a_bar); the terminal
/// vertex is pinned to a_bar exactly.
Polyline sample_brownian_bridge(const double* a, const double* a_bar, int dim,
                                double delta, double step, RngStream stream);

/// P^z(tau_0 <= t) for a 1-d Brownian motion started at z >= 0, in closed
/// form by the reflection principle: 2(1 - Phi(z/sqrt(t))).
double hitting_probability_halfline(double z, double t);

struct SlabIntensity {
  double value = 0.0;        // sum over slabs of p^k_t
  double lower_bound = 0.0;  // sqrt(2t/pi) - 1
};

/// Sum over slabs k=1..k_max of p^k_t = int_{k-1}^k P^z(tau_0 <= t) dz,
/// by adaptive quadrature, together with its analytic lower bound.
SlabIntensity slab_intensity_sum(double t, int k_max);

/// Largest Euclidean displacement of the discretized path from its start.
double sup_radius(const Polyline& path);

/// Upper bound on the d-th moment of the sup-displacement radius law:
/// eps^d + 4d sqrt(td/(2 pi)) * int_{eps^d}^inf y^(-1/d) exp(-y^(2/d)/(2td)) dy.
double radius_moment_bound(double t, int d, double eps);

/// Subcritical intensity from a d-th moment bound: any lambda below
/// c_const / moment is certified subcritical conditional on c_const.
double gouere_safe_intensity(double moment, double c_const);

}  // namespace bpp
