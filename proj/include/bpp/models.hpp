#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bpp/geometry.hpp"
#include "bpp/stochastic.hpp"

namespace bpp {

/// Margin defect probability used when deriving sampling margins.
inline constexpr double kMarginDefect = 1e-3;

/// Parameters of one occupied-set model cell. extents are the crossing box
/// sides N_1..N_d; when boolean_radius is set the sample is the Boolean
/// model with that radius law instead of Brownian chains.
struct ModelConfig {
  int d = 2;
  double lambda = 1.0;
  double t = 1.0;
  double r = 0.0;
  double step = 0.01;
  std::vector<double> extents;
  double margin = -1.0;  // negative: derive from the radius tail
  double tol = -1.0;     // negative: 3*sqrt(step) for r==0 in d>=2, else 0
  std::uint64_t master_seed = 1;
  std::optional<RadiusDistribution> boolean_radius;

  void validate() const;
  Box crossing_box() const;
  double resolved_tol() const;

  /// Tail of the chain reach (radius + path displacement): the analytic
  /// reflection union bound for the Brownian model, the radius law itself
  /// for the Boolean model.
  RadiusDistribution reach_tail() const;

  double resolved_margin() const;
};

/// One sampled occupied set; chains start inside the margin-inflated window.
struct OccupiedSetSample {
  ModelConfig config;
  Box window;
  double margin = 0.0;
  std::uint64_t stream_key = 0;
  std::vector<CapsuleChain> chains;
};

/// Smallest integer margin M such that the boundary tail series
/// Cst * sum_{K >= M - offset} K^(d-1) tail(K) drops to at most delta_err,
/// where offset = ceil(sup-norm radius of the box). Bounded-support tails
/// return ceil(support) + offset directly.
int build_margin(const Box& box, const RadiusDistribution& tail, double delta_err);

/// Brownian chains started from a Poisson cloud in the given window.
/// Point i's path consumes substream ("path", i), so models built from the
/// same stream couple pathwise.
std::vector<CapsuleChain> sample_chain_cloud(const Box& window, double lambda,
                                             double t, double r, double step,
                                             int d, RngStream stream);

/// One occupied-set sample. Points are sampled in the sup-norm ball
/// B_inf(0, M) with M the resolved margin; that ball contains the crossing
/// box plus every start whose chain can reach it except for a set of
/// probability at most the margin defect.
OccupiedSetSample sample_occupied_set(const ModelConfig& config, RngStream stream);

/// Boolean model: single-vertex chains with i.i.d. radii from rho. For the
/// SupOfBrownian law the radius of point i is computed from the same
/// substream as that point's path in sample_occupied_set, so the two models
/// couple pathwise on shared streams.
OccupiedSetSample sample_boolean(const Box& box, double lambda,
                                 const RadiusDistribution& rho, double step,
                                 RngStream stream,
                                 double delta_err = kMarginDefect);

/// Shifts every chain and the window by the same vector.
void translate_sample(OccupiedSetSample& sample, const double* shift);

/// Coarse-grained bond field: per lattice site z a Poisson cloud in the box
/// B_inf(2Rz, R), its count, the occupied point nearest to the box center,
/// and for each nearest-neighbour edge the open/closed state.
struct EdgeField {
  int d = 0;
  double box_half = 0.0;
  std::vector<int> window;  // sites per axis
  std::vector<std::uint64_t> site_count;
  std::vector<double> selected;  // d coords per site, valid iff count > 0
  struct Edge {
    int a = 0;
    int b = 0;
    bool open = false;
  };
  std::vector<Edge> edges;

  int site_total() const {
    int n = 1;
    for (int w : window) n *= w;
    return n;
  }
};

EdgeField coarse_grain_edges(double box_half, double t, double lambda, int d,
                             const std::vector<int>& window, double step,
                             double tol, RngStream stream);

/// Edge states from pre-selected per-site points and paths (used to force
/// configurations in tests). paths[i] is ignored when counts[i] == 0.
std::vector<EdgeField::Edge> edges_from_sites(int d, const std::vector<int>& window,
                                              const std::vector<std::uint64_t>& counts,
                                              const std::vector<Polyline>& paths,
                                              double tol);

/// Slab projection onto the boundary hyperplane: per slab k = 1..k_max a
/// (d-1)-dimensional Poisson cloud is thinned by the exact first-passage
/// law P^z(tau_0 <= t) with z uniform in (k-1,k], and survivors are
/// translated by an independent (d-1)-dimensional displacement B(tau_0).
/// Clouds are sampled in a padded window so edge effects stay below the
/// Gaussian tail at 10 sqrt(t).
PointSet slab_projection_sample(double lambda, double t, int d,
                                const Box& hyperplane_window, int k_max,
                                RngStream stream);

}  // namespace bpp
