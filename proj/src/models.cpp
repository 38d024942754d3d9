#include "bpp/models.hpp"

#include <algorithm>
#include <cmath>

#include "bpp/certificate.hpp"

namespace bpp {

void ModelConfig::validate() const {
  if (d < 1 || d > kMaxDim) throw invalid_parameter("ModelConfig: d out of range");
  if (!(lambda >= 0.0)) throw invalid_parameter("ModelConfig: negative intensity");
  if (!(t >= 0.0)) throw invalid_parameter("ModelConfig: negative time");
  if (!(r >= 0.0)) throw invalid_parameter("ModelConfig: negative radius");
  if (!(step > 0.0)) throw invalid_parameter("ModelConfig: step must be positive");
  if (static_cast<int>(extents.size()) != d)
    throw invalid_parameter("ModelConfig: extents must have one entry per dimension");
  for (double e : extents)
    if (!(e > 0.0)) throw invalid_parameter("ModelConfig: nonpositive box extent");
  if (margin >= 0.0 && !(margin >= 0.0)) throw invalid_parameter("ModelConfig: bad margin");
}

Box ModelConfig::crossing_box() const { return Box::from_extents(extents); }

double ModelConfig::resolved_tol() const {
  if (tol >= 0.0) return tol;
  if (r == 0.0 && d >= 2) return 3.0 * std::sqrt(step);
  return 0.0;
}

RadiusDistribution ModelConfig::reach_tail() const {
  if (boolean_radius) return *boolean_radius;
  return RadiusDistribution::sup_of_brownian(t, r, d);
}

double ModelConfig::resolved_margin() const {
  if (margin >= 0.0) return margin;
  return build_margin(crossing_box(), reach_tail(), kMarginDefect);
}

int build_margin(const Box& box, const RadiusDistribution& tail, double delta_err) {
  if (!(delta_err > 0.0 && delta_err < 1.0))
    throw invalid_parameter("build_margin: delta_err outside (0,1)");
  if (!box.nondegenerate()) throw invalid_parameter("build_margin: degenerate box");
  const int offset = static_cast<int>(std::ceil(box.supnorm_radius()));
  if (tail.bounded_support())
    return static_cast<int>(std::ceil(tail.support_bound())) + offset;
  for (int m = offset + 1; m < offset + 1000000; ++m) {
    if (detail::tail_series_from(tail, std::max<std::int64_t>(1, m - offset), box.dim) <=
        delta_err)
      return m;
  }
  throw invalid_parameter("build_margin: series does not reach delta_err");
}

std::vector<CapsuleChain> sample_chain_cloud(const Box& window, double lambda,
                                             double t, double r, double step,
                                             int d, RngStream stream) {
  PointSet cloud = sample_poisson_points(window, lambda, stream.sub("points", 0));
  std::vector<CapsuleChain> chains;
  chains.reserve(cloud.count());
  for (int i = 0; i < cloud.count(); ++i) {
    CapsuleChain chain;
    chain.path = sample_brownian_path(cloud.point(i), d, t, step,
                                      stream.sub("path", i));
    chain.radius = r;
    chain.id = i;
    chains.push_back(std::move(chain));
  }
  return chains;
}

OccupiedSetSample sample_occupied_set(const ModelConfig& config, RngStream stream) {
  config.validate();
  if (config.boolean_radius)
    return sample_boolean(config.crossing_box(), config.lambda,
                          *config.boolean_radius, config.step, stream);
  OccupiedSetSample out;
  out.config = config;
  out.margin = config.resolved_margin();
  out.window = Box::centered_cube(config.d, out.margin);
  out.stream_key = stream.key();
  out.chains = sample_chain_cloud(out.window, config.lambda, config.t, config.r,
                                  config.step, config.d, stream);
  return out;
}

OccupiedSetSample sample_boolean(const Box& box, double lambda,
                                 const RadiusDistribution& rho, double step,
                                 RngStream stream, double delta_err) {
  OccupiedSetSample out;
  out.config.d = box.dim;
  out.config.lambda = lambda;
  out.config.t = 0.0;
  out.config.r = 0.0;
  out.config.step = step;
  out.config.extents.assign(box.hi.begin(), box.hi.begin() + box.dim);
  out.config.boolean_radius = rho;
  out.margin = build_margin(box, rho, delta_err);
  out.config.margin = out.margin;
  out.window = Box::centered_cube(box.dim, out.margin);
  out.stream_key = stream.key();
  PointSet cloud = sample_poisson_points(out.window, lambda, stream.sub("points", 0));
  out.chains.reserve(cloud.count());
  const bool path_radius = rho.kind == RadiusDistribution::Kind::SupOfBrownian;
  for (int i = 0; i < cloud.count(); ++i) {
    CapsuleChain chain;
    chain.path.dim = box.dim;
    chain.path.step = step;
    chain.path.horizon = 0.0;
    chain.path.coords.assign(cloud.point(i), cloud.point(i) + box.dim);
    RngStream sub = path_radius ? stream.sub("path", i) : stream.sub("radius", i);
    chain.radius = rho.sample(sub, step);
    chain.id = i;
    out.chains.push_back(std::move(chain));
  }
  return out;
}

void translate_sample(OccupiedSetSample& sample, const double* shift) {
  const int d = sample.window.dim;
  sample.window = sample.window.translated(shift);
  for (auto& chain : sample.chains) {
    double* c = chain.path.coords.data();
    const std::size_t n = chain.path.coords.size();
    for (std::size_t i = 0; i < n; i += d)
      for (int j = 0; j < d; ++j) c[i + j] += shift[j];
  }
}

namespace {

int site_linear(const std::vector<int>& window, const int* z) {
  int lin = 0;
  for (std::size_t j = 0; j < window.size(); ++j) lin = lin * window[j] + z[j];
  return lin;
}

}  // namespace

std::vector<EdgeField::Edge> edges_from_sites(int d, const std::vector<int>& window,
                                              const std::vector<std::uint64_t>& counts,
                                              const std::vector<Polyline>& paths,
                                              double tol) {
  std::vector<EdgeField::Edge> edges;
  int total = 1;
  for (int w : window) total *= w;
  std::vector<int> z(d, 0);
  for (int lin = 0; lin < total; ++lin) {
    for (int axis = 0; axis < d; ++axis) {
      if (z[axis] + 1 >= window[axis]) continue;
      int znb[kMaxDim];
      for (int j = 0; j < d; ++j) znb[j] = z[j];
      ++znb[axis];
      int nb = site_linear(window, znb);
      EdgeField::Edge e;
      e.a = lin;
      e.b = nb;
      e.open = false;
      if (counts[lin] >= 1 && counts[nb] >= 1) {
        CapsuleChain ca{paths[lin], 0.0, 0};
        CapsuleChain cb{paths[nb], 0.0, 1};
        e.open = chains_touch(ca, cb, tol);
      }
      edges.push_back(e);
    }
    // odometer over site coordinates
    for (int j = d - 1; j >= 0; --j) {
      if (++z[j] < window[j]) break;
      z[j] = 0;
    }
  }
  return edges;
}

EdgeField coarse_grain_edges(double box_half, double t, double lambda, int d,
                             const std::vector<int>& window, double step,
                             double tol, RngStream stream) {
  if (!(box_half > 0.0)) throw invalid_parameter("coarse_grain_edges: box half-size must be positive");
  if (static_cast<int>(window.size()) != d || d < 1 || d > kMaxDim)
    throw invalid_parameter("coarse_grain_edges: bad window");
  for (int w : window)
    if (w < 1) throw invalid_parameter("coarse_grain_edges: empty window");

  EdgeField field;
  field.d = d;
  field.box_half = box_half;
  field.window = window;
  const int total = field.site_total();
  field.site_count.assign(total, 0);
  field.selected.assign(std::size_t(total) * d, 0.0);
  std::vector<Polyline> paths(total);

  std::vector<int> z(d, 0);
  for (int lin = 0; lin < total; ++lin) {
    Box site_box;
    site_box.dim = d;
    for (int j = 0; j < d; ++j) {
      double center = 2.0 * box_half * z[j];
      site_box.lo[j] = center - box_half;
      site_box.hi[j] = center + box_half;
    }
    RngStream site_stream = stream.sub("site", lin);
    PointSet cloud = sample_poisson_points(site_box, lambda, site_stream);
    field.site_count[lin] = cloud.count();
    if (cloud.count() > 0) {
      // Occupied point closest to the box center, ties broken
      // lexicographically on coordinates.
      double center[kMaxDim];
      for (int j = 0; j < d; ++j) center[j] = 2.0 * box_half * z[j];
      int best = 0;
      double best_d = sq_dist(cloud.point(0), center, d);
      for (int i = 1; i < cloud.count(); ++i) {
        double di = sq_dist(cloud.point(i), center, d);
        if (di < best_d ||
            (di == best_d &&
             std::lexicographical_compare(cloud.point(i), cloud.point(i) + d,
                                          cloud.point(best), cloud.point(best) + d))) {
          best = i;
          best_d = di;
        }
      }
      for (int j = 0; j < d; ++j)
        field.selected[std::size_t(lin) * d + j] = cloud.point(best)[j];
      paths[lin] = sample_brownian_path(cloud.point(best), d, t, step,
                                        stream.sub("sitepath", lin));
    }
    for (int j = d - 1; j >= 0; --j) {
      if (++z[j] < window[j]) break;
      z[j] = 0;
    }
  }
  field.edges = edges_from_sites(d, window, field.site_count, paths, tol);
  return field;
}

PointSet slab_projection_sample(double lambda, double t, int d,
                                const Box& hyperplane_window, int k_max,
                                RngStream stream) {
  if (d < 2) throw invalid_parameter("slab_projection_sample: d must be at least 2");
  if (k_max < 1) throw invalid_parameter("slab_projection_sample: k_max must be >= 1");
  if (!(t > 0.0)) throw invalid_parameter("slab_projection_sample: t must be positive");
  if (hyperplane_window.dim != d - 1)
    throw invalid_parameter("slab_projection_sample: window must have dimension d-1");
  if (!(lambda >= 0.0)) throw invalid_parameter("slab_projection_sample: negative intensity");

  PointSet out;
  out.dim = d - 1;
  out.window = hyperplane_window;
  out.intensity = lambda;

  const double pad = 10.0 * std::sqrt(t) + 1.0;
  Box padded = hyperplane_window.inflated(pad);
  for (int k = 1; k <= k_max; ++k) {
    RngStream slab = stream.sub("slab", k);
    PointSet cloud = sample_poisson_points(padded, lambda, slab.sub("cloud", 0));
    RngStream thin = slab.sub("thin", 0);
    for (int i = 0; i < cloud.count(); ++i) {
      double z = thin.next_uniform(double(k - 1), double(k));
      double g = thin.next_normal();
      double tau = (z / g) * (z / g);  // first-passage time of level 0 from z
      if (!(tau <= t)) continue;
      double p[kMaxDim];
      double sd = std::sqrt(tau);
      bool inside = true;
      for (int j = 0; j < d - 1; ++j) {
        p[j] = cloud.point(i)[j] + sd * thin.next_normal();
        if (p[j] < hyperplane_window.lo[j] || p[j] > hyperplane_window.hi[j])
          inside = false;
      }
      if (inside) out.coords.insert(out.coords.end(), p, p + (d - 1));
    }
  }
  return out;
}

}  // namespace bpp
