#include "bpp/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "bpp/mathutil.hpp"

namespace bpp {

EstimateCI make_estimate(std::uint64_t successes, std::uint64_t replicas,
                         double level) {
  if (replicas == 0) throw invalid_parameter("make_estimate: zero replicas");
  EstimateCI e;
  e.successes = successes;
  e.replicas = replicas;
  e.level = level;
  e.p_hat = double(successes) / double(replicas);
  Interval iv = wilson_interval(successes, replicas, level);
  e.ci_lo = iv.lo;
  e.ci_hi = iv.hi;
  return e;
}

EstimateCI merge_estimates(const EstimateCI& a, const EstimateCI& b) {
  return make_estimate(a.successes + b.successes, a.replicas + b.replicas, a.level);
}

std::vector<std::uint8_t> run_indicator_replicas(
    std::uint64_t replicas,
    const std::function<bool(std::uint64_t, RngStream)>& trial, RngStream base,
    ExecMode mode) {
  std::vector<std::uint8_t> out(replicas, 0);
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < std::int64_t(replicas); ++i)
      out[i] = trial(std::uint64_t(i), base.sub("replica", std::uint64_t(i))) ? 1 : 0;
  } else {
    for (std::uint64_t i = 0; i < replicas; ++i)
      out[i] = trial(i, base.sub("replica", i)) ? 1 : 0;
  }
  return out;
}

EstimateCI estimate_indicator(std::uint64_t replicas,
                              const std::function<bool(std::uint64_t, RngStream)>& trial,
                              RngStream base, double level, ExecMode mode) {
  if (replicas < 1) throw invalid_parameter("estimate_indicator: need at least one replica");
  std::vector<std::uint8_t> hits = run_indicator_replicas(replicas, trial, base, mode);
  std::uint64_t s = 0;
  for (auto h : hits) s += h;
  return make_estimate(s, replicas, level);
}

EstimateCI crossing_probability(const ModelConfig& config, std::uint64_t replicas,
                                RngStream stream, double level, ExecMode mode,
                                const ChainSampler& sampler) {
  config.validate();
  const Box box = config.crossing_box();
  const double tol = config.resolved_tol();
  auto trial = [&config, &box, tol, &sampler](std::uint64_t, RngStream s) {
    std::vector<CapsuleChain> chains =
        sampler ? sampler(config, s) : sample_occupied_set(config, s).chains;
    return crossing_indicator(chains, box, tol);
  };
  return estimate_indicator(replicas, trial, stream, level, mode);
}

namespace {

// One CI-classified point: below / above / straddling after full budget.
enum class Side { Below, Above, Straddle };

struct PointResult {
  EstimateCI est;
  Side side = Side::Straddle;
};

PointResult classify_point(const PointEvaluator& evaluate, double param,
                           double target, std::uint64_t base_replicas,
                           int budget_multiplier, RngStream point_stream) {
  EstimateCI acc;
  bool first = true;
  std::uint64_t chunk = base_replicas;
  std::uint64_t spent = 0;
  int attempt = 0;
  while (true) {
    EstimateCI e = evaluate(param, chunk, point_stream.sub("attempt", attempt));
    acc = first ? e : merge_estimates(acc, e);
    first = false;
    spent += chunk;
    if (acc.ci_hi < target) return {acc, Side::Below};
    if (acc.ci_lo > target) return {acc, Side::Above};
    if (spent + chunk > base_replicas * std::uint64_t(budget_multiplier)) break;
    ++attempt;
    chunk = spent;  // double the total each round
  }
  return {acc, Side::Straddle};
}

}  // namespace

ThresholdBracket threshold_bisect(const PointEvaluator& evaluate,
                                  ThresholdAxis axis, double target, double lo0,
                                  double hi0, std::uint64_t per_point_replicas,
                                  int max_iters, RngStream stream,
                                  double rel_width, int budget_multiplier) {
  if (!(lo0 < hi0)) throw invalid_parameter("threshold_bisect: lo0 must be below hi0");
  if (!(target > 0.0 && target < 1.0))
    throw invalid_parameter("threshold_bisect: target outside (0,1)");
  if (per_point_replicas < 1) throw invalid_parameter("threshold_bisect: no replicas");

  ThresholdBracket bracket;
  bracket.axis = axis;
  bracket.target = target;
  int eval_id = 0;

  PointResult lo_res = classify_point(evaluate, lo0, target, per_point_replicas,
                                      budget_multiplier, stream.sub("point", eval_id++));
  bracket.trace.push_back({lo0, lo_res.est});
  if (lo_res.side != Side::Below)
    throw invalid_parameter("threshold_bisect: unbracketed target (lower endpoint not below)");
  PointResult hi_res = classify_point(evaluate, hi0, target, per_point_replicas,
                                      budget_multiplier, stream.sub("point", eval_id++));
  bracket.trace.push_back({hi0, hi_res.est});
  if (hi_res.side != Side::Above)
    throw invalid_parameter("threshold_bisect: unbracketed target (upper endpoint not above)");

  bracket.lo = lo0;
  bracket.hi = hi0;
  bracket.p_lo = lo_res.est;
  bracket.p_hi = hi_res.est;

  for (int it = 0; it < max_iters; ++it) {
    if (bracket.hi - bracket.lo <= rel_width * 0.5 * (bracket.hi + bracket.lo)) break;
    double mid = 0.5 * (bracket.lo + bracket.hi);
    PointResult mid_res = classify_point(evaluate, mid, target, per_point_replicas,
                                         budget_multiplier, stream.sub("point", eval_id++));
    bracket.trace.push_back({mid, mid_res.est});
    if (mid_res.side == Side::Below) {
      bracket.lo = mid;
      bracket.p_lo = mid_res.est;
    } else if (mid_res.side == Side::Above) {
      bracket.hi = mid;
      bracket.p_hi = mid_res.est;
    } else {
      bracket.budget_exhausted = true;
      break;
    }
  }
  return bracket;
}

PointEvaluator crossing_evaluator(ModelConfig config_template, ThresholdAxis axis,
                                  double level, ExecMode mode) {
  return [config_template, axis, level, mode](double param, std::uint64_t replicas,
                                              RngStream s) {
    ModelConfig c = config_template;
    if (axis == ThresholdAxis::Time) c.t = param;
    else c.lambda = param;
    return crossing_probability(c, replicas, s, level, mode);
  };
}

EstimateCI edge_open_probability(double box_half, double t, double lambda, int d,
                                 double step, double tol, std::uint64_t replicas,
                                 RngStream stream, double level, ExecMode mode) {
  std::vector<int> window(d, 1);
  window[0] = 2;
  auto trial = [=](std::uint64_t, RngStream s) {
    EdgeField f = coarse_grain_edges(box_half, t, lambda, d, window, step, tol, s);
    return f.edges.size() == 1 && f.edges[0].open;
  };
  return estimate_indicator(replicas, trial, stream, level, mode);
}

PathIntersection path_intersection_probability(double separation, double t, int d,
                                               double step, double tol,
                                               std::uint64_t replicas,
                                               RngStream stream, double level,
                                               ExecMode mode) {
  if (!(separation >= 0.0)) throw invalid_parameter("path_intersection_probability: negative separation");
  if (!(t >= 0.0) || !(step > 0.0))
    throw invalid_parameter("path_intersection_probability: bad time parameters");
  if (tol < 0.0) throw invalid_parameter("path_intersection_probability: negative tol");
  PathIntersection out;
  if (d < 2) throw invalid_parameter("path_intersection_probability: d must be at least 2");
  if (d >= 4) {
    if (tol == 0.0)
      throw invalid_parameter(
          "path_intersection_probability: d >= 4 is degenerate with tol = 0");
    out.flagged_dimension = true;
  }
  auto trial = [=](std::uint64_t, RngStream s) {
    double origin[kMaxDim] = {0.0};
    double other[kMaxDim] = {0.0};
    other[0] = separation;
    CapsuleChain a{sample_brownian_path(origin, d, t, step, s.sub("first", 0)), 0.0, 0};
    CapsuleChain b{sample_brownian_path(other, d, t, step, s.sub("second", 0)), 0.0, 1};
    return chains_touch(a, b, tol);
  };
  out.estimate = estimate_indicator(replicas, trial, stream, level, mode);
  return out;
}

int unbounded_cluster_count(const OccupiedSetSample& sample, double r_in,
                            double r_out) {
  if (!(r_out > r_in && r_in > 0.0))
    throw invalid_parameter("unbounded_cluster_count: need r_out > r_in > 0");
  const int d = sample.window.dim;
  for (int j = 0; j < d; ++j)
    if (sample.window.lo[j] > -r_out || sample.window.hi[j] < r_out)
      throw invalid_parameter("unbounded_cluster_count: window must contain B_inf(0, r_out)");

  const Box inner = Box::centered_cube(d, r_in);
  const double tol = sample.config.resolved_tol();
  std::vector<CapsuleChain> pieces = clip_outside_box(sample.chains, inner);
  if (pieces.empty()) return 0;
  SpatialIndex ix = build_index(pieces, tol);
  ClusterLabeling labels = cluster(pieces, ix, tol);

  std::unordered_map<std::int32_t, unsigned> flags;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const CapsuleChain& p = pieces[i];
    unsigned f = 0;
    // inner contact: capsule material meets the inner ball's boundary
    int nseg = std::max(1, p.path.segments());
    for (int s = 0; s < nseg && !(f & 1u); ++s) {
      const double* a = p.path.point(s);
      const double* b = p.path.point(std::min(s + 1, p.path.count() - 1));
      if (segment_box_distance(a, b, inner) <= p.radius) f |= 1u;
    }
    // outer reach: sup-norm distance from origin of any capsule point
    double reach = 0.0;
    for (int v = 0; v < p.path.count(); ++v)
      reach = std::max(reach, sup_norm(p.path.point(v), d));
    if (reach + p.radius >= r_out) f |= 2u;
    if (f) flags[labels.cluster_id[i]] |= f;
  }
  int count = 0;
  for (const auto& [root, f] : flags)
    if (f == 3u) ++count;
  return count;
}

namespace detail {

ScaleCheck scale_invariance_check_impl(double lambda, double t, double n,
                                       double eta, int d, double step,
                                       std::uint64_t replicas, RngStream stream,
                                       double significance, bool rescale_time,
                                       ExecMode mode) {
  if (!(eta > 0.0)) throw invalid_parameter("scale_invariance_check: eta must be positive");
  ScaleCheck out;
  out.significance = significance;

  ModelConfig base;
  base.d = d;
  base.lambda = lambda;
  base.t = t;
  base.r = 0.0;
  base.step = step;
  base.extents.assign(d, 3.0 * n);
  base.extents[0] = n;
  base.master_seed = 0;

  double space = std::pow(eta, -1.0 / d);
  double time = std::pow(eta, -2.0 / d);
  ModelConfig scaled = base;
  scaled.lambda = eta * lambda;
  scaled.t = rescale_time ? time * t : t;
  scaled.step = time * step;
  for (double& e : scaled.extents) e *= space;

  out.base_config = base;
  out.rescaled_config = scaled;
  // Both cells consume the same substream: at eta = 1 the estimates are
  // identical by construction.
  out.base = crossing_probability(base, replicas, stream.sub("cells", 0),
                                  kDefaultLevel, mode);
  out.rescaled = crossing_probability(scaled, replicas, stream.sub("cells", 0),
                                      kDefaultLevel, mode);
  double z = two_proportion_z(out.base.successes, out.base.replicas,
                              out.rescaled.successes, out.rescaled.replicas);
  out.z = z;
  double zcrit = normal_quantile(1.0 - significance / 2.0);
  out.pass = std::abs(z) <= zcrit;
  return out;
}

}  // namespace detail

ScaleCheck scale_invariance_check(double lambda, double t, double n, double eta,
                                  int d, double step, std::uint64_t replicas,
                                  RngStream stream, double significance,
                                  ExecMode mode) {
  return detail::scale_invariance_check_impl(lambda, t, n, eta, d, step, replicas,
                                             stream, significance, true, mode);
}

namespace {

bool in_annulus(const double* x, int dim, double r_lo, double r_hi) {
  double r = euclid_norm(x, dim);
  return r >= r_lo && r <= r_hi;
}

}  // namespace

EstimateCI bridge_stay_probability(double annulus_r, double eps, const double* a,
                                   const double* a_bar, int dim, double delta,
                                   double step, std::uint64_t replicas,
                                   RngStream stream, double level, ExecMode mode) {
  if (!(annulus_r > 0.0) || !(eps > 0.0) || eps >= annulus_r)
    throw invalid_parameter("bridge_stay_probability: bad annulus");
  const double r_lo = annulus_r - eps, r_hi = annulus_r + eps;
  if (!in_annulus(a, dim, r_lo, r_hi) || !in_annulus(a_bar, dim, r_lo, r_hi))
    throw invalid_parameter("bridge_stay_probability: endpoints outside the annulus");
  std::vector<double> av(a, a + dim), bv(a_bar, a_bar + dim);
  auto trial = [=](std::uint64_t, RngStream s) {
    Polyline w = sample_brownian_bridge(av.data(), bv.data(), dim, delta, step, s);
    for (int i = 0; i < w.count(); ++i)
      if (!in_annulus(w.point(i), dim, r_lo, r_hi)) return false;
    return true;
  };
  return estimate_indicator(replicas, trial, stream, level, mode);
}

EstimateCI annulus_intersection_probability(double annulus_r, double eps,
                                            const double* a1, const double* a2,
                                            int dim, double tau1, double tau2,
                                            double delta, double step, double tol,
                                            std::uint64_t replicas, RngStream stream,
                                            double level, ExecMode mode) {
  if (dim < 2 || dim > 3)
    throw invalid_parameter("annulus_intersection_probability: d must be 2 or 3");
  if (!(annulus_r > 0.0) || !(eps > 0.0) || eps >= annulus_r)
    throw invalid_parameter("annulus_intersection_probability: bad annulus");
  if (!(delta >= 0.0) || delta >= std::min(tau1, tau2))
    throw invalid_parameter("annulus_intersection_probability: delta must be below tau");
  const double r_lo = annulus_r - eps, r_hi = annulus_r + eps;
  if (!in_annulus(a1, dim, r_lo, r_hi) || !in_annulus(a2, dim, r_lo, r_hi))
    throw invalid_parameter("annulus_intersection_probability: starts outside the annulus");
  std::vector<double> s1(a1, a1 + dim), s2(a2, a2 + dim);
  auto trial = [=](std::uint64_t, RngStream s) {
    CapsuleChain c1{
        sample_brownian_path(s1.data(), dim, tau1 - delta, step, s.sub("first", 0)),
        0.0, 0};
    CapsuleChain c2{
        sample_brownian_path(s2.data(), dim, tau2 - delta, step, s.sub("second", 0)),
        0.0, 1};
    for (int i = 0; i < c1.path.count(); ++i)
      if (!in_annulus(c1.path.point(i), dim, r_lo, r_hi)) return false;
    for (int i = 0; i < c2.path.count(); ++i)
      if (!in_annulus(c2.path.point(i), dim, r_lo, r_hi)) return false;
    return chains_touch(c1, c2, tol);
  };
  return estimate_indicator(replicas, trial, stream, level, mode);
}

}  // namespace bpp
