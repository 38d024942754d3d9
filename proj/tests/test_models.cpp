#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpp/certificate.hpp"
#include "bpp/mathutil.hpp"
#include "bpp/models.hpp"
#include "oracles.hpp"

using namespace bpp;

namespace {

ModelConfig basic_config() {
  ModelConfig mc;
  mc.d = 2;
  mc.lambda = 1.0;
  mc.t = 0.25;
  mc.r = 0.0;
  mc.step = 0.01;
  mc.extents = {10.0, 30.0};
  return mc;
}

RngStream stream(std::uint64_t seed, const char* tag) {
  return derive_stream(seed, {{tag, 0}});
}

}  // namespace

TEST_CASE("config validation rejects malformed cells") {
  ModelConfig mc = basic_config();
  mc.t = -1.0;
  CHECK_THROWS_AS(mc.validate(), invalid_parameter);
  mc = basic_config();
  mc.extents = {10.0};  // wrong arity
  CHECK_THROWS_AS(mc.validate(), invalid_parameter);
  mc = basic_config();
  mc.step = 0.0;
  CHECK_THROWS_AS(mc.validate(), invalid_parameter);
}

TEST_CASE("default contact tolerance follows the discretization") {
  ModelConfig mc = basic_config();
  CHECK(mc.resolved_tol() == 3.0 * std::sqrt(0.01));
  mc.r = 0.5;
  CHECK(mc.resolved_tol() == 0.0);
  mc = basic_config();
  mc.d = 1;
  mc.extents = {10.0};
  CHECK(mc.resolved_tol() == 0.0);
  mc = basic_config();
  mc.tol = 0.125;
  CHECK(mc.resolved_tol() == 0.125);
}

TEST_CASE("margin: bounded support is support plus the box radius") {
  Box box = Box::from_extents({10.0, 30.0});
  CHECK(build_margin(box, RadiusDistribution::deterministic(1.0), 1e-3) == 31);
  CHECK(build_margin(box, RadiusDistribution::empirical({0.5, 2.0}), 1e-3) == 32);
}

TEST_CASE("margin: exponential tail terminates and shrinks with delta_err") {
  Box box = Box::from_extents({10.0, 30.0});
  RadiusDistribution tail = RadiusDistribution::exponential_tail(1.0, 1.0);
  int m1 = build_margin(box, tail, 1e-3);
  int m2 = build_margin(box, tail, 2e-3);
  CHECK(m1 > 30);
  CHECK(m2 <= m1);

  // The returned margin is the first one whose series value clears the
  // defect, per direct evaluation of the series.
  CHECK(boundary_tail_bound(tail, m1, 10, 2) <= 1e-3);
  CHECK(boundary_tail_bound(tail, m1 - 1, 10, 2) > 1e-3);
}

TEST_CASE("occupied set: zero intensity and zero time") {
  ModelConfig mc = basic_config();
  mc.lambda = 0.0;
  OccupiedSetSample s = sample_occupied_set(mc, stream(1, "os"));
  CHECK(s.chains.empty());

  mc = basic_config();
  mc.t = 0.0;
  OccupiedSetSample pts = sample_occupied_set(mc, stream(2, "os"));
  CHECK(!pts.chains.empty());
  for (const auto& c : pts.chains) {
    CHECK(c.path.count() == 1);
    CHECK(c.radius == 0.0);
  }
  CHECK(!crossing_indicator(pts.chains, mc.crossing_box(), mc.resolved_tol()));
}

TEST_CASE("occupied set: bit-for-bit reproducible and inside the window") {
  ModelConfig mc = basic_config();
  OccupiedSetSample a = sample_occupied_set(mc, stream(3, "os"));
  OccupiedSetSample b = sample_occupied_set(mc, stream(3, "os"));
  REQUIRE(a.chains.size() == b.chains.size());
  for (std::size_t i = 0; i < a.chains.size(); ++i) {
    CHECK(a.chains[i].path.coords == b.chains[i].path.coords);
    CHECK(a.window.contains(a.chains[i].path.point(0)));
  }
}

TEST_CASE("occupied set at t=0 with radius matches the Boolean model in law") {
  // Cluster-count statistics from both builders, compared by two-sample KS.
  ModelConfig mc = basic_config();
  mc.t = 0.0;
  mc.r = 0.7;
  mc.extents = {6.0, 6.0};
  mc.lambda = 0.5;
  Box box = mc.crossing_box();
  RadiusDistribution det = RadiusDistribution::deterministic(0.7);

  const int reps = 1000;
  std::vector<double> counts_brownian, counts_boolean;
  RngStream sa = stream(4, "ks-brownian");
  RngStream sb = stream(5, "ks-boolean");
  for (int i = 0; i < reps; ++i) {
    OccupiedSetSample s1 = sample_occupied_set(mc, sa.sub("rep", i));
    SpatialIndex i1 = build_index(s1.chains, 0.0);
    counts_brownian.push_back(double(cluster(s1.chains, i1, 0.0).cluster_count()));
    OccupiedSetSample s2 = sample_boolean(box, mc.lambda, det, mc.step, sb.sub("rep", i));
    SpatialIndex i2 = build_index(s2.chains, 0.0);
    counts_boolean.push_back(double(cluster(s2.chains, i2, 0.0).cluster_count()));
  }
  double d = ks_statistic(counts_brownian, counts_boolean);
  CHECK(d < ks_threshold(reps, reps, 0.01));
}

TEST_CASE("Boolean sup-of-Brownian radii contain the Brownian chains pathwise") {
  ModelConfig mc = basic_config();
  mc.t = 0.5;
  mc.extents = {6.0, 18.0};
  Box box = mc.crossing_box();
  RadiusDistribution rho = RadiusDistribution::sup_of_brownian(mc.t, 0.0, mc.d);
  int crossings_brownian = 0, crossings_boolean = 0;
  for (int seed = 0; seed < 30; ++seed) {
    RngStream shared = stream(seed, "couple");
    OccupiedSetSample brownian = sample_occupied_set(mc, shared);
    OccupiedSetSample boolean = sample_boolean(box, mc.lambda, rho, mc.step, shared);
    // Same margin geometry is required for the pathwise coupling.
    REQUIRE(brownian.chains.size() == boolean.chains.size());
    for (std::size_t i = 0; i < brownian.chains.size(); ++i) {
      const auto& path_chain = brownian.chains[i];
      const auto& ball_chain = boolean.chains[i];
      // Identical start and the drawn radius covers the whole path.
      CHECK(path_chain.path.point(0)[0] == ball_chain.path.point(0)[0]);
      double reach = sup_radius(path_chain.path);
      CHECK(reach <= ball_chain.radius + 1e-12);
    }
    double tol = mc.resolved_tol();
    bool cb = crossing_indicator(brownian.chains, box, tol);
    bool cs = crossing_indicator(boolean.chains, box, tol);
    crossings_brownian += cb;
    crossings_boolean += cs;
    if (cb) CHECK(cs);  // containment makes crossing monotone
  }
  CHECK(crossings_boolean >= crossings_brownian);
}

TEST_CASE("monotone coupling: longer time and larger radius only add material") {
  ModelConfig mc = basic_config();
  mc.t = 0.2;
  mc.extents = {6.0, 18.0};
  mc.margin = 20.0;  // pinned so both horizons share one window and cloud
  int crossings_small = 0;
  for (int seed = 0; seed < 25; ++seed) {
    RngStream shared = stream(seed, "growth");
    ModelConfig longer = mc;
    longer.t = 0.4;  // grid-aligned extension of the same paths
    OccupiedSetSample small = sample_occupied_set(mc, shared);
    OccupiedSetSample big = sample_occupied_set(longer, shared);
    REQUIRE(small.chains.size() == big.chains.size());
    for (std::size_t i = 0; i < small.chains.size(); ++i) {
      const auto& p = small.chains[i].path;
      const auto& q = big.chains[i].path;
      REQUIRE(q.count() >= p.count());
      for (int v = 0; v < p.count(); ++v) {
        CHECK(p.point(v)[0] == q.point(v)[0]);
        CHECK(p.point(v)[1] == q.point(v)[1]);
      }
    }
    Box box = mc.crossing_box();
    double tol = mc.resolved_tol();
    bool c_small = crossing_indicator(small.chains, box, tol);
    bool c_big = crossing_indicator(big.chains, box, tol);
    crossings_small += c_small;
    if (c_small) CHECK(c_big);

    auto grown = small.chains;
    for (auto& c : grown) c.radius += 0.3;
    if (c_small) CHECK(crossing_indicator(grown, box, tol));
  }
  CHECK(crossings_small > 0);  // the coupling assertions actually fired
}

TEST_CASE("crossing is monotone under superposition of extra points") {
  ModelConfig mc = basic_config();
  mc.t = 0.2;
  mc.extents = {6.0, 18.0};
  Box box = mc.crossing_box();
  double tol = mc.resolved_tol();
  for (int seed = 0; seed < 20; ++seed) {
    OccupiedSetSample base = sample_occupied_set(mc, stream(seed, "base"));
    OccupiedSetSample extra = sample_occupied_set(mc, stream(seed, "extra"));
    auto merged = base.chains;
    for (auto c : extra.chains) {
      c.id = static_cast<int>(merged.size());
      merged.push_back(std::move(c));
    }
    if (crossing_indicator(base.chains, box, tol))
      CHECK(crossing_indicator(merged, box, tol));
  }
}

TEST_CASE("margin sufficiency: doubling the window rarely flips the indicator") {
  // Restriction coupling: the double-margin cloud restricted to the default
  // ball is exactly the default model's cloud in law.
  ModelConfig mc = basic_config();
  mc.t = 0.2;
  mc.lambda = 0.75;
  mc.extents = {6.0, 18.0};
  Box box = mc.crossing_box();
  double tol = mc.resolved_tol();
  double m = mc.resolved_margin();
  Box big_window = Box::centered_cube(mc.d, 2.0 * m);
  int flips = 0;
  const int reps = 1000;
  RngStream s = stream(40, "margin");
  for (int i = 0; i < reps; ++i) {
    auto big = sample_chain_cloud(big_window, mc.lambda, mc.t, mc.r, mc.step, mc.d,
                                  s.sub("rep", i));
    std::vector<CapsuleChain> small;
    small.reserve(big.size());
    for (const auto& c : big)
      if (sup_norm(c.path.point(0), mc.d) <= m) small.push_back(c);
    bool with_margin = crossing_indicator(small, box, tol);
    bool with_double = crossing_indicator(big, box, tol);
    if (with_margin != with_double) ++flips;
  }
  CHECK(flips <= 1);  // at most the defect fraction of replicas
}

TEST_CASE("edge field: zero intensity closes every edge") {
  EdgeField f = coarse_grain_edges(1.0, 1.0, 0.0, 2, {3, 3}, 0.05, 0.5,
                                   stream(50, "edges"));
  CHECK(f.edges.size() == 12);
  for (const auto& e : f.edges) CHECK(!e.open);
}

TEST_CASE("edge field: site occupancy matches the closed form") {
  // P(N >= 1) = 1 - exp(-lambda (2R)^d) per site.
  const double lambda = 1.0, r_half = 1.0;
  EdgeField f = coarse_grain_edges(r_half, 0.01, lambda, 2, {100, 100}, 0.01, 0.0,
                                   stream(51, "occ"));
  int occupied = 0;
  for (auto n : f.site_count) occupied += n >= 1;
  double p = 1.0 - std::exp(-lambda * 4.0);
  double sigma = std::sqrt(p * (1.0 - p) / f.site_total());
  CHECK(std::abs(double(occupied) / f.site_total() - p) <= 3.0 * sigma);
}

TEST_CASE("edge field: forced overlapping paths open the edge") {
  std::vector<std::uint64_t> counts = {1, 1};
  std::vector<Polyline> paths(2);
  paths[0].dim = 2;
  paths[0].coords = {0.0, 0.0, 1.0, 0.0};
  paths[1].dim = 2;
  paths[1].coords = {2.0, 0.1, 0.5, 0.1};
  auto edges = edges_from_sites(2, {2, 1}, counts, paths, 0.5);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].open);
  // Same geometry, vanished tolerance: paths at distance 0.1 stay closed.
  auto closed = edges_from_sites(2, {2, 1}, counts, paths, 0.05);
  CHECK(!closed[0].open);
}

TEST_CASE("edge field: disjoint edges are uncorrelated") {
  // Window of four sites in a row; edges (0,1) and (2,3) share no site.
  const int reps = 10000;
  int n11 = 0, n1 = 0, n2 = 0;
  RngStream s = stream(52, "dep");
  for (int i = 0; i < reps; ++i) {
    EdgeField f = coarse_grain_edges(1.0, 1.0, 1.0, 2, {4, 1}, 0.05, 0.6,
                                     s.sub("rep", i));
    REQUIRE(f.edges.size() == 3);
    bool a = f.edges[0].open;
    bool b = f.edges[2].open;
    n1 += a;
    n2 += b;
    n11 += a && b;
  }
  double p1 = double(n1) / reps, p2 = double(n2) / reps;
  double cov = double(n11) / reps - p1 * p2;
  double corr = cov / std::sqrt(p1 * (1 - p1) * p2 * (1 - p2));
  CHECK(std::abs(corr) * std::sqrt(double(reps)) <= 3.0);
}

TEST_CASE("slab projection: empty at zero intensity, intensity matches the sum") {
  Box window;
  window.dim = 1;
  window.lo[0] = 0.0;
  window.hi[0] = 8.0;
  PointSet empty = slab_projection_sample(0.0, 1.0, 2, window, 12, stream(60, "slab"));
  CHECK(empty.count() == 0);

  const double lambda = 2.0, t = 1.0;
  const int k_max = 20, reps = 1000;
  SlabIntensity analytic = slab_intensity_sum(t, k_max);
  RngStream s = stream(61, "slab");
  double total = 0.0;
  for (int i = 0; i < reps; ++i)
    total += slab_projection_sample(lambda, t, 2, window, k_max, s.sub("rep", i)).count();
  double expected = lambda * analytic.value * 8.0;
  double z = (total / reps - expected) / std::sqrt(expected / reps);
  CHECK(std::abs(z) <= 3.0);
}

TEST_CASE("slab projection: disjoint cells carry Poisson counts") {
  Box window;
  window.dim = 1;
  window.lo[0] = 0.0;
  window.hi[0] = 8.0;
  const double lambda = 2.0, t = 1.0;
  const int k_max = 20, reps = 500;
  RngStream s = stream(62, "gof");
  std::vector<std::uint64_t> counts;
  for (int i = 0; i < reps; ++i) {
    PointSet ps = slab_projection_sample(lambda, t, 2, window, k_max, s.sub("rep", i));
    std::uint64_t cell[4] = {0, 0, 0, 0};
    for (int p = 0; p < ps.count(); ++p) {
      int c = std::min(3, int(ps.point(p)[0] / 2.0));
      ++cell[c];
    }
    counts.insert(counts.end(), cell, cell + 4);
  }
  double mean = 0.0;
  for (auto c : counts) mean += double(c);
  mean /= counts.size();
  CHECK(poisson_gof_pvalue(counts, mean) >= 0.01);
}

TEST_CASE("slab projection: preconditions") {
  Box window;
  window.dim = 1;
  window.lo[0] = 0.0;
  window.hi[0] = 1.0;
  CHECK_THROWS_AS(slab_projection_sample(1.0, 1.0, 1, window, 5, stream(63, "s")),
                  invalid_parameter);
  CHECK_THROWS_AS(slab_projection_sample(1.0, 1.0, 2, window, 0, stream(63, "s")),
                  invalid_parameter);
  Box wrong = Box::from_extents({1.0, 1.0});
  CHECK_THROWS_AS(slab_projection_sample(1.0, 1.0, 2, wrong, 5, stream(63, "s")),
                  invalid_parameter);
}
