#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpp/mathutil.hpp"
#include "bpp/stochastic.hpp"

using namespace bpp;

namespace {

RngStream stream(std::uint64_t seed, const char* tag) {
  return derive_stream(seed, {{tag, 0}});
}

}  // namespace

TEST_CASE("poisson cloud: zero intensity gives an empty set") {
  Box w = Box::from_extents({1.0, 1.0});
  PointSet ps = sample_poisson_points(w, 0.0, stream(1, "p"));
  CHECK(ps.count() == 0);
}

TEST_CASE("poisson cloud: mean count matches lambda * volume") {
  Box w = Box::from_extents({1.0, 1.0});
  RngStream s = stream(2, "p");
  double total = 0.0;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i)
    total += sample_poisson_points(w, 5.0, s.sub("rep", i)).count();
  double mean = total / reps;
  CHECK(std::abs(mean - 5.0) < 3.0 * std::sqrt(5.0 / reps));
}

TEST_CASE("poisson cloud: same stream reproduces the same set") {
  Box w = Box::from_extents({2.0, 3.0});
  PointSet a = sample_poisson_points(w, 3.0, stream(3, "p"));
  PointSet b = sample_poisson_points(w, 3.0, stream(3, "p"));
  REQUIRE(a.count() == b.count());
  CHECK(a.coords == b.coords);
  for (int i = 0; i < a.count(); ++i) CHECK(w.contains(a.point(i)));
}

TEST_CASE("poisson cloud: invalid parameters are rejected") {
  Box w = Box::from_extents({1.0});
  CHECK_THROWS_AS(sample_poisson_points(w, -1.0, stream(1, "p")), invalid_parameter);
  Box bad;
  bad.dim = 1;
  CHECK_THROWS_AS(sample_poisson_points(bad, 1.0, stream(1, "p")), invalid_parameter);
}

TEST_CASE("brownian path: zero horizon is a single point") {
  double start[2] = {0.5, -1.0};
  Polyline p = sample_brownian_path(start, 2, 0.0, 0.01, stream(4, "b"));
  REQUIRE(p.count() == 1);
  CHECK(p.point(0)[0] == 0.5);
  CHECK(p.point(0)[1] == -1.0);
}

TEST_CASE("brownian path: grid arithmetic gives 101 vertices") {
  double start[2] = {0.0, 0.0};
  Polyline p = sample_brownian_path(start, 2, 1.0, 0.01, stream(5, "b"));
  CHECK(p.count() == 101);
}

TEST_CASE("brownian path: residual step completes the horizon") {
  double start[1] = {0.0};
  Polyline p = sample_brownian_path(start, 1, 0.25, 0.1, stream(6, "b"));
  CHECK(p.count() == 1 + 3);  // steps at 0.1, 0.2, 0.25
}

TEST_CASE("brownian path: terminal variance matches the horizon") {
  double start[1] = {0.0};
  RngStream s = stream(7, "b");
  const int reps = 10000;
  double sumsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Polyline p = sample_brownian_path(start, 1, 1.0, 0.01, s.sub("rep", i));
    double x = p.point(p.count() - 1)[0];
    sumsq += x * x;
  }
  CHECK(std::abs(sumsq / reps - 1.0) < 0.05);
}

TEST_CASE("brownian path: increments pass a normality test") {
  double start[1] = {0.0};
  Polyline p = sample_brownian_path(start, 1, 100.0, 0.01, stream(8, "b"));
  std::vector<double> incr;
  for (int i = 1; i < std::min(p.count(), 10001); ++i)
    incr.push_back(p.point(i)[0] - p.point(i - 1)[0]);
  CHECK(normal_gof_pvalue(incr, std::sqrt(0.01)) >= 0.01);
}

TEST_CASE("brownian path: invalid step is rejected") {
  double start[1] = {0.0};
  CHECK_THROWS_AS(sample_brownian_path(start, 1, 1.0, 0.0, stream(9, "b")),
                  invalid_parameter);
  CHECK_THROWS_AS(sample_brownian_path(start, 1, -1.0, 0.1, stream(9, "b")),
                  invalid_parameter);
}

TEST_CASE("bridge: terminal vertex is pinned bit-for-bit") {
  double a[2] = {1.0, 2.0};
  double b[2] = {-0.25, 7.5};
  for (int rep = 0; rep < 10; ++rep) {
    Polyline w = sample_brownian_bridge(a, b, 2, 1.0, 0.03, stream(rep, "w"));
    const double* last = w.point(w.count() - 1);
    CHECK(last[0] == b[0]);
    CHECK(last[1] == b[1]);
    CHECK(w.point(0)[0] == a[0]);
  }
}

TEST_CASE("bridge: centered pinning keeps the mean at zero") {
  double z[1] = {0.0};
  RngStream s = stream(21, "w");
  const int reps = 10000;
  double sum = 0.0;
  for (int i = 0; i < reps; ++i) {
    Polyline w = sample_brownian_bridge(z, z, 1, 1.0, 0.05, s.sub("rep", i));
    sum += w.point(w.count() / 2)[0];
  }
  // Var(W_1/2) = 1/4, so the mean of 1e4 draws has sd 0.005.
  CHECK(std::abs(sum / reps) < 4.0 * 0.005);
}

TEST_CASE("bridge: midpoint variance matches s(1 - s/delta)") {
  double z[1] = {0.0};
  RngStream s = stream(22, "w");
  const int reps = 10000;
  double sumsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Polyline w = sample_brownian_bridge(z, z, 1, 1.0, 0.01, s.sub("rep", i));
    double x = w.point(50)[0];  // time 0.5
    sumsq += x * x;
  }
  CHECK(std::abs(sumsq / reps - 0.25) < 0.05 * 0.25);
}

TEST_CASE("bridge: invalid parameters are rejected") {
  double z[1] = {0.0};
  CHECK_THROWS_AS(sample_brownian_bridge(z, z, 1, 0.0, 0.01, stream(1, "w")),
                  invalid_parameter);
  CHECK_THROWS_AS(sample_brownian_bridge(z, z, 1, 1.0, 2.0, stream(1, "w")),
                  invalid_parameter);
}

TEST_CASE("halfline hitting probability: closed form and edge cases") {
  CHECK(hitting_probability_halfline(0.0, 1.0) == 1.0);
  CHECK(hitting_probability_halfline(1.0, 1.0) ==
        doctest::Approx(0.31731).epsilon(1e-5 / 0.31731));
  CHECK(hitting_probability_halfline(1.0, 0.0) == 0.0);
  CHECK(hitting_probability_halfline(1.0, 1e-12) < 1e-15);
  CHECK_THROWS_AS(hitting_probability_halfline(-1.0, 1.0), invalid_parameter);
  CHECK_THROWS_AS(hitting_probability_halfline(1.0, -1.0), invalid_parameter);
}

TEST_CASE("slab intensity: exact lower bound at t = 2 pi") {
  SlabIntensity si = slab_intensity_sum(2.0 * kPi, 40);
  CHECK(si.lower_bound == 1.0);
  CHECK(si.value >= 1.0);
}

TEST_CASE("slab intensity: lower bound holds across the time grid") {
  for (double t : {1.0, 4.0, 25.0}) {
    int k_max = static_cast<int>(std::ceil(10.0 * std::sqrt(t))) + 10;
    SlabIntensity si = slab_intensity_sum(t, k_max);
    CHECK(si.value >= si.lower_bound);
  }
}

TEST_CASE("slab intensity: per-slab masses decrease with distance") {
  double t = 3.0;
  double prev = 2.0;
  for (int k = 1; k <= 12; ++k) {
    double pk = integrate_adaptive(
        [t](double z) { return hitting_probability_halfline(z, t); }, k - 1.0,
        double(k));
    CHECK(pk <= prev + 1e-12);
    prev = pk;
  }
}

TEST_CASE("slab intensity: vanishes with the horizon") {
  SlabIntensity si = slab_intensity_sum(1e-6, 5);
  CHECK(si.value < 1e-3);
}

TEST_CASE("slab intensity: analytic sum matches simulated suprema") {
  // Sum over all slabs equals E[sup B] for the full half-space; compare the
  // truncated sum against discretized Monte Carlo suprema.
  double t = 2.0 * kPi;
  SlabIntensity si = slab_intensity_sum(t, 60);
  RngStream s = stream(23, "sup");
  double start[1] = {0.0};
  const int reps = 4000;
  double acc = 0.0;
  for (int i = 0; i < reps; ++i) {
    Polyline p = sample_brownian_path(start, 1, t, 0.01, s.sub("rep", i));
    double m = 0.0;
    for (int v = 0; v < p.count(); ++v) m = std::max(m, p.point(v)[0]);
    acc += m;
  }
  double mc = acc / reps;  // discretization biases this down slightly
  CHECK(si.value >= mc - 0.05);
  CHECK(std::abs(si.value - mc) < 0.05 * si.value + 0.1);
}

TEST_CASE("sup radius: degenerate and straight paths") {
  Polyline p;
  p.dim = 2;
  p.coords = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(sup_radius(p) == 0.0);
  Polyline q;
  q.dim = 2;
  q.coords = {0.0, 0.0, 1.5, 2.0, 3.0, 4.0};
  CHECK(sup_radius(q) == 5.0);
  Polyline empty;
  empty.dim = 2;
  CHECK_THROWS_AS(sup_radius(empty), invalid_parameter);
}

TEST_CASE("sup radius: reflection tail bound dominates the empirical tail") {
  // P(sup |B| >= 2) <= (4/2) sqrt(1/(2 pi)) e^{-2} for t = 1.
  const double bound = 2.0 * std::sqrt(1.0 / (2.0 * kPi)) * std::exp(-2.0);
  RngStream s = stream(24, "refl");
  double start[1] = {0.0};
  const int reps = 10000;
  int hits = 0;
  for (int i = 0; i < reps; ++i) {
    Polyline p = sample_brownian_path(start, 1, 1.0, 0.001, s.sub("rep", i));
    if (sup_radius(p) >= 2.0) ++hits;
  }
  double emp = double(hits) / reps;
  double sigma = std::sqrt(bound * (1.0 - bound) / reps);
  CHECK(emp <= bound + 3.0 * sigma);
}

TEST_CASE("one-sided sup law: refinement moves the estimate onto the cdf") {
  const double analytic = 2.0 * normal_sf(1.0);  // P(sup_{[0,1]} B >= 1)
  double start[1] = {0.0};
  auto estimate = [&](double step, const char* tag) {
    RngStream s = stream(25, tag);
    const int reps = 10000;
    int hits = 0;
    for (int i = 0; i < reps; ++i) {
      Polyline p = sample_brownian_path(start, 1, 1.0, step, s.sub("rep", i));
      double m = 0.0;
      for (int v = 0; v < p.count(); ++v) m = std::max(m, p.point(v)[0]);
      if (m >= 1.0) ++hits;
    }
    return double(hits) / reps;
  };
  double coarse = estimate(0.01, "coarse");
  double fine = estimate(0.0025, "fine");
  double sigma = std::sqrt(analytic * (1.0 - analytic) / 10000.0);
  CHECK(fine >= coarse - 2.0 * sigma);  // discretization only loses suprema
  CHECK(std::abs(fine - analytic) <= 3.0 * sigma + 0.01);
  CHECK(std::abs(fine - analytic) <= std::abs(coarse - analytic) + 2.0 * sigma);
}

TEST_CASE("radius moment bound: small-time limit is the cut term") {
  CHECK(radius_moment_bound(1e-9, 2, 0.1) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("radius moment bound: dominates the cut and grows with t") {
  double prev = 0.0;
  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    double v = radius_moment_bound(t, 2, 0.1);
    CHECK(v >= 0.01);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("radius moment bound: dominates the Monte Carlo moment") {
  double bound = radius_moment_bound(1.0, 2, 0.1);
  RngStream s = stream(26, "mom");
  double start[2] = {0.0, 0.0};
  const int reps = 2000;
  double acc = 0.0;
  for (int i = 0; i < reps; ++i) {
    Polyline p = sample_brownian_path(start, 2, 1.0, 0.005, s.sub("rep", i));
    double r = sup_radius(p);
    acc += r * r;
  }
  CHECK(bound > acc / reps);
}

TEST_CASE("radius moment bound: invalid inputs are rejected") {
  CHECK_THROWS_AS(radius_moment_bound(0.0, 2, 0.1), invalid_parameter);
  CHECK_THROWS_AS(radius_moment_bound(1.0, 2, 0.0), invalid_parameter);
}

TEST_CASE("safe intensity: arithmetic and homogeneity") {
  CHECK(gouere_safe_intensity(2.0, 1.0) == 0.5);
  CHECK(gouere_safe_intensity(4.0, 1.0) == 0.25);  // doubling the moment halves it
  CHECK(gouere_safe_intensity(1e12, 1.0) < 1e-11);
  CHECK_THROWS_AS(gouere_safe_intensity(0.0, 1.0), invalid_parameter);
  CHECK_THROWS_AS(gouere_safe_intensity(1.0, -2.0), invalid_parameter);
}

TEST_CASE("radius law: tails and samples agree") {
  RadiusDistribution det = RadiusDistribution::deterministic(1.0);
  CHECK(det.tail(0.5) == 1.0);
  CHECK(det.tail(1.0) == 1.0);
  CHECK(det.tail(1.01) == 0.0);
  CHECK(det.bounded_support());
  CHECK(det.support_bound() == 1.0);

  RadiusDistribution emp = RadiusDistribution::empirical({1.0, 1.0, 1.0});
  RngStream s = stream(27, "emp");
  for (int i = 0; i < 20; ++i) CHECK(emp.sample(s, 0.01) == 1.0);

  RadiusDistribution expo = RadiusDistribution::exponential_tail(1.0, 1.0);
  CHECK(!expo.bounded_support());
  RngStream se = stream(28, "expo");
  const int reps = 10000;
  for (double x : {1.5, 2.5, 4.0}) {
    int hits = 0;
    RngStream sx = se.sub("x", std::uint64_t(x * 10));
    for (int i = 0; i < reps; ++i)
      if (expo.sample(sx, 0.01) >= x) ++hits;
    double p = std::exp(-x);
    CHECK(std::abs(double(hits) / reps - p) < 3.0 * std::sqrt(p * (1 - p) / reps));
  }

  RadiusDistribution sup = RadiusDistribution::sup_of_brownian(1.0, 0.5, 2);
  RngStream ss = stream(29, "sup");
  int exceed = 0;
  for (int i = 0; i < reps; ++i)
    if (sup.sample(ss, 0.01) >= 2.0) ++exceed;
  double emp_tail = double(exceed) / reps;
  CHECK(emp_tail <= sup.tail(2.0) + 3.0 * std::sqrt(0.25 / reps));
}
