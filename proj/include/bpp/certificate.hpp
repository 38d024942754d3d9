#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpp/stochastic.hpp"

namespace bpp {

namespace detail {

/// Cst * sum_{K >= k_start} K^(d-1) tail(K), Cst = d 4^d, truncated once the
/// terms fall below 1e-16 past their peak. Shared by margins and the
/// boundary bound.
double tail_series_from(const RadiusDistribution& tail, std::int64_t k_start, int d);

}  // namespace detail

/// Result of iterating the finite-box renormalization recursion
///   a_{n+1} = a_n^2 R^{4(d-1)}
///           + 4 c1^2 c3 R^{4(d-1)(n+1)} lambda (3 L_{n+1} N)^d e^{-c2 L_{n+1} N / 6}
/// over the scales L_{n+1} = R^{n+1} L_n. Verdict is pass iff a_n <= 1/L_n
/// for every computed n.
struct CertificateReport {
  int d = 0;
  int scale_ratio = 0;  // R
  std::int64_t l0 = 0;
  std::int64_t n_box = 0;  // N
  double lambda = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double a0 = 0.0;
  int n_max = 0;

  std::vector<std::string> scales;  // L_0..L_n as decimal strings (big ints)
  std::vector<double> bounds;       // a_n rounded to double
  std::vector<std::string> bounds_repr;  // a_n at full working precision

  bool pass = false;
  int fail_at = -1;        // first n with a_n > 1/L_n, when failing
  bool structural_ok = false;  // L0 >= 2 R^(4(d-1)+1)
  int truncated_at = -1;   // depth where scales outgrew the working range
  bool exact_arithmetic = false;  // rational path (c3 == 0)
};

CertificateReport renorm_recursion(int d, int scale_ratio, std::int64_t l0,
                                   std::int64_t n_box, double lambda,
                                   const RadiusDistribution& tail, double c1,
                                   double c2, double c3, double a0, int n_max);

/// Largest admissible crossing probability for the recursion seed:
/// (4 d c1 c4 L0^(d+1))^(-1). A measured crossing CI certifies iff its
/// upper bound stays below this value.
double seed_condition(int d, std::int64_t l0, double c1, double c4);

/// Numeric value of Cst * sum_{K = M-3N}^inf K^(d-1) tail([K, inf)).
double boundary_tail_bound(const RadiusDistribution& tail, std::int64_t m,
                           std::int64_t n, int d);

/// Abstract instance of the cluster-counting lemma: a ground set, pivots,
/// and per pivot a family of at least three disjoint witness sets.
struct CountingInstance {
  std::vector<int> elements;  // S
  std::vector<int> pivots;    // R, subset of S
  std::vector<std::vector<std::vector<int>>> families;  // per pivot
  std::int64_t k = 1;
};

struct CountingCheck {
  bool preconditions_ok = false;
  bool conclusion_ok = false;
  std::string detail;  // first violated condition, empty when all hold
};

/// Verifies the hypotheses (family shape and the pairwise nesting
/// trichotomy) and the conclusion |S| >= K(|R|+2). Violations are reported,
/// not thrown.
CountingCheck counting_lemma_check(const CountingInstance& instance);

}  // namespace bpp
