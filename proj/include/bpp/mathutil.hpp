#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "bpp/errors.hpp"

namespace bpp {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal upper tail P(Z >= x).
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step; absolute error well below 1e-14 on (0,1)).
double normal_quantile(double p);

/// Adaptive Simpson quadrature on [a,b] with absolute tolerance.
/// Throws numeric_failure when the subdivision cap is exceeded.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-8,
                          std::size_t max_intervals = 1000000);

/// Regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
double gamma_q(double a, double x);

/// Survival function of the chi-square distribution with k dof.
inline double chi2_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

/// Wilson score interval for a Bernoulli proportion.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double level);

/// Two-proportion pooled z statistic; |z| beyond the (1-alpha/2) normal
/// quantile rejects equality.
double two_proportion_z(std::uint64_t s1, std::uint64_t n1, std::uint64_t s2,
                        std::uint64_t n2);

/// Two-sample Kolmogorov-Smirnov: returns the KS statistic D.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// KS rejection threshold at significance alpha for sample sizes n, m.
double ks_threshold(std::size_t n, std::size_t m, double alpha);

/// Chi-square goodness-of-fit p-value for observed integer counts against a
/// Poisson law with the given mean (tail bins pooled so expected >= 5).
double poisson_gof_pvalue(const std::vector<std::uint64_t>& counts, double mean);

/// Chi-square normality p-value for samples against N(0, sigma^2), using
/// equal-probability bins.
double normal_gof_pvalue(const std::vector<double>& samples, double sigma,
                         int bins = 20);

}  // namespace bpp
