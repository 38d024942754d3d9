#include "bpp/rng.hpp"

#include <cmath>

namespace bpp {

namespace {

// Knuth's product-of-uniforms method, fine for small means.
std::uint64_t poisson_small(RngStream& s, double mean) {
  double limit = std::exp(-mean);
  double prod = 1.0;
  std::uint64_t k = 0;
  for (;;) {
    prod *= s.next_unit();
    if (prod <= limit) return k;
    ++k;
  }
}

// Hoermann's PTRD transformed-rejection sampler for mean >= 10.
std::uint64_t poisson_ptrd(RngStream& s, double mu) {
  double smu = std::sqrt(mu);
  double b = 0.931 + 2.53 * smu;
  double a = -0.059 + 0.02483 * b;
  double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = s.next_unit() - 0.5;
    double v = s.next_unit();
    double us = 0.5 - std::abs(u);
    double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    double k = kf;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = k * std::log(mu) - mu - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
  }
}

}  // namespace

std::uint64_t RngStream::next_poisson(double mean) {
  if (mean < 0.0) throw invalid_parameter("next_poisson: negative mean");
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_small(*this, mean);
  return poisson_ptrd(*this, mean);
}

}  // namespace bpp
