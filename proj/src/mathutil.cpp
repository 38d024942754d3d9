#include "bpp/mathutil.hpp"

#include <algorithm>
#include <cstddef>

namespace bpp {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw invalid_parameter("normal_quantile: p outside (0,1)");
  // Acklam's coefficients.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

namespace {

struct SimpsonState {
  const std::function<double(double)>* f;
  std::size_t used = 0;
  std::size_t cap = 0;
};

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(SimpsonState& st, double a, double b, double fa, double fm,
             double fb, double whole, double tol) {
  if (++st.used > st.cap)
    throw numeric_failure("integrate_adaptive: subdivision cap exceeded");
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = (*st.f)(lm), frm = (*st.f)(rm);
  double left = simpson(fa, flm, fm, a, m);
  double right = simpson(fm, frm, fb, m, b);
  double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + std::abs(a)))
    return left + right + delta / 15.0;
  return adapt(st, a, m, fa, flm, fm, left, 0.5 * tol) +
         adapt(st, m, b, fm, frm, fb, right, 0.5 * tol);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, std::size_t max_intervals) {
  if (!(b >= a)) throw invalid_parameter("integrate_adaptive: b < a");
  if (a == b) return 0.0;
  SimpsonState st{&f, 0, max_intervals};
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = simpson(fa, fm, fb, a, b);
  return adapt(st, a, b, fa, fm, fb, whole, abs_tol);
}

namespace {

// Series representation of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw invalid_parameter("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double level) {
  if (trials == 0) throw invalid_parameter("wilson_interval: zero trials");
  if (successes > trials) throw invalid_parameter("wilson_interval: successes > trials");
  if (!(level > 0.0 && level < 1.0)) throw invalid_parameter("wilson_interval: bad level");
  double z = normal_quantile(0.5 + 0.5 * level);
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double two_proportion_z(std::uint64_t s1, std::uint64_t n1, std::uint64_t s2,
                        std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw invalid_parameter("two_proportion_z: empty sample");
  double p1 = double(s1) / double(n1), p2 = double(s2) / double(n2);
  double p = double(s1 + s2) / double(n1 + n2);
  double se = std::sqrt(p * (1.0 - p) * (1.0 / double(n1) + 1.0 / double(n2)));
  if (se == 0.0) return 0.0;  // identical degenerate samples
  return (p1 - p2) / se;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw invalid_parameter("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

double ks_threshold(std::size_t n, std::size_t m, double alpha) {
  // c(alpha) = sqrt(-ln(alpha/2)/2), asymptotic two-sample form.
  double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(double(n + m) / (double(n) * double(m)));
}

double poisson_gof_pvalue(const std::vector<std::uint64_t>& counts, double mean) {
  if (counts.empty()) throw invalid_parameter("poisson_gof_pvalue: no counts");
  std::uint64_t kmax = 0;
  for (auto k : counts) kmax = std::max(kmax, k);
  double n = static_cast<double>(counts.size());
  // Expected frequencies; pool the upper tail so each bin has >= 5 expected.
  std::vector<double> expected;
  std::vector<double> observed;
  double pmf = std::exp(-mean);
  double cum = 0.0;
  std::vector<std::uint64_t> hist(kmax + 1, 0);
  for (auto k : counts) ++hist[k];
  std::uint64_t k = 0;
  double exp_acc = 0.0, obs_acc = 0.0;
  for (; k <= kmax; ++k) {
    exp_acc += n * pmf;
    obs_acc += hist[k];
    cum += pmf;
    pmf *= mean / double(k + 1);
    if (exp_acc >= 5.0) {
      expected.push_back(exp_acc);
      observed.push_back(obs_acc);
      exp_acc = obs_acc = 0.0;
    }
  }
  exp_acc += n * (1.0 - cum);  // everything beyond kmax
  if (!expected.empty()) {
    expected.back() += exp_acc;
    observed.back() += obs_acc;
  } else {
    expected.push_back(exp_acc + 1e-12);
    observed.push_back(obs_acc);
  }
  if (expected.size() < 2) return 1.0;  // too little resolution to reject
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    double diff = observed[i] - expected[i];
    chi2 += diff * diff / expected[i];
  }
  double dof = double(expected.size()) - 2.0;  // mean was estimated
  if (dof < 1.0) dof = 1.0;
  return chi2_sf(chi2, dof);
}

double normal_gof_pvalue(const std::vector<double>& samples, double sigma,
                         int bins) {
  if (samples.empty() || bins < 2) throw invalid_parameter("normal_gof_pvalue: bad input");
  std::vector<double> edges(bins - 1);
  for (int i = 1; i < bins; ++i)
    edges[i - 1] = sigma * normal_quantile(double(i) / bins);
  std::vector<double> observed(bins, 0.0);
  for (double x : samples) {
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    ++observed[it - edges.begin()];
  }
  double expected = double(samples.size()) / bins;
  double chi2 = 0.0;
  for (double o : observed) chi2 += (o - expected) * (o - expected) / expected;
  return chi2_sf(chi2, double(bins - 1));
}

}  // namespace bpp
