#include "bpp/certificate.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <set>
#include <sstream>

namespace bpp {

namespace mp = boost::multiprecision;
using BigInt = mp::cpp_int;
using BigFloat = mp::number<mp::cpp_bin_float<100>>;  // ~332 bits
using BigRational = mp::cpp_rational;

namespace detail {

double tail_series_from(const RadiusDistribution& tail, std::int64_t k_start, int d) {
  if (d < 1) throw invalid_parameter("tail_series_from: bad dimension");
  const double cst = double(d) * std::pow(4.0, double(d));
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  const std::int64_t cap = 10000000;
  for (std::int64_t k = std::max<std::int64_t>(1, k_start);; ++k) {
    double term = std::pow(double(k), double(d - 1)) * tail.tail(double(k));
    sum += term;
    if (term < 1e-16 && term <= prev) break;
    if (k - k_start > cap)
      throw invalid_parameter("tail_series_from: series does not converge");
    prev = term;
  }
  return cst * sum;
}

}  // namespace detail

double boundary_tail_bound(const RadiusDistribution& tail, std::int64_t m,
                           std::int64_t n, int d) {
  if (n < 1 || m < 1) throw invalid_parameter("boundary_tail_bound: bad M or N");
  return detail::tail_series_from(tail, std::max<std::int64_t>(1, m - 3 * n), d);
}

double seed_condition(int d, std::int64_t l0, double c1, double c4) {
  if (d < 1 || l0 < 1 || !(c1 > 0.0) || !(c4 > 0.0))
    throw invalid_parameter("seed_condition: inputs must be positive");
  BigFloat denom = 4.0 * double(d) * c1 * c4;
  BigFloat l0f(l0);
  denom *= mp::pow(l0f, d + 1);
  return static_cast<double>(BigFloat(1) / denom);
}

namespace {

BigInt ipow(BigInt base, int e) {
  BigInt out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

template <class Real>
Real from_double(double x);

template <>
BigFloat from_double<BigFloat>(double x) {
  return BigFloat(x);
}
template <>
BigRational from_double<BigRational>(double x) {
  return BigRational(x);  // exact binary rational
}

template <class Real>
std::string repr(const Real& x) {
  std::ostringstream os;
  os.precision(30);
  os << static_cast<BigFloat>(x);
  return os.str();
}

// a <= 1/L exactly.
bool bound_ok(const BigRational& a, const BigInt& l) {
  return a * BigRational(l) <= 1;
}
bool bound_ok(const BigFloat& a, const BigInt& l) {
  return a * BigFloat(l) <= 1;
}

template <class Real>
void iterate_recursion(CertificateReport& rep, const BigInt& l0_big, double lambda,
                       double c1, double c2, double c3, double a0, int n_max) {
  const int d = rep.d;
  const BigInt r(rep.scale_ratio);
  const BigInt n_box(rep.n_box);
  const Real growth = from_double<Real>(std::pow(double(rep.scale_ratio), 4.0 * (d - 1)));

  BigInt l_n = l0_big;
  Real a_n = from_double<Real>(a0);
  rep.pass = true;
  for (int n = 0;; ++n) {
    rep.scales.push_back(l_n.str());
    rep.bounds.push_back(static_cast<double>(static_cast<BigFloat>(a_n)));
    rep.bounds_repr.push_back(repr(a_n));
    if (!bound_ok(a_n, l_n)) {
      rep.pass = false;
      rep.fail_at = n;
      return;
    }
    if (n == n_max) return;
    if (mp::msb(l_n) > 200000) {  // scales grow super-exponentially
      rep.truncated_at = n;
      return;
    }
    BigInt l_next = ipow(r, n + 1) * l_n;
    Real term1 = a_n * a_n * growth;
    Real term2 = from_double<Real>(0.0);
    if (c3 != 0.0) {
      // Only the high-precision float path reaches here; the exponential
      // factor is irrational.
      BigFloat ln_n1(l_next * n_box);
      BigFloat expo = mp::exp(BigFloat(-c2 / 6.0) * ln_n1);
      BigFloat poly = mp::pow(BigFloat(3) * ln_n1, d);
      BigFloat rpow = mp::pow(BigFloat(rep.scale_ratio), 4 * (d - 1) * (n + 1));
      BigFloat t2 = BigFloat(4.0 * c1 * c1 * c3 * lambda) * rpow * poly * expo;
      term2 = from_double<Real>(static_cast<double>(t2));
      if constexpr (std::is_same_v<Real, BigFloat>) term2 = Real(t2);
    }
    a_n = term1 + term2;
    l_n = l_next;
  }
}

}  // namespace

CertificateReport renorm_recursion(int d, int scale_ratio, std::int64_t l0,
                                   std::int64_t n_box, double lambda,
                                   const RadiusDistribution& tail, double c1,
                                   double c2, double c3, double a0, int n_max) {
  if (d < 1) throw invalid_parameter("renorm_recursion: bad dimension");
  if (scale_ratio <= 1) throw invalid_parameter("renorm_recursion: R must exceed 1");
  if (l0 <= 1) throw invalid_parameter("renorm_recursion: L0 must exceed 1");
  if (n_box < 1) throw invalid_parameter("renorm_recursion: N must be positive");
  if (!(lambda >= 0.0) || !(c1 > 0.0) || !(c2 > 0.0) || c3 < 0.0)
    throw invalid_parameter("renorm_recursion: constants must be positive");
  if (!(a0 >= 0.0 && a0 <= 1.0)) throw invalid_parameter("renorm_recursion: a0 outside [0,1]");
  if (n_max < 0) throw invalid_parameter("renorm_recursion: negative depth");
  if (tail.kind == RadiusDistribution::Kind::ExponentialTail && c3 != 0.0 &&
      !(tail.tail_c > 0.0))
    throw invalid_parameter("renorm_recursion: tail constants must be positive");

  CertificateReport rep;
  rep.d = d;
  rep.scale_ratio = scale_ratio;
  rep.l0 = l0;
  rep.n_box = n_box;
  rep.lambda = lambda;
  rep.c1 = c1;
  rep.c2 = c2;
  rep.c3 = c3;
  rep.a0 = a0;
  rep.n_max = n_max;

  BigInt l0_big(l0);
  rep.structural_ok = l0_big >= 2 * ipow(BigInt(scale_ratio), 4 * (d - 1) + 1);
  rep.exact_arithmetic = (c3 == 0.0);
  if (rep.exact_arithmetic)
    iterate_recursion<BigRational>(rep, l0_big, lambda, c1, c2, c3, a0, n_max);
  else
    iterate_recursion<BigFloat>(rep, l0_big, lambda, c1, c2, c3, a0, n_max);
  return rep;
}

namespace {

bool is_subset(const std::set<int>& a, const std::set<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool disjoint(const std::set<int>& a, const std::set<int>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else return false;
  }
  return true;
}

std::set<int> with(std::set<int> s, int x) {
  s.insert(x);
  return s;
}

std::set<int> minus(const std::set<int>& s, const std::set<int>& t) {
  std::set<int> out;
  for (int x : s)
    if (!t.count(x)) out.insert(x);
  return out;
}

}  // namespace

CountingCheck counting_lemma_check(const CountingInstance& instance) {
  CountingCheck out;
  out.preconditions_ok = true;

  std::set<int> ground(instance.elements.begin(), instance.elements.end());
  std::set<int> pivots(instance.pivots.begin(), instance.pivots.end());
  auto fail = [&](const std::string& why) {
    out.preconditions_ok = false;
    if (out.detail.empty()) out.detail = why;
  };

  if (instance.k < 1) fail("K must be a positive integer");
  if (pivots.empty()) fail("pivot set R is empty");
  if (!is_subset(pivots, ground)) fail("R is not a subset of S");
  if (instance.families.size() != instance.pivots.size())
    fail("one family required per pivot");

  // Union C_z per pivot, validated along the way.
  std::vector<std::set<int>> unions(instance.pivots.size());
  std::vector<std::vector<std::set<int>>> parts(instance.pivots.size());
  for (std::size_t zi = 0;
       zi < instance.pivots.size() && zi < instance.families.size(); ++zi) {
    int z = instance.pivots[zi];
    const auto& family = instance.families[zi];
    if (family.size() < 3) fail("family with fewer than 3 witness sets");
    for (const auto& part_vec : family) {
      std::set<int> part(part_vec.begin(), part_vec.end());
      if (part.empty()) fail("empty witness set");
      if (static_cast<std::int64_t>(part.size()) < instance.k)
        fail("witness set smaller than K");
      if (part.count(z)) fail("witness set contains its own pivot");
      if (!is_subset(part, ground)) fail("witness set not inside S");
      for (const auto& other : parts[zi])
        if (!disjoint(part, other)) fail("witness sets overlap within a family");
      parts[zi].push_back(part);
      unions[zi].insert(part.begin(), part.end());
    }
  }

  // Pairwise trichotomy (disjointness or one of the nesting cases).
  for (std::size_t i = 0; out.preconditions_ok && i < instance.pivots.size(); ++i) {
    for (std::size_t j = i + 1; j < instance.pivots.size(); ++j) {
      int z = instance.pivots[i], zp = instance.pivots[j];
      std::set<int> czf = with(unions[i], z);
      std::set<int> czpf = with(unions[j], zp);
      bool ok = disjoint(czf, czpf);  // (i)
      if (!ok) {                      // (ii)
        for (std::size_t a = 0; a < parts[i].size() && !ok; ++a)
          for (std::size_t b = 0; b < parts[j].size() && !ok; ++b)
            ok = is_subset(with(minus(unions[j], parts[j][b]), zp), parts[i][a]) &&
                 is_subset(with(minus(unions[i], parts[i][a]), z), parts[j][b]);
      }
      for (std::size_t a = 0; a < parts[i].size() && !ok; ++a)  // (iii)
        ok = is_subset(czpf, parts[i][a]);
      for (std::size_t b = 0; b < parts[j].size() && !ok; ++b)  // (iv)
        ok = is_subset(czf, parts[j][b]);
      if (!ok) {
        out.preconditions_ok = false;
        if (out.detail.empty())
          out.detail = "pivot pair outside all nesting cases";
      }
    }
  }

  out.conclusion_ok = static_cast<std::int64_t>(ground.size()) >=
                      instance.k * static_cast<std::int64_t>(pivots.size() + 2);
  return out;
}

}  // namespace bpp
