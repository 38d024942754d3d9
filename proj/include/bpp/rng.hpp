#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpp/errors.hpp"

namespace bpp {

/// Identifier of the stream algorithm, echoed into run metadata so that
/// every reported number names the generator that produced it.
inline constexpr const char* kRngAlgorithm = "splitmix64-label/v1";

namespace detail {

// 64-bit finalizer (Stafford mix13). Bijective, good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t hash_bytes(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {  // FNV-1a fold, then mixed by the caller
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// A counter-based random stream: the i-th raw output is
/// mix64(key + (i+1)*golden). Pure value type; copying forks the state,
/// deriving a child with a fresh label decorrelates it. Identical
/// (master_seed, label path) always reproduces the identical sequence,
/// independent of thread scheduling.
class RngStream {
 public:
  RngStream() = default;

  /// Child stream for a named substream, e.g. sub("replica", i).
  RngStream sub(std::string_view name, std::uint64_t index) const {
    RngStream s;
    s.key_ = derive_key(key_, name, index);
    return s;
  }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(key_ + counter_);
  }

  /// Uniform in the open interval (0,1); never returns 0 or 1.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  /// Poisson(mean) count; exact (Knuth for small means, PTRD for large).
  std::uint64_t next_poisson(double mean);

  std::uint64_t key() const { return key_; }

  static std::uint64_t derive_key(std::uint64_t parent, std::string_view name,
                                  std::uint64_t index) {
    std::uint64_t h = detail::hash_bytes(0xcbf29ce484222325ULL, name);
    h = detail::mix64(h ^ parent);
    h = detail::mix64(h + detail::mix64(index ^ 0x517cc1b727220a95ULL));
    return h;
  }

 private:
  friend RngStream derive_stream(
      std::uint64_t, const std::vector<std::pair<std::string, std::uint64_t>>&);

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Builds the stream identified by (master_seed, labels). The labels are
/// folded left to right, so derive_stream(s, {a, b}) equals
/// derive_stream(s, {a}).sub(b).
inline RngStream derive_stream(
    std::uint64_t master_seed,
    const std::vector<std::pair<std::string, std::uint64_t>>& labels) {
  if (labels.empty()) throw invalid_parameter("derive_stream: empty label path");
  RngStream s;
  s.key_ = detail::mix64(master_seed ^ 0x2545f4914f6cdd1dULL);
  for (const auto& [name, index] : labels) s = s.sub(name, index);
  return s;
}

}  // namespace bpp
