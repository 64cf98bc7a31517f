#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace npmle {

/// One splitmix64 scrambling step.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and up to two tags.
/// Used for per-replicate and per-restart generators so that streams never
/// overlap and the derivation is order-insensitive to unrelated work.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

/// Deterministic generator with every transform spelled out, so sequences are
/// identical across standard libraries.  std::mt19937_64 supplies raw bits;
/// nothing implementation-defined (distribution objects) is used on top.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform on (0, 1].
  double uniform() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached spare,
  /// so the consumed-stream length per call is fixed.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Exp(1).
  double exponential() { return -std::log(uniform()); }

  /// Uniform integer in [0, n) by rejection, exactly unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace npmle
