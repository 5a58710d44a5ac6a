#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gcl {

// Counter-based 64-bit generator (splitmix64 output function over a
// seed-keyed counter). State is just (seed, pos), so a stream can be
// derived, copied, or replayed cheaply. No OS entropy anywhere: the same
// seed and call sequence produce bit-identical output on every platform.
class RngState {
 public:
  RngState() : seed_(0), pos_(0) {}
  explicit RngState(std::uint64_t seed) : seed_(seed), pos_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return pos_; }

  std::uint64_t next_u64() {
    ++pos_;
    return mix64(seed_ + pos_ * kGolden);
  }

  // Uniform on [0,1), 53-bit mantissa.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform01_open_low() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Each call consumes two uniforms; the
  // sine twin is discarded so the draw count per call is fixed.
  double normal() {
    double u1 = uniform01_open_low();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Both Box-Muller outputs; used by bulk fills.
  void normal_pair(double& z0, double& z1) {
    double u1 = uniform01_open_low();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(2.0 * kPi * u2);
    z1 = r * std::sin(2.0 * kPi * u2);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngState::below: n must be positive");
    // Rejection-free multiply-shift would bias for huge n; Lemire with
    // rejection keeps it exact.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t l = static_cast<std::uint64_t>(m);
    if (l < n) {
      std::uint64_t t = -n % n;
      while (l < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        l = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Independent child stream keyed by `tag`. Derivation does not advance
  // this stream, so derive(k) is stable no matter how much the parent has
  // been used. Distinct (seed, tag) pairs map to decorrelated child seeds.
  RngState derive(std::uint64_t tag) const {
    std::uint64_t child = mix64(mix64(seed_ ^ (tag * kGolden)) + kSplitConst + tag);
    return RngState(child);
  }

  // Child stream that consumes one draw from this stream.
  RngState split() { return RngState(mix64(next_u64() + kSplitConst)); }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSplitConst = 0x632be59bd9b4e019ULL;
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  std::uint64_t seed_;
  std::uint64_t pos_;
};

// Sample k distinct indices from [0, n), ascending order.
inline std::vector<int> sample_without_replacement(RngState& rng, int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: bad k");
  // Floyd's algorithm; result sorted afterwards for determinism.
  std::vector<int> out;
  out.reserve(k);
  std::vector<bool> taken(n, false);
  for (int j = n - k; j < n; ++j) {
    int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
    if (taken[t]) t = j;
    taken[t] = true;
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gcl
