// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nerfgan {

/// Deterministic random stream (xoshiro256++ core, splitmix64 seeding).
/// All randomness in the project flows through RngStream so that runs are
/// bit-reproducible across platforms; std:: distributions are avoided on
/// purpose since their output is implementation-defined.
class RngStream {
 public:
  RngStream() : RngStream(0) {}

  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller. Stateless (no cached spare) so the
  /// stream state alone fully determines future draws.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free multiply-shift; bias is negligible for n << 2^64 and,
    // more importantly, the mapping is deterministic.
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Child stream keyed by `salt`; does not advance this stream.
  RngStream derive(std::uint64_t salt) const {
    std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
    x ^= state_[2] + 0xbf58476d1ce4e5b9ULL;
    RngStream child;
    for (auto& s : child.state_) s = splitmix64(x);
    return child;
  }

  std::string serialize() const {
    char buf[4 * 16 + 4];
    char* p = buf;
    for (int i = 0; i < 4; ++i) {
      if (i) *p++ = ':';
      for (int nib = 15; nib >= 0; --nib)
        *p++ = "0123456789abcdef"[(state_[i] >> (4 * nib)) & 0xf];
    }
    return std::string(buf, p);
  }

  static RngStream deserialize(const std::string& text) {
    RngStream r;
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
      if (i) {
        if (pos >= text.size() || text[pos] != ':')
          throw std::runtime_error("RngStream: malformed state string");
        ++pos;
      }
      std::uint64_t v = 0;
      for (int nib = 0; nib < 16; ++nib, ++pos) {
        if (pos >= text.size()) throw std::runtime_error("RngStream: truncated state string");
        const char c = text[pos];
        std::uint64_t d;
        if (c >= '0' && c <= '9') d = static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') d = static_cast<std::uint64_t>(c - 'a' + 10);
        else throw std::runtime_error("RngStream: bad hex digit in state string");
        v = (v << 4) | d;
      }
      r.state_[i] = v;
    }
    return r;
  }

  bool operator==(const RngStream& o) const { return state_ == o.state_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace nerfgan
