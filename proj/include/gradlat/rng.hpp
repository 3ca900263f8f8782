#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gradlat {

// xoshiro256++ (Blackman & Vigna). Chosen over std::mt19937_64 because the
// whole state is four words, which keeps binary checkpoints fixed-width.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  Xoshiro256pp() : Xoshiro256pp(0x9e3779b97f4a7c15ULL) {}
  explicit Xoshiro256pp(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the full state.
    for (auto& w : state_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
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

  const std::array<std::uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

  // Independent stream for worker `index`, derived from this generator's
  // current state without advancing it.
  Xoshiro256pp split(std::uint64_t index) const {
    Xoshiro256pp child;
    std::uint64_t mix = state_[0] ^ rotl(state_[2], 29) ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    child.reseed(mix);
    return child;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

// Stateless variate helpers (no cached spare values, so the mapping from
// engine state to output stream is reproducible across calls and platforms).

inline double uniform01(Xoshiro256pp& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1], safe as an argument of log().
inline double uniform01_pos(Xoshiro256pp& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform_range(Xoshiro256pp& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double exponential(Xoshiro256pp& rng) {
  return -std::log(uniform01_pos(rng));
}

inline double normal(Xoshiro256pp& rng) {
  const double u = uniform01_pos(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
}

inline std::uint64_t uniform_below(Xoshiro256pp& rng, std::uint64_t n) {
  // Rejection-free modulo is fine here; n is tiny relative to 2^64.
  return rng() % n;
}

}  // namespace gradlat
