#pragma once

#include <cstdint>
#include <initializer_list>

namespace wgsa {

// Finalizer of the splitmix64 generator (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Counter-based seed derivation: children of a master seed are statistically
// independent streams.  Used to split per-replication, per-(j,k), and
// per-branch seeds so pick-freeze and plain branches never share hidden draws.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t s = mix64(master + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t id : ids) {
    s = mix64(s ^ mix64(id + 0x9e3779b97f4a7c15ULL));
  }
  return s;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a) noexcept {
  return derive_seed(master, {a});
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return derive_seed(master, {a, b});
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) noexcept {
  return derive_seed(master, {a, b, c});
}

// Small deterministic generator (splitmix64 sequence).  All randomness in the
// library flows through this type; no global state anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(mix64(seed ^ 0x8f1bbcdcbfa53e0bULL)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // uniform on [0,1) with 53 random bits
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) noexcept { return a + (b - a) * uniform(); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // uniform index in [0, n); modulo bias is ~n/2^64 and ignored
  std::size_t index(std::size_t n) noexcept {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
};

}  // namespace wgsa
