#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace shopsched {

// splitmix64 finalizer. Used to derive independent seed substreams (e.g. one
// per genome) so results never depend on evaluation order or thread count.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 core with hand-rolled draws. The engine is specified bit-exactly
// by the standard but the std:: distributions are not; rolling our own keeps
// seeded artifacts byte-identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform over [0, n), bias-free via rejection sampling. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
  }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform over [lo, hi).
  double uniform_real(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  bool bernoulli(double p) { return uniform_real(0.0, 1.0) < p; }

  // Box-Muller with a cached spare.
  double standard_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_real(0.0, 1.0);
    while (u1 <= 1e-300) u1 = uniform_real(0.0, 1.0);
    const double u2 = uniform_real(0.0, 1.0);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // Picks k distinct indices out of [0, n).
  std::vector<int> sample_indices(int n, int k) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    shuffle(all);
    all.resize(static_cast<std::size_t>(k));
    return all;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace shopsched
