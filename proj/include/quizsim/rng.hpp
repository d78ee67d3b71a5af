#pragma once

// Seeded PRNG used everywhere determinism matters. Hand-rolled (splitmix64)
// rather than <random> because uniform_int_distribution and std::shuffle are
// implementation-defined: the same seed must reproduce the same cohort and the
// same simulated answers on every platform and compiler.

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace quizsim {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so that nearby seeds do not yield nearby first outputs.
    splitmix64_next(state_);
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_unit() < p; }

  // Uniform integer in [0, n). Unbiased via rejection.
  std::uint32_t below(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("below: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::uint32_t>(x % n);
  }

  // Fisher-Yates; explicit so shuffles are reproducible across platforms.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices out of [0, n), in random order. k must not exceed n.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_indices: k exceeds n");
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    shuffle(all);
    all.resize(k);
    return all;
  }

private:
  std::uint64_t state_;
};

// Independent stream for one (student, question) cell. Derived from the master
// seed and both ids, so a run produces the same answers no matter how the
// (student, question) grid is ordered or parallelized.
inline Rng rng_for(std::uint64_t master_seed, std::string_view student_id,
                   std::string_view question_id) {
  std::uint64_t s = master_seed;
  splitmix64_next(s);
  s ^= fnv1a64(student_id);
  splitmix64_next(s);
  s ^= fnv1a64(question_id);
  return Rng(s);
}

// Stream for the i-th permutation of a seeded permutation test.
inline Rng rng_for_permutation(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  splitmix64_next(s);
  s ^= index * 0x9E3779B97F4A7C15ULL;
  return Rng(s);
}

}  // namespace quizsim
