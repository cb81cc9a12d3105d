#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vsum {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Named sub-stream seeds. Keeping these as pure functions of (seed, tag)
// means every generator stream is reproducible independently of draw order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag ^ 0x7f4a7c159e3779b9ull));
}

inline std::uint64_t derive_seed(std::uint64_t seed, const char* tag) {
  // FNV-1a over the tag name
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char* c = tag; *c; ++c)
    h = (h ^ static_cast<unsigned char>(*c)) * 0x100000001b3ull;
  return derive_seed(seed, h);
}

// mt19937_64 is bit-exact across platforms; the std distributions are not,
// so the distributions are implemented here. This is what makes the
// byte-stability contracts on generated datasets hold.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n), rejection sampled.
  int uniform_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<int>(r % bound);
  }

  // Box-Muller; draws two uniforms per call, no cached spare.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

  // k distinct values from [0, n), in random order.
  std::vector<int> sample_indices(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    shuffle(pool);
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace vsum
