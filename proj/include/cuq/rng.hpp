#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>
#include <vector>

namespace cuq {

// Deterministic RNG used everywhere instead of <random> distributions: the
// standard library's distribution algorithms are implementation-defined, and
// reports pinned by seed must reproduce across toolchains.
namespace rng_detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rng_detail

// Derive an independent substream seed from a base seed and a tag path,
// e.g. derive_seed(master, {fold, 1}) or derive_seed(master, "outer-folds").
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tokens) {
  std::uint64_t h = base;
  for (std::uint64_t t : tokens) h = rng_detail::mix(h, t);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return rng_detail::mix(base, rng_detail::hash_str(tag));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::initializer_list<std::uint64_t> tokens) {
  return derive_seed(derive_seed(base, tag), tokens);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially related seeds (0, 1, 2, ...)
    rng_detail::splitmix64(state_);
  }

  std::uint64_t next_u64() { return rng_detail::splitmix64(state_); }

  // uniform on (0, 1]; never returns 0 so it is safe under log()
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    // Box-Muller, no spare caching: two uniforms per variate keeps the
    // stream position independent of call history.
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() <= p; }

  // index in [0, n); n must be > 0
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in shuffled order
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(k);
    return idx;
  }

private:
  std::uint64_t state_;
};

}  // namespace cuq
