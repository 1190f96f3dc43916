#pragma once

#include <cstdint>
#include <random>

#include "mgnm/tensor.hpp"

namespace mgnm {

// splitmix64; used to derive independent stream seeds from (seed, tags).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Normal(0, stddev) truncated at +/- 2 stddev, by rejection.
inline double truncated_normal(std::mt19937_64& gen, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (;;) {
    double x = dist(gen);
    if (x >= -2.0 * stddev && x <= 2.0 * stddev) return x;
  }
}

inline Tensor truncated_normal_tensor(std::vector<int> shape, double stddev,
                                      std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 gen(seed);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = truncated_normal(gen, stddev);
  return t;
}

}  // namespace mgnm
