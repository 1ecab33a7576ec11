#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "umri/core/rng.hpp"

namespace umri::init {

// All initializers derive their stream from (seed, path), so the values a
// tensor receives do not depend on construction order.

template <typename T>
std::vector<T> zeros(std::size_t n) {
  return std::vector<T>(n, T(0));
}

template <typename T>
std::vector<T> ones(std::size_t n) {
  return std::vector<T>(n, T(1));
}

template <typename T>
std::vector<T> constant(std::size_t n, double v) {
  return std::vector<T>(n, static_cast<T>(v));
}

template <typename T>
std::vector<T> truncated_normal(std::size_t n, double std, std::uint64_t seed,
                                const std::string& path) {
  Rng rng(derive_seed(seed, path));
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.truncated_normal(0.0, std));
  return v;
}

// uniform(-b, b) with b = sqrt(1/fan_in), the usual conv/linear default
template <typename T>
std::vector<T> kaiming_uniform(std::size_t n, std::size_t fan_in, std::uint64_t seed,
                               const std::string& path) {
  Rng rng(derive_seed(seed, path));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in ? fan_in : 1));
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return v;
}

}  // namespace umri::init
