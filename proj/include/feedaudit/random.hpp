#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace feedaudit {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a, used to turn string identifiers into seed material.
std::uint64_t hash_string(std::string_view text);

/// Derives an independent stream from a list of seed parts.
Rng make_rng(std::initializer_list<std::uint64_t> parts);

/// Uniform double in [0, 1) with 53 bits of the generator output.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Draws indices proportionally to non-negative weights (inverse CDF).
class WeightedSampler {
 public:
  WeightedSampler() = default;
  explicit WeightedSampler(const std::vector<double>& weights);

  std::size_t operator()(Rng& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

/// Weights proportional to 1/(rank+1)^exponent for ranks 0..n-1.
std::vector<double> zipf_weights(std::size_t n, double exponent);

}  // namespace feedaudit
