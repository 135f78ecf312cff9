#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace decov {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct StructuralError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct InfeasibleError : Error {
  using Error::Error;
};
struct SamplingError : Error {
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent sub-seed for `stream` from a master seed
/// (splitmix64 finalizer over seed and stream counter).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng{mix_seed(seed, stream)};
}

}  // namespace decov
