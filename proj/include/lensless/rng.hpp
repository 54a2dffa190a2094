#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lensless {

using Rng = std::mt19937_64;

// Counter-based seed split: each (stream, index) pair gets an independent seed, so adding a
// new consumer never perturbs the draws of existing ones.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lensless
