#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lensless/psf.hpp"

namespace lensless {

enum class MaskKind { random, mls, shifted_mls, learned };

MaskKind parse_mask_kind(const std::string& s);
std::string to_string(MaskKind k);

// One period (length 2^order - 1) of a maximal-length sequence from a Fibonacci LFSR with a
// primitive feedback polynomial, orders 4..10. `state` is the nonzero initial register.
std::vector<int> mls_sequence(int order, std::uint32_t state = 1);

// Order n with 2^n - 1 == length; throws DomainError when no supported order fits.
int mls_order_for_length(int length);

// I.i.d. +-1 entries.
MaskSet random_masks(int count, GridSize dims, std::uint64_t seed);

// Separable masks: outer product of a row and a column MLS (bits mapped 1 -> +1, 0 -> -1),
// each with a seed-dependent cyclic phase.
MaskSet mls_masks(int count, GridSize dims, std::uint64_t seed);

// Even spread of `count` integer offsets over [0, max_shift].
std::vector<int> even_shifts(int count, int max_shift);

// One separable MLS mask cyclically shifted along columns by each offset.
MaskSet shifted_mls_masks(GridSize dims, const std::vector<int>& shifts, std::uint64_t seed = 0);

}  // namespace lensless
