#include "lensless/masks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lensless/errors.hpp"
#include "lensless/fft.hpp"
#include "lensless/rng.hpp"

namespace lensless {

namespace {

// Feedback taps (1-based register positions) of primitive polynomials.
const std::vector<int>& taps_for(int order) {
  static const std::vector<std::vector<int>> table = {
      {4, 3}, {5, 3}, {6, 5}, {7, 6}, {8, 6, 5, 4}, {9, 5}, {10, 7},
  };
  if (order < 4 || order > 10) throw DomainError("MLS order must be in [4, 10]");
  return table[order - 4];
}

Image mls_outer(int rows, int cols, int row_phase, int col_phase) {
  const auto rseq = mls_sequence(mls_order_for_length(rows));
  const auto cseq = mls_sequence(mls_order_for_length(cols));
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int a = rseq[(r + row_phase) % rows] ? 1 : -1;
      const int b = cseq[(c + col_phase) % cols] ? 1 : -1;
      out(r, c) = a * b;
    }
  return out;
}

}  // namespace

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "random") return MaskKind::random;
  if (s == "mls") return MaskKind::mls;
  if (s == "shifted_mls") return MaskKind::shifted_mls;
  if (s == "learned" || s == "learned-file") return MaskKind::learned;
  throw ConfigError("unknown mask kind '" + s + "'");
}

std::string to_string(MaskKind k) {
  switch (k) {
    case MaskKind::random: return "random";
    case MaskKind::mls: return "mls";
    case MaskKind::shifted_mls: return "shifted_mls";
    case MaskKind::learned: return "learned";
  }
  return "unknown";
}

std::vector<int> mls_sequence(int order, std::uint32_t state) {
  const auto& taps = taps_for(order);
  const std::uint32_t mask = (1u << order) - 1u;
  state &= mask;
  if (state == 0) throw DomainError("LFSR state must be nonzero");
  const int length = static_cast<int>(mask);
  std::vector<int> seq(length);
  for (int i = 0; i < length; ++i) {
    seq[i] = static_cast<int>(state & 1u);
    std::uint32_t feedback = 0;
    for (int t : taps) feedback ^= (state >> (order - t)) & 1u;
    state = (state >> 1) | (feedback << (order - 1));
  }
  return seq;
}

int mls_order_for_length(int length) {
  for (int n = 4; n <= 10; ++n)
    if ((1 << n) - 1 == length) return n;
  throw DomainError("length " + std::to_string(length) + " is not 2^n - 1 for n in [4, 10]");
}

MaskSet random_masks(int count, GridSize dims, std::uint64_t seed) {
  if (count < 1) throw DomainError("mask count must be at least 1");
  MaskSet out;
  for (int k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, "masks.random", static_cast<std::uint64_t>(k));
    std::bernoulli_distribution coin(0.5);
    Image m(dims.rows, dims.cols);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = coin(rng) ? 1.0 : -1.0;
    out.patterns.push_back({std::move(m), true});
  }
  return out;
}

MaskSet mls_masks(int count, GridSize dims, std::uint64_t seed) {
  if (count < 1) throw DomainError("mask count must be at least 1");
  mls_order_for_length(dims.rows);
  mls_order_for_length(dims.cols);
  MaskSet out;
  for (int k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, "masks.mls", static_cast<std::uint64_t>(k));
    std::uniform_int_distribution<int> rphase(0, dims.rows - 1), cphase(0, dims.cols - 1);
    const int pr = rphase(rng);
    const int pc = cphase(rng);
    out.patterns.push_back({mls_outer(dims.rows, dims.cols, pr, pc), true});
  }
  return out;
}

std::vector<int> even_shifts(int count, int max_shift) {
  if (count < 1) throw DomainError("mask count must be at least 1");
  if (count > max_shift + 1)
    throw DomainError("cannot place " + std::to_string(count) + " distinct shifts in [0, " + std::to_string(max_shift) + "]");
  std::vector<int> out;
  for (int k = 0; k < count; ++k)
    out.push_back(count == 1 ? 0 : static_cast<int>(std::lround(static_cast<double>(k) * max_shift / (count - 1))));
  return out;
}

MaskSet shifted_mls_masks(GridSize dims, const std::vector<int>& shifts, std::uint64_t seed) {
  if (shifts.empty()) throw DomainError("no shifts given");
  const std::set<int> distinct(shifts.begin(), shifts.end());
  if (distinct.size() != shifts.size()) throw DomainError("shifts must be distinct");
  const Image base = mls_masks(1, dims, seed).patterns.front().values;
  MaskSet out;
  for (int s : shifts) out.patterns.push_back({circshift(base, 0, s), true});
  return out;
}

}  // namespace lensless
