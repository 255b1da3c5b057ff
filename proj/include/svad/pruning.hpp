#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/matrix.hpp"

namespace svad {

// Binary connection mask, congruent with the weight matrix it gates.
struct PruneMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 pruned / 1 kept

  bool empty() const { return bits.empty(); }
  std::size_t size() const { return bits.size(); }

  std::size_t ones() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
  }

  double density() const {
    return bits.empty() ? 0.0
                        : static_cast<double>(ones()) / static_cast<double>(bits.size());
  }
};

inline PruneMask full_mask(std::size_t rows, std::size_t cols) {
  return PruneMask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
}

inline void apply_mask(Matrix& weights, const PruneMask& mask) {
  if (mask.rows != weights.rows() || mask.cols != weights.cols()) {
    throw ValidationError("mask shape does not match the weight matrix");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (mask.bits[i] == 0) weights[i] = 0.0;
  }
}

// Keeps the largest-magnitude surviving weights so that the total kept count
// is round(keep_fraction * total_entries); keep_fraction is a fraction of the
// ORIGINAL connection count, not of the previous iteration. Ties go to the
// lowest flat index.
inline PruneMask magnitude_prune(const Matrix& weights, const PruneMask& current,
                                 double keep_fraction_of_original) {
  if (current.rows != weights.rows() || current.cols != weights.cols()) {
    throw ValidationError("mask shape does not match the weight matrix");
  }
  if (!(keep_fraction_of_original > 0.0 && keep_fraction_of_original <= 1.0)) {
    throw ValidationError("keep fraction must lie in (0,1]");
  }
  if (keep_fraction_of_original >= current.density()) {
    throw ValidationError("keep fraction " + std::to_string(keep_fraction_of_original) +
                          " is not below the current density " +
                          std::to_string(current.density()));
  }
  const std::size_t target =
      static_cast<std::size_t>(std::llround(keep_fraction_of_original *
                                            static_cast<double>(weights.size())));
  std::vector<std::size_t> alive;
  alive.reserve(current.ones());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (current.bits[i]) alive.push_back(i);
  }
  std::sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(weights[a]);
    const double mb = std::abs(weights[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  PruneMask next{weights.rows(), weights.cols(),
                 std::vector<std::uint8_t>(weights.size(), 0)};
  for (std::size_t k = 0; k < std::min(target, alive.size()); ++k) {
    next.bits[alive[k]] = 1;
  }
  return next;
}

// Ordered keep fractions of the original connection count, one per pruning
// iteration; the default walks 70% -> 40% -> 20% -> 15%.
struct TicketSchedule {
  std::vector<double> keep_fractions;

  static TicketSchedule standard() { return {{0.70, 0.40, 0.20, 0.15}}; }

  void validate() const {
    double prev = 1.0 + 1e-12;
    for (double f : keep_fractions) {
      if (!(f > 0.0 && f <= 1.0)) {
        throw ValidationError("schedule fractions must lie in (0,1]");
      }
      if (!(f < prev)) throw ValidationError("schedule must be strictly decreasing");
      prev = f;
    }
  }
};

}  // namespace svad
