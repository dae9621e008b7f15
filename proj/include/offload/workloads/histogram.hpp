#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace offload {

/// Fixed-width binning over [lo, hi).  v == hi and v > hi are overflow,
/// v < lo and NaN are underflow.
struct Histogram1D {
  std::int64_t nbins = 1;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;

  std::uint64_t total() const;
  friend bool operator==(const Histogram1D&, const Histogram1D&) = default;
};

/**
 * Two-axis histogram, counts stored row-major as counts[ix * ny + iy].
 *
 * A pair outside the grid is charged to exactly one out-of-range counter:
 * the x axis is checked first, so a pair with x in range and y out of
 * range lands in y_underflow / y_overflow.  This keeps
 * grid total + all four counters == number of pairs.
 */
struct Histogram2D {
  std::int64_t nx = 1;
  std::int64_t ny = 1;
  double xlo = 0.0, xhi = 1.0;
  double ylo = 0.0, yhi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t x_underflow = 0, x_overflow = 0;
  std::uint64_t y_underflow = 0, y_overflow = 0;

  std::uint64_t at(std::int64_t ix, std::int64_t iy) const {
    return counts[static_cast<std::size_t>(ix * ny + iy)];
  }
  std::uint64_t total() const;
  friend bool operator==(const Histogram2D&, const Histogram2D&) = default;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace binning {

inline constexpr std::int64_t kUnderflow = -1;
inline constexpr std::int64_t kOverflow = -2;

/// Bin index of v, or kUnderflow / kOverflow.
inline std::int64_t index(double v, double lo, double hi, std::int64_t nbins) {
  if (!(v >= lo)) return kUnderflow;
  if (v >= hi) return kOverflow;
  auto bin = static_cast<std::int64_t>((v - lo) / (hi - lo) * static_cast<double>(nbins));
  // (v - lo) can round up to (hi - lo) for v just below hi.
  return bin < nbins ? bin : nbins - 1;
}

}  // namespace binning

/// OpenMP kernels.  Results are identical to the serial versions because
/// counts are exact integers.
Histogram1D build_hist1d(std::span<const double> values, std::int64_t nbins, double lo, double hi);
Histogram2D build_hist2d(std::span<const double> xs, std::span<const double> ys, std::int64_t nx,
                         double xlo, double xhi, std::int64_t ny, double ylo, double yhi);

/// Single-threaded reference kernels, kept for testing and benchmarking.
namespace serial {
Histogram1D build_hist1d(std::span<const double> values, std::int64_t nbins, double lo, double hi);
Histogram2D build_hist2d(std::span<const double> xs, std::span<const double> ys, std::int64_t nx,
                         double xlo, double xhi, std::int64_t ny, double ylo, double yhi);
}  // namespace serial

}  // namespace offload
