#include "offload/workloads/histogram.hpp"

#include <numeric>

namespace offload {

std::uint64_t Histogram1D::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) + underflow + overflow;
}

std::uint64_t Histogram2D::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) + x_underflow + x_overflow +
         y_underflow + y_overflow;
}

namespace serial {

Histogram1D build_hist1d(std::span<const double> values, std::int64_t nbins, double lo, double hi) {
  Histogram1D h{nbins, lo, hi, std::vector<std::uint64_t>(static_cast<std::size_t>(nbins), 0), 0, 0};
  for (double v : values) {
    const auto bin = binning::index(v, lo, hi, nbins);
    if (bin == binning::kUnderflow) {
      ++h.underflow;
    } else if (bin == binning::kOverflow) {
      ++h.overflow;
    } else {
      ++h.counts[static_cast<std::size_t>(bin)];
    }
  }
  return h;
}

Histogram2D build_hist2d(std::span<const double> xs, std::span<const double> ys, std::int64_t nx,
                         double xlo, double xhi, std::int64_t ny, double ylo, double yhi) {
  if (xs.size() != ys.size()) throw LengthMismatch("hist2d: xs and ys differ in length");
  Histogram2D h;
  h.nx = nx;
  h.ny = ny;
  h.xlo = xlo;
  h.xhi = xhi;
  h.ylo = ylo;
  h.yhi = yhi;
  h.counts.assign(static_cast<std::size_t>(nx * ny), 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto ix = binning::index(xs[i], xlo, xhi, nx);
    if (ix == binning::kUnderflow) {
      ++h.x_underflow;
      continue;
    }
    if (ix == binning::kOverflow) {
      ++h.x_overflow;
      continue;
    }
    const auto iy = binning::index(ys[i], ylo, yhi, ny);
    if (iy == binning::kUnderflow) {
      ++h.y_underflow;
    } else if (iy == binning::kOverflow) {
      ++h.y_overflow;
    } else {
      ++h.counts[static_cast<std::size_t>(ix * ny + iy)];
    }
  }
  return h;
}

}  // namespace serial
}  // namespace offload
