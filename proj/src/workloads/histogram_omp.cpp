#include "offload/workloads/histogram.hpp"

#include <cstddef>

namespace offload {

namespace {

// Below this many values the thread fan-out costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 14;

void add_into(std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Histogram1D build_hist1d(std::span<const double> values, std::int64_t nbins, double lo, double hi) {
  if (values.size() < kParallelThreshold) return serial::build_hist1d(values, nbins, lo, hi);

  Histogram1D h{nbins, lo, hi, std::vector<std::uint64_t>(static_cast<std::size_t>(nbins), 0), 0, 0};
  const auto n = static_cast<std::ptrdiff_t>(values.size());

#pragma omp parallel
  {
    std::vector<std::uint64_t> local(static_cast<std::size_t>(nbins), 0);
    std::uint64_t under = 0;
    std::uint64_t over = 0;

#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto bin = binning::index(values[static_cast<std::size_t>(i)], lo, hi, nbins);
      if (bin == binning::kUnderflow) {
        ++under;
      } else if (bin == binning::kOverflow) {
        ++over;
      } else {
        ++local[static_cast<std::size_t>(bin)];
      }
    }

#pragma omp critical(offload_hist1d_merge)
    {
      add_into(h.counts, local);
      h.underflow += under;
      h.overflow += over;
    }
  }
  return h;
}

Histogram2D build_hist2d(std::span<const double> xs, std::span<const double> ys, std::int64_t nx,
                         double xlo, double xhi, std::int64_t ny, double ylo, double yhi) {
  if (xs.size() != ys.size()) throw LengthMismatch("hist2d: xs and ys differ in length");
  if (xs.size() < kParallelThreshold) {
    return serial::build_hist2d(xs, ys, nx, xlo, xhi, ny, ylo, yhi);
  }

  Histogram2D h;
  h.nx = nx;
  h.ny = ny;
  h.xlo = xlo;
  h.xhi = xhi;
  h.ylo = ylo;
  h.yhi = yhi;
  h.counts.assign(static_cast<std::size_t>(nx * ny), 0);
  const auto n = static_cast<std::ptrdiff_t>(xs.size());

#pragma omp parallel
  {
    std::vector<std::uint64_t> local(h.counts.size(), 0);
    std::uint64_t xu = 0, xo = 0, yu = 0, yo = 0;

#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const auto ix = binning::index(xs[k], xlo, xhi, nx);
      if (ix == binning::kUnderflow) {
        ++xu;
        continue;
      }
      if (ix == binning::kOverflow) {
        ++xo;
        continue;
      }
      const auto iy = binning::index(ys[k], ylo, yhi, ny);
      if (iy == binning::kUnderflow) {
        ++yu;
      } else if (iy == binning::kOverflow) {
        ++yo;
      } else {
        ++local[static_cast<std::size_t>(ix * ny + iy)];
      }
    }

#pragma omp critical(offload_hist2d_merge)
    {
      add_into(h.counts, local);
      h.x_underflow += xu;
      h.x_overflow += xo;
      h.y_underflow += yu;
      h.y_overflow += yo;
    }
  }
  return h;
}

}  // namespace offload
