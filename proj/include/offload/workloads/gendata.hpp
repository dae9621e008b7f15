#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "offload/workloads/event_xml.hpp"
#include "offload/workloads/hierfile.hpp"

namespace offload {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double unit_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Branches "b0".."b{n-1}", each with `values` reals spread over [-0.25, 1.25)
/// so that default [0, 1) histograms see underflow and overflow too.
std::vector<Branch> generate_branches(std::int64_t branches, std::int64_t values, std::uint64_t seed);

struct XmlShape {
  std::int64_t events = 1;
  std::int64_t drawables_per_event = 1;
  std::int64_t points_per_drawable = 1;
};

/// Writes an event document to `out` and returns the summary of what it
/// wrote, tallied while writing (the parser's oracle).
DrawableSummary generate_event_xml(std::ostream& out, const XmlShape& shape, std::uint64_t seed);

}  // namespace offload
