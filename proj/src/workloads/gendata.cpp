#include "offload/workloads/gendata.hpp"

#include <array>
#include <charconv>
#include <string>

namespace offload {

std::vector<Branch> generate_branches(std::int64_t branches, std::int64_t values, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Branch> out;
  out.reserve(static_cast<std::size_t>(branches));
  for (std::int64_t b = 0; b < branches; ++b) {
    Branch br{"b" + std::to_string(b), {}};
    br.values.reserve(static_cast<std::size_t>(values));
    for (std::int64_t i = 0; i < values; ++i) br.values.push_back(-0.25 + 1.5 * unit_real(rng));
    out.push_back(std::move(br));
  }
  return out;
}

namespace {

void write_real(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), end - buf.data());
}

}  // namespace

DrawableSummary generate_event_xml(std::ostream& out, const XmlShape& shape, std::uint64_t seed) {
  static constexpr std::array<const char*, 4> kTypes = {"track", "hit", "cluster", "vertex"};
  std::mt19937_64 rng(seed);
  DrawableSummary tally;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<heprep>\n";
  for (std::int64_t e = 0; e < shape.events; ++e) {
    out << "  <event>\n";
    ++tally.events;
    for (std::int64_t d = 0; d < shape.drawables_per_event; ++d) {
      const char* type = kTypes[rng() % kTypes.size()];
      ++tally.drawables_by_type[type];
      out << "    <drawable type=\"" << type << "\">\n";
      for (std::int64_t p = 0; p < shape.points_per_drawable; ++p) {
        const double x = -100.0 + 200.0 * unit_real(rng);
        const double y = -100.0 + 200.0 * unit_real(rng);
        const double z = -500.0 + 1000.0 * unit_real(rng);
        tally.add_point(x, y, z);
        out << "      <point x=\"";
        write_real(out, x);
        out << "\" y=\"";
        write_real(out, y);
        out << "\" z=\"";
        write_real(out, z);
        out << "\"/>\n";
      }
      out << "    </drawable>\n";
    }
    out << "  </event>\n";
  }
  out << "</heprep>\n";
  return tally;
}

}  // namespace offload
