#include "offload/workloads/run.hpp"

#include <istream>
#include <streambuf>

#include "offload/detail/overloaded.hpp"
#include "offload/workloads/hierfile.hpp"

namespace offload {

namespace {

class SpanBuf : public std::streambuf {
 public:
  explicit SpanBuf(std::span<const std::uint8_t> bytes) {
    auto* p = const_cast<char*>(reinterpret_cast<const char*>(bytes.data()));
    setg(p, p, p + bytes.size());
  }
};

}  // namespace

WorkloadOutput run_workload(const JobSpec& spec, std::span<const std::uint8_t> input) {
  try {
    return std::visit(
        detail::Overloaded{
            [&](const Hist1DParams& p) -> WorkloadOutput {
              HierReader reader(input);
              const auto values = reader.read_branch(p.axis.branch);
              WorkUnits units{reader.header_bytes() + 8 * values.size(), values.size()};
              return {build_hist1d(values, p.axis.nbins, p.axis.lo, p.axis.hi), units};
            },
            [&](const Hist2DParams& p) -> WorkloadOutput {
              HierReader reader(input);
              const auto xs = reader.read_branch(p.x.branch);
              const auto ys = reader.read_branch(p.y.branch);
              WorkUnits units{reader.header_bytes() + 8 * (xs.size() + ys.size()), xs.size()};
              return {build_hist2d(xs, ys, p.x.nbins, p.x.lo, p.x.hi, p.y.nbins, p.y.lo, p.y.hi),
                      units};
            },
            [&](const ParseXmlParams&) -> WorkloadOutput {
              SpanBuf buf(input);
              std::istream in(&buf);
              ParseStats stats;
              auto summary = parse_event_stream(in, &stats);
              return {std::move(summary), WorkUnits{stats.bytes, stats.elements}};
            },
        },
        spec.params);
  } catch (const HierFileError& e) {
    throw WorkloadError(e.what());
  } catch (const EventXmlError& e) {
    throw WorkloadError(e.what());
  } catch (const LengthMismatch& e) {
    throw WorkloadError(e.what());
  }
}

}  // namespace offload
