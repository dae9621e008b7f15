#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace offload {

struct BoundingBox {
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// What the event-XML pass extracts: counts and spatial extent of drawables.
struct DrawableSummary {
  std::uint64_t events = 0;
  std::map<std::string, std::uint64_t> drawables_by_type;
  std::uint64_t total_points = 0;
  std::optional<BoundingBox> bounding_box;  // empty iff total_points == 0

  std::uint64_t total_drawables() const;
  void add_point(double x, double y, double z);
  friend bool operator==(const DrawableSummary&, const DrawableSummary&) = default;
};

class EventXmlError : public std::runtime_error {
 public:
  enum class Code { XmlSyntax, UnknownElement, MissingAttribute };

  EventXmlError(Code code, std::uint64_t line, const std::string& detail);

  Code code() const noexcept { return code_; }
  std::uint64_t line() const noexcept { return line_; }

 private:
  Code code_;
  std::uint64_t line_;
};

struct ParseStats {
  std::uint64_t bytes = 0;     // bytes consumed from the stream
  std::uint64_t elements = 0;  // start tags seen
};

/**
 * Single forward pass over an event document:
 *
 *   <heprep> ( <event> ( <drawable type="..."> <point x= y= z=/>* </drawable> )* </event> )* </heprep>
 *
 * Reads the stream in fixed-size chunks; working memory is bounded by the
 * element depth (at most 4 open elements) and the longest single tag, never
 * by document size.  Comments, processing instructions and whitespace are
 * skipped; anything else outside the grammar is an error.
 */
DrawableSummary parse_event_stream(std::istream& in, ParseStats* stats = nullptr);

}  // namespace offload
