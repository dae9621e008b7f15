#include "offload/workloads/event_xml.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "offload/ids.hpp"

namespace offload {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr std::size_t kMaxToken = 4096;
constexpr int kEof = -1;

std::string code_name(EventXmlError::Code code) {
  switch (code) {
    case EventXmlError::Code::XmlSyntax: return "XmlSyntax";
    case EventXmlError::Code::UnknownElement: return "UnknownElement";
    case EventXmlError::Code::MissingAttribute: return "MissingAttribute";
  }
  return "?";
}

enum class Element { Heprep, Event, Drawable, Point };

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  int peek() {
    if (pos_ == len_ && !refill()) return kEof;
    return static_cast<unsigned char>(buf_[pos_]);
  }

  int get() {
    const int c = peek();
    if (c == kEof) return kEof;
    ++pos_;
    ++consumed_;
    if (c == '\n') ++line_;
    return c;
  }

  std::uint64_t line() const { return line_; }
  std::uint64_t consumed() const { return consumed_; }

 private:
  bool refill() {
    if (!in_) return false;
    in_.read(buf_, kChunk);
    len_ = static_cast<std::size_t>(in_.gcount());
    pos_ = 0;
    return len_ > 0;
  }

  std::istream& in_;
  char buf_[kChunk];
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  std::uint64_t line_ = 1;
  std::uint64_t consumed_ = 0;
};

struct Attribute {
  std::string name;
  std::string value;
};

class EventParser {
 public:
  explicit EventParser(std::istream& in) : r_(in) {}

  DrawableSummary run(ParseStats* stats) {
    bool root_seen = false;
    while (true) {
      skip_text();
      const int c = r_.get();
      if (c == kEof) break;
      // skip_text stops only at '<' or EOF.
      const int next = r_.peek();
      if (next == '?') {
        r_.get();
        skip_until("?>");
      } else if (next == '!') {
        r_.get();
        expect_literal("--", "only comments may start with '<!'");
        skip_until("-->");
      } else if (next == '/') {
        r_.get();
        end_tag();
      } else {
        if (depth_ == 0 && root_seen) syntax("content after the root element");
        start_tag();
        root_seen = true;
      }
    }
    if (depth_ != 0) syntax("unexpected end of document");
    if (!root_seen) syntax("no root element");
    if (stats) {
      stats->bytes = r_.consumed();
      stats->elements = elements_;
    }
    return std::move(summary_);
  }

 private:
  [[noreturn]] void fail(EventXmlError::Code code, const std::string& detail) {
    throw EventXmlError(code, r_.line(), detail);
  }
  [[noreturn]] void syntax(const std::string& detail) { fail(EventXmlError::Code::XmlSyntax, detail); }

  static bool is_space(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  static bool is_name_start(int c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
  }
  static bool is_name_char(int c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
  }

  void skip_space() {
    while (is_space(r_.peek())) r_.get();
  }

  // Character data is not part of the grammar; only whitespace may appear.
  void skip_text() {
    while (true) {
      const int c = r_.peek();
      if (c == kEof || c == '<') return;
      if (!is_space(c)) syntax("unexpected character data");
      r_.get();
    }
  }

  void expect_literal(std::string_view lit, const std::string& detail) {
    for (char ch : lit) {
      if (r_.get() != static_cast<unsigned char>(ch)) syntax(detail);
    }
  }

  void skip_until(std::string_view terminator) {
    std::size_t matched = 0;
    while (matched < terminator.size()) {
      const int c = r_.get();
      if (c == kEof) syntax("unterminated comment or processing instruction");
      if (c == static_cast<unsigned char>(terminator[matched])) {
        ++matched;
      } else {
        matched = (c == static_cast<unsigned char>(terminator[0])) ? 1 : 0;
      }
    }
  }

  std::string read_name() {
    std::string name;
    if (!is_name_start(r_.peek())) syntax("expected a name");
    while (is_name_char(r_.peek())) {
      if (name.size() == kMaxToken) syntax("name too long");
      name.push_back(static_cast<char>(r_.get()));
    }
    return name;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  void read_entity(std::string& out) {
    std::string ref;
    while (true) {
      const int c = r_.get();
      if (c == kEof) syntax("unterminated entity reference");
      if (c == ';') break;
      if (ref.size() > 10) syntax("entity reference too long");
      ref.push_back(static_cast<char>(c));
    }
    if (ref == "amp") {
      out.push_back('&');
    } else if (ref == "lt") {
      out.push_back('<');
    } else if (ref == "gt") {
      out.push_back('>');
    } else if (ref == "quot") {
      out.push_back('"');
    } else if (ref == "apos") {
      out.push_back('\'');
    } else if (ref.size() > 1 && ref[0] == '#') {
      const bool hex = ref[1] == 'x';
      const char* first = ref.data() + (hex ? 2 : 1);
      const char* last = ref.data() + ref.size();
      std::uint32_t cp = 0;
      auto [p, ec] = std::from_chars(first, last, cp, hex ? 16 : 10);
      if (ec != std::errc{} || p != last || first == last || cp == 0 || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        syntax("bad character reference '&" + ref + ";'");
      }
      append_utf8(out, cp);
    } else {
      syntax("unknown entity '&" + ref + ";'");
    }
  }

  std::string read_attr_value() {
    const int quote = r_.get();
    if (quote != '"' && quote != '\'') syntax("attribute value must be quoted");
    std::string value;
    while (true) {
      const int c = r_.get();
      if (c == kEof) syntax("unterminated attribute value");
      if (c == quote) break;
      if (c == '<') syntax("'<' inside attribute value");
      if (c == '&') {
        read_entity(value);
      } else {
        value.push_back(static_cast<char>(c));
      }
      if (value.size() > kMaxToken) syntax("attribute value too long");
    }
    if (!is_valid_utf8(value)) syntax("attribute value is not UTF-8");
    return value;
  }

  void start_tag() {
    const std::string name = read_name();
    ++elements_;

    Element element;
    static constexpr std::string_view kExpected[] = {"heprep", "event", "drawable", "point"};
    if (depth_ >= 4 || name != kExpected[depth_]) {
      fail(EventXmlError::Code::UnknownElement,
           "unexpected element <" + name + "> at depth " + std::to_string(depth_));
    }
    element = static_cast<Element>(depth_);

    std::vector<Attribute> attrs;
    bool self_closing = false;
    while (true) {
      const bool had_space = is_space(r_.peek());
      skip_space();
      const int c = r_.peek();
      if (c == '>') {
        r_.get();
        break;
      }
      if (c == '/') {
        r_.get();
        if (r_.get() != '>') syntax("expected '>' after '/'");
        self_closing = true;
        break;
      }
      if (c == kEof) syntax("unterminated start tag");
      if (!had_space) syntax("attributes must be separated by whitespace");
      Attribute a;
      a.name = read_name();
      skip_space();
      if (r_.get() != '=') syntax("expected '=' after attribute name");
      skip_space();
      a.value = read_attr_value();
      if (std::any_of(attrs.begin(), attrs.end(), [&](const Attribute& x) { return x.name == a.name; })) {
        syntax("duplicate attribute '" + a.name + "'");
      }
      attrs.push_back(std::move(a));
    }

    on_element(element, name, attrs);

    if (!self_closing) stack_[depth_++] = element;
  }

  const std::string* find(const std::vector<Attribute>& attrs, std::string_view name) {
    for (const auto& a : attrs) {
      if (a.name == name) return &a.value;
    }
    return nullptr;
  }

  void allow_only(const std::string& element, const std::vector<Attribute>& attrs,
                  std::initializer_list<std::string_view> allowed) {
    for (const auto& a : attrs) {
      if (std::find(allowed.begin(), allowed.end(), a.name) == allowed.end()) {
        fail(EventXmlError::Code::UnknownElement,
             "unknown attribute '" + a.name + "' on <" + element + ">");
      }
    }
  }

  double real_attr(const std::vector<Attribute>& attrs, std::string_view name) {
    const std::string* v = find(attrs, name);
    if (!v) fail(EventXmlError::Code::MissingAttribute, "<point> requires attribute '" + std::string(name) + "'");
    double out = 0.0;
    const char* first = v->data();
    const char* last = v->data() + v->size();
    auto [p, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || p != last || !std::isfinite(out)) {
      syntax("attribute '" + std::string(name) + "' is not a finite real: '" + *v + "'");
    }
    return out;
  }

  void on_element(Element element, const std::string& name, const std::vector<Attribute>& attrs) {
    switch (element) {
      case Element::Heprep:
        allow_only(name, attrs, {});
        break;
      case Element::Event:
        allow_only(name, attrs, {});
        ++summary_.events;
        break;
      case Element::Drawable: {
        allow_only(name, attrs, {"type"});
        const std::string* type = find(attrs, "type");
        if (!type) fail(EventXmlError::Code::MissingAttribute, "<drawable> requires attribute 'type'");
        ++summary_.drawables_by_type[*type];
        break;
      }
      case Element::Point: {
        allow_only(name, attrs, {"x", "y", "z"});
        const double x = real_attr(attrs, "x");
        const double y = real_attr(attrs, "y");
        const double z = real_attr(attrs, "z");
        summary_.add_point(x, y, z);
        break;
      }
    }
  }

  void end_tag() {
    const std::string name = read_name();
    skip_space();
    if (r_.get() != '>') syntax("expected '>' in end tag");
    if (depth_ == 0) syntax("unexpected end tag </" + name + ">");
    static constexpr std::string_view kNames[] = {"heprep", "event", "drawable", "point"};
    const Element top = stack_[depth_ - 1];
    if (name != kNames[static_cast<int>(top)]) {
      syntax("mismatched end tag </" + name + ">, expected </" + std::string(kNames[static_cast<int>(top)]) + ">");
    }
    --depth_;
  }

  Reader r_;
  Element stack_[4]{};
  std::size_t depth_ = 0;
  std::uint64_t elements_ = 0;
  DrawableSummary summary_;
};

}  // namespace

EventXmlError::EventXmlError(Code code, std::uint64_t line, const std::string& detail)
    : std::runtime_error(code_name(code) + " (line " + std::to_string(line) + "): " + detail),
      code_(code),
      line_(line) {}

std::uint64_t DrawableSummary::total_drawables() const {
  std::uint64_t n = 0;
  for (const auto& [type, count] : drawables_by_type) n += count;
  return n;
}

void DrawableSummary::add_point(double x, double y, double z) {
  const std::array<double, 3> p{x, y, z};
  if (!bounding_box) {
    bounding_box = BoundingBox{p, p};
  } else {
    for (int i = 0; i < 3; ++i) {
      bounding_box->min[i] = std::min(bounding_box->min[i], p[i]);
      bounding_box->max[i] = std::max(bounding_box->max[i], p[i]);
    }
  }
  ++total_points;
}

DrawableSummary parse_event_stream(std::istream& in, ParseStats* stats) {
  EventParser parser(in);
  return parser.run(stats);
}

}  // namespace offload
