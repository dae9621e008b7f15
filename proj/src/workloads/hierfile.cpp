#include "offload/workloads/hierfile.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

namespace offload {

namespace {

constexpr std::uint8_t kMagic[4] = {'H', 'N', 'F', '1'};
constexpr std::size_t kMaxName = 255;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
  return v;
}

[[noreturn]] void corrupt(const std::string& detail) {
  throw HierFileError(HierFileError::Code::CorruptIndex, detail);
}

std::string code_name(HierFileError::Code code) {
  switch (code) {
    case HierFileError::Code::BadMagic: return "BadMagic";
    case HierFileError::Code::CorruptIndex: return "CorruptIndex";
    case HierFileError::Code::DuplicateBranch: return "DuplicateBranch";
    case HierFileError::Code::NameTooLong: return "NameTooLong";
    case HierFileError::Code::NoSuchBranch: return "NoSuchBranch";
  }
  return "?";
}

}  // namespace

HierFileError::HierFileError(Code code, const std::string& detail)
    : std::runtime_error(code_name(code) + ": " + detail), code_(code) {}

Bytes write_hier_file(std::span<const Branch> branches) {
  std::set<std::string_view> seen;
  std::uint64_t header = 4 + 4;
  for (const auto& b : branches) {
    if (b.name.size() > kMaxName) {
      throw HierFileError(HierFileError::Code::NameTooLong, "branch name exceeds 255 bytes");
    }
    if (!seen.insert(b.name).second) {
      throw HierFileError(HierFileError::Code::DuplicateBranch, "duplicate branch '" + b.name + "'");
    }
    header += 1 + b.name.size() + 8 + 8;
  }

  Bytes out;
  std::uint64_t data_bytes = 0;
  for (const auto& b : branches) data_bytes += 8 * b.values.size();
  out.reserve(static_cast<std::size_t>(header + data_bytes));

  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(branches.size()));
  std::uint64_t offset = header;
  for (const auto& b : branches) {
    out.push_back(static_cast<std::uint8_t>(b.name.size()));
    out.insert(out.end(), b.name.begin(), b.name.end());
    put_u64(out, offset);
    put_u64(out, b.values.size());
    offset += 8 * b.values.size();
  }
  for (const auto& b : branches) {
    for (double v : b.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

HierReader::HierReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  const std::size_t size = bytes.size();
  const std::size_t probe = size < 4 ? size : 4;
  if (probe > 0 && std::memcmp(bytes.data(), kMagic, probe) != 0) {
    throw HierFileError(HierFileError::Code::BadMagic, "missing HNF1 magic");
  }
  if (size < 8) corrupt("file shorter than header");

  const auto count = get_le(bytes, 4, 4);
  std::size_t at = 8;
  std::set<std::string> seen;
  index_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, size / 17)));
  for (std::uint64_t i = 0; i < count; ++i) {
    if (at + 1 > size) corrupt("index entry past end of file");
    const std::size_t len = bytes[at];
    if (at + 1 + len + 16 > size) corrupt("index entry past end of file");
    BranchEntry e;
    e.name.assign(reinterpret_cast<const char*>(bytes.data() + at + 1), len);
    e.data_offset = get_le(bytes, at + 1 + len, 8);
    e.value_count = get_le(bytes, at + 1 + len + 8, 8);
    at += 1 + len + 16;
    if (!seen.insert(e.name).second) {
      throw HierFileError(HierFileError::Code::DuplicateBranch, "duplicate branch '" + e.name + "'");
    }
    index_.push_back(std::move(e));
  }
  header_bytes_ = at;

  for (const auto& e : index_) {
    // Overflow-safe form of offset + 8 * count <= size.
    if (e.data_offset < header_bytes_ || e.data_offset > size ||
        e.value_count > (size - e.data_offset) / 8) {
      corrupt("branch '" + e.name + "' data region outside file");
    }
  }
}

const BranchEntry& HierReader::entry(const std::string& name) const {
  for (const auto& e : index_) {
    if (e.name == name) return e;
  }
  throw HierFileError(HierFileError::Code::NoSuchBranch, "no branch '" + name + "'");
}

std::vector<double> HierReader::read_branch(const std::string& name) const {
  const auto& e = entry(name);
  std::vector<double> values(static_cast<std::size_t>(e.value_count));
  auto at = static_cast<std::size_t>(e.data_offset);
  for (auto& v : values) {
    v = std::bit_cast<double>(get_le(bytes_, at, 8));
    at += 8;
  }
  return values;
}

HierFile read_hier_file(std::span<const std::uint8_t> bytes) {
  HierReader reader(bytes);
  HierFile file;
  file.branches.reserve(reader.index().size());
  for (const auto& e : reader.index()) {
    file.branches.push_back(Branch{e.name, reader.read_branch(e.name)});
  }
  return file;
}

}  // namespace offload
