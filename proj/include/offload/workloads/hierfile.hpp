#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace offload {

using Bytes = std::vector<std::uint8_t>;

struct Branch {
  std::string name;
  std::vector<double> values;
};

/// In-memory form of an HNF1 file: an ordered set of named numeric branches.
struct HierFile {
  std::vector<Branch> branches;
};

class HierFileError : public std::runtime_error {
 public:
  enum class Code { BadMagic, CorruptIndex, DuplicateBranch, NameTooLong, NoSuchBranch };

  HierFileError(Code code, const std::string& detail);
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

struct BranchEntry {
  std::string name;
  std::uint64_t data_offset = 0;
  std::uint64_t value_count = 0;
};

/**
 * Layout (little-endian):
 *   "HNF1" | u32 branch_count | index entries | data regions
 *   index entry: u8 name_len | name | u64 data_offset (absolute) | u64 value_count
 *   data region: value_count raw binary64 values
 *
 * Values are copied bit-for-bit, NaN payloads included.
 */
Bytes write_hier_file(std::span<const Branch> branches);
HierFile read_hier_file(std::span<const std::uint8_t> bytes);

/// Random access over an encoded file.  The constructor validates the whole
/// index; read_branch then touches only that branch's data region.
class HierReader {
 public:
  explicit HierReader(std::span<const std::uint8_t> bytes);

  const std::vector<BranchEntry>& index() const noexcept { return index_; }
  const BranchEntry& entry(const std::string& name) const;
  std::vector<double> read_branch(const std::string& name) const;

  /// Bytes of header and index table.
  std::uint64_t header_bytes() const noexcept { return header_bytes_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::vector<BranchEntry> index_;
  std::uint64_t header_bytes_ = 0;
};

}  // namespace offload
