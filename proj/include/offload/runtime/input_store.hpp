#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "offload/wire.hpp"

namespace offload {

/// Where a node finds job input files, keyed by JobSpec::input_ref.
class InputStore {
 public:
  virtual ~InputStore() = default;
  /// nullptr when the input does not exist.
  virtual std::shared_ptr<const Bytes> get(const std::string& ref) const = 0;
};

class MemoryInputStore : public InputStore {
 public:
  void put(const std::string& ref, Bytes bytes);
  std::shared_ptr<const Bytes> get(const std::string& ref) const override;
  std::size_t size_of(const std::string& ref) const;

 private:
  std::map<std::string, std::shared_ptr<const Bytes>> files_;
};

/// Resolves refs as paths; relative refs are taken from `root`.
class DirectoryInputStore : public InputStore {
 public:
  explicit DirectoryInputStore(std::filesystem::path root = ".") : root_(std::move(root)) {}
  std::shared_ptr<const Bytes> get(const std::string& ref) const override;

 private:
  std::filesystem::path root_;
};

Bytes read_file_bytes(const std::filesystem::path& path);

}  // namespace offload
