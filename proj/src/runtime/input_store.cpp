#include "offload/runtime/input_store.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

namespace offload {

void MemoryInputStore::put(const std::string& ref, Bytes bytes) {
  files_[ref] = std::make_shared<const Bytes>(std::move(bytes));
}

std::shared_ptr<const Bytes> MemoryInputStore::get(const std::string& ref) const {
  const auto it = files_.find(ref);
  return it == files_.end() ? nullptr : it->second;
}

std::size_t MemoryInputStore::size_of(const std::string& ref) const {
  const auto it = files_.find(ref);
  return it == files_.end() ? 0 : it->second->size();
}

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::shared_ptr<const Bytes> DirectoryInputStore::get(const std::string& ref) const {
  std::error_code ec;
  const std::filesystem::path p = std::filesystem::path(ref).is_absolute() ? std::filesystem::path(ref) : root_ / ref;
  if (!std::filesystem::is_regular_file(p, ec)) return nullptr;
  try {
    return std::make_shared<const Bytes>(read_file_bytes(p));
  } catch (const std::runtime_error&) {
    return nullptr;
  }
}

}  // namespace offload
