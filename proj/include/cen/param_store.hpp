#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "cen/tensor.hpp"

namespace cen {

/// Named model parameters in insertion order. Entries are either trainable
/// (updated by the optimizer and differentiated) or frozen.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
  };

  void add(std::string name, Tensor value, bool trainable = true);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool trainable(const std::string& name) const;
  void set_trainable(const std::string& name, bool trainable);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }
  std::vector<std::string> trainable_names() const;

  // Shapes, names, flags and values all equal.
  bool operator==(const ParamStore& other) const;

  void write(std::ostream& os) const;
  static ParamStore read(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Checkpoint container constants.
inline constexpr char kCheckpointMagic[] = "CENCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Entries whose name starts with this prefix are bookkeeping, never trained.
inline constexpr std::string_view kMetaPrefix = "meta.";

}  // namespace cen
