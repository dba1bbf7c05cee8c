#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cen/config.hpp"

namespace cen {

// SHA-1 of "blob <size>\0<content>", the object id git assigns to a file.
std::string git_blob_hash(const std::filesystem::path& path);
std::string sha1_hex(const std::string& bytes);

/// Record of one command invocation, written before any training step.
struct RunManifest {
  std::string command;
  KeyValues config;  // fully materialized
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // path -> git blob hash
  std::vector<std::string> outputs;

  void add_input(const std::filesystem::path& path);
  std::string to_json() const;
  // Hash of to_json(); tagged onto every CSV the run writes.
  std::string hash() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace cen
