#include "cen/param_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cen {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw ParseError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

}  // namespace

void ParamStore::add(std::string name, Tensor value, bool trainable) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value), trainable});
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].trainable;
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  entries_[it->second].trainable = trainable;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> names;
  for (const auto& e : entries_)
    if (e.trainable) names.push_back(e.name);
  return names;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.trainable != b.trainable || a.value.shape() != b.value.shape()) return false;
    // Bitwise comparison so that -0.0/0.0 and NaN payloads count as different.
    if (std::memcmp(a.value.data().data(), b.value.data().data(), a.value.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

void ParamStore::write(std::ostream& os) const {
  os.write(kCheckpointMagic, kMagicLen);
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint64_t>(os, entries_.size());
  for (const auto& e : entries_) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.rank()));
    for (auto dim : e.value.shape()) put_le<std::uint64_t>(os, dim);
    for (double v : e.value.data()) put_le<double>(os, v);
  }
  if (!os) throw std::runtime_error("failed writing checkpoint");
}

ParamStore ParamStore::read(std::istream& is) {
  char magic[kMagicLen];
  if (!is.read(magic, kMagicLen) || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
    throw ParseError("not a CEN checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint64_t>(is);
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ParseError("truncated checkpoint");
    const auto rank = get_le<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& dim : shape) dim = get_le<std::uint64_t>(is);
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = get_le<double>(is);
    const bool trainable = !name.starts_with(kMetaPrefix);
    store.add(std::move(name), Tensor(std::move(shape), std::move(data)), trainable);
  }
  return store;
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write(os);
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read(is);
}

}  // namespace cen
