#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cen {

struct Triple {
  std::int32_t s = 0;
  std::int32_t r = 0;
  std::int32_t o = 0;
  auto operator<=>(const Triple&) const = default;
};

/// Edge list of one snapshot in three CSR views (by target, by source, by
/// relation). Built once per snapshot; the aggregation kernels only read it.
/// Edge order inside each view is fixed, which keeps every reduction
/// deterministic regardless of the thread count.
class GraphIndex {
 public:
  GraphIndex() = default;
  GraphIndex(std::span<const Triple> facts, std::size_t num_entities, std::size_t num_relations);

  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  std::size_t num_edges() const noexcept { return src_.size(); }

  // Edges sorted by (target, input order).
  std::span<const std::int32_t> src() const noexcept { return src_; }
  std::span<const std::int32_t> rel() const noexcept { return rel_; }
  std::span<const std::int32_t> dst() const noexcept { return dst_; }
  std::span<const std::size_t> in_offsets() const noexcept { return in_offsets_; }

  // Indices into the by-target edge arrays, grouped by source / relation.
  std::span<const std::size_t> out_offsets() const noexcept { return out_offsets_; }
  std::span<const std::size_t> out_edges() const noexcept { return out_edges_; }
  std::span<const std::size_t> rel_offsets() const noexcept { return rel_offsets_; }
  std::span<const std::size_t> rel_edges() const noexcept { return rel_edges_; }

  std::size_t in_degree(std::size_t entity) const { return in_offsets_[entity + 1] - in_offsets_[entity]; }

 private:
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<std::int32_t> src_, rel_, dst_;
  std::vector<std::size_t> in_offsets_;
  std::vector<std::size_t> out_offsets_, out_edges_;
  std::vector<std::size_t> rel_offsets_, rel_edges_;
};

}  // namespace cen
