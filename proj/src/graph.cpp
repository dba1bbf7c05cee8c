#include "cen/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "cen/errors.hpp"

namespace cen {

namespace {

// Counting-sort style grouping: offsets[g]..offsets[g+1] index into `order`.
void group_by(std::span<const std::int32_t> keys, std::size_t num_groups, std::vector<std::size_t>& offsets,
              std::vector<std::size_t>& order) {
  offsets.assign(num_groups + 1, 0);
  for (auto k : keys) ++offsets[static_cast<std::size_t>(k) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  order.assign(keys.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t e = 0; e < keys.size(); ++e) order[cursor[static_cast<std::size_t>(keys[e])]++] = e;
}

}  // namespace

GraphIndex::GraphIndex(std::span<const Triple> facts, std::size_t num_entities, std::size_t num_relations)
    : num_entities_(num_entities), num_relations_(num_relations) {
  std::vector<std::int32_t> dst_in;
  dst_in.reserve(facts.size());
  for (const auto& f : facts) {
    if (f.s < 0 || f.o < 0 || static_cast<std::size_t>(f.s) >= num_entities ||
        static_cast<std::size_t>(f.o) >= num_entities) {
      throw IndexError("entity id out of range in snapshot (|V|=" + std::to_string(num_entities) + ")");
    }
    if (f.r < 0 || static_cast<std::size_t>(f.r) >= num_relations) {
      throw IndexError("relation id " + std::to_string(f.r) + " out of range (" + std::to_string(num_relations) + ")");
    }
    dst_in.push_back(f.o);
  }

  std::vector<std::size_t> by_dst;
  group_by(dst_in, num_entities, in_offsets_, by_dst);
  src_.resize(facts.size());
  rel_.resize(facts.size());
  dst_.resize(facts.size());
  for (std::size_t i = 0; i < by_dst.size(); ++i) {
    const auto& f = facts[by_dst[i]];
    src_[i] = f.s;
    rel_[i] = f.r;
    dst_[i] = f.o;
  }
  group_by(src_, num_entities, out_offsets_, out_edges_);
  group_by(rel_, num_relations, rel_offsets_, rel_edges_);
}

}  // namespace cen
