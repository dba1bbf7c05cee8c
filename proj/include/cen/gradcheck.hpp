#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cen/autodiff.hpp"
#include "cen/dataset.hpp"
#include "cen/model.hpp"

namespace cen {

struct ToyLimits {
  std::size_t max_entities = 8;
  std::size_t max_dim = 6;
  std::size_t max_length = 3;
  std::size_t max_channels = 3;
  std::size_t kernel_width = 3;
};

/// A small random CEN problem: snapshots, a model with random architecture
/// choices, queries at the last timestamp and a TR anchor.
struct ToyInstance {
  TkgDataset data;
  std::vector<GraphIndex> graphs;
  CenModel model;
  ParamStore anchor;
  double lambda = 0.0;
  std::size_t time = 0;
  std::uint64_t dropout_seed = 0;
};

ToyInstance make_toy_instance(std::uint64_t seed, const ToyLimits& limits = {});

// Train-mode CEN loss at inst.time (dropout masks fixed by dropout_seed) plus
// the TR penalty towards inst.anchor.
ad::Var toy_loss(ad::Tape& tape, const ToyInstance& inst);

ad::GradCheckResult check_toy_gradients(ToyInstance& inst, double eps = 1e-5);

}  // namespace cen
