#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cen/autodiff.hpp"
#include "cen/param_store.hpp"

namespace cen {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

// One bias-corrected Adam update of every trainable entry. Frozen entries are
// untouched. Throws ContractError when a trainable entry has no gradient or a
// gradient names an unknown entry.
void adam_step(ParamStore& params, const ad::GradMap& grads, AdamState& state);

// Rescales all gradients in place so their global L2 norm is at most
// max_norm. Returns the norm before clipping. max_norm <= 0 disables.
double clip_global_norm(ad::GradMap& grads, double max_norm);

}  // namespace cen
