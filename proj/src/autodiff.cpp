#include "cen/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cen/kernels.hpp"

namespace cen::ad {

namespace kn = cen::kernels;

// ---- Var / Tape --------------------------------------------------------------

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value, std::string name) {
  if (params_.count(name)) throw ContractError("parameter '" + name + "' bound twice on one tape");
  nodes_.push_back(Node{std::move(value), {}, false, recording_, {}, name});
  params_.emplace(std::move(name), nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
  if (!store.trainable(name)) return constant(store.get(name));
  return leaf(store.get(name), name);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape() != this) throw ContractError("op mixes Vars from different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  needs = needs && recording_;
  nodes_.push_back(Node{std::move(value), {}, false, needs, needs ? std::move(fn) : BackwardFn{}, {}});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  auto& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  auto& dst = grad(id);
  if (dst.size() != g.size()) throw DimensionError("gradient shape mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::clear() {
  nodes_.clear();
  params_.clear();
}

GradMap backward(Var loss) {
  Tape* tape = loss.tape();
  if (!tape) throw ContractError("backward on unbound Var");
  if (!tape->recording()) throw ContractError("backward on a non-recording tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  auto& nodes = tape->nodes_;
  if (nodes[loss.id()].requires_grad) {
    tape->grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      auto& n = nodes[i];
      if (!n.has_grad || !n.backward) continue;
      n.backward(*tape, n.value, n.grad);
    }
  }
  GradMap grads;
  for (const auto& [name, id] : tape->params_) grads.emplace(name, tape->grad(id));
  tape->clear();
  return grads;
}

Activation parse_activation(std::string_view s) {
  if (s == "identity" || s == "none") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

namespace {

void require_matrix(const Var& v, const char* op) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(v.shape()));
  }
}

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// Elementwise op whose derivative is expressed through (input, output).
template <typename Fwd, typename Deriv>
Var pointwise(const Var& a, Fwd fwd, Deriv deriv) {
  const auto& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, deriv](Tape& t, const Tensor& y, const Tensor& g) {
    auto& ga = t.grad(ia);
    const auto& x = t.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

// ---- linear algebra -------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], n = a.shape()[1], p = b.shape()[1];
  if (b.shape()[0] != n) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor out(Shape{m, p});
  kn::gemm(a.value().data(), b.value().data(), out.data(), m, n, p, false);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib, m, n, p](Tape& t, const Tensor&, const Tensor& g) {
    // dA = dC * B^T, dB = A^T * dC
    if (t.requires_grad(ia)) kn::gemm_bt(g.data(), t.value(ib).data(), t.grad(ia).data(), m, p, n, true);
    if (t.requires_grad(ib)) kn::gemm_at(t.value(ia).data(), g.data(), t.grad(ib).data(), n, m, p, true);
  });
}

Var matmul_bt(const Var& a, const Var& b) {
  require_matrix(a, "matmul_bt");
  require_matrix(b, "matmul_bt");
  const std::size_t m = a.shape()[0], n = a.shape()[1], p = b.shape()[0];
  if (b.shape()[1] != n) {
    throw DimensionError("matmul_bt: inner dimensions disagree for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()) + "^T");
  }
  Tensor out(Shape{m, p});
  kn::gemm_bt(a.value().data(), b.value().data(), out.data(), m, n, p, false);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib, m, n, p](Tape& t, const Tensor&, const Tensor& g) {
    // C = A B^T: dA = dC * B, dB = dC^T * A
    if (t.requires_grad(ia)) kn::gemm(g.data(), t.value(ib).data(), t.grad(ia).data(), m, p, n, true);
    if (t.requires_grad(ib)) kn::gemm_at(g.data(), t.value(ia).data(), t.grad(ib).data(), p, m, n, true);
  });
}

// ---- elementwise ---------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      const auto& y = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      const auto& x = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var add_row(const Var& a, const Var& bias) {
  require_matrix(a, "add_row");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (bias.value().size() != n) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " for matrix " + shape_str(a.shape()));
  }
  Tensor out(a.shape());
  const auto& x = a.value();
  const auto& b = bias.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
  const auto ia = a.id(), ib = bias.id();
  return a.tape()->record(std::move(out), {a, bias}, [ia, ib, m, n](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Var scale(const Var& a, double factor) {
  return pointwise(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var one_minus(const Var& a) {
  return pointwise(
      a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var sigmoid(const Var& a) {
  return pointwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return pointwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(const Var& a) {
  return pointwise(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var activate(const Var& a, Activation act) {
  switch (act) {
    case Activation::Identity: return a;
    case Activation::Relu: return relu(a);
    case Activation::Tanh: return tanh(a);
    case Activation::Sigmoid: return sigmoid(a);
  }
  return a;
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return a.tape()->record(Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor&, const Tensor& g) {
    auto& ga = t.grad(ia);
    const double gv = g[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
  });
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ContractError("add_n of no terms");
  Var acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

Var concat_rows(const Var& a, const Var& b) {
  require_matrix(a, "concat_rows");
  require_matrix(b, "concat_rows");
  if (a.shape()[1] != b.shape()[1]) {
    throw DimensionError("concat_rows: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t na = a.value().size();
  std::vector<double> data(a.value().storage());
  data.insert(data.end(), b.value().data().begin(), b.value().data().end());
  Tensor out(Shape{a.shape()[0] + b.shape()[0], a.shape()[1]}, std::move(data));
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib, na](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  if (shape_numel(shape) != a.value().size()) {
    throw DimensionError("reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  const auto ia = a.id();
  return a.tape()->record(a.value().reshaped(std::move(shape)), {a},
                          [ia](Tape& t, const Tensor&, const Tensor& g) {
                            auto& ga = t.grad(ia);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                          });
}

Var gather_rows(const Var& table, std::span<const std::int32_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t n = table.shape()[0], d = table.shape()[1];
  Tensor out(Shape{ids.size(), d});
  const auto& src = table.value();
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] < 0 || static_cast<std::size_t>(ids[b]) >= n) {
      throw IndexError("gather_rows: id " + std::to_string(ids[b]) + " outside table of " + std::to_string(n) + " rows");
    }
    std::copy_n(src.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ids[b]) * d), d,
                out.data().begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  const auto it = table.id();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), {table},
                              [it, d, idx = std::move(idx)](Tape& t, const Tensor&, const Tensor& g) {
                                auto& gt = t.grad(it);
                                for (std::size_t b = 0; b < idx.size(); ++b) {
                                  double* row = gt.data().data() + static_cast<std::size_t>(idx[b]) * d;
                                  for (std::size_t j = 0; j < d; ++j) row[j] += g[b * d + j];
                                }
                              });
}

// ---- graph / conv ----------------------------------------------------------------

Var rgcn_aggregate(const Var& entities, const Var& relations, const GraphIndex& g) {
  require_matrix(entities, "rgcn_aggregate");
  require_matrix(relations, "rgcn_aggregate");
  const std::size_t d = entities.shape()[1];
  if (entities.shape()[0] != g.num_entities() || relations.shape()[1] != d ||
      relations.shape()[0] < g.num_relations()) {
    throw DimensionError("rgcn_aggregate: entities " + shape_str(entities.shape()) + ", relations " +
                         shape_str(relations.shape()) + " for a graph over " + std::to_string(g.num_entities()) +
                         " entities / " + std::to_string(g.num_relations()) + " relations");
  }
  Tensor out(Shape{g.num_entities(), d});
  kn::rgcn_aggregate(entities.value().data(), relations.value().data(), g, out.data(), d);
  const auto ie = entities.id(), ir = relations.id();
  const GraphIndex* gp = &g;
  return entities.tape()->record(std::move(out), {entities, relations},
                                 [ie, ir, gp, d](Tape& t, const Tensor&, const Tensor& grad) {
                                   // Both buffers are needed by the kernel; a constant side
                                   // receives a throwaway gradient.
                                   Tensor scratch_h, scratch_r;
                                   Tensor& gh = t.requires_grad(ie) ? t.grad(ie) : (scratch_h = Tensor(t.value(ie).shape()));
                                   Tensor& gr = t.requires_grad(ir) ? t.grad(ir) : (scratch_r = Tensor(t.value(ir).shape()));
                                   kn::rgcn_aggregate_backward(grad.data(), *gp, gh.data(), gr.data(), d);
                                 });
}

namespace {

void check_kernels(const Tensor& k) {
  if (k.rank() != 3) throw DimensionError("conv kernels must be C x 2 x M, got " + shape_str(k.shape()));
  if (k.shape()[1] != 2) throw DimensionError("conv kernel height must be 2, got " + shape_str(k.shape()));
  if (k.shape()[2] % 2 == 0) {
    throw ConfigError("conv kernel width must be odd for same padding, got " + std::to_string(k.shape()[2]));
  }
}

}  // namespace

Var conv_pairs(const Var& top, const Var& bottom, const Var& kernels) {
  require_matrix(top, "conv_pairs");
  require_same(top, bottom, "conv_pairs");
  check_kernels(kernels.value());
  const std::size_t batch = top.shape()[0], d = top.shape()[1];
  const std::size_t channels = kernels.shape()[0], width = kernels.shape()[2];
  Tensor out(Shape{batch, channels * d});
  kn::conv_forward(top.value().data(), bottom.value().data(), kernels.value().data(), out.data(), batch, d, channels,
                   width);
  const auto it = top.id(), ib = bottom.id(), ik = kernels.id();
  return top.tape()->record(
      std::move(out), {top, bottom, kernels},
      [it, ib, ik, batch, d, channels, width](Tape& t, const Tensor&, const Tensor& g) {
        if (t.requires_grad(it) || t.requires_grad(ib)) {
          Tensor scratch_t, scratch_b;
          Tensor& gt = t.requires_grad(it) ? t.grad(it) : (scratch_t = Tensor(t.value(it).shape()));
          Tensor& gb = t.requires_grad(ib) ? t.grad(ib) : (scratch_b = Tensor(t.value(ib).shape()));
          kn::conv_backward_input(g.data(), t.value(ik).data(), gt.data(), gb.data(), batch, d, channels, width);
        }
        if (t.requires_grad(ik)) {
          kn::conv_backward_kernels(g.data(), t.value(it).data(), t.value(ib).data(), t.grad(ik).data(), batch, d,
                                    channels, width);
        }
      });
}

Var conv_stack(const Var& pair, const Var& kernels) {
  require_matrix(pair, "conv_stack");
  if (pair.shape()[0] != 2) throw DimensionError("conv_stack expects a 2 x d input, got " + shape_str(pair.shape()));
  check_kernels(kernels.value());
  const std::size_t d = pair.shape()[1];
  const std::size_t channels = kernels.shape()[0], width = kernels.shape()[2];
  const auto& x = pair.value();
  Tensor out(Shape{channels, d});
  kn::conv_forward(x.data().subspan(0, d), x.data().subspan(d, d), kernels.value().data(), out.data(), 1, d, channels,
                   width);
  const auto ip = pair.id(), ik = kernels.id();
  return pair.tape()->record(std::move(out), {pair, kernels},
                             [ip, ik, d, channels, width](Tape& t, const Tensor&, const Tensor& g) {
                               const auto& x = t.value(ip);
                               if (t.requires_grad(ip)) {
                                 auto gp = t.grad(ip).data();
                                 kn::conv_backward_input(g.data(), t.value(ik).data(), gp.subspan(0, d),
                                                         gp.subspan(d, d), 1, d, channels, width);
                               }
                               if (t.requires_grad(ik)) {
                                 kn::conv_backward_kernels(g.data(), x.data().subspan(0, d), x.data().subspan(d, d),
                                                           t.grad(ik).data(), 1, d, channels, width);
                               }
                             });
}

// ---- stochastic / losses ---------------------------------------------------------

Var dropout(const Var& a, double rate, bool train, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!train || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto mask = std::make_shared<std::vector<double>>(a.value().size());
  for (auto& m : *mask) m = unif(rng) < rate ? 0.0 : keep_scale;
  Tensor out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * (*mask)[i];
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, mask](Tape& t, const Tensor&, const Tensor& g) {
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*mask)[i];
  });
}

Var cross_entropy(const Var& logits, std::span<const std::int32_t> targets) {
  require_matrix(logits, "cross_entropy");
  const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
  if (targets.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(batch) +
                         " rows");
  }
  if (batch == 0 || classes == 0) throw DimensionError("cross_entropy on empty logits");
  for (auto t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  std::vector<double> row_loss(batch);
  auto softgrad = std::make_shared<Tensor>(logits.shape());
  kn::softmax_xent(logits.value().data(), targets, row_loss, softgrad->data(), batch, classes,
                   1.0 / static_cast<double>(batch));
  double total = 0.0;
  for (double l : row_loss) total += l;
  const auto il = logits.id();
  return logits.tape()->record(Tensor::scalar(total / static_cast<double>(batch)), {logits},
                               [il, softgrad](Tape& t, const Tensor&, const Tensor& g) {
                                 auto& gl = t.grad(il);
                                 const double s = g[0];
                                 for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += s * (*softgrad)[i];
                               });
}

Var squared_distance(const Var& a, const Tensor& anchor) {
  if (a.shape() != anchor.shape()) {
    throw DimensionError("squared_distance: " + shape_str(a.shape()) + " vs anchor " + shape_str(anchor.shape()));
  }
  const auto& x = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - anchor[i];
    s += diff * diff;
  }
  const auto ia = a.id();
  auto anchor_copy = std::make_shared<Tensor>(anchor);
  return a.tape()->record(Tensor::scalar(s), {a}, [ia, anchor_copy](Tape& t, const Tensor&, const Tensor& g) {
    auto& ga = t.grad(ia);
    const auto& x = t.value(ia);
    const double gv = g[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * gv * (x[i] - (*anchor_copy)[i]);
  });
}

// ---- utilities -------------------------------------------------------------------

Tensor xavier_uniform(const Shape& shape, std::mt19937_64& rng) {
  if (shape.size() < 2) throw DimensionError("xavier init needs rank >= 2, got " + shape_str(shape));
  std::size_t receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
  const double fan_in = static_cast<double>(shape[1] * receptive);
  const double fan_out = static_cast<double>(shape[0] * receptive);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> unif(-bound, bound);
  Tensor t(shape);
  for (auto& v : t.data()) v = unif(rng);
  return t;
}

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn, ParamStore& params, double eps, double floor) {
  GradMap analytic;
  {
    Tape tape;
    analytic = backward(loss_fn(tape));
  }
  auto eval = [&] {
    Tape tape(false);
    return loss_fn(tape).value().item();
  };
  GradCheckResult res;
  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    auto it = analytic.find(entry.name);
    if (it == analytic.end()) throw ContractError("grad_check: no gradient for '" + entry.name + "'");
    const Tensor& ga = it->second;
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double orig = entry.value[i];
      entry.value[i] = orig + eps;
      const double up = eval();
      entry.value[i] = orig - eps;
      const double down = eval();
      entry.value[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(ga[i]), std::abs(numeric), floor});
      const double rel = std::abs(ga[i] - numeric) / denom;
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = entry.name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace cen::ad
