#include <gtest/gtest.h>

#include <random>

#include "cen/encoder.hpp"
#include "test_util.hpp"

using namespace cen;
using testutil::random_tensor;

namespace {

struct EncoderFixture {
  ParamStore ps;
  std::size_t n, d, r, layers;

  EncoderFixture(std::size_t n_, std::size_t d_, std::size_t r_, std::size_t layers_, std::uint64_t seed)
      : n(n_), d(d_), r(r_), layers(layers_) {
    std::mt19937_64 rng(seed);
    ps.add("H", random_tensor({n, d}, rng));
    ps.add("R", random_tensor({r, d}, rng));
    for (std::size_t l = 0; l < layers; ++l) {
      ps.add("W1." + std::to_string(l), random_tensor({d, d}, rng, 0.7));
      ps.add("W2." + std::to_string(l), random_tensor({d, d}, rng, 0.7));
    }
    ps.add("W4", random_tensor({d, d}, rng));
    ps.add("b4", random_tensor({d}, rng));
  }

  EncoderVars bind(ad::Tape& tape) const {
    EncoderVars v;
    v.entities = tape.param(ps, "H");
    v.relations = tape.param(ps, "R");
    for (std::size_t l = 0; l < layers; ++l) {
      v.layers.push_back({tape.param(ps, "W1." + std::to_string(l)), tape.param(ps, "W2." + std::to_string(l))});
    }
    v.w_gate = tape.param(ps, "W4");
    v.b_gate = tape.param(ps, "b4");
    return v;
  }
};

std::vector<Triple> random_facts(std::size_t count, std::size_t n, std::size_t r, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> e(0, static_cast<int>(n) - 1), rel(0, static_cast<int>(r) - 1);
  std::vector<Triple> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back({e(rng), rel(rng), e(rng)});
  return out;
}

}  // namespace

TEST(RgcnLayer, EmptySnapshotIsSelfLoopOnly) {
  EncoderFixture f(5, 3, 2, 1, 1);
  ad::Tape tape(false);
  const auto v = f.bind(tape);
  const GraphIndex empty({}, 5, 2);
  const auto out = rgcn_layer(v.entities, v.relations, empty, v.layers[0].w_msg, v.layers[0].w_self,
                              ad::Activation::Relu);
  const auto expect = ad::relu(ad::matmul_bt(v.entities, v.layers[0].w_self));
  EXPECT_EQ(out.value(), expect.value());
}

TEST(RgcnLayer, SingleFactHandArithmetic) {
  ad::Tape tape(false);
  const auto h = tape.constant(Tensor::matrix({{1.0, 2.0}, {3.0, -4.0}}));
  const auto rel = tape.constant(Tensor(Shape{1, 2}));
  const auto eye = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  const std::vector<Triple> facts{{0, 0, 1}};
  const GraphIndex g(facts, 2, 1);
  const auto out = rgcn_layer(h, rel, g, eye, eye, ad::Activation::Identity);
  EXPECT_EQ(out.value(), Tensor::matrix({{1.0, 2.0}, {4.0, -2.0}}));
}

TEST(RgcnLayer, MatchesEdgeLoopOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    EncoderFixture f(6, 4, 3, 1, 100 + trial);
    const auto facts = random_facts(10, 6, 3, rng);
    const GraphIndex g(facts, 6, 3);
    ad::Tape tape(false);
    const auto v = f.bind(tape);
    for (auto act : {ad::Activation::Relu, ad::Activation::Tanh}) {
      const auto out = rgcn_layer(v.entities, v.relations, g, v.layers[0].w_msg, v.layers[0].w_self, act);
      const auto expect = oracle::rgcn_layer(testutil::to_mat(f.ps.get("H")), testutil::to_mat(f.ps.get("R")), facts,
                                             testutil::to_mat(f.ps.get("W1.0")), testutil::to_mat(f.ps.get("W2.0")),
                                             act == ad::Activation::Relu ? 1 : 2);
      EXPECT_LE(testutil::max_diff(oracle::flatten(expect), out.value().data()), 1e-12);
    }
  }
}

TEST(SkipConnection, GateSaturation) {
  std::mt19937_64 rng(3);
  ad::Tape tape(false);
  const auto hat = tape.constant(random_tensor({4, 3}, rng));
  const auto prev = tape.constant(random_tensor({4, 3}, rng));
  const auto w0 = tape.constant(Tensor(Shape{3, 3}));
  const auto closed = skip_connection(hat, prev, w0, tape.constant(Tensor(Shape{3}, -30.0)));
  const auto open = skip_connection(hat, prev, w0, tape.constant(Tensor(Shape{3}, 30.0)));
  EXPECT_LT(max_abs_diff(closed.value(), prev.value()), 1e-12);
  EXPECT_LT(max_abs_diff(open.value(), hat.value()), 1e-12);
  const auto add = skip_connection(hat, prev, w0, tape.constant(Tensor(Shape{3})), SkipMode::Additive);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(add.value()[i], hat.value()[i] + prev.value()[i]);
}

TEST(SkipConnection, OutputBetweenInputs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape tape(false);
    const auto hat = tape.constant(random_tensor({5, 4}, rng, 3.0));
    const auto prev = tape.constant(random_tensor({5, 4}, rng, 3.0));
    const auto out = skip_connection(hat, prev, tape.constant(random_tensor({4, 4}, rng, 2.0)),
                                     tape.constant(random_tensor({4}, rng)));
    for (std::size_t i = 0; i < 20; ++i) {
      EXPECT_GE(out.value()[i], std::min(hat.value()[i], prev.value()[i]) - 1e-15);
      EXPECT_LE(out.value()[i], std::max(hat.value()[i], prev.value()[i]) + 1e-15);
    }
  }
}

TEST(EncodeSequence, KOneIsStackPlusSkip) {
  EncoderFixture f(6, 4, 3, 2, 5);
  std::mt19937_64 rng(5);
  const auto facts = random_facts(8, 6, 3, rng);
  const GraphIndex g(facts, 6, 3);
  ad::Tape tape(false);
  const auto v = f.bind(tape);
  const GraphIndex* one[] = {&g};
  const auto out = encode_sequence(v, one, {});
  const auto manual = skip_connection(rgcn_stack(v, v.entities, g, {}), v.entities, v.w_gate, v.b_gate);
  EXPECT_EQ(out.value(), manual.value());
}

TEST(EncodeSequence, EmptySnapshotsClosedGateReturnH) {
  EncoderFixture f(4, 3, 2, 1, 6);
  f.ps.get("W4").fill(0.0);
  f.ps.get("b4").fill(-40.0);
  const GraphIndex empty({}, 4, 2);
  const GraphIndex* hist[] = {&empty, &empty, &empty};
  ad::Tape tape(false);
  const auto v = f.bind(tape);
  EXPECT_LT(max_abs_diff(encode_sequence(v, hist, {}).value(), f.ps.get("H")), 1e-15);
}

TEST(EncodeSequence, ThreeStepsChainOneStep) {
  EncoderFixture f(6, 4, 3, 2, 7);
  std::mt19937_64 rng(7);
  std::vector<GraphIndex> graphs;
  for (int i = 0; i < 3; ++i) graphs.emplace_back(random_facts(9, 6, 3, rng), 6, 3);
  const GraphIndex* hist[] = {&graphs[0], &graphs[1], &graphs[2]};
  ad::Tape tape(false);
  const auto v = f.bind(tape);
  const auto direct = encode_sequence(v, hist, {});
  EncoderVars carried = v;
  for (const auto* g : hist) {
    const GraphIndex* one[] = {g};
    carried.entities = encode_sequence(carried, one, {});
  }
  EXPECT_EQ(direct.value(), carried.entities.value());
}

TEST(EncodeAll, TruncationAndStandaloneEquality) {
  EncoderFixture f(6, 4, 3, 1, 8);
  std::mt19937_64 rng(8);
  std::vector<GraphIndex> graphs;
  for (int i = 0; i < 3; ++i) graphs.emplace_back(random_facts(7, 6, 3, rng), 6, 3);
  const GraphIndex* hist[] = {&graphs[0], &graphs[1], &graphs[2]};
  ad::Tape tape(false);
  const auto v = f.bind(tape);

  const auto one = encode_all(v, 1, hist, {});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].value(), encode_sequence(v, std::span(hist).last(1), {}).value());

  const auto reps = encode_all(v, 5, hist, {});
  ASSERT_EQ(reps.size(), 5u);
  for (std::size_t k = 1; k <= 3; ++k) {
    EXPECT_EQ(reps[k - 1].value(), encode_sequence(v, std::span(hist).last(k), {}).value()) << k;
  }
  EXPECT_EQ(reps[3].value(), reps[2].value());
  EXPECT_EQ(reps[4].value(), reps[2].value());
  for (const auto& r : reps) EXPECT_TRUE(all_finite(r.value()));
}

TEST(EncodeAll, SharedWeightsReachEveryLength) {
  EncoderFixture f(6, 4, 3, 1, 9);
  std::mt19937_64 rng(9);
  std::vector<GraphIndex> graphs;
  for (int i = 0; i < 3; ++i) graphs.emplace_back(random_facts(9, 6, 3, rng), 6, 3);
  const GraphIndex* hist[] = {&graphs[0], &graphs[1], &graphs[2]};
  for (std::size_t k = 0; k < 3; ++k) {
    ad::Tape tape;
    const auto v = f.bind(tape);
    const auto reps = encode_all(v, 3, hist, {});
    const auto g = ad::backward(ad::sum(ad::tanh(reps[k])));
    double norm = 0.0;
    for (double x : g.at("W1.0").data()) norm += x * x;
    EXPECT_GT(norm, 0.0) << "length " << k + 1;
  }
}

TEST(EncodeAll, TrainDropoutDependsOnSeedOnly) {
  EncoderFixture f(6, 4, 3, 2, 10);
  std::mt19937_64 rng(10);
  std::vector<GraphIndex> graphs;
  for (int i = 0; i < 2; ++i) graphs.emplace_back(random_facts(9, 6, 3, rng), 6, 3);
  const GraphIndex* hist[] = {&graphs[0], &graphs[1]};
  auto run = [&](std::uint64_t seed, bool train) {
    std::mt19937_64 r(seed);
    EncodeOptions opt;
    opt.dropout = 0.3;
    opt.train = train;
    opt.rng = &r;
    ad::Tape tape(false);
    return encode_all(f.bind(tape), 2, hist, opt)[1].value();
  };
  EXPECT_EQ(run(1, true), run(1, true));
  EXPECT_NE(run(1, true), run(2, true));
  EXPECT_EQ(run(1, false), run(2, false));
}

TEST(EncodeSequence, GradientsThroughThreeStepUnroll) {
  EncoderFixture f(5, 3, 2, 2, 11);
  std::mt19937_64 rng(11);
  std::vector<GraphIndex> graphs;
  for (int i = 0; i < 3; ++i) graphs.emplace_back(random_facts(6, 5, 2, rng), 5, 2);
  const GraphIndex* hist[] = {&graphs[0], &graphs[1], &graphs[2]};
  const Tensor w = random_tensor({5, 3}, rng);
  EncodeOptions opt;
  opt.act = ad::Activation::Tanh;
  const auto res = ad::grad_check(
      [&](ad::Tape& tape) {
        return ad::sum(ad::mul(encode_sequence(f.bind(tape), hist, opt), tape.constant(w)));
      },
      f.ps);
  EXPECT_LE(res.max_rel_error, 1e-4) << res.worst_param;
}
