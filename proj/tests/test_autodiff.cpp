#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cen/adam.hpp"
#include "cen/autodiff.hpp"
#include "test_util.hpp"

using namespace cen;
using testutil::random_tensor;

namespace {

// Builds a scalar loss from one or two parameters and gradient-checks it.
double check_op(const std::function<ad::Var(ad::Tape&, const ad::Var&, const ad::Var&)>& op, Tensor a, Tensor b) {
  ParamStore ps;
  ps.add("a", std::move(a));
  ps.add("b", std::move(b));
  std::mt19937_64 wrng(99);
  // A random weighting makes the check sensitive to every output element.
  Tensor weights;
  auto loss = [&](ad::Tape& tape) {
    ad::Var out = op(tape, tape.param(ps, "a"), tape.param(ps, "b"));
    if (weights.size() != out.value().size()) weights = random_tensor(out.shape(), wrng);
    return ad::sum(ad::mul(out, tape.constant(weights)));
  };
  return ad::grad_check(loss, ps).max_rel_error;
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), DimensionError);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_THROW(t.item(), DimensionError);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Matmul, IdentityAndHandArithmetic) {
  ad::Tape tape(false);
  const auto i2 = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  const auto m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ(ad::matmul(i2, m).value(), m.value());
  const auto row = tape.constant(Tensor::matrix({{1, 2}}));
  const auto col = tape.constant(Tensor::matrix({{3}, {4}}));
  EXPECT_DOUBLE_EQ(ad::matmul(row, col).value().item(), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  ad::Tape tape;
  const auto a = tape.constant(Tensor(Shape{2, 3}));
  const auto b = tape.constant(Tensor(Shape{2, 3}));
  try {
    ad::matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] x [2x3]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumIsOnesTimesBT) {
  std::mt19937_64 rng(1);
  ParamStore ps;
  ps.add("a", random_tensor({3, 4}, rng));
  ps.add("b", random_tensor({4, 2}, rng));
  ad::Tape tape;
  const auto grads = ad::backward(ad::sum(ad::matmul(tape.param(ps, "a"), tape.param(ps, "b"))));
  const Tensor& b = ps.get("b");
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(grads.at("a").at(i, k), b.at(k, 0) + b.at(k, 1), 1e-14);
    }
  }
  const double err = ad::grad_check(
      [&](ad::Tape& t) { return ad::sum(ad::matmul(t.param(ps, "a"), t.param(ps, "b"))); }, ps).max_rel_error;
  EXPECT_LT(err, 1e-6);
}

TEST(Backward, SumAndSquare) {
  std::mt19937_64 rng(2);
  ParamStore ps;
  ps.add("x", random_tensor({2, 3}, rng));
  {
    ad::Tape tape;
    const auto g = ad::backward(ad::sum(tape.param(ps, "x")));
    for (double v : g.at("x").data()) EXPECT_EQ(v, 1.0);
  }
  ad::Tape tape;
  const auto x = tape.param(ps, "x");
  const auto g = ad::backward(ad::sum(ad::mul(x, x)));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g.at("x")[i], 2.0 * ps.get("x")[i]);
}

TEST(Backward, NonScalarIsContractError) {
  ParamStore ps;
  ps.add("x", Tensor(Shape{2, 2}, 1.0));
  ad::Tape tape;
  EXPECT_THROW(ad::backward(tape.param(ps, "x")), ContractError);
}

TEST(Backward, FanOutAccumulates) {
  ParamStore ps;
  ps.add("x", Tensor::vector({1.0, -2.0}));
  ad::Tape tape;
  const auto x = tape.param(ps, "x");
  const auto g = ad::backward(ad::sum(ad::add(ad::scale(x, 3.0), x)));
  EXPECT_EQ(g.at("x")[0], 4.0);
  EXPECT_EQ(g.at("x")[1], 4.0);
  EXPECT_EQ(tape.size(), 0u);  // cleared
}

TEST(ConvStack, TrivialCases) {
  ad::Tape tape(false);
  std::mt19937_64 rng(3);
  const auto kernels = tape.constant(random_tensor({4, 2, 3}, rng));
  const auto zero = ad::conv_stack(tape.constant(Tensor(Shape{2, 5})), kernels);
  for (double v : zero.value().data()) EXPECT_EQ(v, 0.0);

  const Tensor pair = Tensor::matrix({{1.5, -2.0, 3.0}, {7.0, 8.0, 9.0}});
  const auto sel = ad::conv_stack(tape.constant(pair), tape.constant(Tensor(Shape{1, 2, 1}, {1.0, 0.0})));
  EXPECT_EQ(sel.value().storage(), (std::vector<double>{1.5, -2.0, 3.0}));
}

TEST(ConvStack, MatchesLoopOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor pair = random_tensor({2, 4}, rng);
    const Tensor k = random_tensor({3, 2, 3}, rng);
    ad::Tape tape(false);
    const auto out = ad::conv_stack(tape.constant(pair), tape.constant(k));
    const auto expect = oracle::conv({pair[0], pair[1], pair[2], pair[3]}, {pair[4], pair[5], pair[6], pair[7]},
                                     testutil::to_kernels(k));
    EXPECT_LE(testutil::max_diff(oracle::flatten(expect), out.value().data()), 1e-12);
  }
}

TEST(ConvStack, ShapeErrors) {
  ad::Tape tape(false);
  const auto pair = tape.constant(Tensor(Shape{2, 4}));
  EXPECT_THROW(ad::conv_stack(pair, tape.constant(Tensor(Shape{1, 2, 2}))), ConfigError);
  EXPECT_THROW(ad::conv_stack(pair, tape.constant(Tensor(Shape{1, 3, 3}))), DimensionError);
  EXPECT_THROW(ad::conv_stack(tape.constant(Tensor(Shape{3, 4})), tape.constant(Tensor(Shape{1, 2, 3}))),
               DimensionError);
}

TEST(CrossEntropy, Examples) {
  ad::Tape tape(false);
  const std::vector<std::int32_t> t0{2};
  EXPECT_NEAR(ad::cross_entropy(tape.constant(Tensor(Shape{1, 4}, 0.3)), t0).value().item(), std::log(4.0), 1e-12);
  EXPECT_NEAR(ad::cross_entropy(tape.constant(Tensor(Shape{1, 4}, {0, 0, 1000, 0})), t0).value().item(), 0.0,
              1e-12);

  std::mt19937_64 rng(5);
  const Tensor logits = random_tensor({2, 5}, rng, 3.0);
  const std::vector<std::int32_t> targets{1, 4};
  double expect = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    double z = 0.0;
    for (std::size_t j = 0; j < 5; ++j) z += std::exp(logits.at(b, j));
    expect += std::log(z) - logits.at(b, targets[b]);
  }
  EXPECT_NEAR(ad::cross_entropy(tape.constant(logits), targets).value().item(), expect / 2, 1e-12);

  const std::vector<std::int32_t> bad{5, 0};
  EXPECT_THROW(ad::cross_entropy(tape.constant(logits), bad), IndexError);
}

TEST(CrossEntropy, SoftmaxRowsSumToOne) {
  // d(loss)/d(logits) = (softmax - onehot) / B, so each gradient row sums to 0
  // exactly when the softmax row sums to 1.
  std::mt19937_64 rng(6);
  ParamStore ps;
  ps.add("z", random_tensor({4, 7}, rng, 20.0));
  ad::Tape tape;
  const std::vector<std::int32_t> targets{0, 3, 6, 2};
  const auto g = ad::backward(ad::cross_entropy(tape.param(ps, "z"), targets));
  for (std::size_t b = 0; b < 4; ++b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) sum += g.at("z").at(b, j) * 4.0 + (j == std::size_t(targets[b]) ? 1.0 : 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(7);
  ad::Tape tape(false);
  const auto x = tape.constant(random_tensor({3, 3}, rng));
  EXPECT_EQ(ad::dropout(x, 0.0, true, rng).value(), x.value());
  EXPECT_EQ(ad::dropout(x, 0.9, false, rng).value(), x.value());
  EXPECT_THROW(ad::dropout(x, 1.0, true, rng), ConfigError);
}

TEST(Dropout, SeededAndInverted) {
  std::mt19937_64 r1(8), r2(8);
  ad::Tape tape(false);
  const auto x = tape.constant(Tensor(Shape{50, 20}, 1.0));
  const auto a = ad::dropout(x, 0.25, true, r1);
  const auto b = ad::dropout(x, 0.25, true, r2);
  EXPECT_EQ(a.value(), b.value());
  std::size_t kept = 0;
  for (double v : a.value().data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15);
    kept += v != 0.0;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1000.0, 0.75, 0.05);
}

TEST(GatherRows, SparseGradient) {
  ParamStore ps;
  ps.add("table", Tensor(Shape{4, 2}, 1.0));
  ad::Tape tape;
  const std::vector<std::int32_t> ids{1, 3, 1};
  const auto g = ad::backward(ad::sum(ad::gather_rows(tape.param(ps, "table"), ids)));
  EXPECT_EQ(g.at("table").storage(), (std::vector<double>{0, 0, 2, 2, 0, 0, 1, 1}));
  const std::vector<std::int32_t> bad{4};
  ad::Tape t2;
  EXPECT_THROW(ad::gather_rows(t2.param(ps, "table"), bad), IndexError);
}

TEST(Xavier, SeededAndBounded) {
  std::mt19937_64 r1(9), r2(9);
  const Tensor a = ad::xavier_uniform({6, 4}, r1);
  EXPECT_EQ(a, ad::xavier_uniform({6, 4}, r2));
  const double bound = std::sqrt(6.0 / 10.0);
  for (double v : a.data()) EXPECT_LE(std::abs(v), bound);
}

TEST(Gradients, EveryOpMatchesFiniteDifferences) {
  using Op = std::function<ad::Var(ad::Tape&, const ad::Var&, const ad::Var&)>;
  std::mt19937_64 rng(10);
  const std::vector<std::int32_t> ids{2, 0, 2};
  const std::vector<std::int32_t> targets{1, 0, 3};
  const std::vector<Triple> facts{{0, 0, 1}, {2, 1, 1}, {1, 0, 3}, {3, 1, 0}, {0, 1, 1}};
  const GraphIndex g(facts, 4, 2);

  struct Case {
    const char* name;
    Shape a, b;
    Op op;
  };
  const std::vector<Case> cases{
      {"matmul", {3, 4}, {4, 2}, [](ad::Tape&, auto& a, auto& b) { return ad::matmul(a, b); }},
      {"matmul_bt", {3, 4}, {5, 4}, [](ad::Tape&, auto& a, auto& b) { return ad::matmul_bt(a, b); }},
      {"add", {3, 2}, {3, 2}, [](ad::Tape&, auto& a, auto& b) { return ad::add(a, b); }},
      {"sub", {3, 2}, {3, 2}, [](ad::Tape&, auto& a, auto& b) { return ad::sub(a, b); }},
      {"mul", {3, 2}, {3, 2}, [](ad::Tape&, auto& a, auto& b) { return ad::mul(a, b); }},
      {"add_row", {3, 2}, {2}, [](ad::Tape&, auto& a, auto& b) { return ad::add_row(a, b); }},
      {"scale", {3, 2}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::scale(a, -1.7); }},
      {"one_minus", {3, 2}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::one_minus(a); }},
      {"sigmoid", {3, 2}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::sigmoid(a); }},
      {"tanh", {3, 2}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::tanh(a); }},
      {"relu", {3, 2}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::relu(a); }},
      {"concat_rows", {2, 3}, {1, 3}, [](ad::Tape&, auto& a, auto& b) { return ad::concat_rows(a, b); }},
      {"reshape", {2, 3}, {1}, [](ad::Tape&, auto& a, auto&) { return ad::reshape(a, Shape{3, 2}); }},
      {"gather_rows", {4, 3}, {1}, [&](ad::Tape&, auto& a, auto&) { return ad::gather_rows(a, ids); }},
      {"rgcn_aggregate", {4, 3}, {2, 3},
       [&](ad::Tape&, auto& a, auto& b) { return ad::rgcn_aggregate(a, b, g); }},
      {"conv_stack", {2, 5}, {3, 2, 3}, [](ad::Tape&, auto& a, auto& b) { return ad::conv_stack(a, b); }},
      {"conv_pairs", {3, 5}, {2, 2, 3},
       [](ad::Tape&, auto& a, auto& b) { return ad::conv_pairs(a, ad::scale(a, 0.5), b); }},
      {"cross_entropy", {3, 4}, {1}, [&](ad::Tape&, auto& a, auto&) { return ad::cross_entropy(a, targets); }},
      {"squared_distance", {3, 2}, {1},
       [](ad::Tape&, auto& a, auto&) { return ad::squared_distance(a, Tensor(Shape{3, 2}, 0.25)); }},
      {"add_n", {2, 2}, {2, 2},
       [](ad::Tape&, auto& a, auto& b) {
         const std::vector<ad::Var> terms{a, b, a};
         return ad::add_n(terms);
       }},
  };
  for (const auto& c : cases) {
    for (int trial = 0; trial < 100; ++trial) {
      const double err = check_op(c.op, random_tensor(c.a, rng), random_tensor(c.b, rng));
      ASSERT_LE(err, 1e-4) << c.name << " trial " << trial;
    }
  }
}

TEST(Adam, FirstStepByHand) {
  ParamStore ps;
  ps.add("w", Tensor::vector({0.0}));
  AdamState st;
  ad::GradMap g{{"w", Tensor::vector({1.0})}};
  adam_step(ps, g, st);
  // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  EXPECT_DOUBLE_EQ(ps.get("w")[0], -1e-3 / (1.0 + 1e-8));
  EXPECT_NEAR(ps.get("w")[0], -9.99999994e-4, 1e-11);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroGradientAndFrozenEntries) {
  std::mt19937_64 rng(11);
  ParamStore ps;
  ps.add("w", random_tensor({2, 2}, rng));
  ps.add("frozen", random_tensor({3}, rng), false);
  const ParamStore before = ps;
  AdamState st;
  for (int i = 0; i < 3; ++i) adam_step(ps, {{"w", Tensor(Shape{2, 2})}}, st);
  EXPECT_EQ(ps, before);
  EXPECT_EQ(st.step, 3);
  EXPECT_EQ(st.first_moment.at("w").shape(), (Shape{2, 2}));
  EXPECT_EQ(st.first_moment.count("frozen"), 0u);
}

TEST(Adam, MissingOrUnknownGradient) {
  ParamStore ps;
  ps.add("w", Tensor::vector({1.0}));
  AdamState st;
  EXPECT_THROW(adam_step(ps, {}, st), ContractError);
  EXPECT_THROW(adam_step(ps, {{"w", Tensor::vector({1.0})}, {"ghost", Tensor::vector({1.0})}}, st), ContractError);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    std::mt19937_64 rng(12);
    ParamStore ps;
    ps.add("w", random_tensor({4, 3}, rng));
    AdamState st;
    for (int i = 0; i < 10; ++i) {
      ad::Tape tape;
      const auto w = tape.param(ps, "w");
      auto g = ad::backward(ad::sum(ad::tanh(ad::mul(w, w))));
      adam_step(ps, g, st);
    }
    return ps;
  };
  EXPECT_EQ(run(), run());
}

TEST(ClipGlobalNorm, Rescales) {
  ad::GradMap g{{"a", Tensor::vector({3.0})}, {"b", Tensor::vector({4.0})}};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.at("a")[0], 0.6, 1e-15);
  EXPECT_NEAR(g.at("b")[0], 0.8, 1e-15);
  ad::GradMap h{{"a", Tensor::vector({3.0})}};
  clip_global_norm(h, 0.0);
  EXPECT_EQ(h.at("a")[0], 3.0);
}
