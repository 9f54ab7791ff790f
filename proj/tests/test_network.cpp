#include <gtest/gtest.h>

#include <memory>

#include "eqnn/eqnn.hpp"
#include "scenarios.hpp"

using namespace eqnn;
using scenario::make;

namespace {

GroupPtr trivial_group(std::size_t n) { return std::make_shared<const FiniteGroup>(close({Matrix::identity(n)})); }

}  // namespace

TEST(Build, TrivialGroupIsDenseMlp) {
  auto g = trivial_group(5);
  const Representation d = defining_rep(g);
  const EquivariantNetwork net = build(g, {d, trivial_rep(g, 4), trivial_rep(g, 2)}, ActivationSpec::relu(), 1,
                                       BiasSpace::fixed);
  EXPECT_EQ(net.layers[0].weights.dim(), 20u);
  EXPECT_EQ(net.layers[1].weights.dim(), 8u);
  EXPECT_EQ(net.layers[0].bias_basis.cols(), 4u);
  const ParameterCount c = count_parameters(net);
  EXPECT_EQ(c.equivariant, c.dense);
  EXPECT_EQ(c.dense, 20u + 4u + 8u);
}

TEST(Build, DeepSetsDimensions) {
  auto g = make("symmetric(4)");
  const EquivariantNetwork net = build(g, deep_sets_chain(g, 3, 3), ActivationSpec::relu(), 0);
  ASSERT_EQ(net.depth(), 2u);
  EXPECT_EQ(net.layers[0].weights.dim(), 18u);
  EXPECT_EQ(net.layers[1].weights.dim(), 9u);
  EXPECT_EQ(net.layers[0].bias_coeffs.size(), 1u);
  EXPECT_FALSE(net.layers[1].has_bias());
  EXPECT_EQ(net.parameter_count(), 28u);
}

TEST(Build, C4ShiftChain) {
  auto g = make("cyclic(4)");
  const Representation s = defining_rep(g);
  const EquivariantNetwork net = build(g, {s, s, s}, ActivationSpec::relu(), 0);
  EXPECT_EQ(net.layers[0].weights.dim(), 4u);
  EXPECT_EQ(net.layers[1].weights.dim(), 4u);
  EXPECT_EQ(count_parameters(net).equivariant, 9u);  // 4 + 4 weights, 1 bias
}

TEST(Build, FixedBiasSpaceUsesEveryOrbit) {
  auto g = make("symmetric(4)");
  const EquivariantNetwork net = build(g, deep_sets_chain(g, 3, 3), ActivationSpec::relu(), 0, BiasSpace::fixed);
  EXPECT_EQ(net.layers[0].bias_coeffs.size(), 3u);
  EXPECT_EQ(net.parameter_count(), 30u);
}

TEST(Build, Errors) {
  auto g = make("symmetric(3)");
  try {
    build(g, {defining_rep(g), sign_rep(g), trivial_rep(g)}, ActivationSpec::relu(), 0);
    FAIL() << "expected hidden-rep error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("permutation"), std::string::npos);
  }
  try {
    build(g, {defining_rep(g), sign_rep(g)}, ActivationSpec::relu(), 0);
    FAIL() << "expected zero-dimension error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
  EXPECT_THROW(build(g, {defining_rep(g)}, ActivationSpec::relu(), 0), Error);
  auto other = make("symmetric(3)");
  EXPECT_THROW(build(g, {defining_rep(g), defining_rep(other)}, ActivationSpec::relu(), 0), Error);
}

TEST(Build, InvariantsHoldForEverySeed) {
  for (const auto& c : scenario::standard_chains()) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const EquivariantNetwork net = scenario::randomized(c, ActivationSpec::relu(), seed);
      for (std::size_t i = 0; i < net.depth(); ++i) {
        const Layer& l = net.layers[i];
        const Matrix a = l.weight();
        for (std::size_t e = 0; e < c.group->order(); ++e)
          EXPECT_LT(max_abs_diff(a * c.reps[i].image(e), c.reps[i + 1].image(e) * a), 1e-8);
        if (l.has_bias()) {
          const Vector b = l.bias();
          for (std::size_t e = 0; e < c.group->order(); ++e) EXPECT_LT(max_abs_diff(c.reps[i + 1].image(e) * b, b), 1e-9);
          EXPECT_TRUE(is_compatible(net.activation, b, c.reps[i + 1]));
        }
      }
    }
  }
}

TEST(Build, SeedDeterminesCoefficients) {
  auto g = make("symmetric(4)");
  const auto reps = deep_sets_chain(g, 3, 3);
  EXPECT_EQ(build(g, reps, ActivationSpec::relu(), 5).parameters(), build(g, reps, ActivationSpec::relu(), 5).parameters());
  EXPECT_NE(build(g, reps, ActivationSpec::relu(), 5).parameters(), build(g, reps, ActivationSpec::relu(), 6).parameters());
}

TEST(Forward, IdentityAndZero) {
  auto g = trivial_group(3);
  EquivariantNetwork net = build(g, {defining_rep(g), defining_rep(g)}, ActivationSpec::relu(), 0);
  net.layers[0].weight_coeffs = net.layers[0].weights.coordinates(Matrix::identity(3));
  const Vector v{0.5, -2.0, 3.25};
  EXPECT_LT(max_abs_diff(forward(net, v), v), 1e-15);
  const Report r = check_equivariance(net);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_residual, 0.0);

  auto s4 = make("symmetric(4)");
  EquivariantNetwork ds = build(s4, deep_sets_chain(s4, 3, 3), ActivationSpec::relu(), 0);
  ds.set_parameters(Vector(ds.parameter_count(), 0.0));
  EXPECT_EQ(forward(ds, Vector(12, 0.7)), Vector(3, 0.0));
  EXPECT_THROW(forward(ds, Vector(11, 0.0)), Error);
}

TEST(Forward, DeepSetsIgnorePointOrder) {
  auto g = make("symmetric(4)");
  const EquivariantNetwork net = build(g, deep_sets_chain(g, 3, 3), ActivationSpec::relu(), 3);
  const Vector y{0.1, -0.4, 0.9};
  Vector same;
  for (int i = 0; i < 4; ++i) same.insert(same.end(), y.begin(), y.end());
  const Vector out = forward(net, same);
  SplitMix64 rng(1);
  const Vector v = rng.vector(12, -1.0, 1.0);
  const Vector fv = forward(net, v);
  // reverse the point order
  Vector rev;
  for (int i = 3; i >= 0; --i) rev.insert(rev.end(), v.begin() + 3 * i, v.begin() + 3 * i + 3);
  EXPECT_LT(max_abs_diff(forward(net, rev), fv), 1e-12);
  EXPECT_EQ(out.size(), 3u);
}

TEST(CheckEquivariance, FreshNetsPass) {
  for (const auto& c : scenario::standard_chains())
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Report r = check_equivariance(build(c.group, c.reps, ActivationSpec::relu(), seed), 8, seed, 1e-8);
      EXPECT_TRUE(r.pass) << c.name << " residual " << r.max_residual;
      EXPECT_EQ(r.elements_checked, c.group->order());
    }
}

TEST(CheckEquivariance, DenseOverrideFails) {
  auto g = make("symmetric(4)");
  EquivariantNetwork net = build(g, deep_sets_chain(g, 3, 3), ActivationSpec::relu(), 0);
  SplitMix64 rng(42);
  net.layers[0].weight_override = Matrix(12, 12, rng.vector(144, -1.0, 1.0));
  const Report r = check_equivariance(net);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_residual, 1e-3);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->input.size(), 12u);
  EXPECT_GT(max_abs_diff(r.witness->transformed_output, r.witness->output_transformed), 1e-3);
}

TEST(CheckEquivariance, ConstantWidthConditionOnWeights) {
  // every width carries the defining rep, so each weight must satisfy X^-1 A X = A
  auto g = make("symmetric(4)");
  const Representation d = defining_rep(g);
  const EquivariantNetwork net = scenario::randomized({"", g, {d, d, d, d}}, ActivationSpec::threshold(0.2), 2);
  for (const Layer& l : net.layers) {
    const Matrix a = l.weight();
    for (const Matrix& x : g->elements()) EXPECT_LT(max_abs_diff(inverse(x) * a * x, a), 1e-12);
  }
  EXPECT_TRUE(check_equivariance(net).pass);
}

TEST(Closure, CompositionOfNets) {
  auto g = make("p4(2)");
  const Representation pix = pixel_rep(g), reg = regular_rep(g);
  const EquivariantNetwork f = scenario::randomized({"", g, {pix, reg, reg}}, ActivationSpec::relu(), 1);
  const EquivariantNetwork h = scenario::randomized({"", g, {reg, pix, pix}}, ActivationSpec::tanh(), 2);
  const Report r = check_map_equivariance(
      pix, pix, [&](std::span<const double> v) { return forward(h, forward(f, v)); }, 8, 0, 1e-8);
  EXPECT_TRUE(r.pass) << r.max_residual;
}

TEST(Closure, LinearCombinationOfNets) {
  auto g = make("symmetric(4)");
  const scenario::Chain c{"", g, deep_sets_chain(g, 3, 3)};
  const EquivariantNetwork f = scenario::randomized(c, ActivationSpec::relu(), 3);
  const EquivariantNetwork h = scenario::randomized(c, ActivationSpec::relu(), 4);
  const Report r = check_map_equivariance(
      c.reps.front(), c.reps.back(),
      [&](std::span<const double> v) {
        Vector a = forward(f, v), b = forward(h, v);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1.5 * a[i] - 0.75 * b[i];
        return a;
      },
      8, 0, 1e-8);
  EXPECT_TRUE(r.pass) << r.max_residual;
}

TEST(LossGrad, ZeroNetZeroTargets) {
  auto g = make("symmetric(4)");
  EquivariantNetwork net = build(g, deep_sets_chain(g, 3, 3), ActivationSpec::relu(), 0);
  net.set_parameters(Vector(net.parameter_count(), 0.0));
  Dataset d;
  SplitMix64 rng(0);
  for (int i = 0; i < 5; ++i) {
    d.inputs.push_back(rng.vector(12, -1.0, 1.0));
    d.targets.push_back(Vector(3, 0.0));
  }
  const LossGrad lg = loss_grad(net, d);
  EXPECT_EQ(lg.mse, 0.0);
  EXPECT_EQ(lg.grad, Vector(net.parameter_count(), 0.0));
}

TEST(LossGrad, LinearClosedForm) {
  auto g = make("cyclic(4)");
  const Representation s = defining_rep(g);
  const EquivariantNetwork net = build(g, {s, s}, ActivationSpec::relu(), 9);
  const Dataset d = scenario::teacher_data({"", g, {s, s, s}}, 10, 4);
  // dL/dA = 2/(N n_out) sum (A x - y) x^T, projected on each basis matrix
  const Matrix a = net.layers[0].weight();
  Matrix grad_a(4, 4);
  double sse = 0.0;
  for (std::size_t s_ = 0; s_ < d.size(); ++s_) {
    const Vector r = a * d.inputs[s_];
    for (std::size_t i = 0; i < 4; ++i) {
      const double e = r[i] - d.targets[s_][i];
      sse += e * e;
      for (std::size_t j = 0; j < 4; ++j) grad_a(i, j) += 2.0 * e * d.inputs[s_][j] / 40.0;
    }
  }
  const LossGrad lg = loss_grad(net, d);
  EXPECT_NEAR(lg.mse, sse / 40.0, 1e-14);
  ASSERT_EQ(lg.grad.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j)
    EXPECT_NEAR(lg.grad[j], frobenius_dot(grad_a, net.layers[0].weights.basis[j]), 1e-14);
}

TEST(LossGrad, MatchesFiniteDifferences) {
  for (const auto& act : {ActivationSpec::relu(), ActivationSpec::tanh(), ActivationSpec::threshold(0.3)}) {
    const scenario::GradientStats st = scenario::gradient_check(120, 77, act);
    EXPECT_GE(st.checked, 100u * (st.checked + st.excluded) / 120u);
    EXPECT_LT(st.max_rel, 1e-5) << act.to_string();
    EXPECT_LT(static_cast<double>(st.excluded), 0.05 * static_cast<double>(st.checked + st.excluded));
  }
}

TEST(LossGrad, EmptyOrMisshapenData) {
  auto g = make("cyclic(4)");
  const Representation s = defining_rep(g);
  const EquivariantNetwork net = build(g, {s, s}, ActivationSpec::relu(), 0);
  EXPECT_THROW(loss_grad(net, Dataset{}), Error);
  EXPECT_THROW(loss_grad(net, Dataset{{Vector(3)}, {Vector(4)}}), Error);
  EXPECT_THROW(loss_grad(net, Dataset{{Vector(4)}, {}}), Error);
}

TEST(Train, RealizableLinearMapConverges) {
  auto g = make("cyclic(4)");
  const Representation s = defining_rep(g);
  const EquivariantNetwork net = build(g, {s, s}, ActivationSpec::relu(), 1);
  Dataset d;
  SplitMix64 rng(3);
  const Matrix target = circulant(4, Vector{0.5, -1.0, 0.25, 2.0});
  for (int i = 0; i < 50; ++i) {
    d.inputs.push_back(rng.vector(4, -1.0, 1.0));
    d.targets.push_back(target * d.inputs.back());
  }
  const TrainResult r = train(net, d, 3000, 1.0);
  EXPECT_EQ(r.history.size(), 3000u);
  EXPECT_LT(mse(r.net, d), 1e-10);
  EXPECT_LT(max_abs_diff(r.net.layers[0].weight(), target), 1e-4);
}

TEST(Train, ZeroLearningRateLeavesNetUnchanged) {
  const auto chains = scenario::standard_chains();
  const EquivariantNetwork net = scenario::randomized(chains[1], ActivationSpec::relu(), 0);
  const Dataset d = scenario::teacher_data(chains[1], 20, 0);
  const TrainResult r = train(net, d, 5, 0.0);
  EXPECT_EQ(r.net.parameters(), net.parameters());
  for (double h : r.history) EXPECT_EQ(h, r.history.front());
}

TEST(Train, DivergenceAndBadArguments) {
  const auto chains = scenario::standard_chains();
  const EquivariantNetwork net = scenario::randomized(chains[2], ActivationSpec::relu(), 0);
  const Dataset d = scenario::teacher_data(chains[2], 20, 0);
  try {
    train(net, d, 200, 1e6);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("smaller learning rate"), std::string::npos);
  }
  EXPECT_THROW(train(net, d, 0, 0.1), Error);
  EXPECT_THROW(train(net, d, 1, -0.1), Error);
}

TEST(Train, StaysEquivariantAndImproves) {
  for (const auto& c : scenario::standard_chains()) {
    const EquivariantNetwork net = build(c.group, c.reps, ActivationSpec::relu(), 11);
    const Dataset d = scenario::teacher_data(c, 30, 5);
    const TrainResult r = train(net, d, 100, 0.05);
    EXPECT_TRUE(check_equivariance(r.net).pass) << c.name;
    EXPECT_LE(r.history.back(), r.history.front()) << c.name;
  }
}

TEST(CountParameters, Examples) {
  auto t = trivial_group(5);
  const ParameterCount dense = count_parameters(build(t, {defining_rep(t), defining_rep(t)}, ActivationSpec::relu(), 0));
  EXPECT_EQ(dense.equivariant, 25u);
  EXPECT_EQ(dense.dense, 25u);

  auto s5 = make("symmetric(5)");
  const ParameterCount com = count_parameters(build(s5, deep_sets_chain(s5, 3, 3), ActivationSpec::tanh(), 0));
  EXPECT_EQ(com.equivariant, 28u);
  EXPECT_EQ(com.dense, 285u);  // 15*15 + 15*3 + 15
  EXPECT_LT(com.ratio(), 0.1);
}

TEST(BiasSpace, Parse) {
  EXPECT_EQ(parse_bias_space("uniform"), BiasSpace::uniform);
  EXPECT_EQ(parse_bias_space("fixed"), BiasSpace::fixed);
  EXPECT_THROW(parse_bias_space("orbit"), Error);
}

TEST(ActivationPattern, DetectsKinkCrossing) {
  auto g = make("cyclic(4)");
  const Representation s = defining_rep(g);
  EquivariantNetwork net = build(g, {s, s, s}, ActivationSpec::relu(), 0);
  const Dataset zero_input{{Vector(4, 0.0)}, {Vector(4, 0.0)}};
  // zero input: every hidden pre-activation equals the bias, here exactly at the kink
  net.layers[0].bias_coeffs = {0.0};
  const auto at_kink = activation_pattern(net, zero_input);
  net.layers[0].bias_coeffs = {-1e-5};
  EXPECT_NE(activation_pattern(net, zero_input), at_kink);
  net.layers[0].bias_coeffs = {1e-5};
  EXPECT_EQ(activation_pattern(net, zero_input), at_kink);
  EXPECT_EQ(at_kink.size(), 4u);

  EquivariantNetwork smooth = build(g, {s, s, s}, ActivationSpec::tanh(), 0);
  EXPECT_TRUE(activation_pattern(smooth, zero_input).empty());
}
