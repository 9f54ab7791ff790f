#pragma once

// Network scenarios shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "eqnn/eqnn.hpp"

namespace eqnn::scenario {

struct Chain {
  std::string name;
  GroupPtr group;
  std::vector<Representation> reps;
};

inline GroupPtr make(const std::string& spec) { return std::make_shared<const FiniteGroup>(named_group(spec)); }

// One rep chain per group used by the equivariance-by-construction checks.
inline std::vector<Chain> standard_chains() {
  std::vector<Chain> out;
  {
    auto g = make("symmetric(3)");
    out.push_back({"S3 defining -> regular -> sign", g, {defining_rep(g), regular_rep(g), sign_rep(g)}});
  }
  {
    auto g = make("symmetric(4)");
    out.push_back({"S4 deep sets", g, deep_sets_chain(g, 3, 3)});
  }
  {
    auto g = make("cyclic(4)");
    const Representation s = defining_rep(g);
    out.push_back({"C4 shift chain", g, {s, s, s}});
  }
  {
    auto g = make("p4(2)");
    out.push_back({"p4(2) pixel -> regular -> pixel", g, {pixel_rep(g), regular_rep(g), pixel_rep(g)}});
  }
  return out;
}

// Random coefficients everywhere, including biases, so every path matters.
inline EquivariantNetwork randomized(const Chain& c, const ActivationSpec& act, std::uint64_t seed) {
  EquivariantNetwork net = build(c.group, c.reps, act, seed);
  SplitMix64 rng(seed ^ 0x5eedULL);
  Vector p = net.parameters();
  for (double& x : p) x = rng.uniform(-1.0, 1.0);
  net.set_parameters(p);
  return net;
}

// Inputs uniform in [-1, 1]; targets produced by an independent net on the
// same chain, so they are themselves equivariant.
inline Dataset teacher_data(const Chain& c, std::size_t samples, std::uint64_t seed) {
  const EquivariantNetwork teacher = randomized(c, ActivationSpec::tanh(), seed + 7919);
  SplitMix64 rng(seed);
  Dataset d;
  for (std::size_t s = 0; s < samples; ++s) {
    d.inputs.push_back(rng.vector(c.reps.front().degree(), -1.0, 1.0));
    d.targets.push_back(forward(teacher, d.inputs.back()));
  }
  return d;
}

struct GradientStats {
  std::size_t checked = 0;
  std::size_t excluded = 0;
  double max_rel = 0.0;
};

inline constexpr double kFdStep = 1e-5;
// Relative errors use max(|analytic|, |numeric|, kRelFloor) as denominator so
// coefficients with vanishing gradient are judged on absolute error.
inline constexpr double kRelFloor = 1e-6;

// Central differences on `count` seeded coefficients drawn across the chains.
// A coefficient is excluded when either perturbation changes the activation
// pattern (a kink lies within h).
inline GradientStats gradient_check(std::size_t count, std::uint64_t seed, const ActivationSpec& act) {
  GradientStats st;
  const auto chains = standard_chains();
  SplitMix64 rng(seed);
  std::size_t round = 0;
  while (st.checked + st.excluded < count) {
    const Chain& c = chains[round % chains.size()];
    const EquivariantNetwork net = randomized(c, act, seed + round);
    const Dataset data = teacher_data(c, 6, seed + 100 + round);
    const LossGrad lg = loss_grad(net, data);
    const auto base_pattern = activation_pattern(net, data);
    const Vector p = net.parameters();
    for (int pick = 0; pick < 8 && st.checked + st.excluded < count; ++pick) {
      const std::size_t j = rng.index(p.size());
      EquivariantNetwork plus = net, minus = net;
      Vector pp = p, pm = p;
      pp[j] += kFdStep;
      pm[j] -= kFdStep;
      plus.set_parameters(pp);
      minus.set_parameters(pm);
      if (activation_pattern(plus, data) != base_pattern || activation_pattern(minus, data) != base_pattern) {
        ++st.excluded;
        continue;
      }
      const double fd = (mse(plus, data) - mse(minus, data)) / (2.0 * kFdStep);
      const double a = lg.grad[j];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), kRelFloor});
      st.max_rel = std::max(st.max_rel, rel);
      ++st.checked;
    }
    ++round;
  }
  return st;
}

}  // namespace eqnn::scenario
