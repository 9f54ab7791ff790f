#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqnn/activation.hpp"
#include "eqnn/error.hpp"
#include "eqnn/intertwiner.hpp"
#include "eqnn/matrix.hpp"
#include "eqnn/rep.hpp"
#include "eqnn/rng.hpp"

namespace eqnn {

// Admissible bias vectors of a hidden layer.
//   uniform: all coordinates equal (span of the all-ones vector)
//   fixed:   every rho-fixed vector (constant on each orbit)
enum class BiasSpace { uniform, fixed };

inline std::string to_string(BiasSpace s) { return s == BiasSpace::uniform ? "uniform" : "fixed"; }

inline BiasSpace parse_bias_space(const std::string& s) {
  if (s == "uniform") return BiasSpace::uniform;
  if (s == "fixed") return BiasSpace::fixed;
  throw Error("unknown bias space '" + s + "' (expected uniform or fixed)");
}

struct Layer {
  IntertwinerBasis weights;
  Vector weight_coeffs;
  Matrix bias_basis;  // n_out x d; 0 x 0 on the output layer
  Vector bias_coeffs;
  // Dense matrix used instead of the intertwiner expansion. Only for
  // negative tests and tampered models; coefficients then have no effect.
  std::optional<Matrix> weight_override;

  bool has_bias() const noexcept { return bias_basis.rows() > 0; }

  Matrix weight() const { return weight_override ? *weight_override : weights.realize(weight_coeffs); }

  Vector bias() const {
    Vector b(bias_basis.rows(), 0.0);
    for (std::size_t j = 0; j < bias_coeffs.size(); ++j)
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += bias_coeffs[j] * bias_basis(i, j);
    return b;
  }
};

/// f = A_k sigma_{b_{k-1}} A_{k-1} ... sigma_{b_1} A_1 with every A_i an
/// intertwiner rho_{i-1} -> rho_i and every b_i a bias fixed by rho_i.
/// Parameters are coordinates over those subspaces.
struct EquivariantNetwork {
  GroupPtr group;
  std::vector<Representation> reps;  // rho_0 ... rho_k
  ActivationSpec activation;
  BiasSpace bias_space = BiasSpace::uniform;
  std::vector<Layer> layers;  // k layers

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t input_dim() const { return reps.front().degree(); }
  std::size_t output_dim() const { return reps.back().degree(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight_coeffs.size() + l.bias_coeffs.size();
    return n;
  }

  // Flattened as [w_1, b_1, w_2, b_2, ..., w_k].
  Vector parameters() const {
    Vector p;
    p.reserve(parameter_count());
    for (const auto& l : layers) {
      p.insert(p.end(), l.weight_coeffs.begin(), l.weight_coeffs.end());
      p.insert(p.end(), l.bias_coeffs.begin(), l.bias_coeffs.end());
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw Error("parameter vector has the wrong length");
    std::size_t at = 0;
    for (auto& l : layers) {
      for (double& c : l.weight_coeffs) c = p[at++];
      for (double& c : l.bias_coeffs) c = p[at++];
    }
  }
};

namespace detail {

inline Matrix uniform_bias_basis(std::size_t n) {
  Matrix b(n, 1);
  for (std::size_t i = 0; i < n; ++i) b(i, 0) = 1.0 / std::sqrt(static_cast<double>(n));
  return b;
}

// Realized weights and biases, computed once per batch operation.
struct Realized {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  ActivationSpec activation;

  explicit Realized(const EquivariantNetwork& net) : activation(net.activation) {
    for (const auto& l : net.layers) {
      weights.push_back(l.weight());
      biases.push_back(l.bias());
    }
  }

  Vector operator()(std::span<const double> v) const {
    Vector h(v.begin(), v.end());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      h = weights[i] * h;
      if (i + 1 < weights.size()) {
        const auto& b = biases[i];
        for (std::size_t j = 0; j < h.size(); ++j) h[j] = activation(h[j] + b[j]);
      }
    }
    return h;
  }
};

}  // namespace detail

/// Builds a network over `layer_reps` = (rho_0, ..., rho_k).
///
/// Hidden representations must be permutation representations so that the
/// coordinatewise activation commutes with them. Weight coefficients are
/// drawn uniformly with standard deviation sqrt(2 / n_in) (basis elements
/// have unit Frobenius norm); bias coefficients start at zero.
inline EquivariantNetwork build(const GroupPtr& group, const std::vector<Representation>& layer_reps,
                                const ActivationSpec& activation, std::uint64_t seed,
                                BiasSpace bias_space = BiasSpace::uniform) {
  if (layer_reps.size() < 2) throw Error("a network needs at least an input and an output representation");
  for (std::size_t i = 0; i < layer_reps.size(); ++i) {
    if (layer_reps[i].group_ptr() != group) {
      throw Error("representation " + std::to_string(i) + " belongs to a different group");
    }
  }
  for (std::size_t i = 1; i + 1 < layer_reps.size(); ++i) {
    if (!is_permutation_rep(layer_reps[i])) {
      throw Error("hidden representation " + std::to_string(i) +
                  " is not a permutation representation; pointwise activations are only certified to commute "
                  "with permutation representations");
    }
  }

  EquivariantNetwork net{group, layer_reps, activation, bias_space, {}};
  SplitMix64 rng(seed);
  const std::size_t k = layer_reps.size() - 1;
  for (std::size_t i = 1; i <= k; ++i) {
    Layer layer;
    layer.weights = solve_basis(layer_reps[i - 1], layer_reps[i]);
    if (layer.weights.dim() == 0) {
      throw Error("layer " + std::to_string(i) + " has no nonzero equivariant weights (intertwiner space is 0)");
    }
    const double half_width = std::sqrt(3.0) * std::sqrt(2.0 / static_cast<double>(layer_reps[i - 1].degree()));
    layer.weight_coeffs.resize(layer.weights.dim());
    for (std::size_t j = 0; j < layer.weight_coeffs.size(); ++j) {
      layer.weight_coeffs[j] = rng.uniform(-half_width, half_width) / frobenius_norm(layer.weights.basis[j]);
    }
    if (i < k) {
      layer.bias_basis = bias_space == BiasSpace::uniform ? detail::uniform_bias_basis(layer_reps[i].degree())
                                                          : fixed_subspace(layer_reps[i]);
      layer.bias_coeffs.assign(layer.bias_basis.cols(), 0.0);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline Vector forward(const EquivariantNetwork& net, std::span<const double> v) {
  if (v.size() != net.input_dim()) {
    throw Error("input has length " + std::to_string(v.size()) + ", network expects " +
                std::to_string(net.input_dim()));
  }
  return detail::Realized(net)(v);
}

/// Equivariance check for an arbitrary map f: R^{n_in} -> R^{n_out}.
/// residual = |f(rho_in(g) v) - rho_out(g) f(v)|_inf / (1 + |f(v)|_inf),
/// over all elements when |G| <= 5000 (else `trials` sampled ones) and over
/// `probes` plus `trials` seeded inputs uniform in [-1, 1].
inline Report check_map_equivariance(const Representation& rep_in, const Representation& rep_out,
                                     const std::function<Vector(std::span<const double>)>& f, std::size_t trials,
                                     std::uint64_t seed, double tol, const std::vector<Vector>& probes = {}) {
  if (!rep_in.same_group(rep_out)) throw Error("input and output representations belong to different groups");
  SplitMix64 rng(seed);
  std::vector<Vector> inputs = probes;
  for (std::size_t t = 0; t < trials; ++t) inputs.push_back(rng.vector(rep_in.degree(), -1.0, 1.0));
  const auto elements = detail::elements_to_check(rep_in.group().order(), trials, rng);

  Report report;
  report.elements_checked = elements.size();
  report.inputs_checked = inputs.size();
  for (const auto& v : inputs) {
    const Vector fv = f(v);
    const double scale = 1.0 + max_abs(fv);
    for (std::size_t e : elements) {
      Vector lhs = f(rep_in.image(e) * v);
      Vector rhs = rep_out.image(e) * fv;
      const double r = max_abs_diff(lhs, rhs) / scale;
      if (r > report.max_residual) {
        report.max_residual = r;
        if (r > tol) report.witness = Witness{e, v, std::move(lhs), std::move(rhs)};
      }
    }
  }
  report.pass = report.max_residual <= tol;
  return report;
}

inline Report check_equivariance(const EquivariantNetwork& net, std::size_t trials = 8, std::uint64_t seed = 0,
                                 double tol = 1e-8) {
  const detail::Realized realized(net);
  return check_map_equivariance(
      net.reps.front(), net.reps.back(), [&](std::span<const double> v) { return realized(v); }, trials, seed, tol);
}

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;

  std::size_t size() const noexcept { return inputs.size(); }

  void validate(std::size_t n_in, std::size_t n_out) const {
    if (inputs.empty()) throw Error("dataset is empty");
    if (inputs.size() != targets.size()) throw Error("dataset has different numbers of inputs and targets");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].size() != n_in || targets[i].size() != n_out) {
        throw Error("dataset sample " + std::to_string(i) + " has the wrong shape");
      }
    }
  }
};

struct LossGrad {
  double mse = 0.0;
  Vector grad;  // same layout as EquivariantNetwork::parameters()
};

/// Mean squared error over samples and output coordinates, and its gradient
/// with respect to the basis coefficients (reverse mode). Relu-type kinks
/// use subgradient 0.
inline LossGrad loss_grad(const EquivariantNetwork& net, const Dataset& data) {
  data.validate(net.input_dim(), net.output_dim());
  const detail::Realized realized(net);
  const std::size_t k = net.depth();
  const auto& act = net.activation;

  // Accumulated dL/dA_i and dL/db_i.
  std::vector<Matrix> grad_w;
  std::vector<Vector> grad_b;
  for (const auto& w : realized.weights) {
    grad_w.emplace_back(w.rows(), w.cols());
    grad_b.emplace_back(w.rows(), 0.0);
  }

  const double norm = 1.0 / static_cast<double>(data.size() * net.output_dim());
  double sse = 0.0;
  std::vector<Vector> acts(k + 1);  // h_0 ... h_{k-1}, then output
  std::vector<Vector> pre(k);       // z_i + b_i for hidden layers
  for (std::size_t s = 0; s < data.size(); ++s) {
    acts[0] = data.inputs[s];
    for (std::size_t i = 0; i < k; ++i) {
      Vector z = realized.weights[i] * acts[i];
      if (i + 1 < k) {
        const auto& b = realized.biases[i];
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += b[j];
        pre[i] = z;
        for (double& x : z) x = act(x);
      }
      acts[i + 1] = std::move(z);
    }

    const Vector& out = acts[k];
    Vector delta(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double e = out[j] - data.targets[s][j];
      sse += e * e;
      delta[j] = 2.0 * e * norm;
    }
    for (std::size_t i = k; i-- > 0;) {
      const Vector& h = acts[i];
      Matrix& gw = grad_w[i];
      for (std::size_t r = 0; r < delta.size(); ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        auto row = gw.row(r);
        for (std::size_t c = 0; c < h.size(); ++c) row[c] += d * h[c];
      }
      if (i == 0) break;
      const Matrix& w = realized.weights[i];
      Vector back(w.cols(), 0.0);
      for (std::size_t r = 0; r < w.rows(); ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        auto row = w.row(r);
        for (std::size_t c = 0; c < back.size(); ++c) back[c] += d * row[c];
      }
      for (std::size_t c = 0; c < back.size(); ++c) back[c] *= act.derivative(pre[i - 1][c]);
      for (std::size_t c = 0; c < back.size(); ++c) grad_b[i - 1][c] += back[c];
      delta = std::move(back);
    }
  }

  LossGrad out;
  out.mse = sse * norm;
  out.grad.reserve(net.parameter_count());
  for (std::size_t i = 0; i < k; ++i) {
    const Layer& l = net.layers[i];
    for (std::size_t j = 0; j < l.weight_coeffs.size(); ++j) {
      out.grad.push_back(l.weight_override ? 0.0 : frobenius_dot(grad_w[i], l.weights.basis[j]));
    }
    for (std::size_t j = 0; j < l.bias_coeffs.size(); ++j) {
      double g = 0.0;
      for (std::size_t r = 0; r < grad_b[i].size(); ++r) g += grad_b[i][r] * l.bias_basis(r, j);
      out.grad.push_back(g);
    }
  }
  return out;
}

/// Per-sample, per-hidden-unit indicator of being at or above the
/// activation kink; a change in this pattern means a perturbation crossed
/// a kink. Empty for smooth activations.
inline std::vector<bool> activation_pattern(const EquivariantNetwork& net, const Dataset& data) {
  std::vector<bool> pattern;
  const auto kink = net.activation.kink();
  if (!kink) return pattern;
  const detail::Realized realized(net);
  for (const auto& x : data.inputs) {
    Vector h = x;
    for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
      h = realized.weights[i] * h;
      for (std::size_t j = 0; j < h.size(); ++j) {
        const double t = h[j] + realized.biases[i][j];
        pattern.push_back(t >= *kink);
        h[j] = net.activation(t);
      }
    }
  }
  return pattern;
}

struct TrainResult {
  EquivariantNetwork net;
  std::vector<double> history;  // mse before each step
};

/// Full-batch gradient descent on the coefficients. The updated weights stay
/// inside the intertwiner spaces, so equivariance is preserved exactly.
/// `seed` is accepted for interface stability; plain GD is deterministic.
inline TrainResult train(EquivariantNetwork net, const Dataset& data, std::size_t steps, double learning_rate,
                         std::uint64_t /*seed*/ = 0) {
  if (steps == 0) throw Error("training needs at least one step");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning rate must be a non-negative finite number");
  }
  TrainResult result{std::move(net), {}};
  result.history.reserve(steps);
  Vector params = result.net.parameters();
  for (std::size_t s = 0; s < steps; ++s) {
    const LossGrad lg = loss_grad(result.net, data);
    if (!std::isfinite(lg.mse) || lg.mse > 1e12) {
      throw Error("training diverged at step " + std::to_string(s) + " (mse " + format_real(lg.mse, false) +
                  "); try a smaller learning rate");
    }
    result.history.push_back(lg.mse);
    if (learning_rate == 0.0) continue;
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * lg.grad[i];
    result.net.set_parameters(params);
  }
  return result;
}

inline double mse(const EquivariantNetwork& net, const Dataset& data) {
  data.validate(net.input_dim(), net.output_dim());
  const detail::Realized realized(net);
  double sse = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const Vector out = realized(data.inputs[s]);
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double e = out[j] - data.targets[s][j];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(data.size() * net.output_dim());
}

struct ParameterCount {
  std::size_t equivariant = 0;  // sum of weight and bias basis dimensions
  std::size_t dense = 0;        // unconstrained count for the same widths
  double ratio() const { return dense == 0 ? 0.0 : static_cast<double>(equivariant) / static_cast<double>(dense); }
};

// Dense count: sum_i n_i n_{i-1} weights plus n_i biases on hidden layers,
// i.e. k n^2 + (k-1) n when all widths are n.
inline ParameterCount count_parameters(const EquivariantNetwork& net) {
  ParameterCount c;
  c.equivariant = net.parameter_count();
  for (std::size_t i = 1; i < net.reps.size(); ++i) {
    c.dense += net.reps[i].degree() * net.reps[i - 1].degree();
    if (i + 1 < net.reps.size()) c.dense += net.reps[i].degree();
  }
  return c;
}

}  // namespace eqnn
