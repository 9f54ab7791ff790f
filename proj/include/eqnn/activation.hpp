#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/format.hpp"
#include "eqnn/matrix.hpp"
#include "eqnn/rep.hpp"
#include "eqnn/rng.hpp"

namespace eqnn {

// Exhaustive checks up to this group order, sampled above it.
inline constexpr std::size_t kExhaustiveLimit = 5000;

/// Scalar nonlinearity applied coordinatewise.
///   relu(t)              = max(t, 0)
///   tanh(t)
///   threshold(θ)(t)      = t - θ if t >= θ, else 0
///   sign_threshold(θ)(t) = +1 if t >= θ, else -1
struct ActivationSpec {
  enum class Kind { relu, tanh, threshold, sign_threshold };

  Kind kind = Kind::relu;
  double theta = 0.0;

  static ActivationSpec relu() { return {Kind::relu, 0.0}; }
  static ActivationSpec tanh() { return {Kind::tanh, 0.0}; }
  static ActivationSpec threshold(double t) { return {Kind::threshold, t}; }
  static ActivationSpec sign_threshold(double t) { return {Kind::sign_threshold, t}; }

  double operator()(double t) const {
    switch (kind) {
      case Kind::relu: return t > 0.0 ? t : 0.0;
      case Kind::tanh: return std::tanh(t);
      case Kind::threshold: return t >= theta ? t - theta : 0.0;
      case Kind::sign_threshold: return t >= theta ? 1.0 : -1.0;
    }
    return 0.0;
  }

  // Subgradient 0 at the kinks.
  double derivative(double t) const {
    switch (kind) {
      case Kind::relu: return t > 0.0 ? 1.0 : 0.0;
      case Kind::tanh: {
        const double y = std::tanh(t);
        return 1.0 - y * y;
      }
      case Kind::threshold: return t > theta ? 1.0 : 0.0;
      case Kind::sign_threshold: return 0.0;
    }
    return 0.0;
  }

  // Point where the derivative jumps, if any.
  std::optional<double> kink() const {
    switch (kind) {
      case Kind::relu: return 0.0;
      case Kind::tanh: return std::nullopt;
      case Kind::threshold:
      case Kind::sign_threshold: return theta;
    }
    return std::nullopt;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::relu: return "relu";
      case Kind::tanh: return "tanh";
      case Kind::threshold: return "threshold:" + format_real(theta);
      case Kind::sign_threshold: return "sign_threshold:" + format_real(theta);
    }
    return {};
  }

  // "relu", "tanh", "threshold:3.0", "sign_threshold:3.0"
  static ActivationSpec parse(const std::string& text) {
    if (text == "relu") return relu();
    if (text == "tanh") return tanh();
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (colon == std::string::npos || (head != "threshold" && head != "sign_threshold")) {
      throw Error("unknown activation '" + text + "'");
    }
    const std::string arg = text.substr(colon + 1);
    double theta = 0.0;
    std::size_t used = 0;
    try {
      theta = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size() || !std::isfinite(theta)) {
      throw Error("activation threshold '" + arg + "' is not a finite number");
    }
    return head == "threshold" ? threshold(theta) : sign_threshold(theta);
  }

  bool operator==(const ActivationSpec&) const = default;
};

/// sigma_b(v) = sigma(v + b), coordinatewise.
inline Vector apply_pointwise(const ActivationSpec& spec, std::span<const double> b, std::span<const double> v) {
  if (b.size() != v.size()) {
    throw Error("bias has length " + std::to_string(b.size()) + " but input has length " + std::to_string(v.size()));
  }
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = spec(v[i] + b[i]);
  return out;
}

struct Witness {
  std::size_t element = 0;
  Vector input;
  Vector transformed_output;  // f(rho_in(g) v)
  Vector output_transformed;  // rho_out(g) f(v)
};

struct Report {
  bool pass = true;
  double max_residual = 0.0;
  std::size_t elements_checked = 0;
  std::size_t inputs_checked = 0;
  std::optional<Witness> witness;
};

namespace detail {

inline std::vector<std::size_t> elements_to_check(std::size_t order, std::size_t trials, SplitMix64& rng) {
  std::vector<std::size_t> idx;
  if (order <= kExhaustiveLimit) {
    for (std::size_t e = 0; e < order; ++e) idx.push_back(e);
  } else {
    for (std::size_t t = 0; t < trials; ++t) idx.push_back(rng.index(order));
  }
  return idx;
}

}  // namespace detail

/// Max over (g, v) of |sigma_b(rho(g) v) - rho(g) sigma_b(v)|_inf.
///
/// Every element is tried when |G| <= 5000, otherwise `trials` sampled ones.
/// Inputs are the explicit `probes` followed by `trials` seeded vectors with
/// entries uniform in [-2, 4], which straddles thresholds near 3.
inline Report check_pointwise_equivariance(const ActivationSpec& spec, std::span<const double> b,
                                           const Representation& rep, std::size_t trials, std::uint64_t seed,
                                           double tol, const std::vector<Vector>& probes = {}) {
  if (b.size() != rep.degree()) throw Error("bias length does not match representation degree");
  SplitMix64 rng(seed);
  std::vector<Vector> inputs = probes;
  for (std::size_t t = 0; t < trials; ++t) inputs.push_back(rng.vector(rep.degree(), -2.0, 4.0));
  const auto elements = detail::elements_to_check(rep.group().order(), trials, rng);

  Report report;
  report.elements_checked = elements.size();
  report.inputs_checked = inputs.size();
  for (const auto& v : inputs) {
    if (v.size() != rep.degree()) throw Error("probe vector length does not match representation degree");
    const Vector fv = apply_pointwise(spec, b, v);
    for (std::size_t e : elements) {
      const Matrix& x = rep.image(e);
      Vector lhs = apply_pointwise(spec, b, x * v);
      Vector rhs = x * fv;
      const double r = max_abs_diff(lhs, rhs);
      if (r > report.max_residual || (!report.witness && r > tol)) {
        report.max_residual = std::max(report.max_residual, r);
        if (r > tol) report.witness = Witness{e, v, std::move(lhs), std::move(rhs)};
      }
    }
  }
  report.pass = report.max_residual <= tol;
  return report;
}

/// Certified-sufficient compatibility: rho is a permutation representation
/// and b is fixed by every generator. Not necessary in general.
inline bool is_compatible(const ActivationSpec&, std::span<const double> b, const Representation& rep) {
  if (b.size() != rep.degree() || !is_permutation_rep(rep)) return false;
  for (const auto& m : rep.gen_images())
    if (max_abs_diff(m * b, b) >= 1e-9) return false;
  return true;
}

}  // namespace eqnn
