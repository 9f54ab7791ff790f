#pragma once

#include <cmath>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/matrix.hpp"
#include "eqnn/rep.hpp"

namespace eqnn {

/// Frobenius-orthonormal basis of Hom_G(rep_in, rep_out), i.e. of the
/// n_out x n_in matrices A with A rho_in(g) = rho_out(g) A for all g.
struct IntertwinerBasis {
  Representation rep_in;
  Representation rep_out;
  std::vector<Matrix> basis;

  std::size_t dim() const noexcept { return basis.size(); }

  // sum_j coeffs[j] * basis[j]
  Matrix realize(std::span<const double> coeffs) const {
    if (coeffs.size() != basis.size()) throw Error("coefficient count does not match basis dimension");
    Matrix a(rep_out.degree(), rep_in.degree());
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double c = coeffs[j];
      if (c == 0.0) continue;
      auto src = basis[j].data();
      auto dst = a.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
    }
    return a;
  }

  // Coordinates of the orthogonal projection of `a` onto the basis span.
  Vector coordinates(const Matrix& a) const {
    Vector c(basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) c[j] = frobenius_dot(basis[j], a);
    return c;
  }
};

/// Stacks, per generator, the linear constraint A rho_in(g) - rho_out(g) A = 0
/// on vec(A) (row-major, index i * n_in + j) and returns its nullspace.
/// Generators suffice: the constraint set is closed under products.
inline IntertwinerBasis solve_basis(const Representation& rep_in, const Representation& rep_out,
                                    double tol = kDefaultTol) {
  if (!rep_in.same_group(rep_out)) throw Error("intertwiner between representations of different groups");
  const std::size_t n_in = rep_in.degree(), n_out = rep_out.degree();
  const std::size_t vars = n_out * n_in;
  const std::size_t k = rep_in.gen_images().size();

  Matrix constraints(k * vars, vars);
  for (std::size_t g = 0; g < k; ++g) {
    const Matrix& rin = rep_in.gen_image(g);
    const Matrix& rout = rep_out.gen_image(g);
    for (std::size_t i = 0; i < n_out; ++i)
      for (std::size_t j = 0; j < n_in; ++j) {
        auto row = constraints.row(g * vars + i * n_in + j);
        // (A rin)_{ij} = sum_m A_{im} rin_{mj}
        for (std::size_t m = 0; m < n_in; ++m) row[i * n_in + m] += rin(m, j);
        // (rout A)_{ij} = sum_m rout_{im} A_{mj}
        for (std::size_t m = 0; m < n_out; ++m) row[m * n_in + j] -= rout(i, m);
      }
  }

  const Matrix null = nullspace(constraints, tol);
  IntertwinerBasis out{rep_in, rep_out, {}};
  out.basis.reserve(null.cols());
  for (std::size_t c = 0; c < null.cols(); ++c) out.basis.emplace_back(n_out, n_in, null.col(c));
  return out;
}

/// Character formula dim Hom_G = (1/|G|) sum_g tr rho_in(g) tr rho_out(g),
/// valid for real representations. Independent of solve_basis.
inline std::size_t hom_dim_oracle(const Representation& rep_in, const Representation& rep_out) {
  if (!rep_in.same_group(rep_out)) throw Error("character pairing of representations of different groups");
  const std::size_t order = rep_in.group().order();
  double sum = 0.0;
  for (std::size_t e = 0; e < order; ++e) sum += trace(rep_in.image(e)) * trace(rep_out.image(e));
  const double avg = sum / static_cast<double>(order);
  const double rounded = std::round(avg);
  if (std::abs(avg - rounded) > 1e-6 || rounded < 0) {
    throw Error("character average " + std::to_string(avg) + " is not a non-negative integer");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace eqnn
