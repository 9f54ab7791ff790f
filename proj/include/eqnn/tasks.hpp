#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eqnn/activation.hpp"
#include "eqnn/error.hpp"
#include "eqnn/matrix.hpp"
#include "eqnn/network.hpp"
#include "eqnn/rng.hpp"

namespace eqnn {

// ---------------------------------------------------------------------------
// Center of mass of m unit masses in R^3.

struct PointCloud {
  std::vector<std::array<double, 3>> points;

  std::size_t size() const noexcept { return points.size(); }

  // Point-major: (y_1x, y_1y, y_1z, y_2x, ...), matching defining ⊗ I_3.
  Vector flatten() const {
    Vector v;
    v.reserve(points.size() * 3);
    for (const auto& p : points) v.insert(v.end(), p.begin(), p.end());
    return v;
  }

  static PointCloud from_flat(std::span<const double> v) {
    if (v.size() % 3 != 0) throw Error("flattened point cloud length must be a multiple of 3");
    PointCloud pc;
    for (std::size_t i = 0; i < v.size(); i += 3) pc.points.push_back({v[i], v[i + 1], v[i + 2]});
    return pc;
  }
};

inline Vector center_of_mass(const PointCloud& pc) {
  if (pc.points.empty()) throw Error("center of mass of an empty point cloud");
  Vector c(3, 0.0);
  for (const auto& p : pc.points)
    for (std::size_t k = 0; k < 3; ++k) c[k] += p[k];
  for (double& x : c) x /= static_cast<double>(pc.points.size());
  return c;
}

// Inputs uniform in [-1, 1]^{3m}, targets their centers of mass.
inline Dataset com_dataset(std::size_t m, std::size_t samples, std::uint64_t seed) {
  if (m == 0 || samples == 0) throw Error("com_dataset needs m >= 1 and samples >= 1");
  SplitMix64 rng(seed);
  Dataset d;
  d.inputs.reserve(samples);
  d.targets.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    Vector x = rng.vector(3 * m, -1.0, 1.0);
    d.targets.push_back(center_of_mass(PointCloud::from_flat(x)));
    d.inputs.push_back(std::move(x));
  }
  return d;
}

// ---------------------------------------------------------------------------
// RGB images on an N x N grid.

struct GridImage {
  std::size_t side = 0;
  std::vector<double> values;  // row-major pixels, 3 channels each

  GridImage() = default;
  explicit GridImage(std::size_t n) : side(n), values(n * n * 3, 0.0) {}

  double& at(std::size_t r, std::size_t c, std::size_t ch) { return values[(r * side + c) * 3 + ch]; }
  double at(std::size_t r, std::size_t c, std::size_t ch) const { return values[(r * side + c) * 3 + ch]; }

  bool operator==(const GridImage&) const = default;
};

inline GridImage random_image(std::size_t n, SplitMix64& rng) {
  GridImage img(n);
  // Mostly nonzero pixels with some pure black ones, so both branches of
  // decolor are exercised.
  for (std::size_t p = 0; p < n * n; ++p) {
    const bool black = rng.uniform() < 0.25;
    for (std::size_t ch = 0; ch < 3; ++ch)
      img.values[p * 3 + ch] = black ? 0.0 : static_cast<double>(rng.index(256));
  }
  return img;
}

// Black stays black, everything else becomes white.
inline GridImage decolor(const GridImage& img) {
  GridImage out(img.side);
  for (std::size_t p = 0; p < img.side * img.side; ++p) {
    const double* px = &img.values[p * 3];
    const bool black = px[0] == 0.0 && px[1] == 0.0 && px[2] == 0.0;
    for (std::size_t ch = 0; ch < 3; ++ch) out.values[p * 3 + ch] = black ? 0.0 : 255.0;
  }
  return out;
}

enum class FlipAxis { top_bottom, left_right };

inline GridImage flip(const GridImage& img, FlipAxis axis) {
  const std::size_t n = img.side;
  GridImage out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t sr = axis == FlipAxis::top_bottom ? n - 1 - r : r;
      const std::size_t sc = axis == FlipAxis::left_right ? n - 1 - c : c;
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
    }
  return out;
}

// Text format: "N 3", then N*N lines "r g b" of integers, row-major.
inline void write_image(std::ostream& os, const GridImage& img) {
  os << img.side << " 3\n";
  for (std::size_t p = 0; p < img.side * img.side; ++p) {
    os << static_cast<long long>(img.values[p * 3]) << ' ' << static_cast<long long>(img.values[p * 3 + 1]) << ' '
       << static_cast<long long>(img.values[p * 3 + 2]) << '\n';
  }
}

inline GridImage read_image(std::istream& is) {
  long long n = 0, channels = 0;
  if (!(is >> n >> channels) || n < 1 || channels != 3) throw Error("image header must be 'N 3' with N >= 1");
  GridImage img(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    long long v = 0;
    if (!(is >> v)) throw Error("image ends early at value " + std::to_string(i));
    if (v < 0 || v > 255) throw Error("image value " + std::to_string(v) + " outside [0, 255]");
    img.values[i] = static_cast<double>(v);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Antisymmetric functions of m particles.

using Particles = std::vector<Vector>;
using Feature = std::function<double(std::span<const double>)>;

// Determinant of the feature matrix M[i][j] = phi_j(v_i).
inline double slater_det(const Matrix& features) {
  if (features.rows() == 0 || features.rows() != features.cols()) {
    throw Error("Slater matrix must be square and nonempty");
  }
  return determinant(features);
}

inline double slater_det(const std::vector<Feature>& phi, const Particles& v) {
  if (phi.size() != v.size()) throw Error("need as many features as particles");
  Matrix m(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < phi.size(); ++j) m(i, j) = phi[j](v[i]);
  return slater_det(m);
}

// phi_j(v) = (v . u)^j for j = 0..m-1 with u a seeded unit direction.
inline std::vector<Feature> monomial_features(std::size_t m, std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector u = rng.vector(dim, -1.0, 1.0);
  const double len = std::sqrt(dot(u, u));
  for (double& x : u) x /= len;
  std::vector<Feature> phi;
  for (std::size_t j = 0; j < m; ++j) {
    phi.push_back([u, j](std::span<const double> v) { return std::pow(dot(v, u), static_cast<double>(j)); });
  }
  return phi;
}

inline int permutation_sign(const std::vector<std::size_t>& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t m) {
  std::vector<std::size_t> p(m);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Checks f(v_{π(1)}, ..., v_{π(m)}) = sign(π) f(v_1, ..., v_m) with residual
/// |f(πv) - sign(π) f(v)| / (1 + |f(v)|) over the given permutations and
/// `trials` seeded particle sets (entries uniform in [-1, 1]).
inline Report check_antisymmetry(const std::function<double(const Particles&)>& f, std::size_t m, std::size_t dim,
                                 const std::vector<std::vector<std::size_t>>& perms, std::size_t trials,
                                 std::uint64_t seed, double tol) {
  SplitMix64 rng(seed);
  Report report;
  report.elements_checked = perms.size();
  report.inputs_checked = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    Particles v(m);
    for (auto& x : v) x = rng.vector(dim, -1.0, 1.0);
    const double fv = f(v);
    for (std::size_t k = 0; k < perms.size(); ++k) {
      const auto& p = perms[k];
      if (p.size() != m) throw Error("permutation has the wrong length");
      Particles pv(m);
      for (std::size_t i = 0; i < m; ++i) pv[i] = v[p[i]];
      const double lhs = f(pv);
      const double rhs = permutation_sign(p) * fv;
      const double r = std::abs(lhs - rhs) / (1.0 + std::abs(fv));
      if (r > report.max_residual) {
        report.max_residual = r;
        if (r > tol) {
          Vector flat;
          for (const auto& x : v) flat.insert(flat.end(), x.begin(), x.end());
          report.witness = Witness{k, std::move(flat), {lhs}, {rhs}};
        }
      }
    }
  }
  report.pass = report.max_residual <= tol;
  return report;
}

// Exhaustive over S_m (m <= 6).
inline Report check_antisymmetry(const std::function<double(const Particles&)>& f, std::size_t m, std::size_t dim,
                                 std::size_t trials, std::uint64_t seed, double tol) {
  if (m == 0 || m > 6) throw Error("exhaustive antisymmetry check supports 1 <= m <= 6");
  return check_antisymmetry(f, m, dim, all_permutations(m), trials, seed, tol);
}

// ---------------------------------------------------------------------------
// Deep-sets chain for set-valued inputs of m points in R^channels:
// rho_0 = rho_1 = defining ⊗ I_channels, rho_2 = trivial(out).

inline std::vector<Representation> deep_sets_chain(const GroupPtr& sym, std::size_t channels, std::size_t out) {
  const Representation points = tensor_identity(defining_rep(sym), channels);
  return {points, points, trivial_rep(sym, out)};
}

}  // namespace eqnn
