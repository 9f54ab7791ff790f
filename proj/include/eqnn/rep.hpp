#pragma once

#include <memory>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/group.hpp"
#include "eqnn/matrix.hpp"

namespace eqnn {

using GroupPtr = std::shared_ptr<const FiniteGroup>;

// Raised by extend() when generator images do not define a homomorphism.
class InconsistentRepresentation : public Error {
 public:
  InconsistentRepresentation(std::size_t element, std::size_t generator, double residual)
      : Error("generator images are not a homomorphism: element " + std::to_string(element) +
              " times generator " + std::to_string(generator) + " is off by " + std::to_string(residual)),
        element_(element),
        generator_(generator),
        residual_(residual) {}

  std::size_t element() const noexcept { return element_; }
  std::size_t generator() const noexcept { return generator_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t element_;
  std::size_t generator_;
  double residual_;
};

/// A representation of a FiniteGroup, materialized on every element.
class Representation {
 public:
  const FiniteGroup& group() const noexcept { return *group_; }
  const GroupPtr& group_ptr() const noexcept { return group_; }
  std::size_t degree() const noexcept { return degree_; }

  const std::vector<Matrix>& gen_images() const noexcept { return gen_images_; }
  const Matrix& gen_image(std::size_t g) const { return gen_images_.at(g); }
  const std::vector<Matrix>& images() const noexcept { return images_; }
  const Matrix& image(std::size_t element) const { return images_.at(element); }

  // Expression this representation was built from ("tensor(defining,3)");
  // empty for ad-hoc generator images.
  const std::string& spec() const noexcept { return spec_; }
  Representation& with_spec(std::string s) {
    spec_ = std::move(s);
    return *this;
  }

  bool same_group(const Representation& other) const noexcept { return group_ == other.group_; }

  friend Representation extend(GroupPtr group, std::vector<Matrix> gen_images);

 private:
  GroupPtr group_;
  std::size_t degree_ = 0;
  std::vector<Matrix> gen_images_;
  std::vector<Matrix> images_;
  std::string spec_;
};

/// Extends generator images to every element by replaying words, then checks
/// images[e] * gen_images[g] == images[cayley(e, g)] for all pairs. A failure
/// means the assignment does not factor through the group.
inline Representation extend(GroupPtr group, std::vector<Matrix> gen_images) {
  if (!group) throw Error("representation needs a group");
  const FiniteGroup& g = *group;
  if (gen_images.size() != g.gen_count()) {
    throw Error("expected " + std::to_string(g.gen_count()) + " generator images, got " +
                std::to_string(gen_images.size()));
  }
  const std::size_t n = gen_images.empty() ? 0 : gen_images.front().rows();
  if (n == 0) throw Error("representation degree must be positive");
  for (std::size_t i = 0; i < gen_images.size(); ++i) {
    const auto& m = gen_images[i];
    if (m.rows() != n || m.cols() != n) throw Error("generator images must all be square of the same degree");
    if (std::abs(determinant(m)) <= 1e-9) throw Error("generator image " + std::to_string(i) + " is not invertible");
  }

  Representation rep;
  rep.group_ = std::move(group);
  rep.degree_ = n;
  rep.gen_images_ = std::move(gen_images);
  rep.images_.reserve(g.order());
  rep.images_.push_back(Matrix::identity(n));
  for (std::size_t e = 1; e < g.order(); ++e) {
    const Word& w = g.word(e);
    std::size_t parent = 0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) parent = g.cayley(parent, w[i]);
    rep.images_.push_back(rep.images_[parent] * rep.gen_images_[w.back()]);
  }

  for (std::size_t e = 0; e < g.order(); ++e)
    for (std::size_t k = 0; k < g.gen_count(); ++k) {
      const double r = max_abs_diff(rep.images_[e] * rep.gen_images_[k], rep.images_[g.cayley(e, k)]);
      if (r > 1e-8) throw InconsistentRepresentation(e, k, r);
    }
  return rep;
}

inline Representation defining_rep(const GroupPtr& group) {
  return extend(group, group->generators()).with_spec("defining");
}

inline Representation trivial_rep(const GroupPtr& group, std::size_t n = 1) {
  if (n == 0) throw Error("trivial representation degree must be positive");
  return extend(group, std::vector<Matrix>(group->gen_count(), Matrix::identity(n)))
      .with_spec("trivial(" + std::to_string(n) + ")");
}

// g -> det(g) on the defining matrices; the sign character for S_m.
inline Representation sign_rep(const GroupPtr& group) {
  std::vector<Matrix> images;
  for (const auto& m : group->generators()) images.push_back(Matrix{{determinant(m)}});
  return extend(group, std::move(images)).with_spec("sign");
}

/// Permutation representation from one index list per generator: generator
/// g sends basis vector j to basis vector targets[g][j].
inline Representation permutation_rep(const GroupPtr& group, const std::vector<std::vector<std::size_t>>& targets) {
  if (targets.size() != group->gen_count()) throw Error("need one permutation per generator");
  const std::size_t n = targets.empty() ? 0 : targets.front().size();
  std::vector<Matrix> images;
  std::string spec = "perm(";
  for (std::size_t g = 0; g < targets.size(); ++g) {
    const auto& t = targets[g];
    if (t.size() != n || n == 0) throw Error("permutation lists must be nonempty and of equal length");
    std::vector<bool> hit(n, false);
    for (std::size_t j : t) {
      if (j >= n || hit[j]) throw Error("permutation list " + std::to_string(g) + " is not a permutation");
      hit[j] = true;
    }
    images.push_back(detail::permutation_matrix(t));
    spec += (g ? ";" : "");
    for (std::size_t j = 0; j < n; ++j) spec += (j ? " " : "") + std::to_string(t[j]);
  }
  return extend(group, std::move(images)).with_spec(spec + ")");
}

// The N^2 pixel permutation block of a torus/p4/p4m group.
inline Representation pixel_rep(const GroupPtr& group) {
  const std::size_t n = group->pixel_side();
  if (n == 0) throw Error("pixel representation needs a torus, p4 or p4m group");
  const std::size_t p = n * n;
  std::vector<Matrix> images;
  for (const auto& gen : group->generators()) {
    Matrix m(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) m(i, j) = gen(i, j);
    images.push_back(std::move(m));
  }
  return extend(group, std::move(images)).with_spec("pixel");
}

// Left regular representation: h e_x = e_{hx}.
inline Representation regular_rep(const GroupPtr& group) {
  const FiniteGroup& g = *group;
  std::vector<Matrix> images;
  for (std::size_t k = 0; k < g.gen_count(); ++k) {
    const std::size_t s = g.cayley(0, k);
    std::vector<std::size_t> t(g.order());
    for (std::size_t x = 0; x < g.order(); ++x) t[x] = g.multiply(s, x);
    images.push_back(detail::permutation_matrix(t));
  }
  return extend(group, std::move(images)).with_spec("regular");
}

// Block-diagonal sum; all summands must share the same group object.
inline Representation direct_sum(const std::vector<Representation>& reps) {
  if (reps.empty()) throw Error("direct sum of no representations");
  const auto& group = reps.front().group_ptr();
  std::string spec = "sum(";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (!reps[i].same_group(reps.front())) throw Error("direct sum of representations of different groups");
    spec += (i ? "," : "") + reps[i].spec();
  }
  std::vector<Matrix> images;
  for (std::size_t k = 0; k < group->gen_count(); ++k) {
    std::vector<Matrix> blocks;
    for (const auto& r : reps) blocks.push_back(r.gen_image(k));
    images.push_back(block_diag(blocks));
  }
  return extend(group, std::move(images)).with_spec(spec + ")");
}

// rho ⊗ I_d: blocks of d consecutive coordinates move together.
inline Representation tensor_identity(const Representation& rep, std::size_t d) {
  if (d == 0) throw Error("tensor_identity needs d >= 1");
  if (d == 1) return rep;
  std::vector<Matrix> images;
  for (const auto& m : rep.gen_images()) images.push_back(kron(m, Matrix::identity(d)));
  return extend(rep.group_ptr(), std::move(images)).with_spec("tensor(" + rep.spec() + "," + std::to_string(d) + ")");
}

inline bool is_permutation_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const std::size_t n = m.rows();
  std::vector<int> col_ones(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int row_ones = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = m(i, j);
      if (std::abs(x - 1.0) <= 1e-9) {
        ++row_ones;
        ++col_ones[j];
      } else if (std::abs(x) > 1e-9) {
        return false;
      }
    }
    if (row_ones != 1) return false;
  }
  for (int c : col_ones)
    if (c != 1) return false;
  return true;
}

inline bool is_permutation_rep(const Representation& rep) {
  for (const auto& m : rep.images())
    if (!is_permutation_matrix(m)) return false;
  return true;
}

/// Orthonormal basis (degree x d) of {b : rho(g) b = b for every generator g}.
inline Matrix fixed_subspace(const Representation& rep, double tol = kDefaultTol) {
  const std::size_t n = rep.degree();
  const std::size_t k = rep.gen_images().size();
  Matrix stacked(k * n, n);
  for (std::size_t g = 0; g < k; ++g) {
    const Matrix& m = rep.gen_image(g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) stacked(g * n + i, j) = m(i, j) - (i == j ? 1.0 : 0.0);
  }
  return nullspace(stacked, tol);
}

}  // namespace eqnn
