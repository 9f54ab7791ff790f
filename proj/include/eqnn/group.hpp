#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/matrix.hpp"

namespace eqnn {

inline constexpr std::size_t kDefaultMaxOrder = 20000;
// Elements are stored as dense matrices; closure refuses to grow past this.
inline constexpr std::size_t kMaxElementBytes = std::size_t{2} << 30;

using Word = std::vector<std::size_t>;

/// A finite matrix group given by generators and closed by breadth-first
/// search. Element 0 is the identity; element i is reproduced by multiplying
/// the generators listed in words()[i] onto the identity from the right.
/// cayley(e, g) is the index of elements()[e] * generators()[g].
class FiniteGroup {
 public:
  std::size_t dim() const noexcept { return dim_; }
  std::size_t order() const noexcept { return elements_.size(); }
  std::size_t gen_count() const noexcept { return generators_.size(); }

  const std::vector<Matrix>& generators() const noexcept { return generators_; }
  const std::vector<Matrix>& elements() const noexcept { return elements_; }
  const Matrix& element(std::size_t i) const { return elements_.at(i); }
  const std::vector<Word>& words() const noexcept { return words_; }
  const Word& word(std::size_t i) const { return words_.at(i); }

  std::size_t cayley(std::size_t element, std::size_t generator) const {
    return cayley_[element * generators_.size() + generator];
  }

  // Index of elements()[a] * elements()[b].
  std::size_t multiply(std::size_t a, std::size_t b) const {
    for (std::size_t g : words_[b]) a = cayley(a, g);
    return a;
  }

  std::size_t inverse(std::size_t i) const { return inverses_[i]; }

  // Index of the element equal to m (entrywise within 1e-6), if any.
  std::optional<std::size_t> find(const Matrix& m) const {
    if (m.rows() != dim_ || m.cols() != dim_) return std::nullopt;
    auto it = index_.find(hash_entries(m));
    if (it == index_.end()) return std::nullopt;
    for (std::size_t i : it->second)
      if (max_abs_diff(elements_[i], m) <= 1e-6) return i;
    return std::nullopt;
  }

  // Canonical spec string for named groups ("p4(3)"), empty otherwise.
  const std::string& name() const noexcept { return name_; }

  // Side N of the pixel grid for torus/p4/p4m groups, 0 otherwise. The
  // leading N^2 x N^2 block of every element is its pixel permutation.
  std::size_t pixel_side() const noexcept { return pixel_side_; }

  friend FiniteGroup close(const std::vector<Matrix>& generators, std::size_t max_order);
  friend struct NamedGroupSpec;

 private:
  // Entries rounded to 9 decimal places.
  static std::uint64_t hash_entries(const Matrix& m) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double x : m.data()) {
      const auto r = static_cast<std::uint64_t>(std::llround(x * 1e9));
      h ^= r + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return h;
  }

  std::size_t dim_ = 0;
  std::vector<Matrix> generators_;
  std::vector<Matrix> elements_;
  std::vector<Word> words_;
  std::vector<std::size_t> cayley_;
  std::vector<std::size_t> inverses_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index_;
  std::string name_;
  std::size_t pixel_side_ = 0;
};

/// Closes `generators` under multiplication. Elements are discovered in BFS
/// order (parents in index order, generators in list order), so words are
/// shortest and lexicographically least among shortest.
inline FiniteGroup close(const std::vector<Matrix>& generators, std::size_t max_order = kDefaultMaxOrder) {
  if (generators.empty()) throw Error("at least one generator is required");
  const std::size_t n = generators.front().rows();
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const auto& m = generators[g];
    if (m.rows() != n || m.cols() != n) throw Error("generators must be square matrices of equal size");
    if (!all_finite(m.data())) throw Error("generator " + std::to_string(g) + " has non-finite entries");
    if (std::abs(determinant(m)) <= 1e-9) throw Error("generator " + std::to_string(g) + " is not invertible");
  }

  FiniteGroup grp;
  grp.dim_ = n;
  grp.generators_ = generators;
  const std::size_t k = generators.size();

  auto add = [&](Matrix m, Word w) {
    if (grp.elements_.size() >= max_order) {
      throw Error("group not closed within cap of " + std::to_string(max_order) + " elements");
    }
    if ((grp.elements_.size() + 1) * n * n * sizeof(double) > kMaxElementBytes) {
      throw Error("group elements exceed the " + std::to_string(kMaxElementBytes >> 20) + " MiB storage budget (" +
                  std::to_string(grp.elements_.size()) + " elements of size " + std::to_string(n) + ")");
    }
    const std::size_t idx = grp.elements_.size();
    grp.index_[FiniteGroup::hash_entries(m)].push_back(idx);
    grp.elements_.push_back(std::move(m));
    grp.words_.push_back(std::move(w));
    grp.cayley_.resize(grp.cayley_.size() + k, 0);
    return idx;
  };

  add(Matrix::identity(n), {});
  for (std::size_t e = 0; e < grp.elements_.size(); ++e) {
    for (std::size_t g = 0; g < k; ++g) {
      Matrix p = grp.elements_[e] * generators[g];
      std::size_t target;
      if (auto hit = grp.find(p)) {
        target = *hit;
      } else {
        Word w = grp.words_[e];
        w.push_back(g);
        target = add(std::move(p), std::move(w));
      }
      grp.cayley_[e * k + g] = target;
    }
  }

  // Right multiplication by generator g permutes the elements; invert those
  // permutations and replay reversed words to get element inverses.
  const std::size_t order = grp.elements_.size();
  std::vector<std::vector<std::size_t>> undo(k, std::vector<std::size_t>(order));
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t e = 0; e < order; ++e) undo[g][grp.cayley(e, g)] = e;
  grp.inverses_.resize(order);
  for (std::size_t e = 0; e < order; ++e) {
    std::size_t cur = 0;
    const auto& w = grp.words_[e];
    for (auto it = w.rbegin(); it != w.rend(); ++it) cur = undo[*it][cur];
    grp.inverses_[e] = cur;
  }
  return grp;
}

/// Named finite groups. symmetric(m) and cyclic(n) act on R^m / R^n by
/// coordinate permutation. torus(N), p4(N) and p4m(N) are the periodic N x N
/// pixel-grid groups: translations, plus quarter turns about the grid centre,
/// plus left-right reflection. Their defining matrices are
/// block_diag(P, L) with P the N^2 x N^2 pixel permutation and L the 2 x 2
/// integer point-group part, which keeps the action faithful for every N
/// (for N = 2 the pixel permutations alone would identify L with -L).
struct NamedGroupSpec {
  enum class Kind { symmetric, cyclic, torus, p4, p4m };

  Kind kind = Kind::symmetric;
  std::size_t size = 1;

  std::string to_string() const {
    const char* names[] = {"symmetric", "cyclic", "torus", "p4", "p4m"};
    return std::string(names[static_cast<int>(kind)]) + "(" + std::to_string(size) + ")";
  }

  // Accepts "symmetric(m)", "cyclic(n)", "torus(N)" (or "torus_translation(N)"),
  // "p4(N)", "p4m(N)".
  static NamedGroupSpec parse(const std::string& text) {
    const auto open = text.find('(');
    const auto close_paren = text.rfind(')');
    if (open == std::string::npos || close_paren != text.size() - 1 || close_paren <= open + 1) {
      throw Error("group spec must look like name(size), got '" + text + "'");
    }
    const std::string head = text.substr(0, open);
    const std::string arg = text.substr(open + 1, close_paren - open - 1);
    NamedGroupSpec spec;
    if (head == "symmetric") spec.kind = Kind::symmetric;
    else if (head == "cyclic") spec.kind = Kind::cyclic;
    else if (head == "torus" || head == "torus_translation") spec.kind = Kind::torus;
    else if (head == "p4") spec.kind = Kind::p4;
    else if (head == "p4m") spec.kind = Kind::p4m;
    else throw Error("unknown group '" + head + "'");
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(arg, &used);
    } catch (const std::exception&) {
      throw Error("group size '" + arg + "' is not an integer");
    }
    if (used != arg.size() || v < 1) throw Error("group size must be a positive integer, got '" + arg + "'");
    if (v > 4096) throw Error("group size " + arg + " is too large");
    spec.size = static_cast<std::size_t>(v);
    return spec;
  }

  FiniteGroup build(std::size_t max_order = kDefaultMaxOrder) const;
};

namespace detail {

// Permutation matrix P with P e_j = e_{target[j]}.
inline Matrix permutation_matrix(const std::vector<std::size_t>& target) {
  Matrix p(target.size(), target.size());
  for (std::size_t j = 0; j < target.size(); ++j) p(target[j], j) = 1.0;
  return p;
}

struct GridMap {
  long long a, b, c, d;  // linear part acting on (row, col)
  long long tr, tc;      // translation
};

inline Matrix grid_generator(std::size_t n, const GridMap& f) {
  const auto N = static_cast<long long>(n);
  auto wrap = [N](long long x) { return ((x % N) + N) % N; };
  std::vector<std::size_t> target(n * n);
  for (long long r = 0; r < N; ++r)
    for (long long c = 0; c < N; ++c) {
      const long long r2 = wrap(f.a * r + f.b * c + f.tr);
      const long long c2 = wrap(f.c * r + f.d * c + f.tc);
      target[static_cast<std::size_t>(r * N + c)] = static_cast<std::size_t>(r2 * N + c2);
    }
  Matrix linear{{double(f.a), double(f.b)}, {double(f.c), double(f.d)}};
  return block_diag({permutation_matrix(target), linear});
}

}  // namespace detail

inline FiniteGroup NamedGroupSpec::build(std::size_t max_order) const {
  std::vector<Matrix> gens;
  const std::size_t n = size;

  // Known orders let oversized requests fail before any matrix is built.
  std::size_t order = 1, dim = n;
  switch (kind) {
    case Kind::symmetric:
      for (std::size_t i = 2; i <= n && order <= max_order; ++i) order *= i;
      break;
    case Kind::cyclic: order = n; break;
    case Kind::torus: order = n * n; break;
    case Kind::p4: order = 4 * n * n; break;
    case Kind::p4m: order = 8 * n * n; break;
  }
  if (kind == Kind::torus || kind == Kind::p4 || kind == Kind::p4m) dim = n * n + 2;
  if (order > max_order) {
    throw Error(to_string() + " has more than " + std::to_string(max_order) +
                " elements; group not closed within cap of " + std::to_string(max_order) + " elements");
  }
  if (static_cast<double>(order) * static_cast<double>(dim) * static_cast<double>(dim) * sizeof(double) >
      static_cast<double>(kMaxElementBytes)) {
    throw Error(to_string() + " needs " + std::to_string(order) + " dense " + std::to_string(dim) + "x" +
                std::to_string(dim) + " element matrices, over the " + std::to_string(kMaxElementBytes >> 20) +
                " MiB storage budget");
  }
  switch (kind) {
    case Kind::symmetric: {
      if (n == 1) gens.push_back(Matrix::identity(1));
      for (std::size_t i = 0; i + 1 < n; ++i) {
        std::vector<std::size_t> t(n);
        for (std::size_t j = 0; j < n; ++j) t[j] = j;
        std::swap(t[i], t[i + 1]);
        gens.push_back(detail::permutation_matrix(t));
      }
      break;
    }
    case Kind::cyclic: {
      // (X v)_i = v_{i+1}: coordinate j moves to slot j - 1.
      std::vector<std::size_t> t(n);
      for (std::size_t j = 0; j < n; ++j) t[j] = (j + n - 1) % n;
      gens.push_back(detail::permutation_matrix(t));
      break;
    }
    case Kind::torus:
    case Kind::p4:
    case Kind::p4m: {
      const auto N = static_cast<long long>(n);
      gens.push_back(detail::grid_generator(n, {1, 0, 0, 1, 0, 1}));  // one column right
      gens.push_back(detail::grid_generator(n, {1, 0, 0, 1, 1, 0}));  // one row down
      if (kind != Kind::torus) gens.push_back(detail::grid_generator(n, {0, 1, -1, 0, 0, N - 1}));
      if (kind == Kind::p4m) gens.push_back(detail::grid_generator(n, {1, 0, 0, -1, 0, N - 1}));
      break;
    }
  }
  FiniteGroup g = close(gens, max_order);
  g.name_ = to_string();
  if (kind == Kind::torus || kind == Kind::p4 || kind == Kind::p4m) g.pixel_side_ = n;
  return g;
}

inline FiniteGroup named_group(const NamedGroupSpec& spec, std::size_t max_order = kDefaultMaxOrder) {
  return spec.build(max_order);
}

inline FiniteGroup named_group(const std::string& spec, std::size_t max_order = kDefaultMaxOrder) {
  return NamedGroupSpec::parse(spec).build(max_order);
}

}  // namespace eqnn
