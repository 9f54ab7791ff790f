#pragma once

#include <span>
#include <string>

#include "eqnn/error.hpp"
#include "eqnn/matrix.hpp"

namespace eqnn {

// A[i][j] = params[i - j + n - 1]; params runs from the top-right corner
// (offset -(n-1)) to the bottom-left corner (offset n-1).
inline Matrix toeplitz(std::size_t n, std::span<const double> params) {
  if (n == 0 || params.size() != 2 * n - 1) {
    throw Error("toeplitz(" + std::to_string(n) + ") needs " + std::to_string(2 * n - 1) + " parameters, got " +
                std::to_string(params.size()));
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = params[i + n - 1 - j];
  return a;
}

/// Block-Toeplitz matrix of m1 x m1 blocks, each an m2 x m2 Toeplitz matrix.
/// Block (I, J) uses the parameter slice with index I - J + m1 - 1; each
/// slice holds 2*m2 - 1 consecutive parameters.
inline Matrix bttb(std::size_t m1, std::size_t m2, std::span<const double> params) {
  const std::size_t slice = 2 * m2 - 1;
  if (m1 == 0 || m2 == 0 || params.size() != (2 * m1 - 1) * slice) {
    throw Error("bttb(" + std::to_string(m1) + "," + std::to_string(m2) + ") needs " +
                std::to_string((2 * m1 - 1) * (2 * m2 - 1)) + " parameters, got " + std::to_string(params.size()));
  }
  Matrix a(m1 * m2, m1 * m2);
  for (std::size_t bi = 0; bi < m1; ++bi)
    for (std::size_t bj = 0; bj < m1; ++bj) {
      const Matrix block = toeplitz(m2, params.subspan((bi + m1 - 1 - bj) * slice, slice));
      for (std::size_t i = 0; i < m2; ++i)
        for (std::size_t j = 0; j < m2; ++j) a(bi * m2 + i, bj * m2 + j) = block(i, j);
    }
  return a;
}

// A[i][j] = params[(i - j) mod n]
inline Matrix circulant(std::size_t n, std::span<const double> params) {
  if (n == 0 || params.size() != n) {
    throw Error("circulant(" + std::to_string(n) + ") needs " + std::to_string(n) + " parameters, got " +
                std::to_string(params.size()));
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = params[(i + n - j) % n];
  return a;
}

enum class Structure { dense, toeplitz, bttb, circulant };

inline Structure parse_structure(const std::string& s) {
  if (s == "dense") return Structure::dense;
  if (s == "toeplitz") return Structure::toeplitz;
  if (s == "bttb") return Structure::bttb;
  if (s == "circulant") return Structure::circulant;
  throw Error("unknown structure '" + s + "'");
}

struct LayerDims {
  std::size_t n = 0;   // width (dense, toeplitz, circulant)
  std::size_t m1 = 0;  // bttb block count
  std::size_t m2 = 0;  // bttb block size
};

/// Weight-plus-bias parameter count of a k-layer constant-width network with
/// no bias on the last layer:
///   dense     k n^2 + (k-1) n
///   toeplitz  k (2n-1) + (k-1) n
///   bttb      k (2m1-1)(2m2-1) + (k-1) m1 m2
///   circulant k n + (k-1) n
inline std::size_t param_count(Structure kind, std::size_t k, const LayerDims& dims) {
  if (k == 0) throw Error("param_count needs at least one layer");
  switch (kind) {
    case Structure::dense: return k * dims.n * dims.n + (k - 1) * dims.n;
    case Structure::toeplitz:
      if (dims.n == 0) throw Error("toeplitz width must be positive");
      return k * (2 * dims.n - 1) + (k - 1) * dims.n;
    case Structure::bttb:
      if (dims.m1 == 0 || dims.m2 == 0) throw Error("bttb needs positive m1 and m2");
      return k * (2 * dims.m1 - 1) * (2 * dims.m2 - 1) + (k - 1) * dims.m1 * dims.m2;
    case Structure::circulant: return k * dims.n + (k - 1) * dims.n;
  }
  return 0;
}

}  // namespace eqnn
