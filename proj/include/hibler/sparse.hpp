#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace hibler {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Compressed sparse row matrix with sorted column indices.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;

  /// Position of (i, j) in `val`, or npos if structurally zero.
  std::size_t find(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  void multiply(std::span<const double> x, std::span<double> y) const;
};

/// Builds a CSR sparsity pattern from (row, col) pairs; values are zeroed.
CsrMatrix csr_pattern(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> entries);

/// Element-to-global assembly map. Each element owns `slots` local values; scatter[e * slots + k]
/// is the global target (or npos). The inverse gather lists are ordered by element index, so a
/// gather sums in exactly the same order as the serial scatter loop.
struct AssemblyMap {
  std::size_t n_out = 0;
  std::size_t slots = 0;
  std::vector<std::size_t> scatter;
  std::vector<std::size_t> gather_ptr;
  std::vector<std::size_t> gather_src;

  static AssemblyMap from_scatter(std::size_t n_out, std::size_t slots, std::vector<std::size_t> scatter);
};

struct PcgResult {
  std::size_t iterations = 0;
  double residual = 0.0;  // final relative residual
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for SPD A. `x` holds the initial guess.
PcgResult pcg_solve(const CsrMatrix& A, std::span<const double> b, std::span<double> x, double rel_tol,
                    std::size_t max_iter);

}  // namespace hibler
