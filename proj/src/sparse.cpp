#include "hibler/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hibler/errors.hpp"
#include "hibler/kernels.hpp"

namespace hibler {

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const {
  const auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? static_cast<std::size_t>(it - col.begin()) : npos;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (const auto p = find(i, i); p != npos) d[i] = val[p];
  return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const { kernels::csr_matvec(*this, x, y); }

CsrMatrix csr_pattern(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> entries) {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  CsrMatrix A;
  A.n = n;
  A.row_ptr.assign(n + 1, 0);
  A.col.reserve(entries.size());
  for (const auto& [i, j] : entries) {
    if (i >= n || j >= n) throw NumericError("sparsity entry out of range");
    ++A.row_ptr[i + 1];
    A.col.push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
  A.val.assign(A.col.size(), 0.0);
  return A;
}

AssemblyMap AssemblyMap::from_scatter(std::size_t n_out, std::size_t slots, std::vector<std::size_t> scatter) {
  AssemblyMap m;
  m.n_out = n_out;
  m.slots = slots;
  m.gather_ptr.assign(n_out + 1, 0);
  for (std::size_t s : scatter)
    if (s != npos) ++m.gather_ptr[s + 1];
  for (std::size_t k = 0; k < n_out; ++k) m.gather_ptr[k + 1] += m.gather_ptr[k];
  m.gather_src.resize(m.gather_ptr[n_out]);
  std::vector<std::size_t> fill(m.gather_ptr.begin(), m.gather_ptr.end() - 1);
  for (std::size_t p = 0; p < scatter.size(); ++p)
    if (scatter[p] != npos) m.gather_src[fill[scatter[p]]++] = p;
  m.scatter = std::move(scatter);
  return m;
}

PcgResult pcg_solve(const CsrMatrix& A, std::span<const double> b, std::span<double> x, double rel_tol,
                    std::size_t max_iter) {
  const std::size_t n = A.n;
  if (b.size() != n || x.size() != n) throw NumericError("linear system size mismatch");
  PcgResult res;
  const double bnorm = std::sqrt(kernels::dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> inv_diag = A.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw NumericError("matrix has a non-positive diagonal entry");
    d = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  A.multiply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = kernels::dot(r, z);
  double rnorm = std::sqrt(kernels::dot(r, r));
  while (rnorm > rel_tol * bnorm && res.iterations < max_iter) {
    A.multiply(p, q);
    const double pq = kernels::dot(p, q);
    if (!(pq > 0.0)) throw NumericError("matrix is not positive definite");
    const double alpha = rz / pq;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, q, r);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = kernels::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(kernels::dot(r, r));
    ++res.iterations;
  }
  res.residual = rnorm / bnorm;
  res.converged = rnorm <= rel_tol * bnorm;
  return res;
}

}  // namespace hibler
