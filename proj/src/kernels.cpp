#include "hibler/kernels.hpp"

#include <algorithm>
#include <vector>

#include "hibler/errors.hpp"

namespace hibler::kernels {

namespace {

constexpr std::size_t chunk = 2048;

template <class Fn>
double chunked_sum(std::size_t n, Fn&& term) {
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(nchunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * chunk, hi = std::min(n, lo + chunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double sum(std::span<const double> v) {
  return chunked_sum(v.size(), [&](std::size_t i) { return v[i]; });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw NumericError("dot product size mismatch");
  return chunked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void csr_matvec(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(A.n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) s += A.val[p] * x[A.col[p]];
    y[i] = s;
  }
}

void element_strains(const ElementOperators& ops, std::span<const Vec2> u, std::span<SymMat2> out) {
  const auto n = static_cast<std::ptrdiff_t>(ops.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < n; ++e) {
    const double* b = &ops.bt[18 * static_cast<std::size_t>(e)];
    const std::size_t* nd = &ops.nodes[3 * static_cast<std::size_t>(e)];
    double loc[6];
    for (int k = 0; k < 3; ++k) {
      loc[2 * k] = u[nd[k]].x;
      loc[2 * k + 1] = u[nd[k]].y;
    }
    double c[3] = {0, 0, 0};
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < 6; ++j) c[r] += b[6 * r + j] * loc[j];
    out[e] = SymMat2{c[0], c[1], c[2]};
  }
}

void assemble(const AssemblyMap& map, std::span<const double> element_values, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(map.n_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t p = map.gather_ptr[k]; p < map.gather_ptr[k + 1]; ++p) s += element_values[map.gather_src[p]];
    out[k] = s;
  }
}

namespace {

void element_vector(const double* b, double area, const double* c, double* out) {
  for (int j = 0; j < 6; ++j) out[j] = area * (b[j] * c[0] + b[6 + j] * c[1] + b[12 + j] * c[2]);
}

void element_matrix(const double* b, double area, const double* h, double* out) {
  double hb[18];  // H * bt
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < 6; ++j) hb[6 * r + j] = h[3 * r] * b[j] + h[3 * r + 1] * b[6 + j] + h[3 * r + 2] * b[12 + j];
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out[6 * i + j] = area * (b[i] * hb[j] + b[6 + i] * hb[6 + j] + b[12 + i] * hb[12 + j]);
}

}  // namespace

void element_vectors(const ElementOperators& ops, std::span<const double> coeff, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(ops.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < n; ++e)
    element_vector(&ops.bt[18 * e], ops.area[e], &coeff[3 * e], &out[6 * e]);
}

void element_matrices(const ElementOperators& ops, std::span<const double> hess, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(ops.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < n; ++e)
    element_matrix(&ops.bt[18 * e], ops.area[e], &hess[9 * e], &out[36 * e]);
}

}  // namespace hibler::kernels
