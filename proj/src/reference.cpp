#include <algorithm>

#include "hibler/errors.hpp"
#include "hibler/kernels.hpp"

namespace hibler::reference {

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw NumericError("dot product size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void csr_matvec(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < A.n; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) y[i] += A.val[p] * x[A.col[p]];
}

void element_strains(const ElementOperators& ops, std::span<const Vec2> u, std::span<SymMat2> out) {
  for (std::size_t e = 0; e < ops.count; ++e) {
    double c[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      const Vec2& v = u[ops.nodes[3 * e + k]];
      for (int r = 0; r < 3; ++r) {
        c[r] += ops.bt[18 * e + 6 * r + 2 * k] * v.x;
        c[r] += ops.bt[18 * e + 6 * r + 2 * k + 1] * v.y;
      }
    }
    out[e] = SymMat2{c[0], c[1], c[2]};
  }
}

void assemble(const AssemblyMap& map, std::span<const double> element_values, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t p = 0; p < map.scatter.size(); ++p)
    if (map.scatter[p] != npos) out[map.scatter[p]] += element_values[p];
}

void element_vectors(const ElementOperators& ops, std::span<const double> coeff, std::span<double> out) {
  for (std::size_t e = 0; e < ops.count; ++e)
    for (int j = 0; j < 6; ++j) {
      double s = 0.0;
      for (int r = 0; r < 3; ++r) s += ops.bt[18 * e + 6 * r + j] * coeff[3 * e + r];
      out[6 * e + j] = ops.area[e] * s;
    }
}

void element_matrices(const ElementOperators& ops, std::span<const double> hess, std::span<double> out) {
  for (std::size_t e = 0; e < ops.count; ++e)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r)
          for (int q = 0; q < 3; ++q)
            s += ops.bt[18 * e + 6 * r + i] * hess[9 * e + 3 * r + q] * ops.bt[18 * e + 6 * q + j];
        out[36 * e + 6 * i + j] = ops.area[e] * s;
      }
}

}  // namespace hibler::reference
