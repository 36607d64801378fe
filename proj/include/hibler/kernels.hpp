#pragma once

#include <span>

#include "hibler/sparse.hpp"
#include "hibler/sym_mat2.hpp"

namespace hibler {

/// Hibler-deformation element operators: 3 rows (entries 11, 12, 22) by 6 local
/// dofs (node k, component c at column 2k + c), 18 doubles per element.
struct ElementOperators {
  std::vector<double> bt;
  std::vector<std::size_t> nodes;  // 3 node ids per element
  std::vector<double> area;
  std::size_t count = 0;
};

// OpenMP kernels. Reductions use fixed chunking, so results do not depend on the thread count.
namespace kernels {

double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);
void csr_matvec(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
void element_strains(const ElementOperators& ops, std::span<const Vec2> u, std::span<SymMat2> out);
/// out[k] = sum of element values routed to k, in element order.
void assemble(const AssemblyMap& map, std::span<const double> element_values, std::span<double> out);
/// out[6e + j] = area_e * sum_r bt_e[r][j] * coeff[3e + r]  (element gradient vectors)
void element_vectors(const ElementOperators& ops, std::span<const double> coeff, std::span<double> out);
/// out[36e + 6i + j] = area_e * (bt_e^T H_e bt_e)[i][j] with H_e = hess[9e .. 9e + 9]
void element_matrices(const ElementOperators& ops, std::span<const double> hess, std::span<double> out);

}  // namespace kernels

// Serial twins, written as plain loops; kept as the oracle for the parallel kernels.
namespace reference {

double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);
void csr_matvec(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
void element_strains(const ElementOperators& ops, std::span<const Vec2> u, std::span<SymMat2> out);
void assemble(const AssemblyMap& map, std::span<const double> element_values, std::span<double> out);
void element_vectors(const ElementOperators& ops, std::span<const double> coeff, std::span<double> out);
void element_matrices(const ElementOperators& ops, std::span<const double> hess, std::span<double> out);

}  // namespace reference

}  // namespace hibler
