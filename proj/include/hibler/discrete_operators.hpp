#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "hibler/fields.hpp"
#include "hibler/hibler_algebra.hpp"
#include "hibler/integrands.hpp"
#include "hibler/kernels.hpp"
#include "hibler/sparse.hpp"

namespace hibler {

/// Piecewise-linear vector finite element space with homogeneous boundary values
/// eliminated. Unknowns are interleaved: free node k owns dofs 2k and 2k+1.
/// Holds the precomputed element operators, sparsity patterns and assembly maps
/// shared by the solver and the diagnostics.
class FeSpace {
 public:
  FeSpace(MeshPtr mesh, HiblerParams params);

  const MeshPtr& mesh() const { return mesh_; }
  const HiblerParams& params() const { return params_; }

  std::size_t num_dofs() const { return 2 * free_nodes_.size(); }
  const std::vector<std::size_t>& free_nodes() const { return free_nodes_; }
  /// Free-node index of a mesh node, npos on the boundary.
  std::size_t free_index(std::size_t node) const { return free_index_[node]; }

  const ElementOperators& element_operators() const { return ops_; }
  /// Zero-valued matrix with the sparsity of any element-assembled operator.
  const CsrMatrix& pattern() const { return pattern_; }
  const AssemblyMap& matrix_map() const { return matrix_map_; }  // 36 slots per element
  const AssemblyMap& vector_map() const { return vector_map_; }  // 6 slots per element
  const CsrMatrix& mass() const { return mass_; }                // consistent mass
  const CsrMatrix& stiffness() const { return stiffness_; }      // vector Laplacian

  std::vector<double> restrict_to_dofs(const VectorField& u) const;
  /// Zero-trace field from a dof vector.
  VectorField extend(std::span<const double> dofs) const;
  /// Elementwise Hibler deformation (parallel kernel).
  std::vector<SymMat2> strains(std::span<const Vec2> u) const;

 private:
  MeshPtr mesh_;
  HiblerParams params_;
  std::vector<std::size_t> free_nodes_;
  std::vector<std::size_t> free_index_;
  ElementOperators ops_;
  CsrMatrix pattern_;
  AssemblyMap matrix_map_;
  AssemblyMap vector_map_;
  CsrMatrix mass_;
  CsrMatrix stiffness_;
};

/// Per-triangle symmetric gradient of the piecewise-linear interpolant.
ElementTensorField sym_grad(const VectorField& u);
/// t_map applied to sym_grad.
ElementTensorField hibler_def(const VectorField& u, const HiblerParams& params);

/// Nodal functional g of the adjoint, over all nodes, fixed by
///   <g, w> = -int sigma . T w + int_{boundary} sigma . (w (x)_T nu)
/// for every piecewise-linear w. On zero-trace w the boundary term drops.
std::vector<Vec2> hibler_adjoint(const ElementTensorField& sigma, const HiblerParams& params);

/// |int sigma . T v + <T* sigma, v>| for zero-trace v. Throws GeometryError otherwise.
double hibler_adjoint_residual(const ElementTensorField& sigma, const VectorField& v, const HiblerParams& params);

using Density = std::function<double(const SymMat2&)>;

double bulk_energy(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params);
double bulk_energy(const VectorField& u, const Density& density, const HiblerParams& params);
/// Two-point Gauss quadrature per boundary edge of F^inf(-u (x)_T nu).
double boundary_penalty(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params);
double relaxed_energy(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params);

enum class MassKind { consistent, lumped };

double l2_inner(const VectorField& u, const VectorField& v, MassKind kind = MassKind::consistent);
double l2_norm(const VectorField& u, MassKind kind = MassKind::consistent);
double l1_norm(const VectorField& u);
/// Sum over triangles of area * |T u|.
double total_hibler_variation(const VectorField& u, const HiblerParams& params);
/// Sum over triangles of area * |sym_grad u|.
double total_deformation(const VectorField& u);
/// Sum over triangles of area * |grad u|^2.
double h1_seminorm_squared(const VectorField& u);

/// sqrt(g^T K^{-1} g) for a functional g on the free dofs, K the zero-boundary vector Laplacian.
double dual_h1_norm(const FeSpace& space, std::span<const double> g);

/// Load functional on the free dofs: b = M f with the consistent mass matrix.
std::vector<double> load_vector(const FeSpace& space, const VectorField& f);

struct PoincareReport {
  double l2_constant = 0.0;  // sup ||u||_{L2} / |T u|(Omega)
  double l1_constant = 0.0;  // sup ||u||_{L1} / |T u|(Omega)
  std::size_t samples = 0;
};

/// Empirical embedding constants over seeded smooth zero-trace fields
/// dist(x, boundary) * (random low-mode trigonometric polynomial).
PoincareReport poincare_probe(const MeshPtr& mesh, const HiblerParams& params, std::size_t samples = 32,
                              std::uint64_t seed = 7);

/// "node x y u1 u2" rows.
void write_node_table(std::ostream& os, const VectorField& u);
/// "triangle t11 t12 t22 norm" rows.
void write_element_table(std::ostream& os, const ElementTensorField& field);

}  // namespace hibler
