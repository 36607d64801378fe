#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "hibler/sym_mat2.hpp"

namespace hibler {

using Triangle = std::array<std::size_t, 3>;

struct BoundaryEdge {
  std::size_t a;         // start node (counter-clockwise along the boundary)
  std::size_t b;         // end node
  Vec2 normal;           // outward unit normal
  double length;
  std::size_t triangle;  // owning triangle
};

enum class MeshPattern {
  diagonal,  // every cell split along the same diagonal
  crossed,   // every cell split into four triangles around its centre
};

/// Conforming first-order triangulation of a polygonal domain. Immutable once built;
/// all queries are read-only and safe to share between threads.
class Mesh2D {
 public:
  /// Builds connectivity and geometry. Clockwise triangles are reoriented; degenerate
  /// triangles raise GeometryError. `outline` is the closed domain polygon (CCW or CW).
  static std::shared_ptr<const Mesh2D> from_triangles(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
                                                      std::vector<Vec2> outline);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<double>& node_boundary_distance() const { return node_distance_; }
  const std::vector<Vec2>& outline() const { return outline_; }

  bool is_boundary_node(std::size_t i) const { return boundary_node_[i] != 0; }
  double area(std::size_t t) const { return areas_[t]; }
  /// Gradients of the three barycentric (hat) functions on triangle t.
  const std::array<Vec2, 3>& hat_gradients(std::size_t t) const { return hat_grads_[t]; }
  Vec2 centroid(std::size_t t) const;
  /// Lumped nodal quadrature weight (one third of the adjacent area).
  double lumped_weight(std::size_t i) const { return lumped_[i]; }
  /// Longest edge length.
  double mesh_size() const { return h_; }
  double total_area() const;
  /// Largest node-to-boundary distance, a lower estimate of the inradius.
  double max_boundary_distance() const;
  bool outline_is_convex() const { return convex_; }

 private:
  Mesh2D() = default;

  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Vec2> outline_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<char> boundary_node_;
  std::vector<double> node_distance_;
  std::vector<double> areas_;
  std::vector<std::array<Vec2, 3>> hat_grads_;
  std::vector<double> lumped_;
  double h_ = 0.0;
  bool convex_ = true;
};

using MeshPtr = std::shared_ptr<const Mesh2D>;

MeshPtr build_rect_mesh(std::size_t nx, std::size_t ny, double Lx, double Ly,
                        MeshPattern pattern = MeshPattern::diagonal);

/// Ear-clipping triangulation of a simple polygon followed by `refinements` rounds of
/// uniform red refinement. Nonconvex outlines are accepted (the caller may warn).
MeshPtr build_polygon_mesh(const std::vector<Vec2>& vertices, int refinements);

/// Exact Euclidean distance from x to the domain outline. Throws GeometryError when x
/// lies outside the closed domain.
double boundary_distance(const Mesh2D& mesh, const Vec2& x);
bool point_in_domain(const Mesh2D& mesh, const Vec2& x, double tol = 1e-12);

/// Piecewise-linear collar cut-off eta_delta (nodal interpolant).
struct CollarCutoff {
  double delta = 0.0;
  bool compact_support = false;
  std::vector<double> nodal_values;
};

/// min(dist/delta, 1), or clamp(2 dist/delta - 1, 0, 1) for the compact variant.
CollarCutoff eta_delta(const Mesh2D& mesh, double delta, bool compact);

/// Per-element |grad eta| for a nodal scalar field.
std::vector<double> element_gradient_norms(const Mesh2D& mesh, std::span<const double> nodal);

/// Radial C^2 bump (1 - (r/rho)^2)^3 on r < rho.
double mollifier_kernel(double r, double radius);

/// Discrete convolution with the bump kernel using lumped nodal quadrature,
/// renormalized per output node. With `preserve_support`, nonzero input values
/// closer than `radius` to the boundary raise GeometryError.
std::vector<double> mollify_nodal_field(const Mesh2D& mesh, std::span<const double> field, double radius,
                                        bool preserve_support);
std::vector<Vec2> mollify_nodal_field(const Mesh2D& mesh, std::span<const Vec2> field, double radius,
                                      bool preserve_support);

/// A rectangle mesh padded by one strip of cells, with the embedding of the inner nodes.
struct PaddedMesh {
  MeshPtr outer;
  std::vector<std::size_t> inner_to_outer;
};

PaddedMesh pad_rect_mesh(std::size_t nx, std::size_t ny, double Lx, double Ly);

/// Plain-text node/element listing.
void write_mesh_listing(std::ostream& os, const Mesh2D& mesh);

}  // namespace hibler
