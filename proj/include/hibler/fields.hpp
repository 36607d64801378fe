#pragma once

#include <cstddef>
#include <vector>

#include "hibler/errors.hpp"
#include "hibler/mesh.hpp"
#include "hibler/sym_mat2.hpp"

namespace hibler {

/// Nodal 2-vector field (a piecewise-linear velocity).
struct VectorField {
  MeshPtr mesh;
  std::vector<Vec2> values;

  VectorField() = default;
  explicit VectorField(MeshPtr m) : mesh(std::move(m)), values(mesh->num_nodes(), Vec2{0, 0}) {}
  VectorField(MeshPtr m, std::vector<Vec2> v) : mesh(std::move(m)), values(std::move(v)) {
    if (values.size() != mesh->num_nodes()) throw GeometryError("vector field size does not match mesh");
  }

  std::size_t size() const { return values.size(); }
  Vec2& operator[](std::size_t i) { return values[i]; }
  const Vec2& operator[](std::size_t i) const { return values[i]; }

  /// True iff every boundary nodal value is exactly zero.
  bool has_zero_trace() const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (mesh->is_boundary_node(i) && (values[i].x != 0.0 || values[i].y != 0.0)) return false;
    return true;
  }

  template <class Fn>
  static VectorField from_function(MeshPtr m, Fn&& fn) {
    VectorField out(m);
    for (std::size_t i = 0; i < m->num_nodes(); ++i) out.values[i] = fn(m->nodes()[i]);
    return out;
  }
};

inline void require_same_mesh(const VectorField& a, const VectorField& b) {
  if (a.mesh != b.mesh) throw GeometryError("fields live on different meshes");
}

inline VectorField operator+(const VectorField& a, const VectorField& b) {
  require_same_mesh(a, b);
  VectorField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.values[i];
  return out;
}
inline VectorField operator-(const VectorField& a, const VectorField& b) {
  require_same_mesh(a, b);
  VectorField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b.values[i];
  return out;
}
inline VectorField operator*(double s, const VectorField& a) {
  VectorField out = a;
  for (auto& v : out.values) v *= s;
  return out;
}

/// Piecewise-constant symmetric tensor field, one value per triangle.
struct ElementTensorField {
  MeshPtr mesh;
  std::vector<SymMat2> values;

  ElementTensorField() = default;
  explicit ElementTensorField(MeshPtr m) : mesh(std::move(m)), values(mesh->num_triangles(), SymMat2{}) {}
  ElementTensorField(MeshPtr m, std::vector<SymMat2> v) : mesh(std::move(m)), values(std::move(v)) {
    if (values.size() != mesh->num_triangles()) throw GeometryError("tensor field size does not match mesh");
  }
  std::size_t size() const { return values.size(); }
};

}  // namespace hibler
