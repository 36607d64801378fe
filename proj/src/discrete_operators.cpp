#include "hibler/discrete_operators.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <utility>

namespace hibler {

namespace {

std::array<double, 18> element_t_matrix(const std::array<Vec2, 3>& g, const HiblerParams& params) {
  std::array<double, 18> bt{};
  for (int k = 0; k < 3; ++k) {
    for (int c = 0; c < 2; ++c) {
      const Vec2 e = c == 0 ? Vec2{1, 0} : Vec2{0, 1};
      const SymMat2 t = t_map(sym_outer(e, g[k]), params);
      bt[0 * 6 + 2 * k + c] = t.a11;
      bt[1 * 6 + 2 * k + c] = t.a12;
      bt[2 * 6 + 2 * k + c] = t.a22;
    }
  }
  return bt;
}

SymMat2 element_sym_grad(const Mesh2D& mesh, std::size_t t, std::span<const Vec2> u) {
  const auto& tri = mesh.triangles()[t];
  const auto& g = mesh.hat_gradients(t);
  SymMat2 s{};
  for (int k = 0; k < 3; ++k) s += sym_outer(u[tri[k]], g[k]);
  return s;
}

}  // namespace

FeSpace::FeSpace(MeshPtr mesh, HiblerParams params) : mesh_(std::move(mesh)), params_(params) {
  params_.validate();
  const Mesh2D& m = *mesh_;
  free_index_.assign(m.num_nodes(), npos);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (m.is_boundary_node(i)) continue;
    free_index_[i] = free_nodes_.size();
    free_nodes_.push_back(i);
  }

  const std::size_t ne = m.num_triangles();
  ops_.count = ne;
  ops_.bt.resize(18 * ne);
  ops_.nodes.resize(3 * ne);
  ops_.area.resize(ne);
  for (std::size_t t = 0; t < ne; ++t) {
    const auto bt = element_t_matrix(m.hat_gradients(t), params_);
    std::copy(bt.begin(), bt.end(), ops_.bt.begin() + static_cast<std::ptrdiff_t>(18 * t));
    for (int k = 0; k < 3; ++k) ops_.nodes[3 * t + k] = m.triangles()[t][k];
    ops_.area[t] = m.area(t);
  }

  const auto local_dof = [&](std::size_t t, int l) -> std::size_t {
    const std::size_t f = free_index_[m.triangles()[t][l / 2]];
    return f == npos ? npos : 2 * f + static_cast<std::size_t>(l % 2);
  };

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  entries.reserve(36 * ne);
  for (std::size_t t = 0; t < ne; ++t)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        if (local_dof(t, i) != npos && local_dof(t, j) != npos) entries.emplace_back(local_dof(t, i), local_dof(t, j));
  pattern_ = csr_pattern(num_dofs(), std::move(entries));

  std::vector<std::size_t> mat_scatter(36 * ne, npos), vec_scatter(6 * ne, npos);
  for (std::size_t t = 0; t < ne; ++t) {
    for (int i = 0; i < 6; ++i) {
      const std::size_t di = local_dof(t, i);
      vec_scatter[6 * t + i] = di;
      if (di == npos) continue;
      for (int j = 0; j < 6; ++j)
        if (const std::size_t dj = local_dof(t, j); dj != npos) mat_scatter[36 * t + 6 * i + j] = pattern_.find(di, dj);
    }
  }
  matrix_map_ = AssemblyMap::from_scatter(pattern_.val.size(), 36, std::move(mat_scatter));
  vector_map_ = AssemblyMap::from_scatter(num_dofs(), 6, std::move(vec_scatter));

  std::vector<double> mass_loc(36 * ne, 0.0), stiff_loc(36 * ne, 0.0);
  for (std::size_t t = 0; t < ne; ++t) {
    const double a = m.area(t);
    const auto& g = m.hat_gradients(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c) {
          const std::size_t slot = 36 * t + 6 * (2 * i + c) + (2 * j + c);
          mass_loc[slot] = a / 12.0 * (i == j ? 2.0 : 1.0);
          stiff_loc[slot] = a * dot(g[i], g[j]);
        }
  }
  mass_ = pattern_;
  stiffness_ = pattern_;
  kernels::assemble(matrix_map_, mass_loc, mass_.val);
  kernels::assemble(matrix_map_, stiff_loc, stiffness_.val);
}

std::vector<double> FeSpace::restrict_to_dofs(const VectorField& u) const {
  if (u.mesh != mesh_) throw GeometryError("field lives on a different mesh");
  std::vector<double> x(num_dofs());
  for (std::size_t k = 0; k < free_nodes_.size(); ++k) {
    x[2 * k] = u.values[free_nodes_[k]].x;
    x[2 * k + 1] = u.values[free_nodes_[k]].y;
  }
  return x;
}

VectorField FeSpace::extend(std::span<const double> dofs) const {
  if (dofs.size() != num_dofs()) throw GeometryError("dof vector size mismatch");
  VectorField u(mesh_);
  for (std::size_t k = 0; k < free_nodes_.size(); ++k) u.values[free_nodes_[k]] = Vec2{dofs[2 * k], dofs[2 * k + 1]};
  return u;
}

std::vector<SymMat2> FeSpace::strains(std::span<const Vec2> u) const {
  if (u.size() != mesh_->num_nodes()) throw GeometryError("field size does not match mesh");
  std::vector<SymMat2> out(ops_.count);
  kernels::element_strains(ops_, u, out);
  return out;
}

ElementTensorField sym_grad(const VectorField& u) {
  ElementTensorField out(u.mesh);
  for (std::size_t t = 0; t < out.size(); ++t) out.values[t] = element_sym_grad(*u.mesh, t, u.values);
  return out;
}

ElementTensorField hibler_def(const VectorField& u, const HiblerParams& params) {
  ElementTensorField out = sym_grad(u);
  for (auto& z : out.values) z = t_map(z, params);
  return out;
}

std::vector<Vec2> hibler_adjoint(const ElementTensorField& sigma, const HiblerParams& params) {
  const Mesh2D& m = *sigma.mesh;
  std::vector<Vec2> g(m.num_nodes(), Vec2{0, 0});
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto& grads = m.hat_gradients(t);
    for (int k = 0; k < 3; ++k) g[tri[k]] -= contract_t_adjoint(sigma.values[t], grads[k], params) * m.area(t);
  }
  for (const auto& e : m.boundary_edges()) {
    const Vec2 w = contract_t_adjoint(sigma.values[e.triangle], e.normal, params) * (0.5 * e.length);
    g[e.a] += w;
    g[e.b] += w;
  }
  return g;
}

double hibler_adjoint_residual(const ElementTensorField& sigma, const VectorField& v, const HiblerParams& params) {
  if (sigma.mesh != v.mesh) throw GeometryError("stress and field live on different meshes");
  if (!v.has_zero_trace()) throw GeometryError("test field must have zero trace");
  const ElementTensorField tv = hibler_def(v, params);
  double bulk = 0.0;
  for (std::size_t t = 0; t < tv.size(); ++t) bulk += v.mesh->area(t) * dot(sigma.values[t], tv.values[t]);
  const auto g = hibler_adjoint(sigma, params);
  double pair = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) pair += dot(g[i], v.values[i]);
  return std::abs(bulk + pair);
}

double bulk_energy(const VectorField& u, const Density& density, const HiblerParams& params) {
  const ElementTensorField tu = hibler_def(u, params);
  std::vector<double> terms(tu.size());
  for (std::size_t t = 0; t < tu.size(); ++t) terms[t] = u.mesh->area(t) * density(tu.values[t]);
  return kernels::sum(terms);
}

double bulk_energy(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params) {
  return bulk_energy(u, [&](const SymMat2& z) { return eval_f(spec, z); }, params);
}

double boundary_penalty(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params) {
  static const double gp = 0.5 / std::numbers::sqrt3;
  double s = 0.0;
  for (const auto& e : u.mesh->boundary_edges()) {
    const Vec2 ua = u.values[e.a], ub = u.values[e.b];
    for (double xi : {0.5 - gp, 0.5 + gp}) {
      const Vec2 w = ua * (1.0 - xi) + ub * xi;
      s += 0.5 * e.length * recession(spec, tensor_product_t(-w, e.normal, params));
    }
  }
  return s;
}

double relaxed_energy(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params) {
  return bulk_energy(u, spec, params) + boundary_penalty(u, spec, params);
}

double l2_inner(const VectorField& u, const VectorField& v, MassKind kind) {
  require_same_mesh(u, v);
  const Mesh2D& m = *u.mesh;
  if (kind == MassKind::lumped) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) s += m.lumped_weight(i) * dot(u.values[i], v.values[i]);
    return s;
  }
  std::vector<double> terms(m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    Vec2 su{0, 0}, sv{0, 0};
    double diag = 0.0;
    for (std::size_t k : tri) {
      su += u.values[k];
      sv += v.values[k];
      diag += dot(u.values[k], v.values[k]);
    }
    terms[t] = m.area(t) / 12.0 * (diag + dot(su, sv));
  }
  return kernels::sum(terms);
}

double l2_norm(const VectorField& u, MassKind kind) { return std::sqrt(std::max(0.0, l2_inner(u, u, kind))); }

double l1_norm(const VectorField& u) {
  const Mesh2D& m = *u.mesh;
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    double q = 0.0;
    for (int k = 0; k < 3; ++k) q += norm((u.values[tri[k]] + u.values[tri[(k + 1) % 3]]) * 0.5);
    s += m.area(t) * q / 3.0;
  }
  return s;
}

double total_hibler_variation(const VectorField& u, const HiblerParams& params) {
  return bulk_energy(u, [](const SymMat2& z) { return z.norm(); }, params);
}

double total_deformation(const VectorField& u) {
  const ElementTensorField e = sym_grad(u);
  double s = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) s += u.mesh->area(t) * e.values[t].norm();
  return s;
}

double h1_seminorm_squared(const VectorField& u) {
  const Mesh2D& m = *u.mesh;
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto& g = m.hat_gradients(t);
    Vec2 gx{0, 0}, gy{0, 0};
    for (int k = 0; k < 3; ++k) {
      gx += g[k] * u.values[tri[k]].x;
      gy += g[k] * u.values[tri[k]].y;
    }
    s += m.area(t) * (dot(gx, gx) + dot(gy, gy));
  }
  return s;
}

double dual_h1_norm(const FeSpace& space, std::span<const double> g) {
  if (g.size() != space.num_dofs()) throw NumericError("functional size does not match the dof count");
  if (space.num_dofs() == 0) return 0.0;
  std::vector<double> x(g.size(), 0.0);
  const auto res = pcg_solve(space.stiffness(), g, x, 1e-12, 20 * g.size() + 100);
  if (!res.converged) throw NumericError("dual norm solve did not converge");
  return std::sqrt(std::max(0.0, kernels::dot(g, x)));
}

std::vector<double> load_vector(const FeSpace& space, const VectorField& f) {
  const Mesh2D& m = *space.mesh();
  if (f.mesh != space.mesh()) throw GeometryError("forcing lives on a different mesh");
  std::vector<double> loc(6 * m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const Vec2 s = f.values[tri[0]] + f.values[tri[1]] + f.values[tri[2]];
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = (f.values[tri[k]] + s) * (m.area(t) / 12.0);
      loc[6 * t + 2 * k] = v.x;
      loc[6 * t + 2 * k + 1] = v.y;
    }
  }
  std::vector<double> b(space.num_dofs());
  kernels::assemble(space.vector_map(), loc, b);
  return b;
}

PoincareReport poincare_probe(const MeshPtr& mesh, const HiblerParams& params, std::size_t samples,
                              std::uint64_t seed) {
  const Mesh2D& m = *mesh;
  Vec2 lo = m.nodes().front(), hi = lo;
  for (const auto& p : m.nodes()) {
    lo = Vec2{std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = Vec2{std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const Vec2 span = hi - lo;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi);
  PoincareReport rep;
  rep.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    double a[2][3][3], ph[2][3][3];
    for (auto& c : a)
      for (auto& r : c)
        for (auto& v : r) v = coef(rng);
    for (auto& c : ph)
      for (auto& r : c)
        for (auto& v : r) v = phase(rng);
    VectorField u(mesh);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      const Vec2 x = m.nodes()[i];
      const double xi = (x.x - lo.x) / span.x, eta = (x.y - lo.y) / span.y;
      double val[2] = {0, 0};
      for (int c = 0; c < 2; ++c)
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            val[c] += a[c][p][q] * std::sin((p + 1) * std::numbers::pi * xi + ph[c][p][q]) *
                      std::sin((q + 1) * std::numbers::pi * eta + ph[c][q][p]);
      const double d = m.node_boundary_distance()[i];
      u.values[i] = Vec2{d * val[0], d * val[1]};
    }
    const double tv = total_hibler_variation(u, params);
    if (!(tv > 0.0)) continue;
    rep.l2_constant = std::max(rep.l2_constant, l2_norm(u) / tv);
    rep.l1_constant = std::max(rep.l1_constant, l1_norm(u) / tv);
  }
  return rep;
}

void write_node_table(std::ostream& os, const VectorField& u) {
  const auto old = os.precision(17);
  os << "node x y u1 u2\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec2 p = u.mesh->nodes()[i];
    os << i << ' ' << p.x << ' ' << p.y << ' ' << u.values[i].x << ' ' << u.values[i].y << '\n';
  }
  os.precision(old);
}

void write_element_table(std::ostream& os, const ElementTensorField& field) {
  const auto old = os.precision(17);
  os << "triangle t11 t12 t22 norm\n";
  for (std::size_t t = 0; t < field.size(); ++t) {
    const SymMat2& z = field.values[t];
    os << t << ' ' << z.a11 << ' ' << z.a12 << ' ' << z.a22 << ' ' << z.norm() << '\n';
  }
  os.precision(old);
}

}  // namespace hibler
