#include "hibler/anzellotti_pairing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "hibler/errors.hpp"

namespace hibler {

namespace {

std::vector<double> inner_values(const VectorField& u, std::span<const double> phi_outer, const PaddedMesh& padded) {
  const Mesh2D& inner = *u.mesh;
  if (!padded.outer || padded.inner_to_outer.size() != inner.num_nodes() ||
      phi_outer.size() != padded.outer->num_nodes())
    throw GeometryError("padded mesh does not match the field's mesh");
  std::vector<double> phi(inner.num_nodes());
  for (std::size_t i = 0; i < inner.num_nodes(); ++i) {
    const std::size_t o = padded.inner_to_outer[i];
    if (norm(padded.outer->nodes()[o] - inner.nodes()[i]) > 1e-12 * (1.0 + norm(inner.nodes()[i])))
      throw GeometryError("padded mesh node " + std::to_string(o) + " does not coincide with inner node " +
                          std::to_string(i));
    phi[i] = phi_outer[o];
  }
  return phi;
}

void require_stress_mesh(const StressField& s, const VectorField& u) {
  if (s.sigma.mesh != u.mesh) throw GeometryError("stress and velocity live on different meshes");
}

// Simpson's rule for the product of two linear functions along an edge.
Vec2 edge_product(double pa, double pb, const Vec2& ua, const Vec2& ub, double length) {
  const double pm = 0.5 * (pa + pb);
  const Vec2 um = 0.5 * (ua + ub);
  return (length / 6.0) * (pa * ua + 4.0 * pm * um + pb * ub);
}

double boundary_jump_term(const StressField& s, const VectorField& u, const std::vector<double>& phi,
                          const HiblerParams& params) {
  double b = 0.0;
  for (const auto& e : u.mesh->boundary_edges()) {
    const Vec2 w = edge_product(phi[e.a], phi[e.b], u.values[e.a], u.values[e.b], e.length);
    b += dot(s.sigma.values[e.triangle], tensor_product_t(w, e.normal, params));
  }
  return b;
}

}  // namespace

double StressField::feasibility_norm() const {
  double m = 0.0;
  for (const auto& z : sigma.values) m = std::max(m, z.norm());
  return m;
}

void MassField::validate() const {
  if (!mesh) throw ConfigError("mass field has no mesh");
  if (times.empty() || times.size() != values.size()) throw ConfigError("mass field: one frame per time required");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ConfigError("mass field times must increase");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k].size() != mesh->num_nodes()) throw ConfigError("mass field frame does not match the mesh");
    for (std::size_t i = 0; i < values[k].size(); ++i)
      if (!(values[k][i] > 0.0) || !std::isfinite(values[k][i]))
        throw ConfigError("mass field must be positive: m = " + std::to_string(values[k][i]) + " at node " +
                          std::to_string(i) + ", frame " + std::to_string(k));
  }
}

double MassField::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& f : values)
    for (double x : f) m = std::min(m, x);
  return m;
}

double MassField::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& f : values)
    for (double x : f) m = std::max(m, x);
  return m;
}

std::vector<double> MassField::at(double t) const {
  if (values.empty()) throw ConfigError("mass field has no frames");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double s = (t - times[lo]) / (times[hi] - times[lo]);
  std::vector<double> out(values[lo].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - s) * values[lo][i] + s * values[hi][i];
  return out;
}

MassField MassField::constant(const MeshPtr& mesh, double m) {
  MassField f{mesh, {0.0}, {std::vector<double>(mesh->num_nodes(), m)}};
  f.validate();
  return f;
}

MassField MassField::from_function(const MeshPtr& mesh, const std::vector<double>& times,
                                   const std::function<double(double, Vec2)>& m) {
  MassField f{mesh, times, {}};
  for (double t : times) {
    std::vector<double> frame(mesh->num_nodes());
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = m(t, mesh->nodes()[i]);
    f.values.push_back(std::move(frame));
  }
  f.validate();
  return f;
}

double pairing_apply(const StressField& sigma, const VectorField& u, std::span<const double> phi_outer,
                     const PaddedMesh& padded, const HiblerParams& params) {
  require_stress_mesh(sigma, u);
  const auto phi = inner_values(u, phi_outer, padded);
  const Mesh2D& m = *u.mesh;
  double edges = 0.0, grad = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const SymMat2& s = sigma.sigma.values[t];
    for (int k = 0; k < 3; ++k) {
      const std::size_t p = tri[k], q = tri[(k + 1) % 3];
      const Vec2 d = m.nodes()[q] - m.nodes()[p];
      const double len = norm(d);
      const Vec2 nu{d.y / len, -d.x / len};  // outward for counter-clockwise triangles
      edges += dot(s, tensor_product_t(edge_product(phi[p], phi[q], u.values[p], u.values[q], len), nu, params));
    }
    const auto& g = m.hat_gradients(t);
    const Vec2 gphi = phi[tri[0]] * g[0] + phi[tri[1]] * g[1] + phi[tri[2]] * g[2];
    const Vec2 ubar = (1.0 / 3.0) * (u.values[tri[0]] + u.values[tri[1]] + u.values[tri[2]]);
    grad += m.area(t) * dot(s, tensor_product_t(ubar, gphi, params));
  }
  return edges - boundary_jump_term(sigma, u, phi, params) - grad;
}

double pairing_density_integral(const StressField& sigma, const VectorField& u, std::span<const double> phi_outer,
                                const PaddedMesh& padded, const HiblerParams& params) {
  require_stress_mesh(sigma, u);
  const auto phi = inner_values(u, phi_outer, padded);
  const Mesh2D& m = *u.mesh;
  const auto tu = hibler_def(u, params);
  double bulk = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const double pbar = (phi[tri[0]] + phi[tri[1]] + phi[tri[2]]) / 3.0;
    bulk += m.area(t) * pbar * dot(sigma.sigma.values[t], tu.values[t]);
  }
  return bulk - boundary_jump_term(sigma, u, phi, params);
}

double pairing_mass_bound(const StressField& sigma, const VectorField& u, const HiblerParams& params) {
  require_stress_mesh(sigma, u);
  double mass = total_hibler_variation(u, params);
  for (const auto& e : u.mesh->boundary_edges())
    mass += 0.5 * e.length *
            (tensor_product_t(u.values[e.a], e.normal, params).norm() + tensor_product_t(u.values[e.b], e.normal, params).norm());
  return sigma.feasibility_norm() * mass;
}

MassBoundReport pairing_mass_bound_check(const StressField& sigma, const VectorField& u, const PaddedMesh& padded,
                                         const HiblerParams& params, std::size_t samples, std::uint64_t seed) {
  MassBoundReport rep;
  rep.bound = pairing_mass_bound(sigma, u, params);
  const Mesh2D& outer = *padded.outer;
  const Mesh2D& inner = *u.mesh;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  // Sign of each inner boundary node's share of the boundary term, for the aligned strip fields.
  std::vector<double> strip_sign(inner.num_nodes(), 0.0);
  for (const auto& e : inner.boundary_edges()) {
    const SymMat2& s = sigma.sigma.values[e.triangle];
    strip_sign[e.a] -= dot(s, tensor_product_t(u.values[e.a], e.normal, params));
    strip_sign[e.b] -= dot(s, tensor_product_t(u.values[e.b], e.normal, params));
  }

  std::vector<double> phi(outer.num_nodes());
  for (std::size_t k = 0; k < samples; ++k) {
    switch (k % 3) {
      case 0: {  // smooth low modes
        const double a = g(rng), b = g(rng), c = g(rng), kx = 1 + 3 * std::abs(uni(rng)), ky = 1 + 3 * std::abs(uni(rng));
        for (std::size_t i = 0; i < phi.size(); ++i) {
          const Vec2 x = outer.nodes()[i];
          phi[i] = a * std::sin(kx * x.x + c) * std::cos(ky * x.y) + b * std::cos(kx * x.y - c);
        }
        break;
      }
      case 1:  // nodal noise
        for (double& p : phi) p = uni(rng);
        break;
      default: {  // concentrated on the boundary strip
        std::fill(phi.begin(), phi.end(), 0.0);
        const double flip = uni(rng) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < inner.num_nodes(); ++i)
          if (inner.is_boundary_node(i)) {
            const double sgn = strip_sign[i] != 0.0 ? std::copysign(1.0, strip_sign[i]) : uni(rng);
            phi[padded.inner_to_outer[i]] = flip * sgn;
          }
        break;
      }
    }
    double sup = 0.0;
    for (double p : phi) sup = std::max(sup, std::abs(p));
    if (sup == 0.0) phi[0] = sup = 1.0;
    for (double& p : phi) p /= sup;
    const double value = std::abs(pairing_apply(sigma, u, phi, padded, params));
    rep.max_pairing = std::max(rep.max_pairing, value);
    if (value > rep.bound * (1.0 + 1e-12) + 1e-14) rep.violations.push_back(k);
  }
  rep.samples = samples;
  return rep;
}

StressField recover_stress(const VectorField& u, const RegularizedIntegrand& reg, const HiblerParams& params) {
  const auto tu = hibler_def(u, params);
  StressField s{ElementTensorField(u.mesh)};
  const double scale = 2.0 / reg.base.P;
  for (std::size_t t = 0; t < tu.size(); ++t) s.sigma.values[t] = scale * grad_f_eps(reg, tu.values[t]);
  return s;
}

std::vector<StressField> stress_recovery(const Trajectory& u, const RegularizedIntegrand& reg,
                                         const HiblerParams& params, double newton_tol) {
  for (const auto& st : u.steps)
    if (!(st.newton_residual <= newton_tol))
      throw SolverError("stress recovery: step " + std::to_string(st.step) + " did not converge (residual " +
                            std::to_string(st.newton_residual) + ")",
                        st.newton_residual, static_cast<long>(st.step));
  std::vector<StressField> out;
  out.reserve(u.states.size());
  for (const auto& s : u.states) out.push_back(recover_stress(s, reg, params));
  return out;
}

WeakVarResidual weak_var_residual(const Trajectory& u, const std::vector<StressField>& sigma, const MassField& m,
                                  const TestTrajectory& v, double t, const Forces& forces, const HiblerParams& params,
                                  const WeakVarOptions& opts) {
  m.validate();
  v.validate();
  if (u.states.size() < 2 || sigma.size() != u.states.size() || v.states.size() != u.states.size())
    throw ConfigError("weak-variational residual: trajectory, stresses and test states must have equal length >= 2");
  const MeshPtr& mesh = u.states.front().mesh;
  if (m.mesh != mesh || v.states.front().mesh != mesh) throw GeometryError("weak-variational residual: mesh mismatch");
  std::size_t n = 0;
  for (; n < u.times.size(); ++n)
    if (std::abs(u.times[n] - t) <= 1e-9 * std::max(1.0, std::abs(t))) break;
  if (n == 0 || n == u.times.size()) throw ConfigError("weak-variational residual: t must be a trajectory time after t_0");
  const StressField& sg = sigma[n];
  if (sg.sigma.mesh != mesh) throw GeometryError("weak-variational residual: stress mesh mismatch");
  if (!sg.feasible())
    throw ConfigError("weak-variational residual: stress is not feasible (|sigma| = " +
                      std::to_string(sg.feasibility_norm()) + ")");

  const Mesh2D& M = *mesh;
  const double tau = u.times[n] - u.times[n - 1];
  const VectorField& un = u.states[n];
  const VectorField rate = (1.0 / tau) * (un - u.states[n - 1]);
  const VectorField load = step_load(forces, u.states[n - 1], u.times[n - 1]);
  const VectorField d = un - v.states[n];
  std::vector<double> minv = m.at(u.times[n]);
  for (double& x : minv) x = 1.0 / x;
  const auto tu = hibler_def(un, params);

  std::vector<Vec2> r(M.num_nodes(), Vec2{0, 0});
  double energy = 0.0, grad_term = 0.0, load_term = 0.0;
  ElementTensorField weighted(mesh);
  for (std::size_t e = 0; e < M.num_triangles(); ++e) {
    const auto& tri = M.triangles()[e];
    const auto& g = M.hat_gradients(e);
    const double area = M.area(e);
    const SymMat2 S = opts.stress_scale * sg.sigma.values[e] + opts.viscous_delta * tu.values[e];
    const double w = (minv[tri[0]] + minv[tri[1]] + minv[tri[2]]) / 3.0;
    const Vec2 gm = minv[tri[0]] * g[0] + minv[tri[1]] * g[1] + minv[tri[2]] * g[2];
    weighted.values[e] = w * S;

    // distributional residual against hats
    for (int k = 0; k < 3; ++k) {
      Vec2 mass{0, 0};
      for (int l = 0; l < 3; ++l) mass += (k == l ? 2.0 : 1.0) * rate.values[tri[l]];
      r[tri[k]] += (area / 12.0) * mass;
      r[tri[k]] += area * contract_t_adjoint(weighted.values[e], g[k], params);
      r[tri[k]] += (area / 3.0) * contract_t_adjoint(S, gm, params);
    }
    // edge-midpoint rule for the mass-weighted loads
    for (int k = 0; k < 3; ++k) {
      const std::size_t p = tri[k], q = tri[(k + 1) % 3];
      const double mq = 0.5 * (minv[p] + minv[q]);
      const Vec2 fq = 0.5 * (load.values[p] + load.values[q]);
      r[p] -= (area / 6.0) * mq * fq;
      r[q] -= (area / 6.0) * mq * fq;
      load_term += (area / 3.0) * mq * dot(fq, 0.5 * (d.values[p] + d.values[q]));
    }

    const double z = tu.values[e].norm();
    energy += area * w * (opts.stress_scale * z + opts.viscous_delta * z * z);
    const Vec2 dbar = (1.0 / 3.0) * (d.values[tri[0]] + d.values[tri[1]] + d.values[tri[2]]);
    grad_term += area * dot(S, tensor_product_t(dbar, gm, params));
  }

  WeakVarResidual out;
  double sq = 0.0;
  for (std::size_t i = 0; i < M.num_nodes(); ++i)
    if (!M.is_boundary_node(i)) sq += dot(r[i], r[i]);
  out.eq_residual = std::sqrt(sq);

  // [(1/m) S . T v]_0(closed domain) = -<T*((1/m) S), v>
  const auto adj = hibler_adjoint(weighted, params);
  double pairing_v = 0.0;
  for (std::size_t i = 0; i < M.num_nodes(); ++i) pairing_v -= dot(adj[i], v.states[n].values[i]);

  out.coupling_residual = l2_inner(rate, d) + energy + grad_term - load_term - pairing_v;
  return out;
}

}  // namespace hibler
