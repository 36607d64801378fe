#include "hibler/vi_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hibler/errors.hpp"
#include "hibler/mesh.hpp"

namespace hibler {

namespace {

void require_mesh(const VectorField& a, const MeshPtr& m, const char* what) {
  if (a.mesh != m) throw GeometryError(std::string(what) + " lives on a different mesh");
}

bool finite(const VectorField& u) {
  return std::all_of(u.values.begin(), u.values.end(), [](const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); });
}

// Index N with times[N] == s up to rounding.
std::size_t time_index(const std::vector<double>& times, double s) {
  const double tol = 1e-9 * std::max(1.0, std::abs(s));
  for (std::size_t n = 0; n < times.size(); ++n)
    if (std::abs(times[n] - s) <= tol) return n;
  throw ConfigError("time " + std::to_string(s) + " is not a trajectory time");
}

void require_matching(const Trajectory& u, const TestTrajectory& v) {
  v.validate();
  if (u.states.empty()) throw ConfigError("empty trajectory");
  if (u.states.size() != v.states.size()) throw ConfigError("trajectory and test trajectory lengths differ");
  for (std::size_t n = 0; n < u.times.size(); ++n)
    if (std::abs(u.times[n] - v.times[n]) > 1e-9 * std::max(1.0, std::abs(u.times[n])))
      throw ConfigError("trajectory and test trajectory use different times");
  require_mesh(v.states.front(), u.states.front().mesh, "test trajectory");
}

double regularized_energy(const VectorField& v, const RegularizedIntegrand& reg, const HiblerParams& params) {
  return bulk_energy(v, Density([&](const SymMat2& z) { return eval_f_delta_eps(reg, z); }), params);
}

// sum tau (||T w||_L1 + ||w||_L1) over the right endpoints, the scale of the limit tolerances.
double test_scale(const std::vector<VectorField>& w, std::size_t N, double tau, const HiblerParams& params) {
  double s = 0.0;
  for (std::size_t n = 0; n < N; ++n) s += tau * (total_hibler_variation(w[n + 1], params) + l1_norm(w[n + 1]));
  return s;
}

double step_size(const std::vector<double>& times) { return times.size() > 1 ? times[1] - times[0] : 0.0; }

}  // namespace

void TestTrajectory::validate() const {
  if (states.empty()) throw ConfigError("test trajectory has no states");
  if (times.size() != states.size() || rates.size() != states.size())
    throw ConfigError("test trajectory: times, states and rates differ in length");
  const MeshPtr& m = states.front().mesh;
  for (std::size_t n = 0; n < states.size(); ++n) {
    require_mesh(states[n], m, "test state");
    require_mesh(rates[n], m, "test rate");
    if (!finite(states[n]) || !finite(rates[n]))
      throw ConfigError("test trajectory is not finite at index " + std::to_string(n));
  }
  const double tau = this->tau();
  for (std::size_t n = 1; n < times.size(); ++n)
    if (!(tau > 0.0) || std::abs(times[n] - times[n - 1] - tau) > 1e-9 * tau)
      throw ConfigError("test trajectory times must be evenly spaced and increasing");
}

TestTrajectory TestTrajectory::from_trajectory(const Trajectory& u) {
  if (u.states.empty()) throw ConfigError("empty trajectory");
  TestTrajectory v;
  v.times = u.times;
  v.states = u.states;
  const double tau = step_size(u.times);
  for (std::size_t n = 0; n < u.states.size(); ++n) {
    if (u.states.size() == 1)
      v.rates.emplace_back(u.states[0].mesh);
    else if (n + 1 < u.states.size())
      v.rates.push_back((1.0 / tau) * (u.states[n + 1] - u.states[n]));
    else
      v.rates.push_back(v.rates.back());
  }
  return v;
}

TestTrajectory TestTrajectory::from_function(const MeshPtr& mesh, const std::vector<double>& times,
                                             const std::function<Vec2(double, Vec2)>& v,
                                             const std::function<Vec2(double, Vec2)>& dvdt) {
  TestTrajectory out;
  out.times = times;
  for (double t : times) {
    out.states.push_back(VectorField::from_function(mesh, [&](Vec2 x) { return v(t, x); }));
    out.rates.push_back(VectorField::from_function(mesh, [&](Vec2 x) { return dvdt(t, x); }));
  }
  out.validate();
  return out;
}

EviReport evi_residual(const Trajectory& u, const TestTrajectory& v, double s, const RegularizedIntegrand& reg,
                       const HiblerParams& params, const Forces& forces, EviEnergy energy, double newton_tol) {
  require_matching(u, v);
  const std::size_t N = time_index(u.times, s);
  const double tau = step_size(u.times);
  auto E = [&](const VectorField& w) {
    return energy == EviEnergy::regularized ? regularized_energy(w, reg, params) : relaxed_energy(w, reg.base, params);
  };
  double R = 0.0;
  std::vector<VectorField> gaps;
  for (std::size_t n = 0; n < N; ++n) {
    const VectorField d = v.states[n + 1] - u.states[n + 1];
    if (n == 0) gaps.push_back(v.states[0] - u.states[0]);
    gaps.push_back(d);
    const VectorField load = step_load(forces, u.states[n], u.times[n]);
    R += l2_inner(v.states[n + 1] - v.states[n], d) + tau * (E(v.states[n + 1]) - E(u.states[n + 1])) -
         tau * l2_inner(load, d);
  }
  const VectorField dN = v.states[N] - u.states[N], d0 = v.states[0] - u.states[0];
  R -= 0.5 * (l2_inner(dN, dN) - l2_inner(d0, d0));

  EviReport rep;
  rep.residual = R;
  rep.steps = N;
  rep.tolerance = energy == EviEnergy::regularized
                      ? 10.0 * newton_tol
                      : (tau + u.states.front().mesh->mesh_size() + std::sqrt(reg.eps) + reg.delta) *
                            test_scale(gaps, N, tau, params);
  return rep;
}

TestTrajectory test_function_factory(const TestTrajectory& v_raw, double d, double r, double theta) {
  v_raw.validate();
  if (!(d > 0.0) || !(r >= 0.0) || !(theta >= 0.0)) throw ConfigError("factory: d > 0, r >= 0, theta >= 0 required");
  if (!(r < 0.5 * d)) throw GeometryError("factory: support violation, mollified cut-off reaches the boundary (r >= d/2)");
  const MeshPtr& mesh = v_raw.states.front().mesh;
  const auto cut = eta_delta(*mesh, d, true);

  const std::size_t count = v_raw.states.size();
  std::vector<VectorField> space(count, VectorField(mesh));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(count); ++n) {
    std::vector<Vec2> w = v_raw.states[n].values;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= cut.nodal_values[i];
    space[n].values = r > 0.0 ? mollify_nodal_field(*mesh, w, r, true) : w;
  }

  // Time mollification over the even reflection n -> -n, N + k -> N - k.
  const double tau = v_raw.tau();
  const long last = static_cast<long>(count) - 1;
  auto reflect = [last](long m) {
    if (last == 0) return 0L;
    const long period = 2 * last;
    m %= period;
    if (m < 0) m += period;
    return m <= last ? m : period - m;
  };
  const long reach = tau > 0.0 ? static_cast<long>(std::ceil(theta / tau)) : 0;
  TestTrajectory out;
  out.times = v_raw.times;
  out.states.assign(count, VectorField(mesh));
  for (long n = 0; n <= last; ++n) {
    double mass = 0.0;
    VectorField acc(mesh);
    for (long m = n - reach; m <= n + reach; ++m) {
      const double s = static_cast<double>(m - n) * tau;
      const double k = theta > 0.0 ? (std::abs(s) < theta ? std::pow(1.0 - (s / theta) * (s / theta), 3) : 0.0)
                                   : (m == n ? 1.0 : 0.0);
      if (k == 0.0) continue;
      mass += k;
      const auto& src = space[static_cast<std::size_t>(reflect(m))].values;
      for (std::size_t i = 0; i < src.size(); ++i) acc.values[i] += src[i] * k;
    }
    out.states[static_cast<std::size_t>(n)] = (1.0 / mass) * acc;
  }
  for (long n = 0; n <= last; ++n) {
    if (last == 0) {
      out.rates.emplace_back(mesh);
      continue;
    }
    const long lo = std::max(0L, n - 1), hi = std::min(last, n + 1);
    out.rates.push_back((1.0 / (static_cast<double>(hi - lo) * tau)) *
                        (out.states[static_cast<std::size_t>(hi)] - out.states[static_cast<std::size_t>(lo)]));
  }
  return out;
}

std::vector<FactoryRow> factory_ladder(const TestTrajectory& v_raw, const std::vector<std::array<double, 3>>& ladder,
                                       const IntegrandSpec& spec, const HiblerParams& params) {
  v_raw.validate();
  const double tau = v_raw.tau() > 0.0 ? v_raw.tau() : 1.0;
  const std::size_t count = v_raw.states.size();
  const std::size_t steps = count > 1 ? count - 1 : 1;
  double target = 0.0;
  for (std::size_t n = 0; n < steps; ++n) target += tau * relaxed_energy(v_raw.states[n], spec, params);
  std::vector<FactoryRow> rows;
  for (const auto& [d, r, theta] : ladder) {
    const TestTrajectory w = test_function_factory(v_raw, d, r, theta);
    FactoryRow row{d, r, theta, 0.0, 0.0, 0.0, target};
    for (std::size_t n = 0; n < steps; ++n) {
      const VectorField ds = w.states[n] - v_raw.states[n], dr = w.rates[n] - v_raw.rates[n];
      row.state_gap += tau * l2_inner(ds, ds);
      row.rate_gap += tau * l2_inner(dr, dr);
      row.energy += tau * bulk_energy(w.states[n], spec, params);
    }
    row.state_gap = std::sqrt(row.state_gap);
    row.rate_gap = std::sqrt(row.rate_gap);
    rows.push_back(row);
  }
  return rows;
}

BoundaryBulkRow boundary_bulk_row(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params,
                                  double delta) {
  const Mesh2D& m = *u.mesh;
  if (!(delta >= 2.0 * m.mesh_size()))
    throw GeometryError("boundary experiment: delta = " + std::to_string(delta) + " is below twice the mesh size " +
                        std::to_string(m.mesh_size()));
  const auto cut = eta_delta(m, delta, false);
  VectorField cu = u;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) cu.values[i] *= cut.nodal_values[i];
  BoundaryBulkRow row;
  row.delta = delta;
  row.bulk = bulk_energy(cu, spec, params);
  row.target = relaxed_energy(u, spec, params);
  row.gap = std::abs(row.target - row.bulk);
  row.uniform_monitor = total_hibler_variation(cu, params) / (m.total_area() + l1_norm(u) + total_deformation(u));
  return row;
}

BoundaryBulkReport boundary_bulk_experiment(const std::function<Vec2(Vec2)>& u, const IntegrandSpec& spec,
                                            const HiblerParams& params, const std::vector<double>& delta_ladder,
                                            double Lx, double Ly, double cells_per_delta) {
  if (delta_ladder.empty()) throw ConfigError("boundary experiment: empty delta ladder");
  BoundaryBulkReport rep;
  for (double delta : delta_ladder) {
    if (!(delta > 0.0)) throw ConfigError("boundary experiment: delta must be positive");
    const double per_unit = std::ceil(cells_per_delta / delta - 1e-9);
    const auto nx = static_cast<std::size_t>(std::ceil(per_unit * Lx - 1e-9));
    const auto ny = static_cast<std::size_t>(std::ceil(per_unit * Ly - 1e-9));
    const auto mesh = build_rect_mesh(nx, ny, Lx, Ly);
    BoundaryBulkRow row = boundary_bulk_row(VectorField::from_function(mesh, u), spec, params, delta);
    row.cells = static_cast<std::size_t>(per_unit);
    rep.rows.push_back(row);
  }
  rep.gap_decreasing = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (!(rep.rows[k].gap < rep.rows[k - 1].gap)) rep.gap_decreasing = false;
  for (const auto& row : rep.rows) rep.monitor_max = std::max(rep.monitor_max, row.uniform_monitor);
  return rep;
}

double Window::distance(const Vec2& p) const {
  const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
  const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
  return std::hypot(dx, dy);
}

JensenReport jensen_check(const ElementTensorField& density, const IntegrandSpec& spec, double radius,
                          const Window& window) {
  spec.validate();
  if (!(radius > 0.0)) throw ConfigError("jensen: radius must be positive");
  const Mesh2D& m = *density.mesh;
  const std::size_t nt = m.num_triangles();
  std::vector<Vec2> c(nt);
  for (std::size_t t = 0; t < nt; ++t) c[t] = m.centroid(t);

  std::vector<std::size_t> inside;
  double clearance = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < nt; ++t)
    if (window.contains(c[t])) {
      inside.push_back(t);
      clearance = std::min(clearance, boundary_distance(m, c[t]));
    }
  if (inside.empty()) throw GeometryError("jensen: the window contains no element");
  if (!(radius < clearance))
    throw GeometryError("jensen: radius " + std::to_string(radius) + " is not below dist(U, boundary) = " +
                        std::to_string(clearance));

  // Largest kernel mass sum_{T'} area k(c_T - c_T') over the mesh.
  std::vector<double> kmass(nt, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(nt); ++t) {
    double s = 0.0;
    for (std::size_t q = 0; q < nt; ++q) s += m.area(q) * mollifier_kernel(norm(c[t] - c[q]), radius);
    kmass[t] = s;
  }
  const double Z = *std::max_element(kmass.begin(), kmass.end());

  std::vector<double> lhs_terms(inside.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(inside.size()); ++k) {
    const std::size_t t = inside[k];
    SymMat2 mu{};
    for (std::size_t q = 0; q < nt; ++q) {
      const double w = mollifier_kernel(norm(c[t] - c[q]), radius);
      if (w != 0.0) mu = mu + (m.area(q) * w / Z) * density.values[q];
    }
    lhs_terms[k] = m.area(t) * eval_f(spec, mu);
  }
  JensenReport rep;
  rep.window_elements = inside.size();
  for (double x : lhs_terms) rep.lhs += x;
  for (std::size_t t : inside) rep.window_energy += m.area(t) * eval_f(spec, density.values[t]);
  for (std::size_t t = 0; t < nt; ++t)
    if (window.distance(c[t]) < radius) {
      rep.rhs += m.area(t) * eval_f(spec, density.values[t]);
      ++rep.enlarged_elements;
    }
  rep.slack = 1e-8 * std::max({rep.lhs, rep.rhs, std::numeric_limits<double>::min()});
  return rep;
}

RelaxedResidual relaxed_equation_residual(const Trajectory& u, const TestTrajectory& phi,
                                          const RegularizedIntegrand& reg, const HiblerParams& params,
                                          const Forces& forces, RelaxedForm form, double newton_tol, double adm_rel) {
  require_matching(u, phi);
  const Mesh2D& m = *u.states.front().mesh;
  const double tau = step_size(u.times);
  const std::size_t N = u.states.size() - 1;
  static const double gp = 0.5 / std::numbers::sqrt3;

  double R = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const VectorField& un = u.states[n + 1];
    const VectorField& ph = phi.states[n + 1];
    const auto tu = hibler_def(un, params);
    const auto tp = hibler_def(ph, params);
    double bulk = 0.0, boundary = 0.0;
    if (form == RelaxedForm::regularized) {
      for (std::size_t t = 0; t < m.num_triangles(); ++t)
        bulk += m.area(t) * dot(grad_f_delta_eps(reg, tu.values[t]), tp.values[t]);
    } else {
      double tmax = 0.0, pmax = 0.0;
      for (const auto& z : tu.values) tmax = std::max(tmax, z.norm());
      for (const auto& z : tp.values) pmax = std::max(pmax, z.norm());
      const double adm = adm_rel * tmax;
      for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        if (tu.values[t].norm() > adm && tu.values[t].norm() > 0.0) {
          bulk += m.area(t) * dot(grad_f(reg.base, tu.values[t]), tp.values[t]);
        } else if (tp.values[t].norm() > adm_rel * pmax) {
          throw ConfigError("relaxed residual: T phi is nonzero on element " + std::to_string(t) + " at step " +
                            std::to_string(n + 1) + " where T u vanishes");
        }
      }
      double umax = 0.0;
      for (const auto& e : m.boundary_edges()) umax = std::max({umax, norm(un.values[e.a]), norm(un.values[e.b])});
      const double tr_adm = std::max(adm, adm_rel * umax);
      for (std::size_t k = 0; k < m.boundary_edges().size(); ++k) {
        const auto& e = m.boundary_edges()[k];
        for (double xi : {0.5 - gp, 0.5 + gp}) {
          const Vec2 w = un.values[e.a] * (1.0 - xi) + un.values[e.b] * xi;
          const Vec2 p = ph.values[e.a] * (1.0 - xi) + ph.values[e.b] * xi;
          if (norm(w) > tr_adm) {
            boundary += 0.5 * e.length *
                        dot(grad_recession(reg.base, tensor_product_t(-w, e.normal, params)),
                            tensor_product_t(p, e.normal, params));
          } else if (p.x != 0.0 || p.y != 0.0) {
            throw ConfigError("relaxed residual: trace of phi is nonzero on boundary edge " + std::to_string(k) +
                              " at step " + std::to_string(n + 1) + " where the trace of u vanishes");
          }
        }
      }
    }
    const VectorField load = step_load(forces, u.states[n], u.times[n]);
    R += l2_inner(u.states[n + 1] - u.states[n], ph) + tau * (bulk - boundary - l2_inner(load, ph));
  }
  RelaxedResidual rep;
  rep.residual = R;
  rep.steps = N;
  rep.tolerance = form == RelaxedForm::regularized
                      ? 10.0 * newton_tol
                      : (tau + m.mesh_size() + std::sqrt(reg.eps) + reg.delta) * test_scale(phi.states, N, tau, params);
  return rep;
}

}  // namespace hibler
