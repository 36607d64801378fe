#include "hibler/solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hibler {

void SolverConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("solver: tau must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("solver: t_end must be positive");
  if (!(newton_tol > 0.0)) throw ConfigError("solver: newton_tol must be positive");
  if (!(linear_tol > 0.0)) throw ConfigError("solver: linear_tol must be positive");
  if (newton_max_iters < 1) throw ConfigError("solver: newton_max_iters must be >= 1");
  if (num_steps() > 1'000'000) throw ConfigError("solver: too many time steps");
}

std::size_t SolverConfig::num_steps() const {
  return static_cast<std::size_t>(std::llround(t_end / tau));
}

void require_admissible(const RegularizedIntegrand& reg, const SolverConfig& cfg) {
  reg.validate();
  if (!(reg.delta > 0.0)) throw ConfigError("solver: delta must be positive (the stepper needs strong convexity)");
  if (reg.base.kind == IntegrandKind::disabled && !cfg.allow_linear_verification)
    throw ConfigError("solver: the disabled integrand is only admitted for linear verification");
}

MinimizingMovement::MinimizingMovement(std::shared_ptr<const FeSpace> space, RegularizedIntegrand reg,
                                       SolverConfig cfg)
    : space_(std::move(space)), reg_(reg), cfg_(cfg) {
  cfg_.validate();
  require_admissible(reg_, cfg_);
}

std::vector<Vec2> MinimizingMovement::nodal(std::span<const double> x) const {
  std::vector<Vec2> u(space_->mesh()->num_nodes(), Vec2{0, 0});
  const auto& fn = space_->free_nodes();
  for (std::size_t k = 0; k < fn.size(); ++k) u[fn[k]] = Vec2{x[2 * k], x[2 * k + 1]};
  return u;
}

double MinimizingMovement::objective_dofs(std::span<const double> x, std::span<const double> x0,
                                          std::span<const double> b) const {
  const std::size_t n = x.size();
  std::vector<double> d(n), Md(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - x0[i];
  space_->mass().multiply(d, Md);
  const auto z = space_->strains(nodal(x));
  const auto& ops = space_->element_operators();
  std::vector<double> e(z.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(z.size()); ++t)
    e[t] = ops.area[t] * eval_f_delta_eps(reg_, z[t]);
  return kernels::dot(d, Md) / (2.0 * cfg_.tau) + kernels::sum(e) - kernels::dot(b, x);
}

void MinimizingMovement::gradient_dofs(std::span<const double> x, std::span<const double> x0,
                                       std::span<const double> b, std::span<double> g) const {
  const std::size_t n = x.size();
  std::vector<double> d(n), Md(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - x0[i];
  space_->mass().multiply(d, Md);
  const auto z = space_->strains(nodal(x));
  std::vector<double> coeff(3 * z.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(z.size()); ++t) {
    const SymMat2 G = grad_f_delta_eps(reg_, z[t]);
    coeff[3 * t] = G.a11;
    coeff[3 * t + 1] = 2.0 * G.a12;
    coeff[3 * t + 2] = G.a22;
  }
  std::vector<double> loc(6 * z.size());
  kernels::element_vectors(space_->element_operators(), coeff, loc);
  kernels::assemble(space_->vector_map(), loc, g);
  for (std::size_t i = 0; i < n; ++i) g[i] += Md[i] / cfg_.tau - b[i];
}

void MinimizingMovement::hessian_dofs(std::span<const double> x, CsrMatrix& H) const {
  const auto z = space_->strains(nodal(x));
  std::vector<double> hess(9 * z.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(z.size()); ++t) {
    const auto h = hessian_f_delta_eps(reg_, z[t]);
    std::copy(h.begin(), h.end(), hess.begin() + 9 * t);
  }
  std::vector<double> loc(36 * z.size());
  kernels::element_matrices(space_->element_operators(), hess, loc);
  H = space_->pattern();
  kernels::assemble(space_->matrix_map(), loc, H.val);
  const auto& M = space_->mass();
  for (std::size_t p = 0; p < H.val.size(); ++p) H.val[p] += M.val[p] / cfg_.tau;
}

MinimizingMovement::Result MinimizingMovement::step(const VectorField& u_prev, const VectorField& load,
                                                    long step_index) const {
  if (!u_prev.has_zero_trace()) throw SolverError("previous state does not have zero trace", 0.0, step_index);
  const std::vector<double> x0 = space_->restrict_to_dofs(u_prev);
  const std::vector<double> b = load_vector(*space_, load);
  const std::size_t n = x0.size();
  std::vector<double> x = x0, g(n), p(n), xt(n);
  CsrMatrix H;
  Result res;
  if (n == 0) {
    res.u = space_->extend(x);
    return res;
  }
  double J = objective_dofs(x, x0, b);
  gradient_dofs(x, x0, b, g);
  double gnorm = std::sqrt(kernels::dot(g, g));
  int it = 0;
  while (gnorm > cfg_.newton_tol) {
    if (it >= cfg_.newton_max_iters || !std::isfinite(gnorm))
      throw SolverError("Newton iteration did not converge", gnorm, step_index);
    hessian_dofs(x, H);
    std::fill(p.begin(), p.end(), 0.0);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
    pcg_solve(H, rhs, p, cfg_.linear_tol, 20 * n + 200);
    double slope = kernels::dot(g, p);
    if (!(slope < 0.0)) {
      p = rhs;
      slope = -gnorm * gnorm;
    }
    double alpha = 1.0, Jt = 0.0;
    const double slack = 1e-13 * (1.0 + std::abs(J));
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + alpha * p[i];
      Jt = objective_dofs(xt, x0, b);
      if (Jt <= J + 1e-4 * alpha * slope + slack) break;
      alpha *= 0.5;
      if (alpha < 1e-14) throw SolverError("line search stalled", gnorm, step_index);
    }
    x.swap(xt);
    J = Jt;
    gradient_dofs(x, x0, b, g);
    gnorm = std::sqrt(kernels::dot(g, g));
    ++it;
  }
  res.u = space_->extend(x);
  res.iterations = it;
  res.residual = gnorm;
  return res;
}

double MinimizingMovement::objective(const VectorField& v, const VectorField& u_prev, const VectorField& load) const {
  return objective_dofs(space_->restrict_to_dofs(v), space_->restrict_to_dofs(u_prev), load_vector(*space_, load));
}

std::vector<double> MinimizingMovement::gradient(const VectorField& v, const VectorField& u_prev,
                                                 const VectorField& load) const {
  std::vector<double> g(space_->num_dofs());
  gradient_dofs(space_->restrict_to_dofs(v), space_->restrict_to_dofs(u_prev), load_vector(*space_, load), g);
  return g;
}

double MinimizingMovement::energy(const VectorField& v) const {
  const auto z = space_->strains(v.values);
  std::vector<double> e(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) e[t] = space_->element_operators().area[t] * eval_f_delta_eps(reg_, z[t]);
  return kernels::sum(e);
}

VectorField step_load(const Forces& forces, const VectorField& u_prev, double t) {
  return forces.forcing_at(t) + forces.tau_ocean(u_prev, t);
}

VectorField implicit_euler_step(const std::shared_ptr<const FeSpace>& space, const VectorField& u_prev,
                                const RegularizedIntegrand& reg, const Forces& forces, double t,
                                const SolverConfig& cfg) {
  const MinimizingMovement mm(space, reg, cfg);
  return mm.step(u_prev, step_load(forces, u_prev, t)).u;
}

namespace {

double hibler_l1(const FeSpace& space, const VectorField& u) {
  const auto z = space.strains(u.values);
  std::vector<double> e(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) e[t] = space.element_operators().area[t] * z[t].norm();
  return kernels::sum(e);
}

double max_recovered_stress(const FeSpace& space, const RegularizedIntegrand& reg, const VectorField& u) {
  if (reg.base.kind == IntegrandKind::disabled) return 0.0;
  const auto z = space.strains(u.values);
  double m = 0.0;
  for (const auto& zt : z) m = std::max(m, (2.0 / reg.base.P) * grad_f_eps(reg, zt).norm());
  return m;
}

}  // namespace

Trajectory run_evolution(const std::shared_ptr<const FeSpace>& space, const VectorField& u0,
                         const RegularizedIntegrand& reg, const Forces& forces, const SolverConfig& cfg,
                         const EvolutionOptions& opts, const EvolutionState* resume) {
  const MinimizingMovement mm(space, reg, cfg);
  if (u0.mesh != space->mesh()) throw GeometryError("initial datum lives on a different mesh");
  if (!u0.has_zero_trace()) throw ConfigError("initial datum must have zero trace");
  EvolutionState state{0, u0, Monitors{}};
  if (resume) {
    state = *resume;
    if (state.u.mesh != space->mesh()) throw GeometryError("checkpoint lives on a different mesh");
  }
  const std::size_t N = cfg.num_steps();
  const double tau = cfg.tau;
  Trajectory traj;
  traj.times.push_back(static_cast<double>(state.step) * tau);
  if (opts.store_states) traj.states.push_back(state.u);

  while (state.step < N) {
    const std::size_t n = state.step;
    const double tn = static_cast<double>(n) * tau;
    const VectorField& u = state.u;
    Monitors& m = state.monitors;
    m.sup_l2 = std::max(m.sup_l2, l2_norm(u));
    m.tv_integral += tau * hibler_l1(*space, u);
    m.viscous_h1 += reg.delta * tau * h1_seminorm_squared(u);

    MinimizingMovement::Result r;
    try {
      r = mm.step(u, step_load(forces, u, tn), static_cast<long>(n));
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at step " + std::to_string(n), e.residual(), static_cast<long>(n));
    }
    const VectorField rate = (1.0 / tau) * (r.u - u);
    const auto mrate = load_vector(*space, rate);
    const double dual = dual_h1_norm(*space, mrate);
    const double l2 = l2_norm(rate);
    m.rate_dual += tau * dual * dual;
    m.rate_l2 += tau * l2 * l2;

    StepDiagnostics d;
    d.step = n + 1;
    d.t = static_cast<double>(n + 1) * tau;
    d.energy = mm.energy(r.u);
    d.increment = tau * l2;
    d.newton_iters = r.iterations;
    d.newton_residual = r.residual;
    d.max_stress = max_recovered_stress(*space, reg, r.u);
    m.max_stress = std::max(m.max_stress, d.max_stress);

    state.u = std::move(r.u);
    state.step = n + 1;
    traj.times.push_back(d.t);
    if (opts.store_states) traj.states.push_back(state.u);
    traj.steps.push_back(d);
    if (opts.on_step) opts.on_step(state, d);
  }
  state.monitors.sup_l2 = std::max(state.monitors.sup_l2, l2_norm(state.u));
  if (!opts.store_states) traj.states.push_back(state.u);
  traj.monitors = state.monitors;
  return traj;
}

MollifiedInitial mollified_initial(const VectorField& u0, double zeta, const HiblerParams& params) {
  MollifiedInitial out;
  out.u = VectorField(u0.mesh, mollify_nodal_field(*u0.mesh, std::span<const Vec2>(u0.values), zeta, true));
  const double base = l2_norm(u0);
  if (base > 0.0) {
    const ElementTensorField tu = hibler_def(out.u, params);
    double l2 = 0.0, l1 = 0.0;
    for (std::size_t t = 0; t < tu.size(); ++t) {
      l2 += u0.mesh->area(t) * tu.values[t].norm_squared();
      l1 += u0.mesh->area(t) * tu.values[t].norm();
    }
    out.l2_ratio = zeta * std::sqrt(l2) / base;
    out.l1_ratio = l1 / base;
  }
  return out;
}

double support_clearance(const VectorField& u0) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u0.size(); ++i)
    if (u0.values[i].x != 0.0 || u0.values[i].y != 0.0) d = std::min(d, u0.mesh->node_boundary_distance()[i]);
  return d;
}

GronwallReport gronwall_uniqueness_probe(const std::shared_ptr<const FeSpace>& space, const VectorField& u0_a,
                                         const VectorField& u0_b, const RegularizedIntegrand& reg,
                                         const Forces& forces, const SolverConfig& cfg) {
  const Trajectory a = run_evolution(space, u0_a, reg, forces, cfg);
  const Trajectory b = run_evolution(space, u0_b, reg, forces, cfg);
  GronwallReport rep;
  rep.constant = forces.ocean.enabled() ? 2.0 * forces.ocean.lipschitz() : 0.0;
  const double g0 = l2_inner(u0_a - u0_b, u0_a - u0_b);
  rep.initial_gap_sq = g0;
  rep.bit_identical = true;
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    const VectorField diff = a.states[n] - b.states[n];
    const double gap = l2_inner(diff, diff);
    const double env = 1.5 * std::exp(rep.constant * a.times[n]) * g0;
    rep.gap_sq.push_back(gap);
    rep.envelope.push_back(env);
    if (env > 0.0) rep.max_ratio = std::max(rep.max_ratio, gap / env);
    if (g0 > 0.0) rep.max_growth = std::max(rep.max_growth, std::sqrt(gap / g0));
    if (gap > env) rep.within_envelope = false;
    if (a.states[n].values != b.states[n].values) rep.bit_identical = false;
  }
  return rep;
}

void write_checkpoint(std::ostream& os, const EvolutionState& state, const std::string& config_hash) {
  const auto old = os.precision(17);
  const Monitors& m = state.monitors;
  os << "hibler-checkpoint 1\n"
     << "config_hash " << config_hash << '\n'
     << "step " << state.step << '\n'
     << "monitors " << m.sup_l2 << ' ' << m.tv_integral << ' ' << m.viscous_h1 << ' ' << m.rate_dual << ' '
     << m.rate_l2 << ' ' << m.max_stress << '\n'
     << "nodes " << state.u.size() << '\n';
  for (const auto& v : state.u.values) os << v.x << ' ' << v.y << '\n';
  os.precision(old);
}

EvolutionState read_checkpoint(std::istream& in, const MeshPtr& mesh, const std::string& config_hash) {
  std::string tag, hash;
  int version = 0;
  std::size_t nodes = 0;
  EvolutionState s;
  Monitors& m = s.monitors;
  if (!(in >> tag >> version) || tag != "hibler-checkpoint" || version != 1) throw IoError("not a checkpoint file");
  if (!(in >> tag >> hash) || tag != "config_hash") throw IoError("checkpoint: missing config hash");
  if (hash != config_hash) throw ConfigError("checkpoint was written for a different configuration");
  if (!(in >> tag >> s.step) || tag != "step") throw IoError("checkpoint: missing step");
  if (!(in >> tag >> m.sup_l2 >> m.tv_integral >> m.viscous_h1 >> m.rate_dual >> m.rate_l2 >> m.max_stress) ||
      tag != "monitors")
    throw IoError("checkpoint: missing monitors");
  if (!(in >> tag >> nodes) || tag != "nodes" || nodes != mesh->num_nodes())
    throw IoError("checkpoint: node count does not match the mesh");
  s.u = VectorField(mesh);
  for (auto& v : s.u.values)
    if (!(in >> v.x >> v.y)) throw IoError("checkpoint: truncated state");
  return s;
}

}  // namespace hibler
