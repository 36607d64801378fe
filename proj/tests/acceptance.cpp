// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "hibler/anzellotti_pairing.hpp"
#include "hibler/hibler_algebra.hpp"
#include "hibler/integrands.hpp"
#include "hibler/singular_limit_harness.hpp"
#include "hibler/solver.hpp"
#include "hibler/vi_diagnostics.hpp"

using namespace hibler;

namespace {

const HiblerParams kParams{2.0, 2.0};
const IntegrandSpec kNorm{IntegrandKind::norm, 2.0};
const IntegrandSpec kMohr{IntegrandKind::mohr_coulomb, 2.0, 1.0};

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s [%02d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SymMat2 random_sym(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

Forces no_forces(const MeshPtr& m) { return Forces{TimeSeriesField::constant(VectorField(m)), OceanDrag{}, std::nullopt}; }

VectorField random_zero_trace(const MeshPtr& m, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0, scale);
  VectorField u(m);
  for (std::size_t i = 0; i < m->num_nodes(); ++i)
    if (!m->is_boundary_node(i)) u.values[i] = {g(rng), g(rng)};
  return u;
}

VectorField bump(const MeshPtr& m) {
  return VectorField::from_function(m, [](Vec2 p) {
    const double s = 16 * p.x * (1 - p.x) * p.y * (1 - p.y);
    return Vec2{s, -0.5 * s * (p.x - 0.3)};
  });
}

// F_eps - sqrt(eps) = F^2 / (F_eps + sqrt(eps)) in long double from the closed forms; no cancellation near 0.
long double shifted_f_eps(const IntegrandSpec& spec, long double eps, const std::array<long double, 3>& c) {
  const long double r = std::sqrt(c[0] * c[0] + 2 * c[1] * c[1] + c[2] * c[2]);
  const long double P = spec.P, s0 = spec.s0;
  const long double f = spec.kind == IntegrandKind::norm ? P / 2 * r : (r <= s0 ? P / (4 * s0) * r * r : P / 2 * (r - s0 / 2));
  return f * f / (std::sqrt(eps + f * f) + std::sqrt(eps));
}

// Delta written out entry by entry.
double delta_oracle(const SymMat2& z, double e) {
  const double ie2 = 1.0 / (e * e);
  return std::sqrt((z.a11 * z.a11 + z.a22 * z.a22) * (1 + ie2) + 4 * ie2 * z.a12 * z.a12 +
                   2 * z.a11 * z.a22 * (1 - ie2));
}

void algebraic_identities() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ue(1.0, 5.0);
  double worst_delta = 0, worst_dual = 0;
  for (int k = 0; k < 100000; ++k) {
    const HiblerParams p{ue(rng), 2.0};
    const SymMat2 z = random_sym(rng, 3.0), w = random_sym(rng);
    const double d = delta_oracle(z, p.e);
    worst_delta = std::max(worst_delta, std::abs(t_map(z, p).norm() - d) / d);
    // the pressure -P/2 Id is divergence free; its pairing P/2 tr w is restored
    const double zeta = viscosities(z, p).zeta;
    const double lhs = dot(stress_vp(z, p), w) + 0.5 * p.P * w.trace();
    const double rhs = zeta * dot(t_map(z, p), t_map(w, p));
    worst_dual = std::max(worst_dual, std::abs(lhs - rhs) / (zeta * t_map(z, p).norm() * t_map(w, p).norm()));
  }
  report(1, "algebraic identities", worst_delta <= 1e-12 && worst_dual <= 1e-12,
         fmt("1e5 samples, |T z| vs Delta rel %.2e, stress duality rel %.2e (tol 1e-12)", worst_delta, worst_dual));
}

void norm_equivalence() {
  std::mt19937_64 rng(102);
  // unit sphere in the Frobenius-orthonormal basis Id/sqrt2, diag(1,-1)/sqrt2, offdiag/sqrt2
  const double r2 = 1.0 / std::sqrt(2.0);
  const auto on_sphere = [&](double th, double ph) {
    const double c = std::cos(th), s = std::sin(th);
    return SymMat2{r2 * (c + s * std::cos(ph)), r2 * s * std::sin(ph), r2 * (c - s * std::cos(ph))};
  };
  bool pass = true;
  std::string detail;
  for (double e : {1.0, 2.0, 4.0}) {
    const HiblerParams p{e, 1.0};
    double lo = 1e300, hi = 0;
    const auto sample = [&](const SymMat2& z) {
      const double r = t_map(z, p).norm() / z.norm();
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    };
    for (int k = 0; k < 100000; ++k) sample(random_sym(rng));
    const int n = 400;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < n; ++j) sample(on_sphere(std::numbers::pi * i / n, 2 * std::numbers::pi * j / n));
    const double elo = std::abs(lo - std::sqrt(2.0) / e), ehi = std::abs(hi - std::sqrt(2.0));
    pass = pass && elo <= 1e-6 && ehi <= 1e-6;
    detail += fmt("e=%g min %.9f max %.9f; ", e, lo, hi);
  }
  report(2, "norm equivalence", pass, detail + "expected (sqrt2/e, sqrt2) to 1e-6");
}

void regularization() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> ue(1e-6, 0.999), lr(-4, 3), lg(-2, 3), ug(0.01, 0.9);
  std::size_t sandwich_bad = 0;
  double worst_grad0 = 0, worst_rec = 0, worst_fd = 0;
  for (const auto& spec : {kNorm, IntegrandSpec{IntegrandKind::norm, 0.7}, kMohr}) {
    for (int k = 0; k < 10000; ++k) {
      const RegularizedIntegrand reg{spec, ue(rng), 0.0};
      SymMat2 z = random_sym(rng);
      z = (std::pow(10.0, lr(rng)) / z.norm()) * z;
      const double f = eval_f(spec, z), fe = eval_f_eps(reg, z);
      if (!(f <= fe && fe <= f + std::sqrt(reg.eps) * (1 + 1e-15))) ++sandwich_bad;
    }
    for (double eps : {0.9, 0.1, 1e-3}) {
      const RegularizedIntegrand reg{spec, eps, 0.0};
      worst_grad0 = std::max(worst_grad0, grad_f_eps(reg, SymMat2{}).norm());
      for (int k = 0; k < 100; ++k) {
        const SymMat2 z = random_sym(rng);
        // F_eps(2tz) - F_eps(tz) = t F^inf(z) + O(eps / t) once t|z| is past s0
        const double t = 1e6;
        const double rec = recession(spec, z);
        worst_rec = std::max(worst_rec, std::abs((eval_f_eps(reg, (2 * t) * z) - eval_f_eps(reg, t * z)) / t - rec) / rec);
      }
    }
    // fourth-order central differences in entry coordinates (a11, a12, a22)
    for (int k = 0; k < 1000; ++k) {
      const RegularizedIntegrand reg{spec, ug(rng), 0.0};
      const double r = std::pow(10.0, lg(rng));
      SymMat2 z = random_sym(rng);
      z = (r / z.norm()) * z;
      const double h = 1e-3 * r;
      if (spec.kind == IntegrandKind::mohr_coulomb && std::abs(r - spec.s0) < 10 * h) continue;
      const SymMat2 g = grad_f_eps(reg, z);
      const double an[3] = {g.a11, 2 * g.a12, g.a22};
      const double gn = std::sqrt(an[0] * an[0] + an[1] * an[1] + an[2] * an[2]);
      for (int i = 0; i < 3; ++i) {
        const auto at = [&](long double s) {
          std::array<long double, 3> c{z.a11, z.a12, z.a22};
          c[i] += s * h;
          return shifted_f_eps(spec, reg.eps, c);
        };
        const double fd = static_cast<double>((8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * static_cast<long double>(h)));
        worst_fd = std::max(worst_fd, std::abs(fd - an[i]) / gn);
      }
    }
  }
  report(3, "regularization", sandwich_bad == 0 && worst_grad0 == 0.0 && worst_rec <= 1e-10 && worst_fd <= 1e-6,
         fmt("F <= F_eps <= F + sqrt(eps) violations %zu of 3e4; |F'_eps(0)| %.1e; recession rel %.2e (tol 1e-10); "
             "gradient vs differences rel %.2e at 3e3 points (tol 1e-6)",
             sandwich_bad, worst_grad0, worst_rec, worst_fd));
}

void boundary_bulk() {
  const auto rep = boundary_bulk_experiment([](Vec2) { return Vec2{1, 0}; }, kNorm, kParams, {0.25, 0.125, 0.0625});
  const double target = 1.0 + std::sqrt(5.0);
  const auto& last = rep.rows.back();
  const double rel = last.gap / target;
  bool targets = true;
  for (const auto& row : rep.rows) targets = targets && std::abs(row.target - target) <= 1e-12 * target;
  report(4, "boundary bulk approximation", targets && rep.gap_decreasing && last.cells == 64 && rel <= 0.02,
         fmt("target %.10f (1+sqrt5 %.10f); gaps %.4f %.4f %.4f decreasing %s; delta 1/16 on %zux%zu relative gap "
             "%.4f (tol 0.02)",
             last.target, target, rep.rows[0].gap, rep.rows[1].gap, rep.rows[2].gap,
             rep.gap_decreasing ? "yes" : "no", last.cells, last.cells, rel));
}

void dissipation() {
  std::mt19937_64 rng(105);
  std::size_t runs = 0, steps = 0, bad = 0;
  double worst = -INFINITY;
  for (std::size_t n : {8, 12}) {
    const auto m = build_rect_mesh(n, n, 1, 1);
    const auto space = std::make_shared<const FeSpace>(m, kParams);
    for (const auto& spec : {kNorm, kMohr})
      for (double delta : {1e-1, 1e-3})
        for (double eps : {1e-1, 1e-3}) {
          SolverConfig cfg;
          cfg.tau = 0.02;
          cfg.t_end = 0.4;
          const RegularizedIntegrand reg{spec, eps, delta};
          const MinimizingMovement mm(space, reg, cfg);
          const VectorField u0 = runs % 2 ? bump(m) : random_zero_trace(m, rng, 0.5);
          const auto traj = run_evolution(space, u0, reg, no_forces(m), cfg);
          ++runs;
          for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
            const VectorField d = traj.states[k + 1] - traj.states[k];
            const double excess =
                mm.energy(traj.states[k + 1]) + l2_inner(d, d) / (2 * cfg.tau) - mm.energy(traj.states[k]);
            worst = std::max(worst, excess);
            if (excess > cfg.newton_tol) ++bad;
            ++steps;
          }
        }
  }
  report(5, "per-step dissipation", bad == 0,
         fmt("%zu runs, %zu steps, f = 0, ocean off; max E(u1) + |u1-u0|^2/(2tau) - E(u0) = %.2e (tol newton_tol 1e-9)",
             runs, steps, worst));
}

void discrete_evi() {
  const auto mesh = build_rect_mesh(16, 16, 1, 1);
  const RegularizedIntegrand reg{kNorm, 1e-2, 1e-3};
  SolverConfig cfg;
  cfg.tau = 0.01;
  cfg.t_end = 1.0;
  const auto problem = shear_benchmark();
  const auto forces = problem.forces(mesh);
  const auto u0 = mollified_initial(problem.initial(mesh), 0.1, kParams).u;
  const auto traj = run_evolution(std::make_shared<const FeSpace>(mesh, kParams), u0, reg, forces, cfg);
  const auto self = TestTrajectory::from_trajectory(traj);

  double worst_self = 0;
  bool self_ok = true;
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    const auto r = evi_residual(traj, self, traj.times[n], reg, kParams, forces, EviEnergy::regularized);
    worst_self = std::max(worst_self, std::abs(r.residual));
    self_ok = self_ok && std::abs(r.residual) <= r.tolerance;
  }
  std::mt19937_64 rng(106);
  double worst = INFINITY;
  std::size_t checks = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const double theta = std::pow(10.0, -trial % 4 * 2.0);
    const VectorField phi = random_zero_trace(mesh, rng);
    auto v = self;
    for (std::size_t n = 0; n < v.states.size(); ++n)
      v.states[n] = v.states[n] + (theta * std::cos(3.0 * v.times[n] + trial)) * phi;
    for (std::size_t n = 10; n < traj.times.size(); n += 10) {
      worst = std::min(worst, evi_residual(traj, v, traj.times[n], reg, kParams, forces, EviEnergy::regularized).residual);
      ++checks;
    }
  }
  report(6, "discrete EVI", self_ok && worst >= -10 * cfg.newton_tol,
         fmt("16x16, %zu steps; max |residual(u,u,s)| %.2e within tolerance %s; min residual over %zu random "
             "zero-trace competitors %.3e (tol >= -1e-8)",
             traj.steps.size(), worst_self, self_ok ? "yes" : "no", checks, worst));
}

void sweep_criteria() {
  const auto s = benchmark_schedule();
  auto rep = run_sweep(s, shear_benchmark());
  std::size_t errors = 0;
  for (const auto& r : rep.runs) errors += r.error.has_value();
  boundedness_verdict(rep, 3.0);
  bool uniform = errors == 0 && rep.runs.size() == 27;
  std::string detail = fmt("%zu triples, %zu failed; ", rep.runs.size(), errors);
  for (const auto& u : rep.uniformity) {
    uniform = uniform && u.pass;
    detail += fmt("%s %.3f; ", u.monitor.c_str(), u.ratio);
  }
  report(7, "a priori uniformity", uniform, detail + "ratio limit 3 (sqrt_delta_h1 against the first triple)");

  double run_max = 0;
  for (const auto& r : rep.runs) run_max = std::max(run_max, r.monitors.max_stress);
  bool sat = rep.saturation.size() == 3 && run_max <= 1.0;
  detail.clear();
  for (std::size_t i = 0; i < rep.saturation.size(); ++i) {
    detail += fmt("eps %g max %.6f; ", rep.saturation[i].eps, rep.saturation[i].max_stress);
    if (i > 0) sat = sat && rep.saturation[i].max_stress > rep.saturation[i - 1].max_stress;
  }
  report(8, "stress feasibility and saturation", sat,
         detail + fmt("max over all runs %.15f (<= 1 exactly), increasing toward 1", run_max));
}

double density_oracle(const StressField& s, const VectorField& u, const std::vector<double>& phi) {
  const Mesh2D& m = *u.mesh;
  const auto e = sym_grad(u);
  double bulk = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const double pbar = (phi[tri[0]] + phi[tri[1]] + phi[tri[2]]) / 3.0;
    bulk += m.area(t) * pbar * dot(s.sigma.values[t], t_map(e.values[t], kParams));
  }
  double jump = 0.0;
  for (const auto& be : m.boundary_edges()) {
    const Vec2 ua = u.values[be.a], ub = u.values[be.b];
    const auto at = [&](double x) { return ((1 - x) * phi[be.a] + x * phi[be.b]) * ((1 - x) * ua + x * ub); };
    const Vec2 w = (be.length / 6.0) * (at(0) + 4.0 * at(0.5) + at(1));
    const Vec2 nu = be.normal;
    const SymMat2 sym{w.x * nu.x, 0.5 * (w.x * nu.y + w.y * nu.x), w.y * nu.y};
    jump += dot(s.sigma.values[be.triangle], t_map(sym, kParams));
  }
  return bulk - jump;
}

void anzellotti() {
  std::mt19937_64 rng(109);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> r01(0, 1);
  double worst_smooth = 0, worst_plateau = 0;
  std::size_t samples = 0, violations = 0;
  for (std::size_t n : {8, 16}) {
    const auto mesh = build_rect_mesh(n, n, 1, 1);
    const auto padded = pad_rect_mesh(n, n, 1, 1);
    for (int trial = 0; trial < 5; ++trial) {
      VectorField u(mesh);
      for (auto& v : u.values) v = {g(rng), g(rng)};
      StressField sigma{ElementTensorField(mesh)};
      for (auto& z : sigma.sigma.values) {
        const SymMat2 w = random_sym(rng);
        z = (r01(rng) / w.norm()) * w;
      }
      const double scale = pairing_mass_bound(sigma, u, kParams);
      const double a = g(rng), b = g(rng);
      std::vector<double> phi(padded.outer->num_nodes());
      for (std::size_t i = 0; i < phi.size(); ++i) {
        const Vec2 x = padded.outer->nodes()[i];
        phi[i] = std::cos(2 * x.x + a) * std::exp(-x.y) + b * x.x * x.y;
      }
      std::vector<double> inner(mesh->num_nodes());
      for (std::size_t i = 0; i < inner.size(); ++i) inner[i] = phi[padded.inner_to_outer[i]];
      worst_smooth =
          std::max(worst_smooth, std::abs(pairing_apply(sigma, u, phi, padded, kParams) - density_oracle(sigma, u, inner)) / scale);

      const std::vector<double> one(padded.outer->num_nodes(), 1.0);
      const auto adj = hibler_adjoint(sigma.sigma, kParams);
      double minus_adj = 0.0;
      for (std::size_t i = 0; i < mesh->num_nodes(); ++i) minus_adj -= dot(adj[i], u.values[i]);
      worst_plateau = std::max(worst_plateau, std::abs(pairing_apply(sigma, u, one, padded, kParams) - minus_adj) / scale);

      const auto mb = pairing_mass_bound_check(sigma, u, padded, kParams, 100, 1000 + trial);
      samples += mb.samples;
      violations += mb.violations.size();
    }
  }
  report(9, "Anzellotti pairing", worst_smooth <= 1e-9 && worst_plateau <= 1e-10 && violations == 0,
         fmt("smooth consistency %.2e*scale (tol 1e-9); plateau identity %.2e*scale (tol 1e-10); mass bound "
             "violations %zu of %zu samples in 10 corpora of 100",
             worst_smooth, worst_plateau, violations, samples));
}

void jensen() {
  const auto m = build_rect_mesh(16, 16, 1, 1);
  std::mt19937_64 rng(110);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> uni(0.2, 0.8), ur(0.05, 0.15);
  std::size_t bad = 0, total = 0;
  double worst = -INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    ElementTensorField f(m);
    const double amp = std::pow(10.0, 2 * uni(rng) - 1);
    for (auto& z : f.values) z = {amp * g(rng), amp * g(rng), amp * g(rng)};
    double x0 = uni(rng), x1 = uni(rng), y0 = uni(rng), y1 = uni(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    // at least one cell across
    x0 = std::min(x0, 0.75), y0 = std::min(y0, 0.75);
    x1 = std::max(x1, x0 + 0.07), y1 = std::max(y1, y0 + 0.07);
    const double r = std::min({ur(rng), x0 - 1e-9, y0 - 1e-9, 1 - x1 - 1e-9, 1 - y1 - 1e-9});
    const auto rep = jensen_check(f, trial % 2 ? kMohr : kNorm, r, Window{x0, x1, y0, y1});
    ++total;
    if (!rep.holds()) ++bad;
    const double scale = std::max(rep.rhs, 1e-300);
    worst = std::max(worst, (rep.lhs - rep.rhs) / scale);
  }
  report(10, "Jensen for measures", bad == 0,
         fmt("%zu random fields and windows; violations beyond 1e-8*scale %zu; max (lhs - rhs)/rhs %.3e", total, bad, worst));
}

void linear_oracle() {
  const auto m = build_rect_mesh(1, 1, 1, 1, MeshPattern::crossed);
  const auto space = std::make_shared<const FeSpace>(m, kParams);
  const double delta = 0.3, tau = 0.01;
  const RegularizedIntegrand lin{IntegrandSpec{IntegrandKind::disabled, kParams.P}, 0.1, delta};
  const std::size_t node = space->free_nodes().at(0);
  const auto field = [&](double a, double b) {
    VectorField u(m);
    u.values[node] = {a, b};
    return u;
  };
  Eigen::Matrix2d M, K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto ei = field(i == 0, i == 1), ej = field(j == 0, j == 1);
      M(i, j) = l2_inner(ei, ej);
      const auto ti = hibler_def(ei, kParams), tj = hibler_def(ej, kParams);
      double s = 0;
      for (std::size_t t = 0; t < m->num_triangles(); ++t) s += m->area(t) * dot(ti.values[t], tj.values[t]);
      K(i, j) = s;
    }
  const Eigen::Matrix2d A = delta * M.inverse() * K;
  const Eigen::Matrix2d G = (Eigen::Matrix2d::Identity() + tau * A).log() / tau;
  SolverConfig cfg;
  cfg.tau = tau;
  cfg.t_end = 100 * tau;
  cfg.allow_linear_verification = true;
  const auto traj = run_evolution(space, field(1.0, -0.4), lin, no_forces(m), cfg);
  const Eigen::Vector2d x0(1.0, -0.4);
  double worst = 0;
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const Eigen::Vector2d x = (-(G * traj.times[n])).exp() * x0;
    const Vec2 u = traj.states[n].values[node];
    worst = std::max({worst, std::abs(u.x - x(0)), std::abs(u.y - x(1))});
  }
  report(11, "linear oracle", space->num_dofs() == 2 && traj.steps.size() == 100 && worst <= 1e-8,
         fmt("%zu elements, %zu steps; max deviation from the matrix-exponential solution %.2e (tol 1e-8)",
             m->num_triangles(), traj.steps.size(), worst));
}

void gronwall() {
  const auto m = build_rect_mesh(8, 8, 1, 1);
  const auto space = std::make_shared<const FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.tau = 0.02;
  cfg.t_end = 1.0;
  const RegularizedIntegrand reg{kNorm, 1e-2, 1e-2};
  const auto u0 = bump(m);
  std::mt19937_64 rng(112);
  OceanConfig oc;
  oc.enabled = true;
  oc.c_drag = 2.0;
  const Forces ocean{TimeSeriesField::constant(VectorField(m)), OceanDrag(oc),
                     TimeSeriesField::constant(VectorField::from_function(m, [](Vec2 p) { return Vec2{2 * p.y, -1}; }))};
  const auto same = gronwall_uniqueness_probe(space, u0, u0, reg, ocean, cfg);
  bool pass = same.bit_identical;
  double worst = 0;
  for (const Forces& forces : {no_forces(m), ocean})
    for (double size : {1e-6, 1e-3, 1e-1}) {
      const auto rep = gronwall_uniqueness_probe(space, u0, u0 + random_zero_trace(m, rng, size), reg, forces, cfg);
      pass = pass && rep.within_envelope && rep.gap_sq.size() == 51;
      worst = std::max(worst, rep.max_ratio * 1.5);
    }
  report(12, "Gronwall uniqueness", pass,
         fmt("duplicate run bit-identical %s; 50 steps, 6 perturbations, max gap^2 / (exp(Ct) gap0^2) %.4f (limit 1.5)",
             same.bit_identical ? "yes" : "no", worst));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks{algebraic_identities, norm_equivalence, regularization, boundary_bulk,
                                                  dissipation,          discrete_evi,     sweep_criteria, anzellotti,
                                                  jensen,               linear_oracle,    gronwall};
  for (const auto& c : checks) {
    try {
      c();
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL check aborted: %s\n", e.what());
    }
  }
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
