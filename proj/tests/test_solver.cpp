#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "hibler/errors.hpp"
#include "hibler/solver.hpp"

using namespace hibler;

namespace {

const HiblerParams kParams{2.0, 2.0};

RegularizedIntegrand norm_reg(double delta, double eps) {
  return {IntegrandSpec{IntegrandKind::norm, kParams.P}, eps, delta};
}

Forces no_forces(const MeshPtr& m) { return Forces{TimeSeriesField::constant(VectorField(m)), OceanDrag{}, std::nullopt}; }

VectorField bump(const MeshPtr& m, double amp = 1.0) {
  return VectorField::from_function(m, [&](Vec2 p) {
    const double s = 16 * p.x * (1 - p.x) * p.y * (1 - p.y);
    return Vec2{amp * s, -0.5 * amp * s * (p.x - 0.3)};
  });
}

VectorField random_zero_trace(const MeshPtr& m, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0, scale);
  VectorField u(m);
  for (std::size_t i = 0; i < m->num_nodes(); ++i)
    if (!m->is_boundary_node(i)) u.values[i] = {g(rng), g(rng)};
  return u;
}

}  // namespace

TEST_CASE("configuration guards") {
  SolverConfig cfg;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  CHECK(cfg.num_steps() == 20);
  CHECK_THROWS_AS(require_admissible(norm_reg(0.0, 0.1), cfg), ConfigError);
  RegularizedIntegrand lin{IntegrandSpec{IntegrandKind::disabled, 1.0}, 0.1, 0.5};
  CHECK_THROWS_AS(require_admissible(lin, cfg), ConfigError);
  cfg.allow_linear_verification = true;
  CHECK_NOTHROW(require_admissible(lin, cfg));

  const auto m = build_rect_mesh(4, 4, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  CHECK_THROWS_AS(run_evolution(space, VectorField::from_function(m, [](Vec2) { return Vec2{1, 0}; }),
                                norm_reg(0.1, 0.1), no_forces(m), SolverConfig{}),
                  ConfigError);
}

TEST_CASE("zero data gives the zero trajectory") {
  const auto m = build_rect_mesh(6, 6, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.t_end = 0.25;
  const auto traj = run_evolution(space, VectorField(m), norm_reg(0.01, 0.01), no_forces(m), cfg);
  CHECK(traj.states.size() == 6);
  for (const auto& s : traj.states)
    for (const auto& v : s.values) CHECK(v == Vec2{0, 0});
  CHECK(traj.monitors.sup_l2 == 0.0);
  CHECK(traj.monitors.rate_l2 == 0.0);
}

TEST_CASE("minimizing movement properties along a run") {
  const auto m = build_rect_mesh(8, 8, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.tau = 0.02;
  cfg.t_end = 0.3;
  const auto reg = norm_reg(0.01, 0.01);
  const MinimizingMovement mm(space, reg, cfg);
  const VectorField zero(m);
  std::mt19937_64 rng(12);

  const auto traj = run_evolution(space, bump(m), reg, no_forces(m), cfg);
  REQUIRE(traj.states.size() == cfg.num_steps() + 1);
  for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
    const auto& u0 = traj.states[n];
    const auto& u1 = traj.states[n + 1];
    CHECK(u1.has_zero_trace());
    CHECK(traj.times[n + 1] > traj.times[n]);
    // dissipation against the competitor v = u^n
    const VectorField d = u1 - u0;
    CHECK(mm.energy(u1) + l2_inner(d, d) / (2 * cfg.tau) <= mm.energy(u0) + cfg.newton_tol);
    // minimization certificate
    const double j = mm.objective(u1, u0, zero);
    for (int k = 0; k < 10; ++k) {
      const double s = std::pow(10.0, -1 - k % 5);
      CHECK(j <= mm.objective(u1 + random_zero_trace(m, rng, s), u0, zero) + cfg.newton_tol);
    }
    // weak form residual against normalized test fields
    const auto g = mm.gradient(u1, u0, zero);
    for (int k = 0; k < 20; ++k) {
      const auto w = space->restrict_to_dofs(random_zero_trace(m, rng));
      double wn = 0, gw = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        wn += w[i] * w[i];
        gw += g[i] * w[i];
      }
      CHECK(std::abs(gw) / std::sqrt(wn) <= 10 * cfg.newton_tol);
    }
    CHECK(traj.steps[n].newton_residual <= cfg.newton_tol);
    CHECK(traj.steps[n].max_stress <= 1.0);
  }
  // monitors by the left-endpoint rule
  double sup = 0, tv = 0, rl2 = 0;
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    sup = std::max(sup, l2_norm(traj.states[n]));
    if (n + 1 < traj.states.size()) {
      tv += cfg.tau * total_hibler_variation(traj.states[n], kParams);
      const double r = l2_norm(traj.states[n + 1] - traj.states[n]) / cfg.tau;
      rl2 += cfg.tau * r * r;
    }
  }
  CHECK(traj.monitors.sup_l2 == doctest::Approx(sup).epsilon(1e-14));
  CHECK(traj.monitors.tv_integral == doctest::Approx(tv).epsilon(1e-12));
  CHECK(traj.monitors.rate_l2 == doctest::Approx(rl2).epsilon(1e-10));
  CHECK(traj.monitors.rate_dual > 0.0);
  CHECK(traj.monitors.rate_dual < traj.monitors.rate_l2);
}

TEST_CASE("unforced steps contract in L2") {
  const auto m = build_rect_mesh(6, 6, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.tau = 0.1;
  cfg.newton_tol = 1e-11;
  const MinimizingMovement mm(space, norm_reg(0.02, 0.05), cfg);
  const VectorField zero(m);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto a = random_zero_trace(m, rng, 0.5), b = random_zero_trace(m, rng, 0.5);
    const auto sa = mm.step(a, zero).u, sb = mm.step(b, zero).u;
    CHECK(l2_norm(sa - sb) <= l2_norm(a - b) * (1 + 1e-9));
  }
}

TEST_CASE("linear oracle: pure viscosity against the matrix exponential") {
  // one interior node, two dofs
  const auto m = build_rect_mesh(1, 1, 1, 1, MeshPattern::crossed);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  REQUIRE(space->num_dofs() == 2);
  const double delta = 0.3;
  const RegularizedIntegrand lin{IntegrandSpec{IntegrandKind::disabled, kParams.P}, 0.1, delta};

  // independent assembly of the quadratic forms from the field-level operators
  auto field = [&](double a, double b) {
    VectorField u(m);
    u.values[space->free_nodes()[0]] = {a, b};
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

  auto run = [&](double tau, std::size_t steps) {
    SolverConfig cfg;
    cfg.tau = tau;
    cfg.t_end = tau * static_cast<double>(steps);
    cfg.allow_linear_verification = true;
    return run_evolution(space, field(1.0, -0.4), lin, no_forces(m), cfg);
  };
  const double tau = 0.01;
  const auto traj = run(tau, 100);
  REQUIRE(traj.states.size() == 101);
  // implicit Euler is the exact flow of the generator log(I + tau A) / tau
  const Eigen::Matrix2d G = (Eigen::Matrix2d::Identity() + tau * A).log() / tau;
  const Eigen::Vector2d x0(1.0, -0.4);
  double worst = 0;
  for (std::size_t n = 0; n <= 100; ++n) {
    const Eigen::Vector2d x = (-(G * traj.times[n])).exp() * x0;
    const Vec2 u = traj.states[n].values[space->free_nodes()[0]];
    worst = std::max({worst, std::abs(u.x - x(0)), std::abs(u.y - x(1))});
  }
  CHECK(worst <= 1e-8);
  // decay is substantial over the window
  CHECK(norm(traj.states.back().values[space->free_nodes()[0]]) < 0.5 * x0.norm());

  // first-order convergence towards the continuous flow exp(-t A)
  double prev = INFINITY;
  for (std::size_t steps : {25ul, 50ul, 100ul, 200ul}) {
    const auto tr = run(1.0 / static_cast<double>(steps), steps);
    const Eigen::Vector2d x = (-A).exp() * x0;
    const Vec2 u = tr.states.back().values[space->free_nodes()[0]];
    const double err = std::hypot(u.x - x(0), u.y - x(1));
    if (std::isfinite(prev)) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("constant forcing drives the flow to the stationary minimizer") {
  const auto m = build_rect_mesh(4, 4, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  const auto reg = norm_reg(0.5, 0.1);
  const auto f = VectorField::from_function(m, [](Vec2 p) { return Vec2{3.0 + p.y, -2.0 * p.x}; });

  // independent minimization: Barzilai-Borwein gradient iteration on the free nodal values,
  // gradient from the field-level adjoint
  auto grad = [&](const VectorField& v) {
    const auto tv = hibler_def(v, kParams);
    ElementTensorField s(m);
    for (std::size_t t = 0; t < m->num_triangles(); ++t) s.values[t] = grad_f_delta_eps(reg, tv.values[t]);
    auto g = hibler_adjoint(s, kParams);
    const auto mf = load_vector(*space, f);
    VectorField out(m);
    for (std::size_t k = 0; k < space->free_nodes().size(); ++k) {
      const std::size_t i = space->free_nodes()[k];
      out.values[i] = -g[i] - Vec2{mf[2 * k], mf[2 * k + 1]};
    }
    return out;
  };
  auto inner = [](const VectorField& a, const VectorField& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += dot(a.values[i], b.values[i]);
    return s;
  };
  VectorField v(m);
  VectorField g = grad(v);
  double step = 1e-2;
  for (int it = 0; it < 100000 && std::sqrt(inner(g, g)) > 1e-13; ++it) {
    const VectorField v1 = v - step * g;
    const VectorField g1 = grad(v1);
    const VectorField sv = v1 - v, yv = g1 - g;
    step = inner(sv, sv) / inner(sv, yv);
    v = v1;
    g = g1;
  }
  REQUIRE(std::sqrt(inner(g, g)) <= 1e-13);

  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.t_end = 200;
  cfg.newton_tol = 1e-11;
  Forces forces{TimeSeriesField::constant(f), OceanDrag{}, std::nullopt};
  const auto traj = run_evolution(space, VectorField(m), reg, forces, cfg);
  CHECK(traj.steps.back().increment <= 1e-8);
  CHECK(l2_norm(traj.states.back() - v) <= 1e-7 * l2_norm(v));
}

TEST_CASE("deterministic replay and resume from checkpoint") {
  const auto m = build_rect_mesh(6, 6, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.tau = 0.05;
  cfg.t_end = 0.5;
  OceanConfig oc;
  oc.enabled = true;
  const auto U = VectorField::from_function(m, [](Vec2 p) { return Vec2{p.y, 0.2}; });
  Forces forces{TimeSeriesField::constant(VectorField::from_function(m, [](Vec2 p) { return Vec2{1, p.x}; })),
                OceanDrag(oc), TimeSeriesField::constant(U)};
  const auto reg = norm_reg(0.01, 0.01);
  const auto a = run_evolution(space, bump(m), reg, forces, cfg);
  const auto b = run_evolution(space, bump(m), reg, forces, cfg);
  CHECK(a.states.back().values == b.states.back().values);
  CHECK(a.monitors.rate_dual == b.monitors.rate_dual);

  std::string saved;
  EvolutionOptions opts;
  opts.on_step = [&](const EvolutionState& s, const StepDiagnostics&) {
    if (s.step == 4) {
      std::ostringstream os;
      write_checkpoint(os, s, "abc123");
      saved = os.str();
    }
  };
  run_evolution(space, bump(m), reg, forces, cfg, opts);
  REQUIRE_FALSE(saved.empty());
  std::istringstream is(saved);
  const auto state = read_checkpoint(is, m, "abc123");
  CHECK(state.step == 4);
  const auto c = run_evolution(space, bump(m), reg, forces, cfg, {}, &state);
  CHECK(c.times.front() == doctest::Approx(0.2));
  CHECK(c.states.back().values == a.states.back().values);
  CHECK(c.monitors.sup_l2 == a.monitors.sup_l2);
  CHECK(c.monitors.tv_integral == a.monitors.tv_integral);
  CHECK(c.monitors.rate_l2 == a.monitors.rate_l2);
  CHECK(c.monitors.max_stress == a.monitors.max_stress);

  std::istringstream wrong(saved);
  CHECK_THROWS_AS(read_checkpoint(wrong, m, "other"), ConfigError);
  std::istringstream junk("hello");
  CHECK_THROWS_AS(read_checkpoint(junk, m, "abc123"), IoError);
  std::istringstream cut(saved.substr(0, saved.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(cut, m, "abc123"), IoError);
}

TEST_CASE("step failures carry the step index") {
  const auto m = build_rect_mesh(6, 6, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.newton_max_iters = 1;
  cfg.newton_tol = 1e-14;
  try {
    run_evolution(space, bump(m, 5.0), norm_reg(1e-3, 1e-4), no_forces(m), cfg);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.step() == 0);
    CHECK(std::string(e.what()).find("at step 0") != std::string::npos);
  }
}

TEST_CASE("gronwall uniqueness probe") {
  const auto m = build_rect_mesh(8, 8, 1, 1);
  const auto space = std::make_shared<FeSpace>(m, kParams);
  SolverConfig cfg;
  cfg.tau = 0.02;
  cfg.t_end = 1.0;
  const auto reg = norm_reg(0.01, 0.01);
  const auto u0 = bump(m);
  std::mt19937_64 rng(6);

  const auto same = gronwall_uniqueness_probe(space, u0, u0, reg, no_forces(m), cfg);
  CHECK(same.bit_identical);

  const auto p6 = u0 + random_zero_trace(m, rng, 1e-6);
  const auto off = gronwall_uniqueness_probe(space, u0, p6, reg, no_forces(m), cfg);
  CHECK(off.max_growth <= 1.01);
  CHECK(off.within_envelope);

  OceanConfig oc;
  oc.enabled = true;
  oc.c_drag = 2.0;
  Forces forces{TimeSeriesField::constant(VectorField(m)), OceanDrag(oc),
                TimeSeriesField::constant(VectorField::from_function(m, [](Vec2 p) { return Vec2{2 * p.y, -1}; }))};
  const auto p3 = u0 + random_zero_trace(m, rng, 1e-3);
  const auto on = gronwall_uniqueness_probe(space, u0, p3, reg, forces, cfg);
  CHECK(on.gap_sq.size() == 51);
  CHECK(on.within_envelope);
  CHECK(on.max_ratio <= 1.0);
  CHECK(on.constant == doctest::Approx(2 * OceanDrag(oc).lipschitz()));
}

TEST_CASE("mollified initial data") {
  const auto m = build_rect_mesh(64, 64, 1, 1);
  const auto u0 = VectorField::from_function(m, [](Vec2 p) {
    const double r = norm(p - Vec2{0.5, 0.5});
    return r < 0.25 ? Vec2{1.0, 0.5} : Vec2{0, 0};
  });
  CHECK(support_clearance(u0) == doctest::Approx(0.25).epsilon(0.06));
  CHECK(std::isinf(support_clearance(VectorField(m))));
  const auto z = mollified_initial(VectorField(m), 0.1, kParams);
  for (const auto& v : z.u.values) CHECK(v == Vec2{0, 0});

  double prev_err = INFINITY, lo = INFINITY, hi = 0;
  for (double zeta : {0.2, 0.1, 0.05}) {
    const auto mi = mollified_initial(u0, zeta, kParams);
    CHECK(mi.u.has_zero_trace());
    const double err = l2_norm(mi.u - u0);
    CHECK(err < prev_err);
    prev_err = err;
    lo = std::min(lo, mi.l2_ratio);
    hi = std::max(hi, mi.l2_ratio);
  }
  CHECK(hi / lo <= 3.0);
  CHECK_THROWS_AS(mollified_initial(u0, 0.3, kParams), GeometryError);
}
