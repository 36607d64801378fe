#include "hibler/singular_limit_harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hibler/errors.hpp"

namespace hibler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const ParamTriple& p) {
  std::ostringstream os;
  os << "(zeta=" << p.zeta << ", delta=" << p.delta << ", eps=" << p.eps << ")";
  return os.str();
}

template <class T>
bool strictly_decreasing(const std::vector<T>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// Run index from ladder positions; npos when the position does not exist.
struct RunIndex {
  std::vector<std::size_t> offset;  // first run of each zeta
  std::size_t n_eps = 0;
  const ParamSchedule* s = nullptr;

  std::size_t at(std::size_t iz, std::size_t ie, std::size_t id) const {
    if (iz >= s->zetas.size() || ie >= n_eps || id >= s->deltas[iz].size()) return npos;
    return offset[iz] + ie * s->deltas[iz].size() + id;
  }
};

double trajectory_distance(const std::vector<VectorField>& a, const std::vector<VectorField>& b, double tau) {
  if (a.size() != b.size() || a.empty()) return kInf;
  double s = 0.0;
  for (std::size_t n = 0; n + 1 < a.size(); ++n) {
    const VectorField d = a[n] - b[n];
    s += tau * l2_inner(d, d);
  }
  return std::sqrt(s);
}

void poison(Monitors& m) {
  m.sup_l2 = m.tv_integral = m.viscous_h1 = m.rate_dual = m.rate_l2 = kInf;
  m.max_stress = kInf;
}

}  // namespace

std::vector<ParamTriple> ParamSchedule::triples() const {
  std::vector<ParamTriple> out;
  for (std::size_t i = 0; i < zetas.size(); ++i)
    for (double eps : epsilons)
      for (double delta : (i < deltas.size() ? deltas[i] : std::vector<double>{})) out.push_back({zetas[i], delta, eps});
  return out;
}

void validate_schedule(const ParamSchedule& s, double d0) {
  if (s.zetas.empty() || s.epsilons.empty()) throw ConfigError("schedule: zeta and eps ladders must be nonempty");
  if (s.deltas.size() != s.zetas.size())
    throw ConfigError("schedule: one delta ladder per zeta is required");
  if (!strictly_decreasing(s.zetas)) throw ConfigError("schedule: zetas must be strictly decreasing");
  if (!strictly_decreasing(s.epsilons)) throw ConfigError("schedule: epsilons must be strictly decreasing");
  for (std::size_t i = 0; i < s.zetas.size(); ++i) {
    if (s.deltas[i].empty()) throw ConfigError("schedule: empty delta ladder");
    if (!strictly_decreasing(s.deltas[i])) throw ConfigError("schedule: deltas must be strictly decreasing");
  }
  for (const auto& p : s.triples()) {
    std::string why;
    if (!(p.zeta > 0.0 && p.zeta < d0))
      why = "0 < zeta < d0 (d0 = " + std::to_string(d0) + ")";
    else if (!(p.delta > 0.0 && p.delta < p.zeta * p.zeta))
      why = "0 < delta < zeta^2";
    else if (!(p.eps > 0.0 && p.eps < 1.0))
      why = "0 < eps < 1";
    if (!why.empty()) throw ConfigError("schedule: triple " + describe(p) + " violates " + why);
  }
  if (s.mesh_ladder.empty() || s.tau_ladder.empty()) throw ConfigError("schedule: mesh and timestep ladders must be nonempty");
  for (auto n : s.mesh_ladder)
    if (n == 0) throw ConfigError("schedule: mesh ladder entries must be positive");
  for (double t : s.tau_ladder)
    if (!(t > 0.0)) throw ConfigError("schedule: timesteps must be positive");
  if (s.tau_ladder.size() != 1 && s.tau_ladder.size() != s.mesh_ladder.size())
    throw ConfigError("schedule: timestep ladder must have one entry or one per mesh level");
}

SweepProblem zero_problem() {
  SweepProblem p;
  p.spec = IntegrandSpec{IntegrandKind::norm, p.params.P};
  p.initial = [](const MeshPtr& m) { return VectorField(m); };
  p.forces = [](const MeshPtr& m) { return Forces{TimeSeriesField::constant(VectorField(m)), OceanDrag{}, std::nullopt}; };
  return p;
}

SweepProblem shear_benchmark(double force) {
  SweepProblem p;
  p.spec = IntegrandSpec{IntegrandKind::norm, p.params.P};
  p.initial = [](const MeshPtr& m) {
    return VectorField::from_function(m, [](Vec2 x) {
      const double r2 = (x.x - 0.5) * (x.x - 0.5) + (x.y - 0.5) * (x.y - 0.5);
      const double R2 = 0.25 * 0.25;
      if (r2 >= R2) return Vec2{0, 0};
      const double b = (1.0 - r2 / R2) * (1.0 - r2 / R2);
      return Vec2{b, 0.5 * b};
    });
  };
  p.forces = [force, Ly = p.Ly](const MeshPtr& m) {
    const auto f = VectorField::from_function(m, [&](Vec2 x) {
      return std::abs(x.y - 0.5 * Ly) < 0.2 * Ly ? Vec2{force, 0} : Vec2{0, 0};
    });
    return Forces{TimeSeriesField::constant(f), OceanDrag{}, std::nullopt};
  };
  p.solver.tau = 0.05;
  p.solver.t_end = 1.0;
  return p;
}

SweepProblem quadratic_drag_control() {
  SweepProblem p = shear_benchmark();
  OceanConfig oc;
  oc.enabled = true;
  oc.c_drag = 8.0;
  oc.theta = 0.0;
  oc.profile_override = [](double s) { return s; };
  const OceanDrag drag(oc);
  p.forces = [base = p.forces, drag](const MeshPtr& m) {
    Forces f = base(m);
    f.ocean = drag;
    f.U_ocean = TimeSeriesField::constant(VectorField(m, std::vector<Vec2>(m->num_nodes(), Vec2{10.0, 0.0})));
    return f;
  };
  p.solver.tau = 0.05;
  return p;
}

ParamSchedule benchmark_schedule() {
  ParamSchedule s;
  s.zetas = {0.2, 0.14, 0.1};
  for (double z : s.zetas) s.deltas.push_back({z * z / 2, z * z / 4, z * z / 8});
  s.epsilons = {1e-1, 1e-2, 1e-3};
  return s;
}

double localization_fraction(const VectorField& u, const HiblerParams& params, double share) {
  const auto tu = hibler_def(u, params);
  std::vector<double> mass(tu.size());
  double total = 0.0;
  for (std::size_t t = 0; t < tu.size(); ++t) {
    mass[t] = u.mesh->area(t) * tu.values[t].norm();
    total += mass[t];
  }
  if (total == 0.0) return 0.0;
  std::sort(mass.begin(), mass.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::ceil(share * static_cast<double>(mass.size())));
  double top = 0.0;
  for (std::size_t i = 0; i < k && i < mass.size(); ++i) top += mass[i];
  return top / total;
}

SweepReport run_sweep(const ParamSchedule& s, const SweepProblem& problem) {
  problem.params.validate();
  const std::size_t n0 = s.mesh_ladder.empty() ? 0 : s.mesh_ladder.front();
  if (n0 == 0) throw ConfigError("schedule: mesh ladder must be nonempty");
  const MeshPtr mesh = build_rect_mesh(n0, n0, problem.Lx, problem.Ly, problem.pattern);
  const VectorField raw = problem.initial(mesh);
  validate_schedule(s, support_clearance(raw));

  const auto space = std::make_shared<const FeSpace>(mesh, problem.params);
  const Forces forces = problem.forces(mesh);
  SolverConfig cfg = problem.solver;
  cfg.tau = s.tau_ladder.front();
  cfg.validate();

  SweepReport rep;
  rep.schedule = s;
  const auto triples = s.triples();
  rep.runs.resize(triples.size());

  const auto count = static_cast<std::ptrdiff_t>(triples.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    TripleResult& r = rep.runs[static_cast<std::size_t>(i)];
    r.p = triples[static_cast<std::size_t>(i)];
    try {
      const MollifiedInitial u0 = mollified_initial(raw, r.p.zeta, problem.params);
      r.initial_l2_ratio = u0.l2_ratio;
      const RegularizedIntegrand reg{problem.spec, r.p.eps, r.p.delta};
      Trajectory traj = run_evolution(space, u0.u, reg, forces, cfg);
      r.monitors = traj.monitors;
      r.states = std::move(traj.states);
      r.sqrt_delta_h1 = std::sqrt(r.monitors.viscous_h1);
      for (const auto& st : r.states)
        for (const auto& v : st.values)
          if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw NumericError("trajectory left the finite range");
    } catch (const Error& e) {
      r.error = e.what();
      poison(r.monitors);
      r.sqrt_delta_h1 = kInf;
      r.states.clear();
    }
  }

  // Cauchy differences between consecutive levels of each ladder.
  RunIndex idx;
  idx.s = &s;
  idx.n_eps = s.epsilons.size();
  std::size_t off = 0;
  for (std::size_t iz = 0; iz < s.zetas.size(); ++iz) {
    idx.offset.push_back(off);
    off += idx.n_eps * s.deltas[iz].size();
  }
  auto add_pair = [&](std::size_t a, std::size_t b, const char* varied) {
    if (a == npos || b == npos) return;
    rep.cauchy.push_back({a, b, varied, trajectory_distance(rep.runs[a].states, rep.runs[b].states, cfg.tau)});
  };
  for (std::size_t iz = 0; iz < s.zetas.size(); ++iz)
    for (std::size_t ie = 0; ie < idx.n_eps; ++ie)
      for (std::size_t id = 0; id < s.deltas[iz].size(); ++id) {
        add_pair(idx.at(iz, ie, id), idx.at(iz, ie, id + 1), "delta");
        add_pair(idx.at(iz, ie, id), idx.at(iz, ie + 1, id), "eps");
        add_pair(idx.at(iz, ie, id), idx.at(iz + 1, ie, id), "zeta");
      }

  for (double eps : s.epsilons) {
    SaturationRow row{eps, 0.0};
    for (const auto& r : rep.runs)
      if (r.p.eps == eps) row.max_stress = std::max(row.max_stress, r.monitors.max_stress);
    rep.saturation.push_back(row);
  }

  // Localization along the mesh ladder, for the innermost triple.
  if (!triples.empty()) {
    const ParamTriple last = triples.back();
    for (std::size_t l = 0; l < s.mesh_ladder.size(); ++l) {
      LocalizationRow row{s.mesh_ladder[l], 0.0};
      try {
        const MeshPtr ml = build_rect_mesh(s.mesh_ladder[l], s.mesh_ladder[l], problem.Lx, problem.Ly, problem.pattern);
        const auto sp = std::make_shared<const FeSpace>(ml, problem.params);
        SolverConfig c = cfg;
        c.tau = s.tau_ladder.size() == 1 ? s.tau_ladder[0] : s.tau_ladder[l];
        const VectorField u0 = mollified_initial(problem.initial(ml), last.zeta, problem.params).u;
        EvolutionOptions opts;
        opts.store_states = false;
        const auto traj = run_evolution(sp, u0, {problem.spec, last.eps, last.delta}, problem.forces(ml), c, opts);
        row.top_fraction = localization_fraction(traj.states.back(), problem.params);
      } catch (const Error& e) {
        row.top_fraction = std::numeric_limits<double>::quiet_NaN();
        rep.failures.push_back("localization at " + std::to_string(s.mesh_ladder[l]) + " cells: " + e.what());
      }
      rep.localization.push_back(row);
    }
  }

  boundedness_verdict(rep);
  return rep;
}

bool boundedness_verdict(SweepReport& report, double ratio_limit) {
  report.uniformity.clear();
  std::vector<std::string> failures;
  for (const auto& f : report.failures)
    if (f.rfind("localization", 0) == 0) failures.push_back(f);

  auto ratio_row = [&](const std::string& name, auto get) {
    UniformityRow row{name, kInf, 0.0, 1.0, true};
    for (const auto& r : report.runs) {
      const double v = get(r);
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
    }
    if (report.runs.empty()) row.min = 0.0;
    if (!std::isfinite(row.max) || !std::isfinite(row.min))
      row.ratio = kInf;
    else if (row.max == 0.0)
      row.ratio = 1.0;
    else
      row.ratio = row.min > 0.0 ? row.max / row.min : kInf;
    row.pass = row.ratio <= ratio_limit;
    report.uniformity.push_back(row);
    if (!row.pass) failures.push_back(name + ": max/min ratio " + std::to_string(row.ratio));
  };
  ratio_row("sup_l2", [](const TripleResult& r) { return r.monitors.sup_l2; });
  ratio_row("tv_integral", [](const TripleResult& r) { return r.monitors.tv_integral; });
  ratio_row("rate_dual", [](const TripleResult& r) { return r.monitors.rate_dual; });
  ratio_row("rate_l2", [](const TripleResult& r) { return r.monitors.rate_l2; });

  UniformityRow h1{"sqrt_delta_h1", kInf, 0.0, 1.0, true};
  for (const auto& r : report.runs) {
    h1.min = std::min(h1.min, r.sqrt_delta_h1);
    h1.max = std::max(h1.max, r.sqrt_delta_h1);
  }
  if (report.runs.empty()) h1.min = 0.0;
  const double first = report.runs.empty() ? 0.0 : report.runs.front().sqrt_delta_h1;
  if (!std::isfinite(h1.max))
    h1.ratio = kInf;
  else if (h1.max == 0.0)
    h1.ratio = 1.0;
  else
    h1.ratio = first > 0.0 ? h1.max / first : kInf;
  h1.pass = h1.ratio <= ratio_limit;
  report.uniformity.push_back(h1);
  if (!h1.pass) failures.push_back("sqrt_delta_h1: max/first ratio " + std::to_string(h1.ratio));

  for (std::size_t i = 0; i < report.runs.size(); ++i)
    if (report.runs[i].error) failures.push_back("run " + std::to_string(i) + " " + describe(report.runs[i].p) + ": " + *report.runs[i].error);

  report.failures = failures;
  report.verdict = failures.empty();
  return report.verdict;
}

std::vector<std::string> write_sweep_report(const std::string& dir, const SweepReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    std::ofstream os(fs::path(dir) / name);
    if (!os) throw IoError("cannot write " + (fs::path(dir) / name).string());
    os.precision(17);
    written.push_back(name);
    return os;
  };
  {
    auto os = open("runs.csv");
    os << "run,zeta,delta,eps,sup_l2,tv_integral,viscous_h1,sqrt_delta_h1,rate_dual,rate_l2,max_stress,initial_l2_ratio,error\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
      const auto& r = report.runs[i];
      const auto& m = r.monitors;
      std::string err = r.error.value_or("");
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      os << i << ',' << r.p.zeta << ',' << r.p.delta << ',' << r.p.eps << ',' << m.sup_l2 << ',' << m.tv_integral << ','
         << m.viscous_h1 << ',' << r.sqrt_delta_h1 << ',' << m.rate_dual << ',' << m.rate_l2 << ',' << m.max_stress << ','
         << r.initial_l2_ratio << ',' << err << '\n';
    }
  }
  {
    auto os = open("cauchy.csv");
    os << "run_a,run_b,varied,distance\n";
    for (const auto& c : report.cauchy) os << c.a << ',' << c.b << ',' << c.varied << ',' << c.distance << '\n';
  }
  {
    auto os = open("saturation.csv");
    os << "eps,max_stress\n";
    for (const auto& r : report.saturation) os << r.eps << ',' << r.max_stress << '\n';
  }
  {
    auto os = open("localization.csv");
    os << "cells,top_fraction\n";
    for (const auto& r : report.localization) os << r.cells << ',' << r.top_fraction << '\n';
  }
  {
    auto os = open("uniformity.csv");
    os << "monitor,min,max,ratio,pass\n";
    for (const auto& r : report.uniformity)
      os << r.monitor << ',' << r.min << ',' << r.max << ',' << r.ratio << ',' << (r.pass ? 1 : 0) << '\n';
  }
  return written;
}

}  // namespace hibler
