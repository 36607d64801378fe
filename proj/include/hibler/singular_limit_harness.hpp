#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hibler/solver.hpp"

namespace hibler {

struct ParamTriple {
  double zeta = 0.0;
  double delta = 0.0;
  double eps = 0.0;
};

/// Nested approximation ladders. deltas[i] belongs to zetas[i]; delta is innermost,
/// then eps, then zeta.
struct ParamSchedule {
  std::vector<double> zetas;
  std::vector<std::vector<double>> deltas;
  std::vector<double> epsilons;
  std::vector<std::size_t> mesh_ladder{16};  // cells per side
  std::vector<double> tau_ladder{0.05};

  /// Triples in limit order: zeta outermost, delta innermost.
  std::vector<ParamTriple> triples() const;
};

/// Throws ConfigError naming the first violating triple. d0 is the support clearance of the datum.
void validate_schedule(const ParamSchedule& s, double d0 = std::numeric_limits<double>::infinity());

/// A sweep problem on a rectangle. The raw datum is mollified per zeta.
struct SweepProblem {
  double Lx = 1.0, Ly = 1.0;
  MeshPattern pattern = MeshPattern::diagonal;
  HiblerParams params;
  IntegrandSpec spec;
  std::function<VectorField(const MeshPtr&)> initial;
  std::function<Forces(const MeshPtr&)> forces;
  SolverConfig solver;  // tau replaced by the schedule's timestep ladder
};

/// Zero datum, zero forcing.
SweepProblem zero_problem();
/// Compact bump datum and a constant tangential force on the band |y - Ly/2| < Ly/5.
SweepProblem shear_benchmark(double force = 2.0);
/// Shear benchmark with an unbounded quadratic drag (theta = 0, c = 8, |U| = 10, tau = 0.05).
/// The explicit drag overshoots, so the sweep must fail on the L2 monitor.
SweepProblem quadratic_drag_control();

/// 3 x 3 x 3 schedule for the shear benchmark: zeta in {0.2, 0.14, 0.1}, delta = zeta^2 / {2, 4, 8},
/// eps in {1e-1, 1e-2, 1e-3}.
ParamSchedule benchmark_schedule();

struct TripleResult {
  ParamTriple p;
  Monitors monitors;
  double sqrt_delta_h1 = 0.0;  // sqrt(viscous_h1), the sqrt(delta)-scaled monitor
  double initial_l2_ratio = 0.0;
  std::vector<VectorField> states;
  std::optional<std::string> error;
};

struct CauchyRow {
  std::size_t a = 0, b = 0;  // run indices
  std::string varied;        // "delta", "eps" or "zeta"
  double distance = 0.0;     // ||u_a - u_b||_{L2(Omega_T)}, left-endpoint rule
};

struct SaturationRow {
  double eps = 0.0;
  double max_stress = 0.0;
};

struct LocalizationRow {
  std::size_t cells = 0;
  double top_fraction = 0.0;  // share of |T u|(Omega) in the top 5% of elements
};

struct UniformityRow {
  std::string monitor;
  double min = 0.0, max = 0.0, ratio = 1.0;
  bool pass = true;
};

struct SweepReport {
  ParamSchedule schedule;
  std::vector<TripleResult> runs;
  std::vector<CauchyRow> cauchy;
  std::vector<SaturationRow> saturation;
  std::vector<LocalizationRow> localization;
  std::vector<UniformityRow> uniformity;
  bool verdict = false;
  std::vector<std::string> failures;
};

/// Runs every triple (members in parallel, dynamic schedule) and folds the report in schedule order.
SweepReport run_sweep(const ParamSchedule& s, const SweepProblem& problem);

/// Pass iff monitors (1), (2), (4) and the time-derivative monitor have max/min <= ratio_limit
/// and the sqrt(delta)-scaled monitor stays within ratio_limit times its value at the first triple.
/// Fills report.uniformity, report.failures and report.verdict.
bool boundedness_verdict(SweepReport& report, double ratio_limit = 3.0);

/// Share of sum area |T u| carried by the top `share` of elements.
double localization_fraction(const VectorField& u, const HiblerParams& params, double share = 0.05);

/// runs.csv, cauchy.csv, saturation.csv, localization.csv, uniformity.csv in dir.
std::vector<std::string> write_sweep_report(const std::string& dir, const SweepReport& report);

}  // namespace hibler
