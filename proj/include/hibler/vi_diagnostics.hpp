#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hibler/solver.hpp"

namespace hibler {

/// Competitor trajectory. States may carry a nonzero trace; rates are the time derivatives
/// of the construction that produced the states.
struct TestTrajectory {
  std::vector<double> times;
  std::vector<VectorField> states;
  std::vector<VectorField> rates;

  /// Throws GeometryError on mixed meshes, ConfigError on inconsistent lengths, uneven steps
  /// or non-finite values.
  void validate() const;
  double tau() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  /// Solver states with forward-difference rates (the last rate repeats).
  static TestTrajectory from_trajectory(const Trajectory& u);
  /// Samples v(t, x) and its time derivative at the nodes.
  static TestTrajectory from_function(const MeshPtr& mesh, const std::vector<double>& times,
                                      const std::function<Vec2(double, Vec2)>& v,
                                      const std::function<Vec2(double, Vec2)>& dvdt);
};

enum class EviEnergy {
  regularized,  // sum area F_{delta,eps}(T v), the energy the steps minimize
  relaxed,      // bulk plus boundary penalty of the unregularized integrand
};

struct EviReport {
  double residual = 0.0;
  // 10 newton_tol for the regularized energy; otherwise (tau + h + sqrt(eps) + delta) times
  // sum tau (||T d||_L1 + ||d||_L1), d = v - u at the right endpoints
  double tolerance = 0.0;
  std::size_t steps = 0;
  bool holds() const { return residual >= -tolerance; }
};

/// Discrete evolutionary variational inequality up to time s (a trajectory time):
///   sum_{n<N} tau [ <(v^{n+1} - v^n)/tau, v^{n+1} - u^{n+1}> + E(v^{n+1}) - E(u^{n+1})
///                   - <f(t_n) + tau_ocean(u^n), v^{n+1} - u^{n+1}> ]
///   - (|v^N - u^N|^2 - |v^0 - u^0|^2) / 2
/// with the consistent L2 product. States enter at the right end of each step and explicit data at
/// the left, which makes the regularized inequality an identity of the step minimizations.
EviReport evi_residual(const Trajectory& u, const TestTrajectory& v, double s, const RegularizedIntegrand& reg,
                       const HiblerParams& params, const Forces& forces, EviEnergy energy = EviEnergy::relaxed,
                       double newton_tol = 1e-9);

/// eta_d (compact variant) times each state, spatial mollification with radius r, then time
/// mollification with half-width theta over the evenly reflected sequence. Rates by central
/// differences. Throws GeometryError unless r < d / 2.
TestTrajectory test_function_factory(const TestTrajectory& v_raw, double d, double r, double theta);

struct FactoryRow {
  double d = 0.0, r = 0.0, theta = 0.0;
  double state_gap = 0.0;  // (sum tau ||w^n - v^n||^2)^{1/2}
  double rate_gap = 0.0;   // same for the rates
  double energy = 0.0;     // sum tau bulk F(T w^n)
  double target = 0.0;     // sum tau relaxed energy of v^n
};

std::vector<FactoryRow> factory_ladder(const TestTrajectory& v_raw, const std::vector<std::array<double, 3>>& ladder,
                                       const IntegrandSpec& spec, const HiblerParams& params);

struct BoundaryBulkRow {
  double delta = 0.0;
  std::size_t cells = 0;   // per unit length
  double bulk = 0.0;       // int F(T(eta_delta u))
  double target = 0.0;     // bulk plus boundary penalty of u
  double gap = 0.0;        // |target - bulk|
  double uniform_monitor = 0.0;  // |T(eta_delta u)|(Omega) / (|Omega| + ||u||_L1 + |E u|(Omega))
};

struct BoundaryBulkReport {
  std::vector<BoundaryBulkRow> rows;
  bool gap_decreasing = false;
  double monitor_max = 0.0;
};

/// One row on a given mesh. Throws GeometryError when delta < 2h.
BoundaryBulkRow boundary_bulk_row(const VectorField& u, const IntegrandSpec& spec, const HiblerParams& params,
                                  double delta);

/// Rows on [0, Lx] x [0, Ly] with the mesh matched to each delta: cells_per_delta cells across delta.
BoundaryBulkReport boundary_bulk_experiment(const std::function<Vec2(Vec2)>& u, const IntegrandSpec& spec,
                                            const HiblerParams& params, const std::vector<double>& delta_ladder,
                                            double Lx = 1.0, double Ly = 1.0, double cells_per_delta = 4.0);

/// Axis-aligned window; an element belongs to it when its centroid does.
struct Window {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  bool contains(const Vec2& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  double distance(const Vec2& p) const;
};

struct JensenReport {
  double lhs = 0.0;    // sum over U of area F(rho_r * mu)
  double rhs = 0.0;    // sum over U_r of area F(mu)
  double window_energy = 0.0;  // sum over U of area F(mu)
  double slack = 0.0;  // 1e-8 scale
  std::size_t window_elements = 0;
  std::size_t enlarged_elements = 0;
  bool holds() const { return lhs <= rhs + slack; }
};

/// Elementwise density mu mollified at the centroids with the bump kernel, normalized by the
/// largest discrete kernel mass on the mesh. Throws GeometryError when radius >= dist(U, boundary).
JensenReport jensen_check(const ElementTensorField& density, const IntegrandSpec& spec, double radius,
                          const Window& window);

enum class RelaxedForm {
  regularized,  // F'_{delta,eps}, no boundary term
  limit,        // F' off the zero set of T u, recession derivative on the boundary
};

struct RelaxedResidual {
  double residual = 0.0;
  double tolerance = 0.0;  // as for EviReport, with phi in place of v - u
  std::size_t steps = 0;
};

/// sum tau [ <(u^{n+1} - u^n)/tau, phi^{n+1}> + sum area F'(T u^{n+1}) . T phi^{n+1}
///           - int_boundary (F^inf)'(-u^{n+1} (x)_T nu) . (phi^{n+1} (x)_T nu)
///           - <f(t_n) + tau_ocean(u^n), phi^{n+1}> ]
/// over the whole trajectory. In the limit form phi must vanish in T on elements with
/// |T u| < adm_tol and in trace on boundary edges with |u| < adm_tol, adm_tol = adm_rel max|T u|;
/// violations throw ConfigError naming the element or edge.
RelaxedResidual relaxed_equation_residual(const Trajectory& u, const TestTrajectory& phi,
                                          const RegularizedIntegrand& reg, const HiblerParams& params,
                                          const Forces& forces, RelaxedForm form, double newton_tol = 1e-9,
                                          double adm_rel = 1e-10);

}  // namespace hibler
