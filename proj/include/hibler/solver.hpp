#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hibler/discrete_operators.hpp"
#include "hibler/forces.hpp"
#include "hibler/integrands.hpp"

namespace hibler {

struct SolverConfig {
  double tau = 0.05;
  double t_end = 1.0;
  double newton_tol = 1e-9;
  int newton_max_iters = 60;
  double linear_tol = 1e-12;
  bool semi_implicit_ocean = true;
  /// Admits the disabled integrand (pure viscosity); for linear verification only.
  bool allow_linear_verification = false;

  void validate() const;
  std::size_t num_steps() const;
};

/// Rejects delta = 0 and (unless linear verification is on) the disabled integrand.
void require_admissible(const RegularizedIntegrand& reg, const SolverConfig& cfg);

struct StepDiagnostics {
  std::size_t step = 0;
  double t = 0.0;              // time of the new state
  double energy = 0.0;         // sum of area * F_{delta,eps}(T u^{n+1})
  double increment = 0.0;      // ||u^{n+1} - u^n||_{L2}
  int newton_iters = 0;
  double newton_residual = 0.0;
  double max_stress = 0.0;     // max over elements of (2/P)|F'_eps(T u^{n+1})|
};

/// Discrete a priori monitors, time integrals by the left-endpoint rule.
struct Monitors {
  double sup_l2 = 0.0;         // max_n ||u^n||_{L2}
  double tv_integral = 0.0;    // sum tau ||T u^n||_{L1}
  double viscous_h1 = 0.0;     // delta * sum tau |u^n|_{H1}^2
  double rate_dual = 0.0;      // sum tau ||(u^{n+1} - u^n)/tau||_{-1}^2
  double rate_l2 = 0.0;        // sum tau ||(u^{n+1} - u^n)/tau||_{L2}^2
  double max_stress = 0.0;     // max over steps of StepDiagnostics::max_stress
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorField> states;
  std::vector<StepDiagnostics> steps;
  Monitors monitors;
};

/// Step objective J(v) = ||v - u_prev||_M^2/(2 tau) + sum area F_{delta,eps}(T v) - <b, v>.
class MinimizingMovement {
 public:
  MinimizingMovement(std::shared_ptr<const FeSpace> space, RegularizedIntegrand reg, SolverConfig cfg);

  struct Result {
    VectorField u;
    int iterations = 0;
    double residual = 0.0;
  };

  /// Damped Newton from u_prev; `load` is the nodal field f + tau_ocean(u_prev).
  Result step(const VectorField& u_prev, const VectorField& load, long step_index = -1) const;
  double objective(const VectorField& v, const VectorField& u_prev, const VectorField& load) const;
  /// Euler-Lagrange residual (dof vector) of the step objective at v.
  std::vector<double> gradient(const VectorField& v, const VectorField& u_prev, const VectorField& load) const;
  /// sum area F_{delta,eps}(T v)
  double energy(const VectorField& v) const;

  const FeSpace& space() const { return *space_; }
  const RegularizedIntegrand& integrand() const { return reg_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  double objective_dofs(std::span<const double> x, std::span<const double> x0, std::span<const double> b) const;
  void gradient_dofs(std::span<const double> x, std::span<const double> x0, std::span<const double> b,
                     std::span<double> g) const;
  void hessian_dofs(std::span<const double> x, CsrMatrix& H) const;
  std::vector<Vec2> nodal(std::span<const double> x) const;

  std::shared_ptr<const FeSpace> space_;
  RegularizedIntegrand reg_;
  SolverConfig cfg_;
};

/// Load field f(t) + tau_ocean(u_prev, t).
VectorField step_load(const Forces& forces, const VectorField& u_prev, double t);

VectorField implicit_euler_step(const std::shared_ptr<const FeSpace>& space, const VectorField& u_prev,
                                const RegularizedIntegrand& reg, const Forces& forces, double t,
                                const SolverConfig& cfg);

/// Resumable evolution state: the current step and the running monitor sums.
struct EvolutionState {
  std::size_t step = 0;
  VectorField u;
  Monitors monitors;
};

struct EvolutionOptions {
  bool store_states = true;
  std::function<void(const EvolutionState&, const StepDiagnostics&)> on_step;
};

Trajectory run_evolution(const std::shared_ptr<const FeSpace>& space, const VectorField& u0,
                         const RegularizedIntegrand& reg, const Forces& forces, const SolverConfig& cfg,
                         const EvolutionOptions& opts = {}, const EvolutionState* resume = nullptr);

struct MollifiedInitial {
  VectorField u;
  double l2_ratio = 0.0;  // zeta * ||T u^zeta||_{L2} / ||u0||_{L2}
  double l1_ratio = 0.0;  // ||T u^zeta||_{L1} / ||u0||_{L2}
};

/// Mollifies a compactly supported datum with radius zeta (support preserved).
MollifiedInitial mollified_initial(const VectorField& u0, double zeta, const HiblerParams& params);

/// Distance from the support of a nodal field to the boundary (the bound d0 on zeta).
double support_clearance(const VectorField& u0);

struct GronwallReport {
  double constant = 0.0;            // 2 * ocean Lipschitz constant
  double initial_gap_sq = 0.0;
  std::vector<double> gap_sq;       // per state, including the initial one
  std::vector<double> envelope;     // 1.5 * exp(C t) * initial_gap_sq
  double max_ratio = 0.0;           // max gap_sq / envelope (0 when both vanish)
  double max_growth = 0.0;          // max gap / initial gap
  bool bit_identical = false;
  bool within_envelope = true;
};

GronwallReport gronwall_uniqueness_probe(const std::shared_ptr<const FeSpace>& space, const VectorField& u0_a,
                                         const VectorField& u0_b, const RegularizedIntegrand& reg,
                                         const Forces& forces, const SolverConfig& cfg);

/// Plain-text checkpoint: state and monitors at %.17g, tagged with a config hash.
void write_checkpoint(std::ostream& os, const EvolutionState& state, const std::string& config_hash);
EvolutionState read_checkpoint(std::istream& in, const MeshPtr& mesh, const std::string& config_hash);

}  // namespace hibler
