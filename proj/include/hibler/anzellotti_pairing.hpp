#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hibler/mesh.hpp"
#include "hibler/solver.hpp"
#include "hibler/vi_diagnostics.hpp"

namespace hibler {

/// Elementwise stress.
struct StressField {
  ElementTensorField sigma;

  /// max over elements of the Frobenius norm
  double feasibility_norm() const;
  bool feasible(double slack = 1e-8) const { return feasibility_norm() <= 1.0 + slack; }
};

/// Nodal mass m(t_k, .) at frame times; linear in time between frames, constant past the ends.
struct MassField {
  MeshPtr mesh;
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  /// Throws ConfigError unless every value is finite and positive and the frames match the mesh.
  void validate() const;
  double min_value() const;
  double max_value() const;
  std::vector<double> at(double t) const;

  static MassField constant(const MeshPtr& mesh, double m);
  static MassField from_function(const MeshPtr& mesh, const std::vector<double>& times,
                                 const std::function<double(double, Vec2)>& m);
};

/// Pairing <[sigma . T u]_0, phi> = -int phi u . T* sigma - int u . (sigma (x)_{T*} grad phi) for an
/// elementwise sigma and piecewise-linear u on the inner mesh of `padded`, phi nodal on the padded mesh.
/// T* sigma is the discrete adjoint on the inner mesh (interior jumps, no boundary layer), evaluated
/// against phi u with Simpson's rule per edge; exact for these data.
double pairing_apply(const StressField& sigma, const VectorField& u, std::span<const double> phi_outer,
                     const PaddedMesh& padded, const HiblerParams& params);

/// int phi sigma . T u over the closed domain: sum area mean(phi) sigma . T u minus the boundary
/// jump term int phi sigma . (u (x)_T nu).
double pairing_density_integral(const StressField& sigma, const VectorField& u, std::span<const double> phi_outer,
                                const PaddedMesh& padded, const HiblerParams& params);

/// ||sigma||_inf |T u|(closed domain) with the boundary jump mass bounded by the trapezoid rule.
double pairing_mass_bound(const StressField& sigma, const VectorField& u, const HiblerParams& params);

struct MassBoundReport {
  std::size_t samples = 0;
  double bound = 0.0;        // at ||phi||_sup = 1
  double max_pairing = 0.0;  // largest |pairing| over the corpus
  std::vector<std::size_t> violations;
  bool holds() const { return violations.empty(); }
};

/// Corpus of random phi with sup norm one: smooth trigonometric fields, nodal noise, and fields
/// concentrated on the outer strip with signs aligned to the boundary term.
MassBoundReport pairing_mass_bound_check(const StressField& sigma, const VectorField& u, const PaddedMesh& padded,
                                         const HiblerParams& params, std::size_t samples = 100,
                                         std::uint64_t seed = 1);

/// (2/P) F'_eps(T u) elementwise.
StressField recover_stress(const VectorField& u, const RegularizedIntegrand& reg, const HiblerParams& params);

/// One stress per state. Throws SolverError naming the step when its Newton residual exceeds newton_tol.
std::vector<StressField> stress_recovery(const Trajectory& u, const RegularizedIntegrand& reg,
                                         const HiblerParams& params, double newton_tol);

struct WeakVarOptions {
  double stress_scale = 1.0;   // S = stress_scale sigma + viscous_delta T u
  double viscous_delta = 0.0;
};

struct WeakVarResidual {
  double eq_residual = 0.0;        // Euclidean norm of the distributional residual on zero-trace hats
  double coupling_residual = 0.0;  // energy-stress coupling against v
};

/// Residuals at the trajectory time t (index n >= 1): backward rate (u^n - u^{n-1})/tau, stress
/// sigma[n], data at t_{n-1}. The coupling residual is
///   int du.(u - v) + int (1/m)(scale |T u| + delta |T u|^2) + int (S (x)_{T*} grad(1/m)).(u - v)
///   - int (1/m)(f + tau_ocean(u^{n-1})).(u - v) - [(1/m) S . T v]_0(closed domain)
/// with the last term evaluated through the plateau identity.
/// Throws ConfigError for an infeasible stress or a mass field that is not positive.
WeakVarResidual weak_var_residual(const Trajectory& u, const std::vector<StressField>& sigma, const MassField& m,
                                  const TestTrajectory& v, double t, const Forces& forces, const HiblerParams& params,
                                  const WeakVarOptions& opts = {});

}  // namespace hibler
