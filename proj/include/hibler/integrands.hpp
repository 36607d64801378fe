#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hibler/sym_mat2.hpp"

namespace hibler {

enum class IntegrandKind { norm, mohr_coulomb, disabled };

std::string to_string(IntegrandKind kind);
IntegrandKind integrand_kind_from_string(const std::string& name);

/// Convex energy density of linear growth.
///   norm:          F(z) = (P/2)|z|
///   mohr_coulomb:  F(z) = (P/(4 s0))|z|^2 for |z| <= s0, (P/2)(|z| - s0/2) otherwise
///   disabled:      F = 0 (linear-solver verification only)
struct IntegrandSpec {
  IntegrandKind kind = IntegrandKind::norm;
  double P = 2.0;
  double s0 = 1.0;

  static IntegrandSpec norm(double P) { return {IntegrandKind::norm, P, 1.0}; }
  static IntegrandSpec mohr_coulomb(double P, double s0) { return {IntegrandKind::mohr_coulomb, P, s0}; }
  static IntegrandSpec disabled() { return {IntegrandKind::disabled, 0.0, 1.0}; }

  void validate() const;
  /// Rejects the disabled kind; used by everything that needs coercivity.
  void require_coercive() const;
};

/// F_eps(z) = sqrt(eps + F(z)^2), F_{delta,eps}(z) = F_eps(z) + (delta/2)|z|^2.
struct RegularizedIntegrand {
  IntegrandSpec base;
  double eps = 0.5;
  double delta = 0.0;

  void validate() const;
};

/// Second derivative as a symmetric 3x3 matrix acting on entry coordinates
/// (w11, w12, w22): d^2F[w, w] = w^T H w.
using EntryHessian = std::array<double, 9>;

double eval_f(const IntegrandSpec& spec, const SymMat2& z);
/// Derivative of F; zero at z = 0 (the norm kink is resolved to the zero subgradient).
SymMat2 grad_f(const IntegrandSpec& spec, const SymMat2& z);

double eval_f_eps(const RegularizedIntegrand& reg, const SymMat2& z);
SymMat2 grad_f_eps(const RegularizedIntegrand& reg, const SymMat2& z);
EntryHessian hessian_f_eps(const RegularizedIntegrand& reg, const SymMat2& z);

double eval_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z);
SymMat2 grad_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z);
EntryHessian hessian_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z);

/// Closed-form recession F^inf(z) = lim_{t->0} t F(z/t). Both built-ins give (P/2)|z|.
double recession(const IntegrandSpec& spec, const SymMat2& z);
/// Derivative of F^inf away from 0.
SymMat2 grad_recession(const IntegrandSpec& spec, const SymMat2& z);

/// Numeric recession of an arbitrary density: evaluates t F(z/t) at t = 1e-6 and
/// 1e-7 and throws if they disagree by more than 1e-4 relative.
double recession_numeric(const std::function<double(const SymMat2&)>& density, const SymMat2& z);

/// Linear perspective F#(t, z) = t F(z/t) for t > 0 and F^inf(z) at t = 0.
double perspective(const IntegrandSpec& spec, double t, const SymMat2& z);

struct CoercivityReport {
  double c4 = 0.0;  // lower slope of F'_eps(z).z
  double c5 = 0.0;  // lower offset
  double c6 = 0.0;  // upper linear-growth constant
  double max_domination_excess = 0.0;  // max of grad F_eps(z).eta - F^inf(eta), must be <= 0
  std::size_t samples = 0;
};

/// Fits (c4, c5, c6) for F'_eps(z).z over the samples and checks that the recession
/// dominates the gradients on a deterministic direction grid. Throws on violation.
CoercivityReport coercivity_probe(const RegularizedIntegrand& reg, std::span<const SymMat2> samples);

}  // namespace hibler
