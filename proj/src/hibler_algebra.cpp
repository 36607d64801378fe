#include "hibler/hibler_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hibler/errors.hpp"

namespace hibler {

void HiblerParams::validate() const {
  if (!(e >= 1.0) || !std::isfinite(e))
    throw ConfigError("hibler: axis ratio e must satisfy e >= 1 (got " + std::to_string(e) + ")");
  if (!(P > 0.0) || !std::isfinite(P))
    throw ConfigError("hibler: pressure P must be positive (got " + std::to_string(P) + ")");
}

SymMat2 t_map(const SymMat2& z, const HiblerParams& params) {
  constexpr double sqrt2 = std::numbers::sqrt2;
  return (sqrt2 / params.e) * deviatoric(z) + (z.trace() / sqrt2) * SymMat2::identity();
}

double delta_of(const SymMat2& z, const HiblerParams& params) {
  const double inv_e2 = 1.0 / (params.e * params.e);
  const double d2 = (z.a11 * z.a11 + z.a22 * z.a22) * (1.0 + inv_e2) + 4.0 * inv_e2 * z.a12 * z.a12 +
                    2.0 * z.a11 * z.a22 * (1.0 - inv_e2);
  // d2 is a positive semidefinite quadratic form; clamp rounding noise.
  return std::sqrt(std::max(d2, 0.0));
}

Viscosities viscosities(const SymMat2& z, const HiblerParams& params) {
  const double delta = delta_of(z, params);
  if (delta == 0.0) throw DegenerateStrainError("viscosities: Delta(z) = 0, viscosities are singular");
  const double zeta = params.P / (2.0 * delta);
  return {zeta, zeta / (params.e * params.e)};
}

SymMat2 stress_vp(const SymMat2& z, const HiblerParams& params) {
  const double delta = delta_of(z, params);
  if (delta == 0.0) throw DegenerateStrainError("stress_vp: Delta(z) = 0, stress is undefined");
  const double zeta = params.P / (2.0 * delta);
  return (2.0 * zeta / (params.e * params.e)) * deviatoric(z) +
         (zeta * (z.trace() - delta)) * SymMat2::identity();
}

SymMat2 tensor_product_t(const Vec2& a, const Vec2& b, const HiblerParams& params) {
  return t_map(sym_outer(a, b), params);
}

Vec2 contract_t_adjoint(const SymMat2& sigma, const Vec2& b, const HiblerParams& params) {
  return t_map(sigma, params).apply(b);
}

SingularValues t_singular_values(const HiblerParams& params) {
  // T acts as sqrt(2)/e on trace-free matrices and as sqrt(2) on multiples of Id.
  constexpr double sqrt2 = std::numbers::sqrt2;
  const double dev = sqrt2 / params.e;
  return {std::min(dev, sqrt2), std::max(dev, sqrt2)};
}

}  // namespace hibler
