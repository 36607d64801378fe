#pragma once

#include "hibler/sym_mat2.hpp"

namespace hibler {

/// Yield-ellipse axis ratio e and (constant) ice pressure P.
struct HiblerParams {
  double e = 2.0;
  double P = 2.0;

  void validate() const;
};

/// T[z] = (sqrt(2)/e) z^D + (1/sqrt(2)) tr(z) Id.
SymMat2 t_map(const SymMat2& z, const HiblerParams& params);

/// Elliptic yield function; equals |t_map(z)|.
double delta_of(const SymMat2& z, const HiblerParams& params);

struct Viscosities {
  double zeta;  // bulk
  double eta;   // shear
};

/// zeta = P / (2 Delta), eta = zeta / e^2. Throws DegenerateStrainError at Delta = 0.
Viscosities viscosities(const SymMat2& z, const HiblerParams& params);

/// Viscous-plastic stress (2/e^2) zeta z^D + zeta (tr z - Delta) Id.
/// Throws DegenerateStrainError at Delta = 0.
SymMat2 stress_vp(const SymMat2& z, const HiblerParams& params);

/// a (x)_T b = T[a (.) b], the symbol of the Hibler operator.
SymMat2 tensor_product_t(const Vec2& a, const Vec2& b, const HiblerParams& params);

/// Dual contraction sigma (x)_{T*} b: the vector w with w . a = sigma . (a (x)_T b)
/// for every a. Since T is self-adjoint, w = T[sigma] b.
Vec2 contract_t_adjoint(const SymMat2& sigma, const Vec2& b, const HiblerParams& params);

struct SingularValues {
  double smin;
  double smax;
};

/// Norm-equivalence constants of T on symmetric matrices: (sqrt(2)/e, sqrt(2)) for e >= 1.
SingularValues t_singular_values(const HiblerParams& params);

}  // namespace hibler
