#pragma once

#include <cmath>

namespace hibler {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr Vec2 operator/(Vec2 a, double s) { return a *= (1.0 / s); }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]]. Norms and inner products
/// are Frobenius (Hilbert-Schmidt), so the off-diagonal entry counts twice.
struct SymMat2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static constexpr SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  static constexpr SymMat2 zero() { return {}; }
  friend constexpr bool operator==(const SymMat2&, const SymMat2&) = default;

  constexpr double trace() const { return a11 + a22; }
  constexpr double norm_squared() const { return a11 * a11 + 2.0 * a12 * a12 + a22 * a22; }
  double norm() const { return std::sqrt(norm_squared()); }

  constexpr Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }

  constexpr SymMat2& operator+=(const SymMat2& o) {
    a11 += o.a11;
    a12 += o.a12;
    a22 += o.a22;
    return *this;
  }
  constexpr SymMat2& operator-=(const SymMat2& o) {
    a11 -= o.a11;
    a12 -= o.a12;
    a22 -= o.a22;
    return *this;
  }
  constexpr SymMat2& operator*=(double s) {
    a11 *= s;
    a12 *= s;
    a22 *= s;
    return *this;
  }
};

constexpr SymMat2 operator+(SymMat2 a, const SymMat2& b) { return a += b; }
constexpr SymMat2 operator-(SymMat2 a, const SymMat2& b) { return a -= b; }
constexpr SymMat2 operator-(SymMat2 a) { return a *= -1.0; }
constexpr SymMat2 operator*(double s, SymMat2 a) { return a *= s; }
constexpr SymMat2 operator*(SymMat2 a, double s) { return a *= s; }
constexpr SymMat2 operator/(SymMat2 a, double s) { return a *= (1.0 / s); }

constexpr double dot(const SymMat2& a, const SymMat2& b) {
  return a.a11 * b.a11 + 2.0 * a.a12 * b.a12 + a.a22 * b.a22;
}

constexpr SymMat2 deviatoric(const SymMat2& z) {
  const double half_tr = 0.5 * z.trace();
  return {z.a11 - half_tr, z.a12, z.a22 - half_tr};
}

/// a (.) b = (a b^T + b a^T) / 2
constexpr SymMat2 sym_outer(const Vec2& a, const Vec2& b) {
  return {a.x * b.x, 0.5 * (a.x * b.y + a.y * b.x), a.y * b.y};
}

}  // namespace hibler
