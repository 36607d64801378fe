#include <cmath>
#include <random>

#include "doctest.h"
#include "hibler/errors.hpp"
#include "hibler/hibler_algebra.hpp"
#include "support.hpp"

using namespace hibler;
using testing_support::random_sym;
using testing_support::random_vec;
using testing_support::rel_err;

namespace {

// Yield function written out entry by entry.
double delta_oracle(const SymMat2& z, double e) {
  const double ie2 = 1.0 / (e * e);
  return std::sqrt((z.a11 * z.a11 + z.a22 * z.a22) * (1 + ie2) + 4 * ie2 * z.a12 * z.a12 +
                   2 * z.a11 * z.a22 * (1 - ie2));
}

}  // namespace

TEST_CASE("t_map closed forms") {
  const HiblerParams p{2.0, 2.0};
  for (double e : {1.0, 2.0, 4.0}) {
    const SymMat2 t = t_map(SymMat2::identity(), {e, 2.0});
    CHECK(t.a11 == doctest::Approx(std::sqrt(2.0)));
    CHECK(t.a12 == doctest::Approx(0.0));
    CHECK(t.a22 == doctest::Approx(std::sqrt(2.0)));
  }
  const SymMat2 off = t_map({0, 1, 0}, p);
  CHECK(off.a11 == doctest::Approx(0.0));
  CHECK(off.a12 == doctest::Approx(std::sqrt(2.0) / 2));
  const SymMat2 z{1, 2, -1};
  const SymMat2 tz = t_map(z, p);
  CHECK(tz.a11 == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(tz.a12 == doctest::Approx(std::sqrt(2.0)));
  CHECK(tz.norm() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("delta_of examples") {
  const HiblerParams p{2.0, 2.0};
  CHECK(delta_of(SymMat2::zero(), p) == 0.0);
  for (double e : {1.0, 2.0, 3.5}) CHECK(delta_of(SymMat2::identity(), {e, 1.0}) == doctest::Approx(2.0));
  CHECK(delta_of({1, 2, -1}, p) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("viscosities and stress") {
  const HiblerParams p{2.0, 2.0};
  const auto v = viscosities(SymMat2::identity(), p);
  CHECK(v.zeta == doctest::Approx(0.5));
  CHECK(v.eta == doctest::Approx(0.125));
  CHECK(viscosities({1, 2, -1}, p).zeta == doctest::Approx(1 / std::sqrt(5.0)));
  CHECK_THROWS_AS(viscosities(SymMat2::zero(), p), DegenerateStrainError);
  CHECK_THROWS_AS(stress_vp(SymMat2::zero(), p), DegenerateStrainError);

  const SymMat2 s0 = stress_vp(SymMat2::identity(), {3.0, 7.0});
  CHECK(s0.norm() < 1e-14);
  const SymMat2 s = stress_vp({1, 2, -1}, p);
  CHECK(s.a11 == doctest::Approx(-0.776393).epsilon(1e-6));
  CHECK(s.a12 == doctest::Approx(0.447214).epsilon(1e-6));
  CHECK(s.a22 == doctest::Approx(-1.223607).epsilon(1e-6));
}

TEST_CASE("tensor product examples") {
  const HiblerParams p{2.0, 2.0};
  const SymMat2 a = tensor_product_t({1, 0}, {0, 1}, p);
  CHECK(a.a11 == doctest::Approx(0.0));
  CHECK(a.a12 == doctest::Approx(std::sqrt(2.0) / 4));
  CHECK(a.norm() == doctest::Approx(0.5));
  const SymMat2 b = tensor_product_t({-1, 0}, {1, 0}, p);
  CHECK(b.a11 == doctest::Approx(-3 * std::sqrt(2.0) / 4));
  CHECK(b.a22 == doctest::Approx(-std::sqrt(2.0) / 4));
  CHECK(b.norm() == doctest::Approx(std::sqrt(1.25)));
  CHECK(tensor_product_t({0, 0}, {0.3, 2}, p).norm() == 0.0);
}

TEST_CASE("singular values") {
  auto sv = t_singular_values({2.0, 1.0});
  CHECK(sv.smin == doctest::Approx(0.707107).epsilon(1e-6));
  CHECK(sv.smax == doctest::Approx(1.414214).epsilon(1e-6));
  sv = t_singular_values({1.0, 1.0});
  CHECK(sv.smin == doctest::Approx(std::sqrt(2.0)));
  CHECK(sv.smax == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS((HiblerParams{0.5, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((HiblerParams{2.0, 0.0}.validate()), ConfigError);
}

TEST_CASE("pointwise identities on random samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ue(1.0, 5.0);
  double worst_delta = 0, worst_dual = 0, worst_lin = 0, worst_tp = 0, worst_adj = 0;
  for (int k = 0; k < 20000; ++k) {
    const HiblerParams p{ue(rng), 2.0};
    const SymMat2 z = random_sym(rng, 3.0), w = random_sym(rng);
    worst_delta = std::max(worst_delta, rel_err(t_map(z, p).norm(), delta_oracle(z, p.e)));
    worst_delta = std::max(worst_delta, rel_err(delta_of(z, p), delta_oracle(z, p.e)));
    // the constant pressure -P/2 Id is divergence free and drops out of the weak form
    const double lhs = dot(stress_vp(z, p), w) + 0.5 * p.P * w.trace();
    const double zeta = viscosities(z, p).zeta;
    const double rhs = zeta * dot(t_map(z, p), t_map(w, p));
    const double scale = zeta * t_map(z, p).norm() * t_map(w, p).norm();
    worst_dual = std::max(worst_dual, std::abs(lhs - rhs) / scale);
    const SymMat2 lin = t_map(2.5 * z - 0.5 * w, p) - (2.5 * t_map(z, p) - 0.5 * t_map(w, p));
    worst_lin = std::max(worst_lin, lin.norm() / (z.norm() + w.norm()));
    const Vec2 a = random_vec(rng), b = random_vec(rng);
    worst_tp = std::max(worst_tp, (tensor_product_t(a, b, p) - t_map(sym_outer(a, b), p)).norm());
    // adjoint contraction: w . a = sigma . (a (x)_T b)
    const Vec2 c = contract_t_adjoint(w, b, p);
    worst_adj = std::max(worst_adj, std::abs(dot(c, a) - dot(w, tensor_product_t(a, b, p))));
  }
  CHECK(worst_delta <= 1e-12);
  CHECK(worst_dual <= 1e-12);
  CHECK(worst_lin <= 1e-14);
  CHECK(worst_tp <= 1e-14);
  CHECK(worst_adj <= 1e-13);
}

TEST_CASE("norm equivalence by sampling") {
  std::mt19937_64 rng(5);
  for (double e : {1.0, 2.0, 4.0}) {
    const HiblerParams p{e, 1.0};
    const auto sv = t_singular_values(p);
    double lo = 1e300, hi = 0;
    for (int k = 0; k < 20000; ++k) {
      SymMat2 z = random_sym(rng);
      z = z / z.norm();
      const double r = t_map(z, p).norm();
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      CHECK(r >= sv.smin * (1 - 1e-14));
      CHECK(r <= sv.smax * (1 + 1e-14));
    }
    CHECK(lo == doctest::Approx(sv.smin).epsilon(1e-2));
    CHECK(hi == doctest::Approx(sv.smax).epsilon(1e-2));
  }
}
