#include "hibler/integrands.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hibler/errors.hpp"

namespace hibler {

namespace {

// Entry-coordinate metric of the Frobenius product: diag(1, 2, 1).
std::array<double, 3> lower(const SymMat2& p) { return {p.a11, 2.0 * p.a12, p.a22}; }

void add_metric(EntryHessian& h, double alpha) {
  h[0] += alpha;
  h[4] += 2.0 * alpha;
  h[8] += alpha;
}

void add_rank_one(EntryHessian& h, double c, const SymMat2& p) {
  const auto g = lower(p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) h[3 * i + j] += c * g[i] * g[j];
}

}  // namespace

std::string to_string(IntegrandKind kind) {
  switch (kind) {
    case IntegrandKind::norm:
      return "norm";
    case IntegrandKind::mohr_coulomb:
      return "mohr_coulomb";
    case IntegrandKind::disabled:
      return "disabled";
  }
  return "unknown";
}

IntegrandKind integrand_kind_from_string(const std::string& name) {
  if (name == "norm") return IntegrandKind::norm;
  if (name == "mohr_coulomb") return IntegrandKind::mohr_coulomb;
  if (name == "disabled") return IntegrandKind::disabled;
  throw ConfigError("integrand: unknown kind '" + name + "'");
}

void IntegrandSpec::validate() const {
  if (kind == IntegrandKind::disabled) return;
  if (!(P > 0.0) || !std::isfinite(P)) throw ConfigError("integrand: P must be positive");
  if (kind == IntegrandKind::mohr_coulomb && !(s0 > 0.0))
    throw ConfigError("integrand: mohr_coulomb threshold s0 must be positive");
}

void IntegrandSpec::require_coercive() const {
  if (kind == IntegrandKind::disabled)
    throw ConfigError("integrand: the disabled integrand is not coercive and is rejected here");
  validate();
}

void RegularizedIntegrand::validate() const {
  base.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("integrand: eps must lie in (0, 1)");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("integrand: delta must be >= 0");
}

double eval_f(const IntegrandSpec& spec, const SymMat2& z) {
  const double r = z.norm();
  switch (spec.kind) {
    case IntegrandKind::norm:
      return 0.5 * spec.P * r;
    case IntegrandKind::mohr_coulomb:
      if (r <= spec.s0) return spec.P / (4.0 * spec.s0) * r * r;
      return 0.5 * spec.P * (r - 0.5 * spec.s0);
    case IntegrandKind::disabled:
      return 0.0;
  }
  return 0.0;
}

SymMat2 grad_f(const IntegrandSpec& spec, const SymMat2& z) {
  const double r = z.norm();
  switch (spec.kind) {
    case IntegrandKind::norm:
      return r > 0.0 ? (0.5 * spec.P / r) * z : SymMat2{};
    case IntegrandKind::mohr_coulomb:
      if (r <= spec.s0) return (spec.P / (2.0 * spec.s0)) * z;
      return (0.5 * spec.P / r) * z;
    case IntegrandKind::disabled:
      return {};
  }
  return {};
}

double eval_f_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  const double f = eval_f(reg.base, z);
  return std::sqrt(reg.eps + f * f);
}

SymMat2 grad_f_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  const double f = eval_f(reg.base, z);
  if (f == 0.0) return {};
  return (f / std::sqrt(reg.eps + f * f)) * grad_f(reg.base, z);
}

EntryHessian hessian_f_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  EntryHessian h{};
  const IntegrandSpec& spec = reg.base;
  const double r = z.norm();
  const double f = eval_f(spec, z);
  const double fe = std::sqrt(reg.eps + f * f);
  switch (spec.kind) {
    case IntegrandKind::disabled:
      break;
    case IntegrandKind::norm: {
      // eps k^2 n n / F_eps^3 + k^2 (I - n n) / F_eps with k = P/2.
      const double k2 = 0.25 * spec.P * spec.P;
      add_metric(h, k2 / fe);
      if (r > 0.0) {
        const SymMat2 n = z / r;
        add_rank_one(h, reg.eps * k2 / (fe * fe * fe) - k2 / fe, n);
      }
      break;
    }
    case IntegrandKind::mohr_coulomb: {
      // eps F' F' / F_eps^3 + F F'' / F_eps; F'' exact on each branch.
      const SymMat2 g = grad_f(spec, z);
      if (r <= spec.s0) {
        add_metric(h, f * (spec.P / (2.0 * spec.s0)) / fe);
        add_rank_one(h, reg.eps / (fe * fe * fe), g);
      } else {
        const double k = 0.5 * spec.P;
        const SymMat2 n = z / r;
        const double curv = f * k / (r * fe);
        add_metric(h, curv);
        add_rank_one(h, reg.eps * k * k / (fe * fe * fe) - curv, n);
      }
      break;
    }
  }
  return h;
}

double eval_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  return eval_f_eps(reg, z) + 0.5 * reg.delta * z.norm_squared();
}

SymMat2 grad_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  return grad_f_eps(reg, z) + reg.delta * z;
}

EntryHessian hessian_f_delta_eps(const RegularizedIntegrand& reg, const SymMat2& z) {
  EntryHessian h = hessian_f_eps(reg, z);
  add_metric(h, reg.delta);
  return h;
}

double recession(const IntegrandSpec& spec, const SymMat2& z) {
  if (spec.kind == IntegrandKind::disabled) return 0.0;
  return 0.5 * spec.P * z.norm();
}

SymMat2 grad_recession(const IntegrandSpec& spec, const SymMat2& z) {
  if (spec.kind == IntegrandKind::disabled) return {};
  const double r = z.norm();
  return r > 0.0 ? (0.5 * spec.P / r) * z : SymMat2{};
}

double recession_numeric(const std::function<double(const SymMat2&)>& density, const SymMat2& z) {
  const double t1 = 1e-6;
  const double t2 = 1e-7;
  const double v1 = t1 * density(z / t1);
  const double v2 = t2 * density(z / t2);
  const double scale = std::max({std::abs(v1), std::abs(v2), 1e-300});
  if (!std::isfinite(v1) || !std::isfinite(v2) || std::abs(v1 - v2) > 1e-4 * scale) {
    std::ostringstream os;
    os << "recession_numeric: samples disagree (" << v1 << " vs " << v2
       << "); density is not of linear growth";
    throw Error(ErrorKind::numeric, os.str());
  }
  return v2;
}

double perspective(const IntegrandSpec& spec, double t, const SymMat2& z) {
  if (t < 0.0) throw ConfigError("perspective: t must be >= 0");
  if (t == 0.0) return recession(spec, z);
  return t * eval_f(spec, z / t);
}

CoercivityReport coercivity_probe(const RegularizedIntegrand& reg, std::span<const SymMat2> samples) {
  reg.base.require_coercive();
  CoercivityReport rep;
  rep.samples = samples.size();
  rep.max_domination_excess = -INFINITY;

  // c6 from the upper growth bound, c4 from the slope at large arguments,
  // c5 as the smallest offset making the lower bound hold on every sample.
  double slope = INFINITY;
  for (const auto& z : samples) {
    const double r = z.norm();
    const double pair = dot(grad_f_eps(reg, z), z);
    rep.c6 = std::max(rep.c6, pair / (1.0 + r));
    if (r >= 1.0) slope = std::min(slope, pair / r);
  }
  rep.c4 = std::isfinite(slope) ? slope : 0.0;
  for (const auto& z : samples) rep.c5 = std::max(rep.c5, rep.c4 * z.norm() - dot(grad_f_eps(reg, z), z));

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  std::vector<SymMat2> dirs(64);
  for (auto& d : dirs) {
    d = {gauss(rng), gauss(rng) / std::sqrt(2.0), gauss(rng)};
    d = d / d.norm();
  }
  for (const auto& z : samples) {
    const SymMat2 g = grad_f_eps(reg, z);
    for (const auto& eta : dirs) {
      const double excess = dot(g, eta) - recession(reg.base, eta);
      rep.max_domination_excess = std::max(rep.max_domination_excess, excess);
      if (excess > 1e-12 * (1.0 + reg.base.P)) {
        std::ostringstream os;
        os << "coercivity_probe: recession fails to dominate the gradient at z = (" << z.a11 << ", "
           << z.a12 << ", " << z.a22 << "), excess " << excess;
        throw Error(ErrorKind::numeric, os.str());
      }
    }
  }
  return rep;
}

}  // namespace hibler
