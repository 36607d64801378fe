#include "hibler/forces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hibler {

void OceanConfig::validate() const {
  if (!(c_drag > 0.0) || !std::isfinite(c_drag)) throw ConfigError("ocean drag constant must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("ocean gamma must lie in (0, 1)");
  if (!(N1 > 0.0 && N1 < N2) || !std::isfinite(N2)) throw ConfigError("ocean cut-off needs 0 < N1 < N2");
  if (slope && !(*slope > 0.0)) throw ConfigError("ocean slope must be positive");
  if (!std::isfinite(theta)) throw ConfigError("ocean rotation angle must be finite");
}

namespace {

double poly(const double* c, double t) { return c[0] + t * (c[1] + t * (c[2] + t * c[3])); }

// Extreme values of a cubic on [0, 1]: endpoints plus interior critical points.
std::pair<double, double> cubic_range(const double* c) {
  double lo = std::min(poly(c, 0.0), poly(c, 1.0)), hi = std::max(poly(c, 0.0), poly(c, 1.0));
  const double A = 3.0 * c[3], B = 2.0 * c[2], C = c[1];
  std::vector<double> roots;
  if (std::abs(A) < 1e-300) {
    if (B != 0.0) roots.push_back(-C / B);
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      roots.push_back((-B + sq) / (2.0 * A));
      roots.push_back((-B - sq) / (2.0 * A));
    }
  }
  for (double t : roots)
    if (t > 0.0 && t < 1.0) {
      lo = std::min(lo, poly(c, t));
      hi = std::max(hi, poly(c, t));
    }
  return {lo, hi};
}

}  // namespace

OceanDrag::OceanDrag(OceanConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cos_ = std::cos(cfg_.theta);
  sin_ = std::sin(cfg_.theta);
  const double N1 = cfg_.N1, N2 = cfg_.N2, g = cfg_.gamma, L = N2 - N1;
  a_ = cfg_.slope.value_or(std::pow(N2, -g) / N1);
  const double p0 = a_ * N1, m0 = a_ * L;
  const double p1 = std::pow(N2, -g), m1 = -g * std::pow(N2, -g - 1.0) * L;
  h_[0] = p0;
  h_[1] = m0;
  h_[2] = -3.0 * p0 - 2.0 * m0 + 3.0 * p1 - m1;
  h_[3] = 2.0 * p0 + m0 - 2.0 * p1 + m1;
  const auto [lo, hi] = cubic_range(h_);
  if (lo < 0.0) {
    std::ostringstream msg;
    msg << "ocean cut-off blend dips below zero (min " << lo << ") for N1=" << N1 << " N2=" << N2 << " gamma=" << g
        << " slope=" << a_;
    throw ConfigError(msg.str());
  }
  // (s eta)' on the blend, as a cubic in t
  const double r = N1 / L;
  const double d[3] = {h_[1], 2.0 * h_[2], 3.0 * h_[3]};
  const double gc[4] = {h_[0] + r * d[0], h_[1] + r * d[1] + d[0], h_[2] + r * d[2] + d[1], h_[3] + d[2]};
  const auto [glo, ghi] = cubic_range(gc);
  double sup = std::max({2.0 * a_ * N1, hi, std::abs(glo), std::abs(ghi), p1});
  lipschitz_ = cfg_.profile_override ? std::numeric_limits<double>::infinity() : cfg_.c_drag * sup;
}

double OceanDrag::blend(double s, int derivative) const {
  const double L = cfg_.N2 - cfg_.N1, t = (s - cfg_.N1) / L;
  if (derivative == 0) return poly(h_, t);
  return (h_[1] + t * (2.0 * h_[2] + 3.0 * t * h_[3])) / L;
}

double OceanDrag::eta(double s) const {
  if (!(s >= 0.0)) throw ConfigError("ocean cut-off evaluated at negative speed");
  if (cfg_.profile_override) return cfg_.profile_override(s);
  if (s <= cfg_.N1) return a_ * s;
  if (s >= cfg_.N2) return std::pow(s, -cfg_.gamma);
  return blend(s, 0);
}

double OceanDrag::eta_prime(double s) const {
  if (s <= cfg_.N1) return a_;
  if (s >= cfg_.N2) return -cfg_.gamma * std::pow(s, -cfg_.gamma - 1.0);
  return blend(s, 1);
}

Vec2 OceanDrag::drag(const Vec2& U, const Vec2& u) const {
  const Vec2 w = U - u;
  const double k = cfg_.c_drag * eta(norm(w));
  return Vec2{cos_ * w.x - sin_ * w.y, sin_ * w.x + cos_ * w.y} * k;
}

TimeSeriesField TimeSeriesField::constant(VectorField f) {
  TimeSeriesField ts;
  ts.frames.push_back(std::move(f));
  return ts;
}

VectorField TimeSeriesField::at(double t) const {
  if (frames.empty()) throw ConfigError("time series has no frames");
  if (frames.size() == 1 || t <= 0.0) return frames.front();
  const double pos = t / dt_frame;
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= frames.size()) return frames.back();
  const double w = pos - static_cast<double>(k);
  VectorField out = frames[k];
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = frames[k].values[i] * (1.0 - w) + frames[k + 1].values[i] * w;
  return out;
}

VectorField tau_ocean(const OceanDrag& drag, const VectorField& U, const VectorField& u) {
  require_same_mesh(U, u);
  VectorField out(u.mesh);
  for (std::size_t i = 0; i < u.size(); ++i) out.values[i] = drag.drag(U.values[i], u.values[i]);
  return out;
}

VectorField Forces::tau_ocean(const VectorField& u, double t) const {
  if (!ocean.enabled()) return VectorField(u.mesh);
  const VectorField U = U_ocean ? U_ocean->at(t) : VectorField(u.mesh);
  return hibler::tau_ocean(ocean, U, u);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t j = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > j) out.push_back(line.substr(j, i - j));
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, std::size_t column, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ":" << column << ": " << what;
  throw IoError(msg.str());
}

template <class T>
T parse_token(std::string_view tok, const std::string& source, std::size_t line, std::size_t column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    parse_fail(source, line, column, "cannot parse '" + std::string(tok) + "'");
  return v;
}

}  // namespace

GriddedForcing parse_forcing(std::istream& in, const std::string& source) {
  GriddedForcing g;
  std::string raw;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t frame = 0, row_in_frame = 0, width = 0;
  std::vector<char> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto tok = split(raw);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (!have_header) {
      if (tok.size() != 4) parse_fail(source, lineno, 1, "header must be 'nx ny n_frames dt_frame'");
      g.nx = parse_token<std::size_t>(tok[0], source, lineno, 1);
      g.ny = parse_token<std::size_t>(tok[1], source, lineno, 2);
      const auto nf = parse_token<std::size_t>(tok[2], source, lineno, 3);
      g.dt_frame = parse_token<double>(tok[3], source, lineno, 4);
      if (g.nx == 0 || g.ny == 0 || nf == 0) parse_fail(source, lineno, 1, "grid and frame counts must be positive");
      if (g.nx * g.ny * nf > 50'000'000) parse_fail(source, lineno, 1, "forcing grid too large");
      if (!(g.dt_frame > 0.0) || !std::isfinite(g.dt_frame)) parse_fail(source, lineno, 4, "dt_frame must be positive");
      g.f.assign(nf, std::vector<Vec2>(g.nx * g.ny));
      seen.assign(g.nx * g.ny, 0);
      have_header = true;
      continue;
    }
    if (frame >= g.f.size()) parse_fail(source, lineno, 1, "more rows than the header announces");
    if (width == 0) {
      if (tok.size() != 4 && tok.size() != 6) parse_fail(source, lineno, 1, "row must be 'i j f1 f2 [U1 U2]'");
      width = tok.size();
      if (width == 6) g.U.emplace(g.f.size(), std::vector<Vec2>(g.nx * g.ny));
    }
    if (tok.size() != width) parse_fail(source, lineno, 1, "inconsistent column count in row");
    const auto i = parse_token<std::size_t>(tok[0], source, lineno, 1);
    const auto j = parse_token<std::size_t>(tok[1], source, lineno, 2);
    if (i >= g.nx || j >= g.ny) {
      std::ostringstream msg;
      msg << "grid mismatch: point (" << i << ", " << j << ") outside " << g.nx << " x " << g.ny;
      throw IoError(source + ":" + std::to_string(lineno) + ": " + msg.str());
    }
    const std::size_t k = j * g.nx + i;
    if (seen[k]) throw IoError(source + ":" + std::to_string(lineno) + ": grid mismatch: duplicate grid point");
    seen[k] = 1;
    double v[4];
    for (std::size_t c = 2; c < width; ++c) {
      v[c - 2] = parse_token<double>(tok[c], source, lineno, c + 1);
      if (!std::isfinite(v[c - 2])) parse_fail(source, lineno, c + 1, "non-finite value in forcing data");
    }
    g.f[frame][k] = Vec2{v[0], v[1]};
    if (width == 6) (*g.U)[frame][k] = Vec2{v[2], v[3]};
    if (++row_in_frame == g.nx * g.ny) {
      ++frame;
      row_in_frame = 0;
      std::fill(seen.begin(), seen.end(), 0);
    }
  }
  if (!have_header) throw IoError(source + ": missing header");
  if (frame != g.f.size()) throw IoError(source + ": grid mismatch: fewer rows than the header announces");
  return g;
}

GriddedForcing read_forcing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open forcing file " + path);
  return parse_forcing(in, path);
}

void write_forcing(std::ostream& os, const GriddedForcing& g) {
  const auto old = os.precision(17);
  os << g.nx << ' ' << g.ny << ' ' << g.n_frames() << ' ' << g.dt_frame << '\n';
  for (std::size_t f = 0; f < g.n_frames(); ++f)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const Vec2 v = g.f[f][j * g.nx + i];
        os << i << ' ' << j << ' ' << v.x << ' ' << v.y;
        if (g.U) os << ' ' << (*g.U)[f][j * g.nx + i].x << ' ' << (*g.U)[f][j * g.nx + i].y;
        os << '\n';
      }
  os.precision(old);
}

void write_forcing(const std::string& path, const GriddedForcing& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write forcing file " + path);
  write_forcing(out, g);
  if (!out) throw IoError("write failed for " + path);
}

ForcingData interpolate_forcing(const GriddedForcing& g, const MeshPtr& mesh) {
  Vec2 lo = mesh->nodes().front(), hi = lo;
  for (const auto& p : mesh->nodes()) {
    lo = Vec2{std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = Vec2{std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const auto locate = [](double v, double a, double b, std::size_t n) -> std::pair<std::size_t, double> {
    if (n == 1) return {0, 0.0};
    const double pos = std::clamp((v - a) / (b - a), 0.0, 1.0) * static_cast<double>(n - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), n - 2);
    return {k, pos - static_cast<double>(k)};
  };
  const auto sample = [&](const std::vector<Vec2>& grid) {
    VectorField out(mesh);
    for (std::size_t n = 0; n < mesh->num_nodes(); ++n) {
      const Vec2 p = mesh->nodes()[n];
      const auto [i, wx] = locate(p.x, lo.x, hi.x, g.nx);
      const auto [j, wy] = locate(p.y, lo.y, hi.y, g.ny);
      const std::size_t i1 = std::min(i + 1, g.nx - 1), j1 = std::min(j + 1, g.ny - 1);
      out.values[n] = grid[j * g.nx + i] * ((1 - wx) * (1 - wy)) + grid[j * g.nx + i1] * (wx * (1 - wy)) +
                      grid[j1 * g.nx + i] * ((1 - wx) * wy) + grid[j1 * g.nx + i1] * (wx * wy);
    }
    return out;
  };
  ForcingData d;
  d.f.dt_frame = g.dt_frame;
  for (const auto& fr : g.f) d.f.frames.push_back(sample(fr));
  if (g.U) {
    TimeSeriesField U;
    U.dt_frame = g.dt_frame;
    for (const auto& fr : *g.U) U.frames.push_back(sample(fr));
    d.U_ocean = std::move(U);
  }
  return d;
}

ForcingData load_forcing(const std::string& path, const MeshPtr& mesh) {
  return interpolate_forcing(read_forcing(path), mesh);
}

}  // namespace hibler
