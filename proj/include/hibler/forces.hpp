#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hibler/fields.hpp"

namespace hibler {

struct OceanConfig {
  bool enabled = false;
  double c_drag = 1.0;
  double gamma = 0.5;
  double N1 = 1.0;
  double N2 = 4.0;
  double theta = 0.0;               // rotation angle of R_ocean
  std::optional<double> slope;      // a on [0, N1]; defaults to N2^-gamma / N1
  /// Replaces the cut-off profile (test fixtures only, e.g. an unbounded quadratic drag).
  std::function<double(double)> profile_override;

  void validate() const;
};

/// The C^1 cut-off profile and the drag it induces. The blend on (N1, N2) is the
/// cubic Hermite interpolant of the two outer branches.
class OceanDrag {
 public:
  OceanDrag() = default;
  explicit OceanDrag(OceanConfig cfg);

  const OceanConfig& config() const { return cfg_; }
  bool enabled() const { return cfg_.enabled; }
  double slope() const { return a_; }
  double eta(double s) const;
  double eta_prime(double s) const;
  /// c * eta(|w|) * R w with w = U - u.
  Vec2 drag(const Vec2& U, const Vec2& u) const;
  /// Global Lipschitz constant of u -> drag(U, u): c * sup max(eta, (s eta)'). Infinite
  /// for an overridden profile.
  double lipschitz() const { return lipschitz_; }

 private:
  double blend(double s, int derivative) const;

  OceanConfig cfg_{};
  double a_ = 0.0;
  double h_[4] = {0, 0, 0, 0};  // blend coefficients in t = (s - N1) / (N2 - N1)
  double lipschitz_ = 0.0;
  double cos_ = 1.0, sin_ = 0.0;
};

/// Nodal field sampled at frame times k * dt, linear in time, held constant past the last frame.
struct TimeSeriesField {
  double dt_frame = 1.0;
  std::vector<VectorField> frames;

  static TimeSeriesField constant(VectorField f);
  VectorField at(double t) const;
};

struct Forces {
  TimeSeriesField f;
  OceanDrag ocean;
  std::optional<TimeSeriesField> U_ocean;

  VectorField forcing_at(double t) const { return f.at(t); }
  /// Nodal ocean stress for velocity u at time t (zero when the ocean is off).
  VectorField tau_ocean(const VectorField& u, double t) const;
};

/// Nodal drag field for a given ocean velocity.
VectorField tau_ocean(const OceanDrag& drag, const VectorField& U, const VectorField& u);

/// Gridded forcing as stored on disk: nx x ny grid points spanning the domain's bounding box.
struct GriddedForcing {
  std::size_t nx = 0, ny = 0;
  double dt_frame = 1.0;
  std::vector<std::vector<Vec2>> f;                 // [frame][j * nx + i]
  std::optional<std::vector<std::vector<Vec2>>> U;  // optional ocean velocity, same layout

  std::size_t n_frames() const { return f.size(); }
};

GriddedForcing read_forcing(const std::string& path);
GriddedForcing parse_forcing(std::istream& in, const std::string& source = "<stream>");
void write_forcing(const std::string& path, const GriddedForcing& g);
void write_forcing(std::ostream& os, const GriddedForcing& g);

struct ForcingData {
  TimeSeriesField f;
  std::optional<TimeSeriesField> U_ocean;
};

/// Bilinear interpolation of the grid onto mesh nodes.
ForcingData interpolate_forcing(const GriddedForcing& g, const MeshPtr& mesh);
ForcingData load_forcing(const std::string& path, const MeshPtr& mesh);

}  // namespace hibler
