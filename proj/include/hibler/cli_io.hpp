#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hibler/anzellotti_pairing.hpp"
#include "hibler/singular_limit_harness.hpp"
#include "hibler/solver.hpp"
#include "hibler/vi_diagnostics.hpp"

namespace hibler {

struct DomainSpec {
  enum class Kind { rectangle, polygon };
  Kind kind = Kind::rectangle;
  double Lx = 1.0, Ly = 1.0;
  std::size_t nx = 16, ny = 16;
  MeshPattern pattern = MeshPattern::diagonal;
  std::vector<Vec2> vertices;  // polygon outline, counter-clockwise
  int refinements = 3;
};

struct InitialSpec {
  enum class Kind { zero, bump, file };
  Kind kind = Kind::bump;
  Vec2 center{0.5, 0.5};
  double radius = 0.25;
  Vec2 amplitude{1.0, 0.5};   // (1 - r^2/R^2)^2 times amplitude
  std::filesystem::path path;  // node table "node,u1,u2"
  double mollify = 0.0;        // zeta; 0 leaves the datum as is
};

struct ForcingSpec {
  enum class Kind { none, constant, band, file };
  Kind kind = Kind::band;
  Vec2 value{2.0, 0.0};   // constant force, or the force inside the band
  double half_width = 0.2;  // band |y - Ly/2| < half_width Ly
  std::filesystem::path path;  // gridded forcing file
};

struct SweepSpec {
  enum class Problem { config, shear, zero };
  Problem problem = Problem::config;
  std::vector<double> zetas{0.2, 0.14, 0.1};
  std::vector<double> delta_fractions{0.5, 0.25, 0.125};  // delta = fraction zeta^2
  std::vector<double> deltas;  // absolute, for every zeta; replaces the fractions when set
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  std::vector<std::size_t> meshes{16};
  std::vector<double> taus{0.05};
  double ratio_limit = 3.0;

  ParamSchedule schedule() const;
};

struct BoundarySpec {
  Vec2 value{1.0, 0.0};        // u = value + gradient x
  std::array<double, 4> gradient{0, 0, 0, 0};  // d1u1, d2u1, d1u2, d2u2
  std::vector<double> deltas{0.25, 0.125, 0.0625};
  double cells_per_delta = 4.0;
};

struct DiagnoseSpec {
  enum class Competitor { self, zero, random };
  Competitor competitor = Competitor::self;
  EviEnergy energy = EviEnergy::regularized;
  std::size_t every = 1;          // EVI evaluated at every k-th step time
  std::size_t pairing_samples = 100;
};

struct RunConfig {
  DomainSpec domain;
  HiblerParams params;
  RegularizedIntegrand integrand{IntegrandSpec{IntegrandKind::norm, 2.0, 1.0}, 1e-2, 1e-3};
  SolverConfig solver;
  OceanConfig ocean;
  Vec2 ocean_velocity{0.0, 0.0};  // used when the forcing file carries no ocean velocity
  ForcingSpec forcing;
  InitialSpec initial;
  std::filesystem::path output_dir = "out";
  std::size_t snapshot_every = 10;
  std::uint64_t seed = 1;
  SweepSpec sweep;
  BoundarySpec boundary;
  DiagnoseSpec diagnose;

  /// Range checks of every module involved; IoError for referenced files that do not exist.
  void validate() const;
  /// Sorted key=value listing of every setting, defaults included, plus the digests of referenced files.
  std::string canonical() const;
  /// sha256 of canonical()
  std::string hash() const;
  /// INI text that parses back to this configuration; paths absolute.
  std::string to_ini() const;
};

/// INI text with sections. Paths resolve against base_dir. Unknown sections or keys throw ConfigError.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".",
                       const std::string& source = "<stream>");
RunConfig load_config(const std::filesystem::path& path);

MeshPtr build_mesh(const RunConfig& cfg);
VectorField build_initial(const RunConfig& cfg, const MeshPtr& mesh);
Forces build_forces(const RunConfig& cfg, const MeshPtr& mesh);
SweepProblem build_sweep_problem(const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Exclusive ownership of a run directory through a lock file created with O_EXCL.
class RunDirLock {
 public:
  explicit RunDirLock(const std::filesystem::path& dir);
  ~RunDirLock();
  RunDirLock(const RunDirLock&) = delete;
  RunDirLock& operator=(const RunDirLock&) = delete;

 private:
  std::filesystem::path file_;
};

void write_trajectory_header(std::ostream& os);
void write_trajectory_row(std::ostream& os, const StepDiagnostics& d);
void write_monitors_csv(std::ostream& os, const Monitors& m);
/// Legacy ASCII unstructured grid: velocity at the nodes; |T u|, |F'_eps(T u)| and F'_eps(T u) per cell.
void write_vtk_snapshot(std::ostream& os, const VectorField& u, const RegularizedIntegrand& reg,
                        const HiblerParams& params, const std::string& title);
void write_state_csv(std::ostream& os, const VectorField& u);
VectorField read_state_csv(std::istream& in, const MeshPtr& mesh, const std::string& source = "<stream>");

/// manifest.json: kind, config hash, code version, sha256 of every listed file.
void write_manifest(const std::filesystem::path& dir, const std::string& kind, const std::string& config_hash,
                    const std::vector<std::string>& files);
/// Throws IoError naming the first file whose checksum differs from the manifest.
void verify_manifest(const std::filesystem::path& dir);

const char* code_version();

struct CliOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: HIBLER_THREADS, else the OpenMP default
  bool resume = false;
  std::optional<std::size_t> stop_after;  // stop after this many steps, leaving a checkpoint
};

struct CliResult {
  int exit_code = 0;
  std::filesystem::path dir;  // directory that received the outputs
};

CliResult cli_run(const std::filesystem::path& config_path, const CliOptions& opts = {});
CliResult cli_sweep(const std::filesystem::path& config_path, const CliOptions& opts = {});
CliResult cli_diagnose(const std::filesystem::path& run_dir, const DiagnoseSpec& spec, const CliOptions& opts = {});
CliResult cli_boundary_experiment(const std::filesystem::path& config_path, const CliOptions& opts = {});
CliResult cli_validate_config(const std::filesystem::path& config_path, std::ostream& os);

/// Exit code for an exception: 2 configuration and geometry, 3 solver and numerics, 4 I/O.
int exit_code_for(const std::exception& e);
/// One-line JSON error record.
std::string error_record(const std::exception& e);

/// Command-line entry point; never throws.
int cli_main(int argc, char** argv);

}  // namespace hibler
