#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "hibler/cli_io.hpp"
#include "hibler/errors.hpp"
#include "json.hpp"

namespace hibler {

namespace fs = std::filesystem;

namespace {

struct StopRequested {
  std::size_t step;
};

void apply_threads(const CliOptions& opts) {
  int n = opts.threads;
  if (n <= 0) {
    if (const char* env = std::getenv("HIBLER_THREADS"); env && *env) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (*end != '\0' || v < 1 || v > 4096) throw ConfigError(std::string("HIBLER_THREADS must be a positive integer, got '") + env + "'");
      n = static_cast<int>(v);
    }
  }
  if (n > 0) omp_set_num_threads(n);
}

RunConfig prepare(const fs::path& config_path, const CliOptions& opts) {
  RunConfig cfg = load_config(config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  apply_threads(opts);
  return cfg;
}

fs::path make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

fs::path output_root(const RunConfig& cfg, const CliOptions& opts) { return opts.out ? *opts.out : cfg.output_dir; }

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(p, mode | std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

void write_text(const fs::path& p, const std::string& text) {
  auto os = open_out(p);
  os << text;
  if (!os) throw IoError("write failed for " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_error_file(const fs::path& dir, const std::exception& e) {
  std::ofstream os(dir / "error.json");
  if (os) os << error_record(e) << '\n';
}

std::string snapshot_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshots/step_%06zu.vtk", step);
  return buf;
}

double regularized_energy(const VectorField& u, const RegularizedIntegrand& reg, const HiblerParams& params) {
  const auto tu = hibler_def(u, params);
  double e = 0.0;
  for (std::size_t t = 0; t < tu.size(); ++t) e += u.mesh->area(t) * eval_f_delta_eps(reg, tu.values[t]);
  return e;
}

std::vector<std::string> list_snapshots(const fs::path& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  if (!fs::is_directory(dir / "snapshots", ec)) return out;
  for (const auto& e : fs::directory_iterator(dir / "snapshots"))
    if (e.path().extension() == ".vtk") out.push_back("snapshots/" + e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

// Keeps the header and the rows up to `last_step`.
std::string truncated_trajectory(const fs::path& p, std::size_t last_step) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot resume: " + p.string() + " is missing");
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out += line + "\n";
      header = false;
      continue;
    }
    const auto step = std::strtoull(line.c_str(), nullptr, 10);
    if (step <= last_step) out += line + "\n";
  }
  return out;
}

struct RunOutputs {
  RunConfig cfg;
  std::string hash;
  MeshPtr mesh;
  Trajectory traj;
};

// The evolution with every output written as it goes. Returns nullopt when stopped early.
std::optional<RunOutputs> evolve_into(const fs::path& dir, const RunConfig& cfg, const CliOptions& opts) {
  RunOutputs out{cfg, cfg.hash(), build_mesh(cfg), {}};
  const auto& mesh = out.mesh;
  const auto u0 = build_initial(cfg, mesh);
  const auto forces = build_forces(cfg, mesh);
  const auto space = std::make_shared<const FeSpace>(mesh, cfg.params);
  make_dir(dir / "snapshots");
  write_text(dir / "config.ini", cfg.to_ini());

  std::optional<EvolutionState> resume;
  const fs::path ck = dir / "checkpoint.txt";
  if (opts.resume && fs::exists(ck)) {
    std::ifstream in(ck);
    resume = read_checkpoint(in, mesh, out.hash);
  }
  std::ofstream traj_csv;
  if (resume) {
    const std::string kept = truncated_trajectory(dir / "trajectory.csv", resume->step);
    traj_csv = open_out(dir / "trajectory.csv");
    traj_csv << kept;
  } else {
    traj_csv = open_out(dir / "trajectory.csv");
    write_trajectory_header(traj_csv);
    StepDiagnostics d0;
    d0.energy = regularized_energy(u0, cfg.integrand, cfg.params);
    d0.max_stress = recover_stress(u0, cfg.integrand, cfg.params).feasibility_norm();
    write_trajectory_row(traj_csv, d0);
    auto os = open_out(dir / snapshot_name(0));
    write_vtk_snapshot(os, u0, cfg.integrand, cfg.params, "step 0 t 0");
  }

  const std::size_t first = resume ? resume->step : 0;
  const std::size_t N = cfg.solver.num_steps();
  EvolutionOptions eo;
  eo.on_step = [&](const EvolutionState& s, const StepDiagnostics& d) {
    write_trajectory_row(traj_csv, d);
    const bool stop = opts.stop_after && s.step - first >= *opts.stop_after && s.step < N;
    if (s.step % cfg.snapshot_every == 0 || s.step == N) {
      auto os = open_out(dir / snapshot_name(s.step));
      write_vtk_snapshot(os, s.u, cfg.integrand, cfg.params, "step " + std::to_string(s.step) + " t " + std::to_string(d.t));
    }
    if (s.step % cfg.snapshot_every == 0 || stop) {
      traj_csv.flush();
      if (!traj_csv) throw IoError("write failed for trajectory.csv");
      {
        auto os = open_out(dir / "checkpoint.tmp");
        write_checkpoint(os, s, out.hash);
        if (!os) throw IoError("write failed for checkpoint");
      }
      fs::rename(dir / "checkpoint.tmp", ck);
    }
    if (stop) throw StopRequested{s.step};
  };

  try {
    out.traj = run_evolution(space, resume ? resume->u : u0, cfg.integrand, forces, cfg.solver, eo,
                             resume ? &*resume : nullptr);
  } catch (const StopRequested& s) {
    std::cout << "stopped after step " << s.step << "; continue with --resume\n";
    return std::nullopt;
  }
  traj_csv.close();
  if (!traj_csv) throw IoError("write failed for trajectory.csv");
  {
    auto os = open_out(dir / "monitors.csv");
    write_monitors_csv(os, out.traj.monitors);
  }
  {
    auto os = open_out(dir / "final_state.csv");
    write_state_csv(os, out.traj.states.back());
  }
  std::error_code ec;
  fs::remove(ck, ec);
  return out;
}

TestTrajectory competitor(const Trajectory& traj, DiagnoseSpec::Competitor kind, std::uint64_t seed) {
  auto v = TestTrajectory::from_trajectory(traj);
  switch (kind) {
    case DiagnoseSpec::Competitor::self:
      break;
    case DiagnoseSpec::Competitor::zero:
      for (auto& s : v.states) s = VectorField(s.mesh);
      for (auto& r : v.rates) r = VectorField(r.mesh);
      break;
    case DiagnoseSpec::Competitor::random: {
      const auto& mesh = traj.states.front().mesh;
      double scale = 0.0;
      for (const auto& s : traj.states)
        for (const auto& x : s.values) scale = std::max(scale, norm(x));
      if (scale == 0.0) scale = 1.0;
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(0.0, 0.1 * scale);
      VectorField w(mesh);
      for (std::size_t i = 0; i < mesh->num_nodes(); ++i)
        if (!mesh->is_boundary_node(i)) w.values[i] = {g(rng), g(rng)};
      for (auto& s : v.states) s = s + w;
      break;
    }
  }
  return v;
}

const char* competitor_name(DiagnoseSpec::Competitor c) {
  switch (c) {
    case DiagnoseSpec::Competitor::self: return "self";
    case DiagnoseSpec::Competitor::zero: return "zero";
    case DiagnoseSpec::Competitor::random: return "random";
  }
  return "?";
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

CliResult cli_run(const fs::path& config_path, const CliOptions& opts) {
  const RunConfig cfg = prepare(config_path, opts);
  const std::string hash = cfg.hash();
  const fs::path dir = make_dir(output_root(cfg, opts) / ("run-" + hash.substr(0, 16)));
  RunDirLock lock(dir);
  try {
    const auto out = evolve_into(dir, cfg, opts);
    if (!out) return {0, dir};
    std::vector<std::string> files{"config.ini", "trajectory.csv", "monitors.csv", "final_state.csv"};
    for (auto& s : list_snapshots(dir)) files.push_back(s);
    write_manifest(dir, "run", hash, files);
    const auto& last = out->traj.steps;
    std::cout << "run " << dir.string() << ": " << cfg.solver.num_steps() << " steps";
    if (!last.empty()) std::cout << ", final energy " << last.back().energy << ", max stress " << out->traj.monitors.max_stress;
    std::cout << '\n';
  } catch (const std::exception& e) {
    write_error_file(dir, e);
    throw;
  }
  return {0, dir};
}

CliResult cli_sweep(const fs::path& config_path, const CliOptions& opts) {
  const RunConfig cfg = prepare(config_path, opts);
  const ParamSchedule schedule = cfg.sweep.schedule();
  validate_schedule(schedule);
  const SweepProblem problem = build_sweep_problem(cfg);
  const std::string hash = cfg.hash();
  const fs::path dir = make_dir(output_root(cfg, opts) / ("sweep-" + hash.substr(0, 16)));
  RunDirLock lock(dir);
  try {
    write_text(dir / "config.ini", cfg.to_ini());
    SweepReport report = run_sweep(schedule, problem);
    const bool verdict = boundedness_verdict(report, cfg.sweep.ratio_limit);
    auto files = write_sweep_report(dir.string(), report);
    {
      auto os = open_out(dir / "verdict.csv");
      os << "key,value\nverdict," << (verdict ? "pass" : "fail") << "\nruns," << report.runs.size() << '\n';
      for (const auto& f : report.failures) os << "failure,\"" << f << "\"\n";
    }
    files.push_back("verdict.csv");
    files.push_back("config.ini");
    write_manifest(dir, "sweep", hash, files);
    std::cout << "sweep " << dir.string() << ": " << report.runs.size() << " runs, verdict " << (verdict ? "pass" : "fail")
              << '\n';
  } catch (const std::exception& e) {
    write_error_file(dir, e);
    throw;
  }
  return {0, dir};
}

CliResult cli_diagnose(const fs::path& run_dir, const DiagnoseSpec& spec, const CliOptions& opts) {
  verify_manifest(run_dir);
  RunConfig cfg = load_config(run_dir / "config.ini");
  const std::uint64_t seed = opts.seed ? *opts.seed : cfg.seed;
  cfg.validate();
  apply_threads(opts);
  if (spec.every < 1 || spec.pairing_samples < 1) throw ConfigError("diagnose: every and samples must be >= 1");
  const std::string run_hash = cfg.hash();
  std::ostringstream key;
  key << run_hash << ' ' << competitor_name(spec.competitor) << ' '
      << (spec.energy == EviEnergy::regularized ? "regularized" : "relaxed") << ' ' << spec.every << ' '
      << spec.pairing_samples << ' ' << seed;
  const std::string hash = sha256_hex(key.str());
  const fs::path dir = make_dir(run_dir / ("diagnose-" + hash.substr(0, 16)));
  RunDirLock lock(dir);
  try {
    // Recompute the trajectory and require it to reproduce the stored table byte for byte.
    const auto mesh = build_mesh(cfg);
    const auto space = std::make_shared<const FeSpace>(mesh, cfg.params);
    const auto u0 = build_initial(cfg, mesh);
    const auto forces = build_forces(cfg, mesh);
    const Trajectory traj = run_evolution(space, u0, cfg.integrand, forces, cfg.solver);
    {
      std::ostringstream os;
      write_trajectory_header(os);
      StepDiagnostics d0;
      d0.energy = regularized_energy(u0, cfg.integrand, cfg.params);
      d0.max_stress = recover_stress(u0, cfg.integrand, cfg.params).feasibility_norm();
      write_trajectory_row(os, d0);
      for (const auto& d : traj.steps) write_trajectory_row(os, d);
      if (os.str() != read_text(run_dir / "trajectory.csv"))
        throw IoError("run in " + run_dir.string() + " does not reproduce its trajectory.csv");
    }

    const auto v = competitor(traj, spec.competitor, seed);
    {
      auto os = open_out(dir / "evi.csv");
      os << "step,s,residual,tolerance,holds\n";
      for (std::size_t n = spec.every; n < traj.times.size(); n += spec.every) {
        const auto r = evi_residual(traj, v, traj.times[n], cfg.integrand, cfg.params, forces, spec.energy,
                                    cfg.solver.newton_tol);
        os << n << ',' << num(traj.times[n]) << ',' << num(r.residual) << ',' << num(r.tolerance) << ','
           << (r.holds() ? 1 : 0) << '\n';
      }
    }
    const auto stresses = stress_recovery(traj, cfg.integrand, cfg.params, cfg.solver.newton_tol);
    {
      auto os = open_out(dir / "stress.csv");
      os << "step,t,max_stress,feasible\n";
      for (std::size_t n = 0; n < stresses.size(); ++n)
        os << n << ',' << num(traj.times[n]) << ',' << num(stresses[n].feasibility_norm()) << ','
           << (stresses[n].feasible() ? 1 : 0) << '\n';
    }
    {
      auto os = open_out(dir / "weakvar.csv");
      os << "step,t,eq_residual,coupling_residual\n";
      const auto m1 = MassField::constant(mesh, 1.0);
      const WeakVarOptions wo{cfg.params.P / 2.0, cfg.integrand.delta};
      for (std::size_t n = spec.every; n < traj.times.size(); n += spec.every) {
        const auto r = weak_var_residual(traj, stresses, m1, v, traj.times[n], forces, cfg.params, wo);
        os << n << ',' << num(traj.times[n]) << ',' << num(r.eq_residual) << ',' << num(r.coupling_residual) << '\n';
      }
    }
    std::vector<std::string> files{"evi.csv", "stress.csv", "weakvar.csv"};
    if (cfg.domain.kind == DomainSpec::Kind::rectangle && cfg.domain.pattern == MeshPattern::diagonal) {
      const auto padded = pad_rect_mesh(cfg.domain.nx, cfg.domain.ny, cfg.domain.Lx, cfg.domain.Ly);
      const auto rep = pairing_mass_bound_check(stresses.back(), traj.states.back(), padded, cfg.params,
                                                spec.pairing_samples, seed);
      auto os = open_out(dir / "pairing.csv");
      os << "step,samples,bound,max_pairing,violations\n"
         << traj.states.size() - 1 << ',' << rep.samples << ',' << num(rep.bound) << ',' << num(rep.max_pairing) << ','
         << rep.violations.size() << '\n';
      files.push_back("pairing.csv");
    }
    write_manifest(dir, "diagnose", run_hash, files);
    std::cout << "diagnose " << dir.string() << '\n';
  } catch (const std::exception& e) {
    write_error_file(dir, e);
    throw;
  }
  return {0, dir};
}

CliResult cli_boundary_experiment(const fs::path& config_path, const CliOptions& opts) {
  const RunConfig cfg = prepare(config_path, opts);
  if (cfg.domain.kind != DomainSpec::Kind::rectangle) throw ConfigError("boundary experiment needs a rectangular domain");
  const std::string hash = cfg.hash();
  const fs::path dir = make_dir(output_root(cfg, opts) / ("boundary-" + hash.substr(0, 16)));
  RunDirLock lock(dir);
  try {
    const auto& b = cfg.boundary;
    const auto u = [&b](Vec2 x) {
      return Vec2{b.value.x + b.gradient[0] * x.x + b.gradient[1] * x.y,
                  b.value.y + b.gradient[2] * x.x + b.gradient[3] * x.y};
    };
    const auto report = boundary_bulk_experiment(u, cfg.integrand.base, cfg.params, b.deltas, cfg.domain.Lx,
                                                 cfg.domain.Ly, b.cells_per_delta);
    {
      auto os = open_out(dir / "boundary.csv");
      os << "delta,cells,bulk,target,gap,relative_gap,uniform_monitor\n";
      for (const auto& r : report.rows)
        os << num(r.delta) << ',' << r.cells << ',' << num(r.bulk) << ',' << num(r.target) << ',' << num(r.gap) << ','
           << num(r.target != 0.0 ? r.gap / r.target : 0.0) << ',' << num(r.uniform_monitor) << '\n';
    }
    {
      auto os = open_out(dir / "summary.csv");
      os << "key,value\ngap_decreasing," << (report.gap_decreasing ? 1 : 0) << "\nmonitor_max," << num(report.monitor_max)
         << '\n';
    }
    write_text(dir / "config.ini", cfg.to_ini());
    write_manifest(dir, "boundary-experiment", hash, {"boundary.csv", "summary.csv", "config.ini"});
    const auto& last = report.rows.back();
    std::cout << "boundary experiment " << dir.string() << ": delta " << last.delta << ", bulk " << last.bulk
              << ", target " << last.target << '\n';
  } catch (const std::exception& e) {
    write_error_file(dir, e);
    throw;
  }
  return {0, dir};
}

CliResult cli_validate_config(const fs::path& config_path, std::ostream& os) {
  RunConfig cfg = load_config(config_path);
  cfg.validate();
  os << "ok " << cfg.hash() << '\n';
  return {0, {}};
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::config:
      case ErrorKind::geometry:
        return 2;
      case ErrorKind::solver:
      case ErrorKind::numeric:
        return 3;
      case ErrorKind::io:
        return 4;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e) || dynamic_cast<const std::ios_base::failure*>(&e)) return 4;
  if (dynamic_cast<const CLI::ParseError*>(&e)) return 2;
  return 1;
}

std::string error_record(const std::exception& e) {
  nlohmann::ordered_json j;
  const char* kind = "internal";
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::config: kind = "config"; break;
      case ErrorKind::geometry: kind = "geometry"; break;
      case ErrorKind::solver: kind = "solver"; break;
      case ErrorKind::numeric: kind = "numeric"; break;
      case ErrorKind::io: kind = "io"; break;
    }
  } else if (exit_code_for(e) == 4) {
    kind = "io";
  }
  j["error"] = kind;
  j["exit_code"] = exit_code_for(e);
  j["message"] = e.what();
  if (const auto* s = dynamic_cast<const SolverError*>(&e)) {
    j["residual"] = s->residual();
    j["step"] = s->step();
  }
  return j.dump();
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Viscous-plastic sea-ice momentum solver and verification harness"};
  app.require_subcommand(1);
  app.fallthrough();
  CliOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  app.add_option("--out", out, "output root (default: output.dir of the config)");
  app.add_option("--threads", opts.threads, "OpenMP threads (default: HIBLER_THREADS)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "override output.seed");

  std::string config;
  auto* run = app.add_subcommand("run", "run one evolution");
  run->add_option("-c,--config", config, "config file")->required();
  run->add_flag("--resume", opts.resume, "continue from the checkpoint in the run directory");
  std::size_t stop_after = 0;
  auto* stop_opt = run->add_option("--stop-after", stop_after, "stop after this many steps, leaving a checkpoint")
                       ->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep over (zeta, delta, eps)");
  sweep->add_option("-c,--config", config, "config file")->required();

  auto* boundary = app.add_subcommand("boundary-experiment", "boundary penalty recovered by the cutoff bulk energy");
  boundary->add_option("-c,--config", config, "config file")->required();

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config file");
  validate->add_option("-c,--config", config, "config file")->required();

  auto* diagnose = app.add_subcommand("diagnose", "EVI, stress and pairing diagnostics of a finished run");
  std::string run_dir, competitor_arg, energy_arg;
  std::size_t every = 0, samples = 0;
  diagnose->add_option("run_dir", run_dir, "run directory")->required();
  diagnose->add_option("--competitor", competitor_arg, "self, zero or random")
      ->check(CLI::IsMember({"self", "zero", "random"}));
  diagnose->add_option("--energy", energy_arg, "regularized or relaxed")->check(CLI::IsMember({"regularized", "relaxed"}));
  diagnose->add_option("--every", every, "evaluate at every k-th step")->check(CLI::PositiveNumber);
  diagnose->add_option("--samples", samples, "pairing corpus size")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (!out.empty()) opts.out = out;
  if (seed_opt->count()) opts.seed = seed;
  if (stop_opt->count()) opts.stop_after = stop_after;

  try {
    if (*run) return cli_run(config, opts).exit_code;
    if (*sweep) return cli_sweep(config, opts).exit_code;
    if (*boundary) return cli_boundary_experiment(config, opts).exit_code;
    if (*validate) return cli_validate_config(config, std::cout).exit_code;
    if (*diagnose) {
      DiagnoseSpec spec = load_config(fs::path(run_dir) / "config.ini").diagnose;
      if (competitor_arg == "self") spec.competitor = DiagnoseSpec::Competitor::self;
      if (competitor_arg == "zero") spec.competitor = DiagnoseSpec::Competitor::zero;
      if (competitor_arg == "random") spec.competitor = DiagnoseSpec::Competitor::random;
      if (energy_arg == "regularized") spec.energy = EviEnergy::regularized;
      if (energy_arg == "relaxed") spec.energy = EviEnergy::relaxed;
      if (every) spec.every = every;
      if (samples) spec.pairing_samples = samples;
      return cli_diagnose(run_dir, spec, opts).exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << error_record(e) << '\n';
    return exit_code_for(e);
  }
  return 1;
}

}  // namespace hibler
