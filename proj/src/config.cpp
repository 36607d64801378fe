#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hibler/cli_io.hpp"
#include "hibler/errors.hpp"

namespace hibler {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Parse context for one key; errors name the key.
struct Field {
  std::string key;
  std::string value;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("config key " + key + " = '" + value + "': " + why);
  }

  double number(const std::string& text) const {
    double x = 0.0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc() || p != end || !std::isfinite(x)) fail("not a finite number");
    return x;
  }
  double number() const { return number(trim(value)); }

  std::size_t count() const {
    const std::string t = trim(value);
    std::size_t x = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc() || p != t.data() + t.size()) fail("not a nonnegative integer");
    return x;
  }

  bool flag() const {
    std::string t = trim(value);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    fail("not a boolean");
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& s : split_list(value)) out.push_back(number(s));
    return out;
  }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(value)) out.push_back(Field{key, s}.count());
    return out;
  }

  template <class E>
  E choice(std::initializer_list<std::pair<const char*, E>> options) const {
    const std::string t = trim(value);
    std::string names;
    for (const auto& [name, e] : options) {
      if (t == name) return e;
      names += names.empty() ? name : std::string(", ") + name;
    }
    fail("expected one of " + names);
  }
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt(x);
  return s;
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

std::string path_digest(const fs::path& p) {
  if (p.empty()) return "";
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return "missing:" + p.generic_string();
  return "sha256:" + sha256_file(p);
}

struct Entry {
  const char* key;
  std::function<void(RunConfig&, const Field&, const fs::path&)> set;
  std::function<std::string(const RunConfig&)> get;  // empty: not hashed
};

const std::vector<Entry>& entries() {
  using D = DomainSpec::Kind;
  using I = InitialSpec::Kind;
  using F = ForcingSpec::Kind;
  using S = SweepSpec::Problem;
  using C = DiagnoseSpec::Competitor;
  static const std::vector<Entry> table = {
      {"domain.kind", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.kind = f.choice<D>({{"rectangle", D::rectangle}, {"polygon", D::polygon}}); },
       [](const RunConfig& c) { return std::string(c.domain.kind == D::rectangle ? "rectangle" : "polygon"); }},
      {"domain.Lx", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.Lx = f.number(); }, [](const RunConfig& c) { return fmt(c.domain.Lx); }},
      {"domain.Ly", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.Ly = f.number(); }, [](const RunConfig& c) { return fmt(c.domain.Ly); }},
      {"domain.nx", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.nx = f.count(); }, [](const RunConfig& c) { return std::to_string(c.domain.nx); }},
      {"domain.ny", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.ny = f.count(); }, [](const RunConfig& c) { return std::to_string(c.domain.ny); }},
      {"domain.pattern", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.pattern = f.choice<MeshPattern>({{"diagonal", MeshPattern::diagonal}, {"crossed", MeshPattern::crossed}}); },
       [](const RunConfig& c) { return std::string(c.domain.pattern == MeshPattern::diagonal ? "diagonal" : "crossed"); }},
      {"domain.vertices",
       [](RunConfig& c, const Field& f, const fs::path&) {
         c.domain.vertices.clear();
         for (const auto& pair : split_list(f.value)) {
           const auto xy = split_list(pair, ' ');
           if (xy.size() != 2) f.fail("vertices are 'x y' pairs separated by commas");
           c.domain.vertices.push_back({f.number(xy[0]), f.number(xy[1])});
         }
       },
       [](const RunConfig& c) {
         std::string s;
         for (const auto& v : c.domain.vertices) s += (s.empty() ? "" : ",") + fmt(v.x) + " " + fmt(v.y);
         return s;
       }},
      {"domain.refinements", [](RunConfig& c, const Field& f, const fs::path&) { c.domain.refinements = static_cast<int>(f.count()); },
       [](const RunConfig& c) { return std::to_string(c.domain.refinements); }},

      {"rheology.e", [](RunConfig& c, const Field& f, const fs::path&) { c.params.e = f.number(); }, [](const RunConfig& c) { return fmt(c.params.e); }},
      {"rheology.P", [](RunConfig& c, const Field& f, const fs::path&) { c.params.P = f.number(); }, [](const RunConfig& c) { return fmt(c.params.P); }},
      {"rheology.integrand",
       [](RunConfig& c, const Field& f, const fs::path&) {
         try {
           c.integrand.base.kind = integrand_kind_from_string(trim(f.value));
         } catch (const ConfigError& e) {
           f.fail(e.what());
         }
       },
       [](const RunConfig& c) { return to_string(c.integrand.base.kind); }},
      {"rheology.s0", [](RunConfig& c, const Field& f, const fs::path&) { c.integrand.base.s0 = f.number(); }, [](const RunConfig& c) { return fmt(c.integrand.base.s0); }},
      {"rheology.eps", [](RunConfig& c, const Field& f, const fs::path&) { c.integrand.eps = f.number(); }, [](const RunConfig& c) { return fmt(c.integrand.eps); }},
      {"rheology.delta", [](RunConfig& c, const Field& f, const fs::path&) { c.integrand.delta = f.number(); }, [](const RunConfig& c) { return fmt(c.integrand.delta); }},

      {"solver.tau", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.tau = f.number(); }, [](const RunConfig& c) { return fmt(c.solver.tau); }},
      {"solver.t_end", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.t_end = f.number(); }, [](const RunConfig& c) { return fmt(c.solver.t_end); }},
      {"solver.newton_tol", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.newton_tol = f.number(); }, [](const RunConfig& c) { return fmt(c.solver.newton_tol); }},
      {"solver.newton_max_iters", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.newton_max_iters = static_cast<int>(f.count()); },
       [](const RunConfig& c) { return std::to_string(c.solver.newton_max_iters); }},
      {"solver.linear_tol", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.linear_tol = f.number(); }, [](const RunConfig& c) { return fmt(c.solver.linear_tol); }},
      {"solver.semi_implicit_ocean", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.semi_implicit_ocean = f.flag(); },
       [](const RunConfig& c) { return std::string(c.solver.semi_implicit_ocean ? "true" : "false"); }},
      {"solver.allow_linear_verification", [](RunConfig& c, const Field& f, const fs::path&) { c.solver.allow_linear_verification = f.flag(); },
       [](const RunConfig& c) { return std::string(c.solver.allow_linear_verification ? "true" : "false"); }},

      {"ocean.enabled", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.enabled = f.flag(); }, [](const RunConfig& c) { return std::string(c.ocean.enabled ? "true" : "false"); }},
      {"ocean.c_drag", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.c_drag = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean.c_drag); }},
      {"ocean.gamma", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.gamma = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean.gamma); }},
      {"ocean.N1", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.N1 = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean.N1); }},
      {"ocean.N2", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.N2 = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean.N2); }},
      {"ocean.theta", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean.theta = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean.theta); }},
      {"ocean.slope",
       [](RunConfig& c, const Field& f, const fs::path&) {
         if (trim(f.value).empty()) c.ocean.slope.reset();
         else c.ocean.slope = f.number();
       },
       [](const RunConfig& c) { return c.ocean.slope ? fmt(*c.ocean.slope) : std::string("default"); }},
      {"ocean.U1", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean_velocity.x = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean_velocity.x); }},
      {"ocean.U2", [](RunConfig& c, const Field& f, const fs::path&) { c.ocean_velocity.y = f.number(); }, [](const RunConfig& c) { return fmt(c.ocean_velocity.y); }},

      {"forcing.kind",
       [](RunConfig& c, const Field& f, const fs::path&) {
         c.forcing.kind = f.choice<F>({{"none", F::none}, {"constant", F::constant}, {"band", F::band}, {"file", F::file}});
       },
       [](const RunConfig& c) {
         static const char* names[] = {"none", "constant", "band", "file"};
         return std::string(names[static_cast<int>(c.forcing.kind)]);
       }},
      {"forcing.f1", [](RunConfig& c, const Field& f, const fs::path&) { c.forcing.value.x = f.number(); }, [](const RunConfig& c) { return fmt(c.forcing.value.x); }},
      {"forcing.f2", [](RunConfig& c, const Field& f, const fs::path&) { c.forcing.value.y = f.number(); }, [](const RunConfig& c) { return fmt(c.forcing.value.y); }},
      {"forcing.half_width", [](RunConfig& c, const Field& f, const fs::path&) { c.forcing.half_width = f.number(); }, [](const RunConfig& c) { return fmt(c.forcing.half_width); }},
      {"forcing.path", [](RunConfig& c, const Field& f, const fs::path& base) { c.forcing.path = trim(f.value).empty() ? fs::path() : base / trim(f.value); },
       [](const RunConfig& c) { return path_digest(c.forcing.path); }},

      {"initial.kind", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.kind = f.choice<I>({{"zero", I::zero}, {"bump", I::bump}, {"file", I::file}}); },
       [](const RunConfig& c) {
         static const char* names[] = {"zero", "bump", "file"};
         return std::string(names[static_cast<int>(c.initial.kind)]);
       }},
      {"initial.x0", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.center.x = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.center.x); }},
      {"initial.y0", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.center.y = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.center.y); }},
      {"initial.radius", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.radius = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.radius); }},
      {"initial.a1", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.amplitude.x = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.amplitude.x); }},
      {"initial.a2", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.amplitude.y = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.amplitude.y); }},
      {"initial.path", [](RunConfig& c, const Field& f, const fs::path& base) { c.initial.path = trim(f.value).empty() ? fs::path() : base / trim(f.value); },
       [](const RunConfig& c) { return path_digest(c.initial.path); }},
      {"initial.mollify", [](RunConfig& c, const Field& f, const fs::path&) { c.initial.mollify = f.number(); }, [](const RunConfig& c) { return fmt(c.initial.mollify); }},

      {"output.dir", [](RunConfig& c, const Field& f, const fs::path& base) { c.output_dir = base / trim(f.value); }, nullptr},
      {"output.snapshot_every", [](RunConfig& c, const Field& f, const fs::path&) { c.snapshot_every = f.count(); }, [](const RunConfig& c) { return std::to_string(c.snapshot_every); }},
      {"output.seed", [](RunConfig& c, const Field& f, const fs::path&) { c.seed = f.count(); }, [](const RunConfig& c) { return std::to_string(c.seed); }},

      {"sweep.problem", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.problem = f.choice<S>({{"config", S::config}, {"shear", S::shear}, {"zero", S::zero}}); },
       [](const RunConfig& c) {
         static const char* names[] = {"config", "shear", "zero"};
         return std::string(names[static_cast<int>(c.sweep.problem)]);
       }},
      {"sweep.zetas", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.zetas = f.numbers(); }, [](const RunConfig& c) { return fmt_list(c.sweep.zetas); }},
      {"sweep.delta_fractions", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.delta_fractions = f.numbers(); },
       [](const RunConfig& c) { return fmt_list(c.sweep.delta_fractions); }},
      {"sweep.deltas", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.deltas = f.numbers(); }, [](const RunConfig& c) { return fmt_list(c.sweep.deltas); }},
      {"sweep.epsilons", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.epsilons = f.numbers(); }, [](const RunConfig& c) { return fmt_list(c.sweep.epsilons); }},
      {"sweep.meshes", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.meshes = f.counts(); }, [](const RunConfig& c) { return fmt_list(c.sweep.meshes); }},
      {"sweep.taus", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.taus = f.numbers(); }, [](const RunConfig& c) { return fmt_list(c.sweep.taus); }},
      {"sweep.ratio_limit", [](RunConfig& c, const Field& f, const fs::path&) { c.sweep.ratio_limit = f.number(); }, [](const RunConfig& c) { return fmt(c.sweep.ratio_limit); }},

      {"boundary.u1", [](RunConfig& c, const Field& f, const fs::path&) { c.boundary.value.x = f.number(); }, [](const RunConfig& c) { return fmt(c.boundary.value.x); }},
      {"boundary.u2", [](RunConfig& c, const Field& f, const fs::path&) { c.boundary.value.y = f.number(); }, [](const RunConfig& c) { return fmt(c.boundary.value.y); }},
      {"boundary.gradient",
       [](RunConfig& c, const Field& f, const fs::path&) {
         const auto g = f.numbers();
         if (g.size() != 4) f.fail("gradient takes four numbers d1u1, d2u1, d1u2, d2u2");
         std::copy(g.begin(), g.end(), c.boundary.gradient.begin());
       },
       [](const RunConfig& c) { return fmt_list(std::vector<double>(c.boundary.gradient.begin(), c.boundary.gradient.end())); }},
      {"boundary.deltas", [](RunConfig& c, const Field& f, const fs::path&) { c.boundary.deltas = f.numbers(); }, [](const RunConfig& c) { return fmt_list(c.boundary.deltas); }},
      {"boundary.cells_per_delta", [](RunConfig& c, const Field& f, const fs::path&) { c.boundary.cells_per_delta = f.number(); },
       [](const RunConfig& c) { return fmt(c.boundary.cells_per_delta); }},

      {"diagnose.competitor",
       [](RunConfig& c, const Field& f, const fs::path&) { c.diagnose.competitor = f.choice<C>({{"self", C::self}, {"zero", C::zero}, {"random", C::random}}); },
       [](const RunConfig& c) {
         static const char* names[] = {"self", "zero", "random"};
         return std::string(names[static_cast<int>(c.diagnose.competitor)]);
       }},
      {"diagnose.energy",
       [](RunConfig& c, const Field& f, const fs::path&) {
         c.diagnose.energy = f.choice<EviEnergy>({{"regularized", EviEnergy::regularized}, {"relaxed", EviEnergy::relaxed}});
       },
       [](const RunConfig& c) { return std::string(c.diagnose.energy == EviEnergy::regularized ? "regularized" : "relaxed"); }},
      {"diagnose.every", [](RunConfig& c, const Field& f, const fs::path&) { c.diagnose.every = f.count(); }, [](const RunConfig& c) { return std::to_string(c.diagnose.every); }},
      {"diagnose.pairing_samples", [](RunConfig& c, const Field& f, const fs::path&) { c.diagnose.pairing_samples = f.count(); },
       [](const RunConfig& c) { return std::to_string(c.diagnose.pairing_samples); }},
  };
  return table;
}

void require_positive(double x, const std::string& what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(what + " must be positive");
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " needs a path");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw IoError(what + " not found: " + p.string());
}

}  // namespace

ParamSchedule SweepSpec::schedule() const {
  ParamSchedule s;
  s.zetas = zetas;
  for (double z : zetas) {
    std::vector<double> d;
    if (!deltas.empty()) d = deltas;
    else
      for (double f : delta_fractions) d.push_back(f * z * z);
    s.deltas.push_back(std::move(d));
  }
  s.epsilons = epsilons;
  s.mesh_ladder = meshes;
  s.tau_ladder = taus;
  return s;
}

void RunConfig::validate() const {
  if (domain.kind == DomainSpec::Kind::rectangle) {
    require_positive(domain.Lx, "domain.Lx");
    require_positive(domain.Ly, "domain.Ly");
    if (domain.nx < 1 || domain.ny < 1 || domain.nx * domain.ny > 4'000'000)
      throw ConfigError("domain.nx and domain.ny must be in [1, 2000]");
  } else {
    if (domain.vertices.size() < 3) throw ConfigError("domain.vertices needs at least three vertices");
    if (domain.refinements < 0 || domain.refinements > 10) throw ConfigError("domain.refinements must be in [0, 10]");
  }
  params.validate();
  if (integrand.base.P != params.P) throw ConfigError("integrand pressure differs from rheology.P");
  integrand.validate();
  solver.validate();
  require_admissible(integrand, solver);
  ocean.validate();
  if (forcing.kind == ForcingSpec::Kind::band && !(forcing.half_width > 0.0 && forcing.half_width <= 0.5))
    throw ConfigError("forcing.half_width must be in (0, 0.5]");
  if (forcing.kind == ForcingSpec::Kind::file) require_file(forcing.path, "forcing file");
  if (initial.kind == InitialSpec::Kind::bump) require_positive(initial.radius, "initial.radius");
  if (initial.kind == InitialSpec::Kind::file) require_file(initial.path, "initial datum file");
  if (!(initial.mollify >= 0.0) || !std::isfinite(initial.mollify)) throw ConfigError("initial.mollify must be >= 0");
  if (snapshot_every < 1) throw ConfigError("output.snapshot_every must be >= 1");

  if (sweep.zetas.empty() || sweep.epsilons.empty() || sweep.meshes.empty() || sweep.taus.empty() ||
      (sweep.deltas.empty() && sweep.delta_fractions.empty()))
    throw ConfigError("sweep ladders must not be empty");
  for (double x : sweep.epsilons) require_positive(x, "sweep.epsilons entry");
  for (double x : sweep.taus) require_positive(x, "sweep.taus entry");
  for (double x : sweep.delta_fractions) require_positive(x, "sweep.delta_fractions entry");
  for (auto n : sweep.meshes)
    if (n < 2) throw ConfigError("sweep.meshes entries must be >= 2");
  if (!(sweep.ratio_limit > 1.0)) throw ConfigError("sweep.ratio_limit must exceed 1");

  if (boundary.deltas.empty()) throw ConfigError("boundary.deltas must not be empty");
  for (double x : boundary.deltas) require_positive(x, "boundary.deltas entry");
  require_positive(boundary.cells_per_delta, "boundary.cells_per_delta");
  if (diagnose.every < 1) throw ConfigError("diagnose.every must be >= 1");
  if (diagnose.pairing_samples < 1) throw ConfigError("diagnose.pairing_samples must be >= 1");
}

std::string RunConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& e : entries())
    if (e.get) lines.push_back(std::string(e.key) + "=" + e.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string RunConfig::hash() const { return sha256_hex(canonical()); }

std::string RunConfig::to_ini() const {
  std::string out, section;
  for (const auto& e : entries()) {
    const std::string key = e.key;
    const auto dot_at = key.find('.');
    const std::string sec = key.substr(0, dot_at), name = key.substr(dot_at + 1);
    std::string value;
    if (key == "output.dir") value = fs::absolute(output_dir).generic_string();
    else if (key == "forcing.path") value = forcing.path.empty() ? "" : fs::absolute(forcing.path).generic_string();
    else if (key == "initial.path") value = initial.path.empty() ? "" : fs::absolute(initial.path).generic_string();
    else if (key == "ocean.slope") value = ocean.slope ? fmt(*ocean.slope) : "";
    else if (key == "domain.vertices" && domain.vertices.empty()) continue;
    else value = e.get(*this);
    if (sec != section) {
      out += (out.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

RunConfig parse_config(std::istream& in, const fs::path& base_dir, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  const auto& table = entries();
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty())
      throw ConfigError(source + ": key '" + section + "' outside a section");
    for (const auto& [key, node] : keys) {
      const std::string full = section + "." + key;
      const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return full == e.key; });
      if (it == table.end()) throw ConfigError(source + ": unknown key [" + section + "] " + key);
      it->set(cfg, Field{full, node.data()}, base_dir);
    }
  }
  cfg.integrand.base.P = cfg.params.P;
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.parent_path().empty() ? fs::path(".") : path.parent_path(), path.string());
}

MeshPtr build_mesh(const RunConfig& cfg) {
  const auto& d = cfg.domain;
  if (d.kind == DomainSpec::Kind::rectangle) return build_rect_mesh(d.nx, d.ny, d.Lx, d.Ly, d.pattern);
  return build_polygon_mesh(d.vertices, d.refinements);
}

VectorField build_initial(const RunConfig& cfg, const MeshPtr& mesh) {
  VectorField u(mesh);
  const auto& s = cfg.initial;
  switch (s.kind) {
    case InitialSpec::Kind::zero:
      break;
    case InitialSpec::Kind::bump:
      for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
        const Vec2 x = mesh->nodes()[i] - s.center;
        const double q = 1.0 - dot(x, x) / (s.radius * s.radius);
        if (q > 0.0 && !mesh->is_boundary_node(i)) u.values[i] = (q * q) * s.amplitude;
      }
      break;
    case InitialSpec::Kind::file: {
      std::ifstream in(s.path);
      if (!in) throw IoError("cannot open initial datum " + s.path.string());
      u = read_state_csv(in, mesh, s.path.string());
      break;
    }
  }
  if (s.mollify > 0.0) u = mollified_initial(u, s.mollify, cfg.params).u;
  return u;
}

Forces build_forces(const RunConfig& cfg, const MeshPtr& mesh) {
  Forces f{TimeSeriesField::constant(VectorField(mesh)), OceanDrag(cfg.ocean), std::nullopt};
  const auto& s = cfg.forcing;
  double ylo = mesh->nodes().front().y, yhi = ylo;
  for (const auto& p : mesh->nodes()) {
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  switch (s.kind) {
    case ForcingSpec::Kind::none:
      break;
    case ForcingSpec::Kind::constant:
      f.f = TimeSeriesField::constant(VectorField(mesh, std::vector<Vec2>(mesh->num_nodes(), s.value)));
      break;
    case ForcingSpec::Kind::band: {
      const double mid = 0.5 * (ylo + yhi), half = s.half_width * (yhi - ylo);
      f.f = TimeSeriesField::constant(VectorField::from_function(
          mesh, [&](Vec2 x) { return std::abs(x.y - mid) < half ? s.value : Vec2{0, 0}; }));
      break;
    }
    case ForcingSpec::Kind::file: {
      auto data = load_forcing(s.path.string(), mesh);
      f.f = std::move(data.f);
      f.U_ocean = std::move(data.U_ocean);
      break;
    }
  }
  if (cfg.ocean.enabled && !f.U_ocean)
    f.U_ocean = TimeSeriesField::constant(VectorField(mesh, std::vector<Vec2>(mesh->num_nodes(), cfg.ocean_velocity)));
  return f;
}

SweepProblem build_sweep_problem(const RunConfig& cfg) {
  switch (cfg.sweep.problem) {
    case SweepSpec::Problem::shear:
      return shear_benchmark();
    case SweepSpec::Problem::zero:
      return zero_problem();
    case SweepSpec::Problem::config:
      break;
  }
  if (cfg.domain.kind != DomainSpec::Kind::rectangle) throw ConfigError("sweep.problem = config needs a rectangular domain");
  SweepProblem p;
  p.Lx = cfg.domain.Lx;
  p.Ly = cfg.domain.Ly;
  p.pattern = cfg.domain.pattern;
  p.params = cfg.params;
  p.spec = cfg.integrand.base;
  RunConfig raw = cfg;
  raw.initial.mollify = 0.0;  // the sweep mollifies per zeta
  p.initial = [raw](const MeshPtr& m) { return build_initial(raw, m); };
  p.forces = [raw](const MeshPtr& m) { return build_forces(raw, m); };
  p.solver = cfg.solver;
  return p;
}

}  // namespace hibler
