#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "hibler/cli_io.hpp"
#include "hibler/errors.hpp"
#include "json.hpp"

namespace hibler {

namespace fs = std::filesystem;

namespace {

std::string hex(const unsigned char* p, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (unsigned i = 0; i < n; ++i) {
    s[2 * i] = digits[p[i] >> 4];
    s[2 * i + 1] = digits[p[i] & 15];
  }
  return s;
}

struct Digest {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) throw IoError("sha256 unavailable");
  }
  ~Digest() { EVP_MD_CTX_free(ctx); }
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx, p, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx, md, &n);
    return hex(md, n);
  }
};

// %.17g: round-trips and does not depend on the stream state
std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& tok, const std::string& source, std::size_t line) {
  char* end = nullptr;
  const double x = std::strtod(tok.c_str(), &end);
  if (tok.empty() || *end != '\0') throw IoError(source + ":" + std::to_string(line) + ": bad number '" + tok + "'");
  return x;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.finish();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Digest d;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) d.update(buf, static_cast<std::size_t>(in.gcount()));
  return d.finish();
}

RunDirLock::RunDirLock(const fs::path& dir) : file_(dir / ".lock") {
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw IoError("run directory " + dir.string() + " is locked by another process (remove " + file_.string() +
                    " if it is stale)");
    throw IoError("cannot create lock " + file_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunDirLock::~RunDirLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

void write_trajectory_header(std::ostream& os) {
  os << "step,t,energy,increment,newton_iters,newton_residual,max_stress\n";
}

void write_trajectory_row(std::ostream& os, const StepDiagnostics& d) {
  os << d.step << ',' << num(d.t) << ',' << num(d.energy) << ',' << num(d.increment) << ',' << d.newton_iters << ','
     << num(d.newton_residual) << ',' << num(d.max_stress) << '\n';
}

void write_monitors_csv(std::ostream& os, const Monitors& m) {
  os << "monitor,value\n";
  os << "sup_l2," << num(m.sup_l2) << '\n';
  os << "tv_integral," << num(m.tv_integral) << '\n';
  os << "viscous_h1," << num(m.viscous_h1) << '\n';
  os << "rate_dual," << num(m.rate_dual) << '\n';
  os << "rate_l2," << num(m.rate_l2) << '\n';
  os << "max_stress," << num(m.max_stress) << '\n';
}

void write_vtk_snapshot(std::ostream& os, const VectorField& u, const RegularizedIntegrand& reg,
                        const HiblerParams& params, const std::string& title) {
  const Mesh2D& m = *u.mesh;
  const auto tu = hibler_def(u, params);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << m.num_nodes() << " double\n";
  for (const auto& p : m.nodes()) os << num(p.x) << ' ' << num(p.y) << " 0\n";
  os << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& t : m.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << m.num_triangles() << '\n';
  for (std::size_t t = 0; t < m.num_triangles(); ++t) os << "5\n";
  os << "POINT_DATA " << m.num_nodes() << "\nVECTORS velocity double\n";
  for (const auto& v : u.values) os << num(v.x) << ' ' << num(v.y) << " 0\n";
  std::vector<SymMat2> stress(tu.size());
  for (std::size_t t = 0; t < tu.size(); ++t) stress[t] = grad_f_eps(reg, tu.values[t]);
  os << "CELL_DATA " << m.num_triangles() << "\nSCALARS strain_norm double 1\nLOOKUP_TABLE default\n";
  for (const auto& z : tu.values) os << num(z.norm()) << '\n';
  os << "SCALARS stress_norm double 1\nLOOKUP_TABLE default\n";
  for (const auto& s : stress) os << num(s.norm()) << '\n';
  os << "TENSORS stress double\n";
  for (const auto& s : stress)
    os << num(s.a11) << ' ' << num(s.a12) << " 0\n" << num(s.a12) << ' ' << num(s.a22) << " 0\n0 0 0\n";
}

void write_state_csv(std::ostream& os, const VectorField& u) {
  os << "node,x,y,u1,u2\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec2 p = u.mesh->nodes()[i];
    os << i << ',' << num(p.x) << ',' << num(p.y) << ',' << num(u.values[i].x) << ',' << num(u.values[i].y) << '\n';
  }
}

VectorField read_state_csv(std::istream& in, const MeshPtr& mesh, const std::string& source) {
  VectorField u(mesh);
  std::vector<char> seen(mesh->num_nodes(), 0);
  std::string line;
  std::size_t lineno = 0;
  int c_node = -1, c_u1 = -1, c_u2 = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    if (c_node < 0) {
      for (std::size_t k = 0; k < tok.size(); ++k) {
        if (tok[k] == "node") c_node = static_cast<int>(k);
        if (tok[k] == "u1") c_u1 = static_cast<int>(k);
        if (tok[k] == "u2") c_u2 = static_cast<int>(k);
      }
      if (c_node < 0 || c_u1 < 0 || c_u2 < 0) throw IoError(source + ":1: header needs node, u1 and u2 columns");
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({c_node, c_u1, c_u2}));
    if (tok.size() <= need) throw IoError(source + ":" + std::to_string(lineno) + ": missing columns");
    const auto node = static_cast<std::size_t>(parse_double(tok[c_node], source, lineno));
    if (node >= mesh->num_nodes()) throw IoError(source + ":" + std::to_string(lineno) + ": node index out of range");
    u.values[node] = {parse_double(tok[c_u1], source, lineno), parse_double(tok[c_u2], source, lineno)};
    seen[node] = 1;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw IoError(source + ": no value for node " + std::to_string(i));
  return u;
}

const char* code_version() {
#ifdef HIBLER_VERSION
  return HIBLER_VERSION;
#else
  return "unknown";
#endif
}

void write_manifest(const fs::path& dir, const std::string& kind, const std::string& config_hash,
                    const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version();
  nlohmann::ordered_json sums = nlohmann::ordered_json::object();
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) sums[f] = sha256_file(dir / f);
  j["files"] = sums;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for manifest in " + dir.string());
}

void verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("unreadable manifest in " + dir.string() + ": " + e.what());
  }
  if (!j.contains("files") || !j["files"].is_object()) throw IoError("manifest in " + dir.string() + " lists no files");
  for (const auto& [name, sum] : j["files"].items()) {
    std::error_code ec;
    if (!fs::is_regular_file(dir / name, ec)) throw IoError("manifest file missing: " + (dir / name).string());
    if (sha256_file(dir / name) != sum.get<std::string>()) throw IoError("checksum mismatch: " + (dir / name).string());
  }
}

}  // namespace hibler
