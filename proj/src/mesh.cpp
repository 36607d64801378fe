#include "hibler/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>
#include <utility>

#include "hibler/errors.hpp"

namespace hibler {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross(b - a, c - a); }

double polygon_signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) s += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * s;
}

double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(x - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(x - (a + d * t));
}

double outline_distance(const std::vector<Vec2>& outline, const Vec2& x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < outline.size(); ++i)
    best = std::min(best, segment_distance(x, outline[i], outline[(i + 1) % outline.size()]));
  return best;
}

bool outline_convex(const std::vector<Vec2>& poly) {
  const double orient = polygon_signed_area(poly) >= 0.0 ? 1.0 : -1.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n]);
    if (orient * c < -1e-14) return false;
  }
  return true;
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

std::shared_ptr<const Mesh2D> Mesh2D::from_triangles(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
                                                     std::vector<Vec2> outline) {
  if (nodes.empty() || triangles.empty()) throw GeometryError("mesh needs at least one triangle");
  if (outline.size() < 3) throw GeometryError("domain outline needs at least three vertices");

  auto m = std::shared_ptr<Mesh2D>(new Mesh2D());
  m->convex_ = outline_convex(outline);
  if (polygon_signed_area(outline) < 0.0) std::reverse(outline.begin(), outline.end());

  const double scale = [&] {
    double s = 0.0;
    for (const auto& p : nodes) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return std::max(s, 1.0);
  }();

  m->areas_.reserve(triangles.size());
  m->hat_grads_.reserve(triangles.size());
  m->lumped_.assign(nodes.size(), 0.0);
  for (auto& t : triangles) {
    for (std::size_t k : t)
      if (k >= nodes.size()) throw GeometryError("triangle references a missing node");
    double a = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    if (a < 0.0) {
      std::swap(t[1], t[2]);
      a = -a;
    }
    if (!(a > 1e-14 * scale * scale)) throw GeometryError("degenerate triangle");
    m->areas_.push_back(a);
    std::array<Vec2, 3> g;
    for (int k = 0; k < 3; ++k) {
      const Vec2& p = nodes[t[(k + 1) % 3]];
      const Vec2& q = nodes[t[(k + 2) % 3]];
      // gradient of the hat function opposite edge pq
      g[k] = Vec2{p.y - q.y, q.x - p.x} / (2.0 * a);
    }
    m->hat_grads_.push_back(g);
    for (std::size_t k : t) m->lumped_[k] += a / 3.0;
    for (int k = 0; k < 3; ++k) m->h_ = std::max(m->h_, norm(nodes[t[(k + 1) % 3]] - nodes[t[k]]));
  }

  std::unordered_map<std::uint64_t, std::pair<int, std::size_t>> edge_count;
  edge_count.reserve(triangles.size() * 3);
  for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
    const auto& t = triangles[ti];
    for (int k = 0; k < 3; ++k) {
      auto& slot = edge_count[edge_key(t[k], t[(k + 1) % 3])];
      ++slot.first;
      slot.second = ti;
    }
  }
  m->boundary_node_.assign(nodes.size(), 0);
  for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
    const auto& t = triangles[ti];
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = t[k], b = t[(k + 1) % 3];
      const int count = edge_count[edge_key(a, b)].first;
      if (count > 2) throw GeometryError("non-manifold edge in triangulation");
      if (count != 1) continue;
      const Vec2 d = nodes[b] - nodes[a];
      const double len = norm(d);
      m->boundary_edges_.push_back(BoundaryEdge{a, b, Vec2{d.y, -d.x} / len, len, ti});
      m->boundary_node_[a] = m->boundary_node_[b] = 1;
    }
  }

  m->node_distance_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    m->node_distance_[i] = m->boundary_node_[i] ? 0.0 : outline_distance(outline, nodes[i]);

  m->nodes_ = std::move(nodes);
  m->triangles_ = std::move(triangles);
  m->outline_ = std::move(outline);
  return m;
}

Vec2 Mesh2D::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  return (nodes_[tri[0]] + nodes_[tri[1]] + nodes_[tri[2]]) / 3.0;
}

double Mesh2D::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

double Mesh2D::max_boundary_distance() const {
  return node_distance_.empty() ? 0.0 : *std::max_element(node_distance_.begin(), node_distance_.end());
}

MeshPtr build_rect_mesh(std::size_t nx, std::size_t ny, double Lx, double Ly, MeshPattern pattern) {
  if (nx < 1 || ny < 1) throw GeometryError("rectangle mesh needs nx, ny >= 1");
  if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly))
    throw GeometryError("rectangle side lengths must be positive");
  if (nx > 4096 || ny > 4096) throw GeometryError("rectangle mesh too large");

  std::vector<Vec2> nodes;
  const auto grid = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
      nodes.push_back(Vec2{Lx * static_cast<double>(i) / nx, Ly * static_cast<double>(j) / ny});

  std::vector<Triangle> tris;
  const std::size_t centre_base = nodes.size();
  if (pattern == MeshPattern::crossed) {
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i)
        nodes.push_back(Vec2{Lx * (i + 0.5) / nx, Ly * (j + 0.5) / ny});
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t p00 = grid(i, j), p10 = grid(i + 1, j), p11 = grid(i + 1, j + 1), p01 = grid(i, j + 1);
      if (pattern == MeshPattern::diagonal) {
        tris.push_back({p00, p10, p11});
        tris.push_back({p00, p11, p01});
      } else {
        const std::size_t c = centre_base + j * nx + i;
        tris.push_back({p00, p10, c});
        tris.push_back({p10, p11, c});
        tris.push_back({p11, p01, c});
        tris.push_back({p01, p00, c});
      }
    }
  }
  std::vector<Vec2> outline{{0, 0}, {Lx, 0}, {Lx, Ly}, {0, Ly}};
  return Mesh2D::from_triangles(std::move(nodes), std::move(tris), std::move(outline));
}

namespace {

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 && cross(a - c, p - c) >= 0.0;
}

std::vector<Triangle> ear_clip(const std::vector<Vec2>& poly) {
  std::vector<std::size_t> ring(poly.size());
  for (std::size_t i = 0; i < ring.size(); ++i) ring[i] = i;
  std::vector<Triangle> out;
  std::size_t guard = 0;
  while (ring.size() > 3) {
    bool clipped = false;
    const std::size_t n = ring.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t ia = ring[(k + n - 1) % n], ib = ring[k], ic = ring[(k + 1) % n];
      const Vec2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (cross(b - a, c - b) <= 0.0) continue;
      bool blocked = false;
      for (std::size_t r : ring) {
        if (r == ia || r == ib || r == ic) continue;
        if (point_in_triangle(poly[r], a, b, c)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      out.push_back({ia, ib, ic});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > poly.size() * poly.size()) throw GeometryError("polygon is not simple");
  }
  out.push_back({ring[0], ring[1], ring[2]});
  return out;
}

}  // namespace

MeshPtr build_polygon_mesh(const std::vector<Vec2>& vertices, int refinements) {
  if (vertices.size() < 3) throw GeometryError("polygon needs at least three vertices");
  if (refinements < 0 || refinements > 10) throw GeometryError("refinement count out of range [0, 10]");
  std::vector<Vec2> poly = vertices;
  if (polygon_signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  if (std::abs(polygon_signed_area(poly)) <= 0.0) throw GeometryError("polygon has zero area");

  std::vector<Vec2> nodes = poly;
  std::vector<Triangle> tris = ear_clip(poly);
  for (int level = 0; level < refinements; ++level) {
    std::unordered_map<std::uint64_t, std::size_t> mid;
    const auto midpoint = [&](std::size_t a, std::size_t b) {
      const auto key = edge_key(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      nodes.push_back((nodes[a] + nodes[b]) * 0.5);
      mid.emplace(key, nodes.size() - 1);
      return nodes.size() - 1;
    };
    std::vector<Triangle> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const std::size_t ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  return Mesh2D::from_triangles(std::move(nodes), std::move(tris), poly);
}

bool point_in_domain(const Mesh2D& mesh, const Vec2& x, double tol) {
  const auto& poly = mesh.outline();
  if (outline_distance(poly, x) <= tol) return true;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 &a = poly[i], &b = poly[j];
    if ((a.y > x.y) != (b.y > x.y)) {
      const double xc = a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x.x < xc) inside = !inside;
    }
  }
  return inside;
}

double boundary_distance(const Mesh2D& mesh, const Vec2& x) {
  if (!point_in_domain(mesh, x)) throw GeometryError("point lies outside the domain");
  return outline_distance(mesh.outline(), x);
}

CollarCutoff eta_delta(const Mesh2D& mesh, double delta, bool compact) {
  if (!(delta > 0.0)) throw ConfigError("collar width must be positive");
  if (delta >= mesh.max_boundary_distance()) throw GeometryError("collar width too large: inner region is empty");
  CollarCutoff c;
  c.delta = delta;
  c.compact_support = compact;
  c.nodal_values.resize(mesh.num_nodes());
  const auto& dist = mesh.node_boundary_distance();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double r = dist[i] / delta;
    c.nodal_values[i] = compact ? std::clamp(2.0 * r - 1.0, 0.0, 1.0) : std::min(r, 1.0);
  }
  return c;
}

std::vector<double> element_gradient_norms(const Mesh2D& mesh, std::span<const double> nodal) {
  if (nodal.size() != mesh.num_nodes()) throw GeometryError("nodal field size does not match mesh");
  std::vector<double> out(mesh.num_triangles());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.hat_gradients(t);
    Vec2 grad{0, 0};
    for (int k = 0; k < 3; ++k) grad = grad + g[k] * nodal[tri[k]];
    out[t] = norm(grad);
  }
  return out;
}

double mollifier_kernel(double r, double radius) {
  if (r >= radius) return 0.0;
  const double s = 1.0 - (r / radius) * (r / radius);
  return s * s * s;
}

namespace {

// Uniform bucket grid for fixed-radius neighbour queries.
class NeighbourGrid {
 public:
  NeighbourGrid(const std::vector<Vec2>& pts, double cell) : pts_(pts), cell_(cell) {
    lo_ = hi_ = pts.front();
    for (const auto& p : pts) {
      lo_.x = std::min(lo_.x, p.x);
      lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x);
      hi_.y = std::max(hi_.y, p.y);
    }
    nx_ = static_cast<long>((hi_.x - lo_.x) / cell_) + 1;
    ny_ = static_cast<long>((hi_.y - lo_.y) / cell_) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t i = 0; i < pts.size(); ++i) buckets_[index(pts[i])].push_back(i);
  }

  template <class Fn>
  void visit(const Vec2& x, Fn&& fn) const {
    const long cx = coord(x.x, lo_.x, nx_), cy = coord(x.y, lo_.y, ny_);
    for (long j = std::max(0L, cy - 1); j <= std::min(ny_ - 1, cy + 1); ++j)
      for (long i = std::max(0L, cx - 1); i <= std::min(nx_ - 1, cx + 1); ++i)
        for (std::size_t k : buckets_[static_cast<std::size_t>(j * nx_ + i)]) fn(k);
  }

 private:
  long coord(double v, double lo, long n) const {
    return std::clamp(static_cast<long>((v - lo) / cell_), 0L, n - 1);
  }
  std::size_t index(const Vec2& p) const {
    return static_cast<std::size_t>(coord(p.y, lo_.y, ny_) * nx_ + coord(p.x, lo_.x, nx_));
  }

  const std::vector<Vec2>& pts_;
  double cell_;
  Vec2 lo_{}, hi_{};
  long nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

template <class T>
std::vector<T> mollify_impl(const Mesh2D& mesh, std::span<const T> field, double radius, bool preserve_support,
                            auto is_nonzero) {
  if (field.size() != mesh.num_nodes()) throw GeometryError("nodal field size does not match mesh");
  if (!(radius > 0.0)) throw ConfigError("mollifier radius must be positive");
  if (preserve_support) {
    const auto& dist = mesh.node_boundary_distance();
    for (std::size_t i = 0; i < field.size(); ++i)
      if (is_nonzero(field[i]) && !(dist[i] > radius))
        throw GeometryError("field support is closer than the mollifier radius to the boundary");
  }
  const auto& pts = mesh.nodes();
  const NeighbourGrid grid(pts, radius);
  std::vector<T> out(field.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    T acc{};
    double mass = 0.0;
    grid.visit(pts[i], [&](std::size_t j) {
      const double w = mesh.lumped_weight(j) * mollifier_kernel(norm(pts[j] - pts[i]), radius);
      if (w == 0.0) return;
      acc = acc + field[j] * w;
      mass += w;
    });
    out[i] = acc / mass;
  }
  return out;
}

}  // namespace

std::vector<double> mollify_nodal_field(const Mesh2D& mesh, std::span<const double> field, double radius,
                                        bool preserve_support) {
  return mollify_impl<double>(mesh, field, radius, preserve_support, [](double v) { return v != 0.0; });
}

std::vector<Vec2> mollify_nodal_field(const Mesh2D& mesh, std::span<const Vec2> field, double radius,
                                      bool preserve_support) {
  return mollify_impl<Vec2>(mesh, field, radius, preserve_support,
                            [](const Vec2& v) { return v.x != 0.0 || v.y != 0.0; });
}

PaddedMesh pad_rect_mesh(std::size_t nx, std::size_t ny, double Lx, double Ly) {
  if (nx < 1 || ny < 1) throw GeometryError("rectangle mesh needs nx, ny >= 1");
  const double hx = Lx / nx, hy = Ly / ny;
  auto base = build_rect_mesh(nx + 2, ny + 2, Lx + 2 * hx, Ly + 2 * hy);
  std::vector<Vec2> nodes = base->nodes();
  for (auto& p : nodes) p = p - Vec2{hx, hy};
  std::vector<Vec2> outline = base->outline();
  for (auto& p : outline) p = p - Vec2{hx, hy};
  PaddedMesh out;
  out.outer = Mesh2D::from_triangles(std::move(nodes), base->triangles(), std::move(outline));
  out.inner_to_outer.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i) out.inner_to_outer.push_back((j + 1) * (nx + 3) + (i + 1));
  return out;
}

void write_mesh_listing(std::ostream& os, const Mesh2D& mesh) {
  const auto old = os.precision(17);
  os << "# nodes " << mesh.num_nodes() << '\n';
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    os << i << ' ' << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y << ' ' << (mesh.is_boundary_node(i) ? 1 : 0)
       << '\n';
  os << "# triangles " << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    os << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  os << "# boundary_edges " << mesh.boundary_edges().size() << '\n';
  for (const auto& e : mesh.boundary_edges())
    os << e.a << ' ' << e.b << ' ' << e.normal.x << ' ' << e.normal.y << ' ' << e.length << '\n';
  os.precision(old);
}

}  // namespace hibler
