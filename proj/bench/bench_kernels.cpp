// Parallel kernels against their serial twins on a rectangle mesh.
// usage: bench_kernels [cells per side] [repetitions]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "hibler/discrete_operators.hpp"
#include "hibler/mesh.hpp"

using namespace hibler;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  f();  // warm up
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void row(const char* name, double par, double ser, double diff) {
  std::printf("%-18s %12.3e %12.3e %8.2f %12.3e\n", name, ser, par, ser / par, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 256;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  if (n < 2 || reps < 1) {
    std::fprintf(stderr, "usage: bench_kernels [cells per side >= 2] [repetitions >= 1]\n");
    return 2;
  }
  const FeSpace space(build_rect_mesh(n, n, 1.0, 1.0), HiblerParams{});
  const auto& ops = space.element_operators();
  const std::size_t ne = ops.count, nn = space.mesh()->num_nodes(), nd = space.num_dofs();

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto random_vec = [&](std::size_t k) {
    std::vector<double> v(k);
    for (auto& x : v) x = U(rng);
    return v;
  };
  std::vector<Vec2> u(nn);
  for (auto& p : u) p = {U(rng), U(rng)};
  const auto x = random_vec(nd), y0 = random_vec(nd), coeff = random_vec(3 * ne), hess = random_vec(9 * ne);
  const auto ev = random_vec(36 * ne);
  const CsrMatrix& A = space.stiffness();

  std::printf("mesh %zux%zu: %zu elements, %zu dofs, %d threads, best of %d\n", n, n, ne, nd, omp_get_max_threads(), reps);
  std::printf("%-18s %12s %12s %8s %12s\n", "kernel", "serial [s]", "openmp [s]", "speedup", "max |diff|");

  {
    double sp = 0, ss = 0;
    const double tp = seconds([&] { sp = kernels::dot(x, y0); }, reps);
    const double ts = seconds([&] { ss = reference::dot(x, y0); }, reps);
    row("dot", tp, ts, std::abs(sp - ss));
  }
  {
    double sp = 0, ss = 0;
    const double tp = seconds([&] { sp = kernels::sum(x); }, reps);
    const double ts = seconds([&] { ss = reference::sum(x); }, reps);
    row("sum", tp, ts, std::abs(sp - ss));
  }
  {
    auto yp = y0, ys = y0;
    const double tp = seconds([&] { kernels::axpy(1e-3, x, yp); }, reps);
    const double ts = seconds([&] { reference::axpy(1e-3, x, ys); }, reps);
    row("axpy", tp, ts, max_diff(yp, ys));
  }
  {
    std::vector<double> yp(nd), ys(nd);
    const double tp = seconds([&] { kernels::csr_matvec(A, x, yp); }, reps);
    const double ts = seconds([&] { reference::csr_matvec(A, x, ys); }, reps);
    row("csr_matvec", tp, ts, max_diff(yp, ys));
  }
  {
    std::vector<SymMat2> zp(ne), zs(ne);
    const double tp = seconds([&] { kernels::element_strains(ops, u, zp); }, reps);
    const double ts = seconds([&] { reference::element_strains(ops, u, zs); }, reps);
    double d = 0.0;
    for (std::size_t e = 0; e < ne; ++e) d = std::max(d, (zp[e] - zs[e]).norm());
    row("element_strains", tp, ts, d);
  }
  {
    std::vector<double> op(6 * ne), os(6 * ne);
    const double tp = seconds([&] { kernels::element_vectors(ops, coeff, op); }, reps);
    const double ts = seconds([&] { reference::element_vectors(ops, coeff, os); }, reps);
    row("element_vectors", tp, ts, max_diff(op, os));
  }
  {
    std::vector<double> op(36 * ne), os(36 * ne);
    const double tp = seconds([&] { kernels::element_matrices(ops, hess, op); }, reps);
    const double ts = seconds([&] { reference::element_matrices(ops, hess, os); }, reps);
    row("element_matrices", tp, ts, max_diff(op, os));
  }
  {
    const auto& map = space.matrix_map();
    std::vector<double> op(map.n_out), os(map.n_out);
    const double tp = seconds([&] { kernels::assemble(map, ev, op); }, reps);
    const double ts = seconds([&] { reference::assemble(map, ev, os); }, reps);
    row("assemble", tp, ts, max_diff(op, os));
  }
  return 0;
}
