#include <algorithm>
#include <cmath>
#include <numbers>

#include <omp.h>

#include "doctest.h"
#include "tumorfront/errors.hpp"
#include "tumorfront/simulation.hpp"

using namespace tumorfront;

namespace {

ModelParams a35() {
  ModelParams p;
  p.a = 0.35;
  return p;
}

Field2D constant_field(std::size_t nx, std::size_t ny, State s, const ModelParams& p) {
  Field2D f;
  f.nx = nx;
  f.ny = ny;
  f.dx = 0.5;
  f.dy = 0.5;
  f.params = p;
  f.frame_speed = 0.1;
  f.u.assign(nx * ny, s.u);
  f.v.assign(nx * ny, s.v);
  f.w.assign(nx * ny, s.w);
  return f;
}

// Smooth Neumann-compatible 1D data on [0, L].
Field2D smooth_1d(std::size_t nx, const ModelParams& p) {
  const double L = 20.0;
  Field2D f = constant_field(nx, 1, {}, p);
  f.dx = L / double(nx - 1);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = f.dx * double(i), cx = std::cos(std::numbers::pi * x / L);
    f.u[i] = 0.5 + 0.3 * cx;
    f.v[i] = 0.4 - 0.2 * cx;
    f.w[i] = 0.05 + 0.02 * std::cos(2 * std::numbers::pi * x / L);
  }
  return f;
}

const FrontProfile& neumann_front(const SimConfig& cfg) {
  static const FrontProfile f = [&] {
    const ModelParams p = a35();
    SolveOptions so;
    so.bc = BoundaryKind::Neumann;
    return solve_front(p, resample(solve_front(p), sim_grid(cfg)), so);
  }();
  return f;
}

}  // namespace

TEST_CASE("planar initial data: noise only on v, positive, and seeded") {
  SimConfig cfg;
  const FrontProfile& f = neumann_front(cfg);
  const Field2D a = init_planar(f, 16, 100.0, 0.0, 1);
  for (std::size_t i = 0; i < a.nx; ++i)
    for (std::size_t j = 1; j < a.ny; ++j) {
      CHECK(a.v[a.idx(i, j)] == a.v[a.idx(i, 0)]);
      CHECK(a.u[a.idx(i, j)] == f.u[i]);
    }
  const Field2D b = init_planar(f, 16, 100.0, 1e-3, 7), c = init_planar(f, 16, 100.0, 1e-3, 7);
  const Field2D d = init_planar(f, 16, 100.0, 1e-3, 8);
  CHECK(b.v == c.v);
  CHECK(b.v != d.v);
  CHECK(b.u == a.u);
  CHECK(b.w == a.w);
  for (std::size_t k = 0; k < b.v.size(); ++k) {
    CHECK(b.v[k] >= a.v[k]);
    CHECK(b.v[k] < a.v[k] + 1e-3);
  }
  CHECK(b.frame_speed == f.c);
  CHECK(b.dy == doctest::Approx(100.0 / 16));
}

TEST_CASE("P2 is an exact fixed point of the step") {
  const ModelParams p = a35();
  const Field2D f = constant_field(32, 8, {1.0, 0.0, 0.0}, p);
  const Field2D g = step(f, 0.01);
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);
  CHECK(g.w == f.w);
  CHECK(g.time == doctest::Approx(0.01));
}

TEST_CASE("a converged Neumann front is stationary in its comoving frame") {
  SimConfig cfg;
  cfg.ny = 1;
  cfg.t_end = 1000.0;
  const FrontProfile& f = neumann_front(cfg);
  const Field2D init = init_planar(f, 1, cfg.Ly, 0.0, 1);
  const RunResult r = run(cfg, init, 0.3);
  double drift = 0.0;
  for (std::size_t i = 0; i < f.grid.n(); ++i)
    drift = std::max({drift, std::abs(r.final_state.u[i] - f.u[i]), std::abs(r.final_state.v[i] - f.v[i]),
                      std::abs(r.final_state.w[i] - f.w[i])});
  CHECK(drift < 1e-3);
  CHECK(r.final_state.time == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("self-convergence under halving dx with dt proportional to dx^2") {
  const ModelParams p = a35();
  const double T = 2.0;
  std::vector<Field2D> out;
  for (std::size_t nx : {41u, 81u, 161u}) {
    Field2D f = smooth_1d(nx, p);
    const double dt = 0.2 * f.dx * f.dx / (1 + p.kappa) / 2;
    const long n = std::lround(T / dt);
    Stepper s(f, T / double(n));
    for (long k = 0; k < n; ++k) s.step(f);
    out.push_back(f);
  }
  auto diff = [&](const Field2D& c, const Field2D& fnr) {
    const std::size_t r = (fnr.nx - 1) / (c.nx - 1);
    double m = 0.0;
    for (std::size_t i = 0; i < c.nx; ++i)
      for (auto pr : {&Field2D::u, &Field2D::v, &Field2D::w})
        m = std::max(m, std::abs((c.*pr)[i] - (fnr.*pr)[i * r]));
    return m;
  };
  const double e1 = diff(out[0], out[1]), e2 = diff(out[1], out[2]);
  MESSAGE("successive differences " << e1 << " " << e2);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.5);
}

TEST_CASE("Fourier mode amplitudes") {
  const std::size_t n = 64;
  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = 2.0 + 0.3 * std::cos(2 * std::numbers::pi * 3.0 * double(j) / n + 0.4);
  CHECK(mode_amplitude(s, 0) == doctest::Approx(2.0));
  CHECK(mode_amplitude(s, 3) == doctest::Approx(0.15));
  CHECK(mode_amplitude(s, 2) < 1e-14);
}

TEST_CASE("interface position interpolates the first upward crossing") {
  const ModelParams p = a35();
  Field2D f = constant_field(5, 2, {0.0, 0.0, 0.0}, p);
  f.dx = 1.0;
  f.xi0 = -2.0;
  const double col0[] = {0.0, 0.1, 0.5, 0.9, 0.4};
  const double col1[] = {0.0, 0.0, 0.0, 0.2, 1.0};
  for (std::size_t i = 0; i < 5; ++i) {
    f.v[f.idx(i, 0)] = col0[i];
    f.v[f.idx(i, 1)] = col1[i];
  }
  const auto pos = interface_position(f, 0.3);
  CHECK(pos[0] == doctest::Approx(-1.0 + 0.5));
  CHECK(pos[1] == doctest::Approx(1.0 + 0.125));
  CHECK(std::isnan(interface_position(f, 2.0)[0]));
}

TEST_CASE("growth rate fit on synthetic exponentials") {
  ModeDiagnostics d;
  d.Ly = 100.0;
  d.modes = {0, 1, 2};
  for (int s = 0; s < 10; ++s) {
    const double t = 10.0 * s;
    d.times.push_back(t);
    d.interface_amplitude.push_back({1.0, 1e-3 * std::exp(0.01 * t), 1e-3 * std::exp(-0.02 * t)});
    d.slice_amplitude.push_back({0.0, 0.0, 0.0});
  }
  const auto g = growth_rates(d, 0.0, 90.0);
  REQUIRE(g.size() == 2);
  CHECK(g[0].k == 1);
  CHECK(g[0].ell == doctest::Approx(2 * std::numbers::pi / 100.0));
  CHECK(g[0].sigma == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(g[0].monotone);
  CHECK(g[1].sigma == doctest::Approx(-0.02).epsilon(1e-10));
  CHECK_FALSE(g[1].monotone);
  CHECK_THROWS_AS(growth_rates(d, 0.0, 35.0), WindowTooShort);
}

TEST_CASE("noise-free 2D run keeps zero transverse amplitudes") {
  SimConfig cfg;
  cfg.ny = 8;
  cfg.Ly = 100.0;
  cfg.t_end = 50.0;
  cfg.diag_interval = 10.0;
  const Field2D init = init_planar(neumann_front(cfg), cfg.ny, cfg.Ly, 0.0, 1);
  const RunResult r = run(cfg, init, 0.3);
  for (const auto& a : r.diagnostics.interface_amplitude)
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k] < 1e-12);
  CHECK(r.diagnostics.times.size() == 6);
}

TEST_CASE("noisy run: positivity and thread-count independence") {
  SimConfig cfg;
  cfg.ny = 16;
  cfg.Ly = 100.0;
  cfg.t_end = 20.0;
  cfg.diag_interval = 5.0;
  const Field2D init = init_planar(neumann_front(cfg), cfg.ny, cfg.Ly, 1e-3, 3);
  omp_set_num_threads(1);
  const RunResult a = run(cfg, init, 0.3);
  omp_set_num_threads(4);
  const RunResult b = run(cfg, init, 0.3);
  CHECK(a.final_state.u == b.final_state.u);
  CHECK(a.final_state.v == b.final_state.v);
  CHECK(a.final_state.w == b.final_state.w);
  CHECK(*std::min_element(a.final_state.v.begin(), a.final_state.v.end()) >= -1e-8);
}

TEST_CASE("blow-up and unstable time steps are reported") {
  const ModelParams p = a35();
  Field2D f = constant_field(8, 4, {0.0, 0.5, 0.5}, p);
  f.v[5] = 2e3;
  Stepper s(f, 1e-3);
  CHECK_THROWS_AS(s.step(f), BlowUp);

  SimConfig cfg;
  cfg.dt = 1.0;
  CHECK_THROWS_AS(cfg.validate(p), ValidationError);
  cfg.dt = 0.0;
  CHECK_NOTHROW(cfg.validate(p));
  CHECK(cfg.resolved_dt(p) == doctest::Approx(0.2 * cfg.dx() * cfg.dx() / 1.1));
  CHECK_THROWS_AS(nlohmann::json({{"nz", 4}}).get<SimConfig>(), UnknownKey);
}
