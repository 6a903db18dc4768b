#include "tumorfront/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include <fftw3.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"

namespace tumorfront {

double SimConfig::resolved_dt(const ModelParams& p) const {
  return dt > 0.0 ? dt : 0.2 * dx() * dx() / (1.0 + p.kappa);
}

void SimConfig::validate(const ModelParams& p) const {
  if (nx < 3) throw ValidationError(fmt::format("simulate.nx = {} must be >= 3", nx));
  if (ny < 1) throw ValidationError("simulate.ny must be >= 1");
  if (!(Lx > 0.0)) throw ValidationError(fmt::format("simulate.Lx = {} must be positive", Lx));
  if (!(Ly > 0.0)) throw ValidationError(fmt::format("simulate.Ly = {} must be positive", Ly));
  if (!(t_end > 0.0)) throw ValidationError(fmt::format("simulate.t_end = {} must be positive", t_end));
  if (!(diag_interval > 0.0)) throw ValidationError("simulate.diag_interval must be positive");
  if (!(snapshot_interval >= 0.0)) throw ValidationError("simulate.snapshot_interval must be >= 0");
  if (!(noise_amplitude >= 0.0)) throw ValidationError("simulate.noise_amplitude must be >= 0");
  if (n_modes < 1) throw ValidationError("simulate.n_modes must be >= 1");
  const double limit = 0.2 * dx() * dx() / (1.0 + p.kappa);
  const double h = resolved_dt(p);
  if (!(h > 0.0) || h > limit * (1.0 + 1e-12))
    throw ValidationError(fmt::format("simulate.dt = {} exceeds the cross-diffusion limit {}", h, limit));
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"xi_min", c.xi_min},
       {"Lx", c.Lx},
       {"Ly", c.Ly},
       {"nx", c.nx},
       {"ny", c.ny},
       {"dt", c.dt},
       {"t_end", c.t_end},
       {"snapshot_interval", c.snapshot_interval},
       {"diag_interval", c.diag_interval},
       {"noise_amplitude", c.noise_amplitude},
       {"rng_seed", c.rng_seed},
       {"n_modes", c.n_modes},
       {"fit_start", c.fit_start}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  JsonReader r(j, "simulate");
  r.get("xi_min", c.xi_min);
  r.get("Lx", c.Lx);
  r.get("Ly", c.Ly);
  r.get("nx", c.nx);
  r.get("ny", c.ny);
  r.get("dt", c.dt);
  r.get("t_end", c.t_end);
  r.get("snapshot_interval", c.snapshot_interval);
  r.get("diag_interval", c.diag_interval);
  r.get("noise_amplitude", c.noise_amplitude);
  r.get("rng_seed", c.rng_seed);
  r.get("n_modes", c.n_modes);
  r.get("fit_start", c.fit_start);
  r.finish();
}

Grid1D sim_grid(const SimConfig& cfg) { return Grid1D::uniform(cfg.xi_min, cfg.xi_min + cfg.Lx, cfg.nx); }

Field2D init_planar(const FrontProfile& profile, std::size_t ny, double Ly, double noise_amplitude,
                    std::uint64_t seed) {
  if (ny < 1) throw ValidationError("init_planar needs ny >= 1");
  const auto& x = profile.grid.nodes;
  const std::size_t nx = x.size();
  const double dx = (x.back() - x.front()) / double(nx - 1);
  bool uniform = true;
  for (std::size_t i = 1; i < nx && uniform; ++i) uniform = std::abs(x[i] - x[i - 1] - dx) < 1e-9 * dx;
  const FrontProfile f = uniform ? profile : resample(profile, Grid1D::uniform(x.front(), x.back(), nx));

  Field2D F;
  F.nx = nx;
  F.ny = ny;
  F.dx = dx;
  F.dy = Ly / double(ny);
  F.xi0 = x.front();
  F.frame_speed = f.c;
  F.params = f.params;
  F.u.resize(nx * ny);
  F.v.resize(nx * ny);
  F.w.resize(nx * ny);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = F.idx(i, j);
      F.u[k] = f.u[i];
      F.w[k] = f.w[i];
      F.v[k] = f.v[i];
      if (noise_amplitude > 0.0) F.v[k] += noise_amplitude * double(rng() >> 11) * 0x1.0p-53;
    }
  return F;
}

struct Stepper::Impl {
  std::size_t nx, ny, nyc;
  double dx, dy;
  ModelParams p;
  std::vector<double> rhs;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  // Thomas factors per transverse mode
  std::vector<double> cp, inv_den;
  std::vector<double> un, vn;

  Impl(const Field2D& f, double dt)
      : nx(f.nx), ny(f.ny), nyc(f.ny / 2 + 1), dx(f.dx), dy(f.dy), p(f.params), rhs(f.nx * f.ny),
        cp(nyc * nx), inv_den(nyc * nx), un(f.nx * f.ny), vn(f.nx * f.ny) {
    spec = fftw_alloc_complex(nx * nyc);
    const int n = int(ny);
    fwd = fftw_plan_many_dft_r2c(1, &n, int(nx), rhs.data(), nullptr, 1, n, spec, nullptr, 1, int(nyc),
                                 FFTW_ESTIMATE);
    bwd = fftw_plan_many_dft_c2r(1, &n, int(nx), spec, nullptr, 1, int(nyc), rhs.data(), nullptr, 1, n,
                                 FFTW_ESTIMATE);
    if (!fwd || !bwd) throw ValidationError("FFTW plan creation failed");
    const double ie2 = 1.0 / (p.epsilon * p.epsilon);
    const double s = dt * ie2 / (dx * dx);
    for (std::size_t m = 0; m < nyc; ++m) {
      const double ky2 = ny == 1 ? 0.0 : (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * double(m) / double(ny))) / (dy * dy);
      const double diag = 1.0 + dt * p.delta3 + dt * ie2 * ky2 + 2.0 * s;
      double* c = &cp[m * nx];
      double* id = &inv_den[m * nx];
      // rows: 0: diag, -2s | interior: -s, diag, -s | last: -2s, diag
      id[0] = 1.0 / diag;
      c[0] = -2.0 * s * id[0];
      for (std::size_t i = 1; i < nx; ++i) {
        const double sub = i == nx - 1 ? -2.0 * s : -s;
        const double sup = -s;
        id[i] = 1.0 / (diag - sub * c[i - 1]);
        c[i] = i == nx - 1 ? 0.0 : sup * id[i];
      }
    }
  }

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (spec) fftw_free(spec);
  }
};

Stepper::Stepper(const Field2D& shape, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  impl_ = std::make_unique<Impl>(shape, dt);
}

Stepper::~Stepper() = default;

void Stepper::step(Field2D& f) {
  Impl& m = *impl_;
  const ModelParams& p = m.p;
  const std::size_t nx = m.nx, ny = m.ny;
  const double dt = dt_, c = f.frame_speed;
  const double idx2 = 1.0 / (m.dx * m.dx), idy2 = 1.0 / (m.dy * m.dy), i2dx = 0.5 / m.dx;
  const double kap1 = 1.0 + p.kappa;
  const auto& U = f.u;
  const auto& V = f.v;
  const auto& W = f.w;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < std::ptrdiff_t(nx); ++ii) {
    const std::size_t i = std::size_t(ii);
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = i * ny + j;
      const double u = U[k], v = V[k], w = W[k];
      // v: cross-diffusion in conservative form, centred advection away from the ends
      double flux;
      double adv = 0.0;
      if (i == 0) {
        flux = 2.0 * (kap1 - 0.5 * (u + U[k + ny])) * (V[k + ny] - v) * idx2;
      } else if (i == nx - 1) {
        flux = 2.0 * (kap1 - 0.5 * (u + U[k - ny])) * (V[k - ny] - v) * idx2;
      } else {
        const double Dr = kap1 - 0.5 * (u + U[k + ny]), Dl = kap1 - 0.5 * (u + U[k - ny]);
        flux = (Dr * (V[k + ny] - v) - Dl * (v - V[k - ny])) * idx2;
        adv = c * (V[k + ny] - V[k - ny]) * i2dx;
      }
      if (ny > 1) {
        const std::size_t jp = i * ny + (j + 1 == ny ? 0 : j + 1), jm = i * ny + (j == 0 ? ny - 1 : j - 1);
        const double Dn = kap1 - 0.5 * (u + U[jp]), Ds = kap1 - 0.5 * (u + U[jm]);
        flux += (Dn * (V[jp] - v) - Ds * (v - V[jm])) * idy2;
      }
      const double G = p.rho * v * (1.0 - v) * (v - p.a) - p.delta2 * v * w;
      m.vn[k] = v + dt * (G + flux - adv);

      // u: upwind transport, reaction split into its positive and negative parts
      double du = 0.0;
      if (i == 1) du = (u - U[k - ny]) / m.dx;
      else if (i >= 2) du = (3.0 * u - 4.0 * U[k - ny] + U[k - 2 * ny]) * i2dx;
      const double r = 1.0 - u - p.delta1 * w;
      const double rp = std::max(r, 0.0), rm = std::max(-r, 0.0);
      m.un[k] = (u + dt * (u * rp - (i == 0 ? 0.0 : c * du))) / (1.0 + dt * rm);

      // w: explicit source and advection
      const double dw = (i == 0 || i == nx - 1) ? 0.0 : (W[k + ny] - W[k - ny]) * i2dx;
      m.rhs[k] = w + dt * (p.delta3 * v - c * dw);
    }
  }

  fftw_execute(m.fwd);
  const std::size_t nyc = m.nyc;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t mm = 0; mm < std::ptrdiff_t(nyc); ++mm) {
    const std::size_t q = std::size_t(mm);
    const double* cpv = &m.cp[q * nx];
    const double* id = &m.inv_den[q * nx];
    const double s = dt / (p.epsilon * p.epsilon) * idx2;
    // forward sweep
    std::complex<double> prev(0.0, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      auto* z = reinterpret_cast<std::complex<double>*>(m.spec[i * nyc + q]);
      const double sub = i == 0 ? 0.0 : (i == nx - 1 ? -2.0 * s : -s);
      *z = (*z - sub * prev) * id[i];
      prev = *z;
    }
    for (std::size_t i = nx - 1; i-- > 0;) {
      auto* z = reinterpret_cast<std::complex<double>*>(m.spec[i * nyc + q]);
      auto* zn = reinterpret_cast<std::complex<double>*>(m.spec[(i + 1) * nyc + q]);
      *z -= cpv[i] * *zn;
    }
  }
  fftw_execute(m.bwd);
  const double norm = 1.0 / double(ny);

  double worst = 0.0;
  for (std::size_t k = 0; k < nx * ny; ++k) {
    f.u[k] = m.un[k];
    f.v[k] = m.vn[k];
    f.w[k] = m.rhs[k] * norm;
    worst = std::max({worst, std::abs(f.u[k]), std::abs(f.v[k]), std::abs(f.w[k])});
  }
  f.time += dt;
  if (!(worst <= 1e3)) throw BlowUp(fmt::format("field magnitude {} exceeds 1e3 at t = {}", worst, f.time), f.time);
}

Field2D step(const Field2D& f, double dt) {
  Field2D g = f;
  Stepper s(g, dt);
  s.step(g);
  return g;
}

std::vector<double> interface_position(const Field2D& f, double level) {
  std::vector<double> pos(f.ny, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < f.ny; ++j)
    for (std::size_t i = 0; i + 1 < f.nx; ++i) {
      const double a = f.v[f.idx(i, j)], b = f.v[f.idx(i + 1, j)];
      if (a < level && b >= level) {
        pos[j] = f.xi(i) + f.dx * (level - a) / (b - a);
        break;
      }
    }
  return pos;
}

double mode_amplitude(const std::vector<double>& s, int k) {
  const std::size_t n = s.size();
  if (k == 0) {
    double m = 0.0;
    for (double x : s) m += x;
    return m / double(n);
  }
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ph = 2.0 * std::numbers::pi * double(k) * double(j) / double(n);
    re += s[j] * std::cos(ph);
    im -= s[j] * std::sin(ph);
  }
  return std::hypot(re, im) / double(n);
}

namespace {

void record(ModeDiagnostics& d, const Field2D& f, double level) {
  const std::vector<double> pos = interface_position(f, level);
  double mean = 0.0;
  for (double x : pos) mean += x;
  mean /= double(pos.size());
  std::vector<double> ia, sa;
  if (std::isfinite(mean)) {
    const std::size_t im = std::size_t(std::clamp(std::lround((mean - f.xi0) / f.dx), 0l, long(f.nx - 1)));
    std::vector<double> slice(f.ny);
    for (std::size_t j = 0; j < f.ny; ++j) slice[j] = f.v[f.idx(im, j)];
    for (int k : d.modes) {
      ia.push_back(mode_amplitude(pos, k));
      sa.push_back(mode_amplitude(slice, k));
    }
  } else {
    ia.assign(d.modes.size(), std::numeric_limits<double>::quiet_NaN());
    sa = ia;
  }
  d.times.push_back(f.time);
  d.interface_amplitude.push_back(std::move(ia));
  d.slice_amplitude.push_back(std::move(sa));
}

}  // namespace

void write_snapshot(const Field2D& f, const std::filesystem::path& dir, int index) {
  const std::pair<const char*, const std::vector<double>*> fields[] = {{"u", &f.u}, {"v", &f.v}, {"w", &f.w}};
  for (const auto& [name, data] : fields) {
    CsvWriter out(dir / fmt::format("{}_{:05d}.csv", name, index), {"nx", "ny", "dx", "dy", "time"});
    out.raw(fmt::format("{},{},{},{},{}", f.nx, f.ny, fmt_num(f.dx), fmt_num(f.dy), fmt_num(f.time)));
    std::string line;
    for (std::size_t i = 0; i < f.nx; ++i) {
      line.clear();
      for (std::size_t j = 0; j < f.ny; ++j) {
        if (j) line += ',';
        line += fmt_num((*data)[f.idx(i, j)]);
      }
      out.raw(line);
    }
  }
}

void write_diagnostics_csv(const ModeDiagnostics& d, const std::filesystem::path& path) {
  CsvWriter w(path, {"time", "k", "ell_k", "amplitude", "slice_amplitude"});
  for (std::size_t s = 0; s < d.times.size(); ++s)
    for (std::size_t k = 0; k < d.modes.size(); ++k)
      w.raw(fmt::format("{},{},{},{},{}", fmt_num(d.times[s]), d.modes[k],
                        fmt_num(2.0 * std::numbers::pi * d.modes[k] / d.Ly), fmt_num(d.interface_amplitude[s][k]),
                        fmt_num(d.slice_amplitude[s][k])));
}

RunResult run(const SimConfig& cfg, const Field2D& initial, double level,
              const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate(initial.params);
  // shrink dt so that the run ends exactly at t_end
  const long n_steps = std::max(1l, long(std::ceil(cfg.t_end / cfg.resolved_dt(initial.params) - 1e-9)));
  const double dt = cfg.t_end / double(n_steps);
  const long snap_every = cfg.snapshot_interval > 0.0 ? std::max(1l, std::lround(cfg.snapshot_interval / dt)) : 0;

  RunResult res;
  res.dt = dt;
  res.final_state = initial;
  Field2D& f = res.final_state;
  const double t0 = f.time;
  ModeDiagnostics& d = res.diagnostics;
  d.Ly = double(f.ny) * f.dy;
  for (int k = 0; k <= cfg.n_modes && k <= int(f.ny / 2); ++k) d.modes.push_back(k);

  if (out_dir) std::filesystem::create_directories(*out_dir);
  int snap_index = 0;
  auto snapshot = [&]() {
    res.snapshot_times.push_back(f.time);
    if (out_dir) write_snapshot(f, *out_dir, snap_index);
    ++snap_index;
  };
  Stepper st(f, dt);
  record(d, f, level);
  if (snap_every) snapshot();
  int n_diag = 1;
  for (long s = 1; s <= n_steps; ++s) {
    st.step(f);
    f.time = t0 + double(s) * dt;
    if (s == n_steps || s == std::lround(n_diag * cfg.diag_interval / dt)) {
      record(d, f, level);
      ++n_diag;
    }
    if ((snap_every && s % snap_every == 0) || (s == n_steps && (!snap_every || s % snap_every != 0))) snapshot();
    if (s % 5000 == 0) spdlog::info("simulate t = {:.1f}", f.time);
  }
  if (out_dir) write_diagnostics_csv(d, *out_dir / "diagnostics.csv");
  return res;
}

std::vector<GrowthRate> growth_rates(const ModeDiagnostics& d, double t0, double t1) {
  std::vector<std::size_t> sel;
  for (std::size_t s = 0; s < d.times.size(); ++s)
    if (d.times[s] >= t0 && d.times[s] <= t1) sel.push_back(s);
  if (sel.size() < 5)
    throw WindowTooShort(fmt::format("{} snapshots in [{}, {}], need at least 5", sel.size(), t0, t1));
  std::vector<GrowthRate> out;
  for (std::size_t k = 0; k < d.modes.size(); ++k) {
    if (d.modes[k] == 0) continue;
    GrowthRate g{d.modes[k], 2.0 * std::numbers::pi * d.modes[k] / d.Ly, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), true, int(sel.size())};
    double st = 0.0, sy = 0.0;
    bool ok = true;
    for (std::size_t q = 0; q < sel.size(); ++q) {
      const double a = d.interface_amplitude[sel[q]][k];
      if (!(a > 0.0)) ok = false;
      if (q && !(a > d.interface_amplitude[sel[q - 1]][k])) g.monotone = false;
      st += d.times[sel[q]];
      sy += ok ? std::log(a) : 0.0;
    }
    if (ok) {
      const double n = double(sel.size()), tm = st / n, ym = sy / n;
      double stt = 0.0, sty = 0.0;
      for (std::size_t s : sel) {
        stt += (d.times[s] - tm) * (d.times[s] - tm);
        sty += (d.times[s] - tm) * (std::log(d.interface_amplitude[s][k]) - ym);
      }
      g.sigma = sty / stt;
      double rss = 0.0;
      for (std::size_t s : sel) {
        const double e = std::log(d.interface_amplitude[s][k]) - ym - g.sigma * (d.times[s] - tm);
        rss += e * e;
      }
      g.sigma_stderr = n > 2 ? std::sqrt(rss / (n - 2.0) / stt) : 0.0;
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace tumorfront
