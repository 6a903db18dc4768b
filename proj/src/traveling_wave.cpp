#include "tumorfront/traveling_wave.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"

namespace tumorfront {

std::string to_string(BoundaryKind b) { return b == BoundaryKind::Dirichlet ? "dirichlet" : "neumann"; }

BoundaryKind boundary_from_string(const std::string& s) {
  if (s == "dirichlet") return BoundaryKind::Dirichlet;
  if (s == "neumann") return BoundaryKind::Neumann;
  throw ValidationError(fmt::format("unknown boundary kind \"{}\"", s));
}

std::vector<double> FrontProfile::packed() const {
  std::vector<double> q(3 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    q[3 * i] = u[i];
    q[3 * i + 1] = v[i];
    q[3 * i + 2] = w[i];
  }
  return q;
}

void FrontProfile::unpack(const std::vector<double>& q) {
  const std::size_t n = q.size() / 3;
  u.resize(n);
  v.resize(n);
  w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = q[3 * i];
    v[i] = q[3 * i + 1];
    w[i] = q[3 * i + 2];
  }
}

double TwResidual::max_norm() const {
  double m = 0.0;
  for (const auto* a : {&u, &v, &w})
    for (double r : *a) m = std::max(m, std::abs(r));
  return m;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// One pass over the grid producing the residual and, optionally, Jacobian triplets
// (including the d/dc column as column 3n when jc is requested).
void assemble(const ModelParams& p, const std::vector<double>& x, const std::vector<double>& q, double c,
              BoundaryKind bc, std::vector<double>& R, Triplets* T, std::vector<double>* Jc) {
  const std::size_t n = x.size();
  R.assign(3 * n, 0.0);
  if (Jc) Jc->assign(3 * n, 0.0);
  const double e2 = p.epsilon * p.epsilon;
  const double vplus = compute_v_pm(p).vplus;
  auto U = [&](std::size_t i) { return q[3 * i]; };
  auto V = [&](std::size_t i) { return q[3 * i + 1]; };
  auto W = [&](std::size_t i) { return q[3 * i + 2]; };
  auto add = [&](std::size_t r, std::size_t col, double val) {
    if (T) T->emplace_back(int(r), int(col), val);
  };
  auto face = [&](std::size_t i) { return 1.0 + p.kappa - 0.5 * (U(i) + U(i + 1)); };
  const bool dir = bc == BoundaryKind::Dirichlet;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t iu = 3 * i, iv = iu + 1, iw = iu + 2;
    const ReactionJet j = reaction_jet(p, {U(i), V(i), W(i)});

    // u: transport c u' = F, upwinded from the left
    if (i == 0) {
      if (dir) {
        R[iu] = U(0) - 1.0;
        add(iu, iu, 1.0);
      } else {
        R[iu] = j.F;
        add(iu, iu, j.F_u);
        add(iu, iw, j.F_w);
      }
    } else {
      double cm[3];
      std::size_t idx[3];
      int k = 0;
      if (i == 1) {
        const double h = x[1] - x[0];
        cm[0] = -1.0 / h, idx[0] = 0;
        cm[1] = 1.0 / h, idx[1] = 1;
        k = 2;
      } else {
        const double h1 = x[i] - x[i - 1], h0 = x[i - 1] - x[i - 2];
        cm[0] = h1 / (h0 * (h1 + h0)), idx[0] = i - 2;
        cm[1] = -(h1 + h0) / (h1 * h0), idx[1] = i - 1;
        cm[2] = (2.0 * h1 + h0) / (h1 * (h1 + h0)), idx[2] = i;
        k = 3;
      }
      double du = 0.0;
      for (int m = 0; m < k; ++m) du += cm[m] * U(idx[m]);
      R[iu] = j.F - c * du;
      for (int m = 0; m < k; ++m) add(iu, 3 * idx[m], -c * cm[m]);
      add(iu, iu, j.F_u);
      add(iu, iw, j.F_w);
      if (Jc) (*Jc)[iu] = -du;
    }

    const bool edge = i == 0 || i == n - 1;
    if (edge && dir) {
      const double target = i == 0 ? 0.0 : vplus;
      R[iv] = V(i) - target;
      R[iw] = W(i) - target;
      add(iv, iv, 1.0);
      add(iw, iw, 1.0);
      continue;
    }

    if (edge) {
      // mirrored ghost node: flux 2 D (f_nb - f_i) / h^2, no advection
      const std::size_t nb = i == 0 ? 1 : n - 2;
      const double h = std::abs(x[nb] - x[i]);
      const double D = i == 0 ? face(0) : face(n - 2);
      const double s = 2.0 / (h * h);
      const double dv = V(nb) - V(i), dw = W(nb) - W(i);
      R[iv] = j.G + s * D * dv;
      R[iw] = e2 * j.H + s * dw;
      add(iv, 3 * nb + 1, s * D);
      add(iv, iv, -s * D + j.G_v);
      add(iv, iw, j.G_w);
      add(iv, 3 * nb, -0.5 * s * dv);
      add(iv, iu, -0.5 * s * dv);
      add(iw, 3 * nb + 2, s);
      add(iw, iw, -s + e2 * j.H_w);
      add(iw, iv, e2 * j.H_v);
      continue;
    }

    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i], m = 0.5 * (hl + hr);
    const double am = -hr / (hl * (hl + hr)), a0 = (hr - hl) / (hl * hr), ap = hl / (hr * (hl + hr));
    const double Dl = face(i - 1), Dr = face(i);
    const double dv1 = am * V(i - 1) + a0 * V(i) + ap * V(i + 1);
    const double dw1 = am * W(i - 1) + a0 * W(i) + ap * W(i + 1);
    const double fr = (V(i + 1) - V(i)) / (hr * m), fl = (V(i) - V(i - 1)) / (hl * m);
    R[iv] = j.G + Dr * fr - Dl * fl - c * dv1;
    add(iv, iv + 3, Dr / (hr * m) - c * ap);
    add(iv, iv - 3, Dl / (hl * m) - c * am);
    add(iv, iv, -Dr / (hr * m) - Dl / (hl * m) - c * a0 + j.G_v);
    add(iv, iw, j.G_w);
    add(iv, iu + 3, -0.5 * fr);
    add(iv, iu, -0.5 * fr + 0.5 * fl);
    add(iv, iu - 3, 0.5 * fl);

    const double gr = (W(i + 1) - W(i)) / (hr * m), gl = (W(i) - W(i - 1)) / (hl * m);
    R[iw] = gr - gl + e2 * (j.H - c * dw1);
    add(iw, iw + 3, 1.0 / (hr * m) - e2 * c * ap);
    add(iw, iw - 3, 1.0 / (hl * m) - e2 * c * am);
    add(iw, iw, -1.0 / (hr * m) - 1.0 / (hl * m) - e2 * c * a0 + e2 * j.H_w);
    add(iw, iv, e2 * j.H_v);
    if (Jc) {
      (*Jc)[iv] = -dv1;
      (*Jc)[iw] = -e2 * dw1;
    }
  }
}

double max_abs(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

void tw_residual_packed(const ModelParams& p, const std::vector<double>& x, const std::vector<double>& q, double c,
                        BoundaryKind bc, std::vector<double>& out) {
  assemble(p, x, q, c, bc, out, nullptr, nullptr);
}

TwResidual tw_residual(const FrontProfile& f) {
  std::vector<double> r;
  assemble(f.params, f.grid.nodes, f.packed(), f.c, f.bc, r, nullptr, nullptr);
  TwResidual out;
  const std::size_t n = f.grid.n();
  out.u.resize(n);
  out.v.resize(n);
  out.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.u[i] = r[3 * i];
    out.v[i] = r[3 * i + 1];
    out.w[i] = r[3 * i + 2];
  }
  return out;
}

TwJacobian tw_jacobian(const ModelParams& p, const std::vector<double>& x, const std::vector<double>& q, double c,
                       BoundaryKind bc) {
  std::vector<double> r;
  Triplets T;
  TwJacobian out;
  assemble(p, x, q, c, bc, r, &T, &out.Jc);
  const int N = int(q.size());
  out.J.resize(N, N);
  out.J.setFromTriplets(T.begin(), T.end());
  return out;
}

void to_json(nlohmann::json& j, const SolveOptions& o) {
  j = {{"tol", o.tol}, {"max_iter", o.max_iter}, {"bc", to_string(o.bc)}};
}

void from_json(const nlohmann::json& j, SolveOptions& o) {
  JsonReader r(j, "solver");
  r.get("tol", o.tol);
  r.get("max_iter", o.max_iter);
  std::string bc;
  if (r.get("bc", bc)) o.bc = boundary_from_string(bc);
  r.finish();
}

namespace {

double interp_sorted(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const std::size_t k = std::size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return ys[k - 1] + t * (ys[k] - ys[k - 1]);
}

double anchor_level(const ModelParams& p) { return layer_branches(solve_w_star(p), p).vplus / 2.0; }

// Right-hand background state requested by the regime.
double expected_right_u(const ModelParams& p, RegimeTag t, double vplus) {
  return t == RegimeTag::Benign ? 1.0 - p.delta1 * vplus : 0.0;
}

}  // namespace

FrontProfile skeleton_profile(const SingularFront& s, const Grid1D& grid) {
  const ModelParams& p = s.params;
  const std::size_t n = grid.n();
  FrontProfile f;
  f.grid = grid;
  f.params = p;
  f.u.resize(n);
  f.v.resize(n);
  f.w.resize(n);
  f.c = s.c_star;
  f.regime = s.regime.tag;
  std::vector<double> zp, wp;
  for (const auto& smp : s.slow.plus) {
    zp.push_back(smp.zeta);
    wp.push_back(smp.w);
  }
  zp.push_back(zp.back() + 1e3);
  wp.push_back(s.Vplus);
  const double k = s.layer_rate();
  const bool gap = s.subspace == Subspace::NoNormalCells;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = grid.nodes[i];
    const double zeta = p.epsilon * xi;
    const double w = zeta < 0.0 ? s.w_star * std::exp(std::sqrt(p.delta3) * zeta) : interp_sorted(zp, wp, zeta);
    const double fast = 0.5 * (1.0 + std::tanh(k * xi));
    const double vslow = xi > 0.0 ? layer_branches(std::min(w, s.Vplus), p).vplus : s.v_plus_star;
    const double ueq = std::clamp(1.0 - p.delta1 * w, 0.0, 1.0);
    f.w[i] = w;
    f.v[i] = fast * vslow;
    f.u[i] = gap ? ueq * (1.0 - fast) : ueq;
  }
  f.anchor_index = grid.nearest(0.0);
  f.phase_anchor = grid.nodes[f.anchor_index];
  f.anchor_value = s.v_plus_star / 2.0;
  return f;
}

FrontProfile solve_front(const ModelParams& p, const FrontProfile& initial, const SolveOptions& opt) {
  p.validate();
  initial.grid.validate();
  const auto& x = initial.grid.nodes;
  const std::size_t n = x.size();
  const int N = int(3 * n);
  FrontProfile f = initial;
  f.params = p;
  f.bc = opt.bc;
  f.regime = classify_regime(p).tag;
  f.anchor_index = initial.grid.nearest(initial.phase_anchor);
  f.phase_anchor = x[f.anchor_index];
  f.anchor_value = anchor_level(p);
  const std::size_t ia = 3 * f.anchor_index + 1;

  std::vector<double> q = f.packed();
  double c = f.c;
  std::vector<double> R, Jc, Rt;
  std::vector<double> history;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool pattern = false;
  auto full_norm = [&](const std::vector<double>& r, const std::vector<double>& qq) {
    return std::max(max_abs(r), std::abs(qq[ia] - f.anchor_value));
  };

  assemble(p, x, q, c, opt.bc, R, nullptr, nullptr);
  double nr = full_norm(R, q);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    history.push_back(nr);
    spdlog::debug("newton {} residual {:.3e} c {:.10f}", it, nr, c);
    if (nr < opt.tol) break;
    Triplets T;
    T.reserve(std::size_t(N) * 9);
    assemble(p, x, q, c, opt.bc, R, &T, &Jc);
    for (int r = 0; r < N; ++r)
      if (Jc[r] != 0.0) T.emplace_back(r, N, Jc[r]);
    T.emplace_back(N, int(ia), 1.0);
    Eigen::SparseMatrix<double> M(N + 1, N + 1);
    M.setFromTriplets(T.begin(), T.end());
    M.makeCompressed();
    if (!pattern) {
      lu.analyzePattern(M);
      pattern = true;
    }
    lu.factorize(M);
    if (lu.info() != Eigen::Success) throw NewtonDiverged("singular Newton matrix", history);
    Eigen::VectorXd rhs(N + 1);
    for (int r = 0; r < N; ++r) rhs[r] = -R[r];
    rhs[N] = -(q[ia] - f.anchor_value);
    const Eigen::VectorXd d = lu.solve(rhs);
    if (!d.allFinite()) throw NewtonDiverged("non-finite Newton step", history);

    double lam = 1.0;
    std::vector<double> qt(q.size());
    double ct = c, nt = nr;
    for (int ls = 0; ls < 30; ++ls) {
      for (int r = 0; r < N; ++r) qt[r] = q[r] + lam * d[r];
      ct = c + lam * d[N];
      assemble(p, x, qt, ct, opt.bc, Rt, nullptr, nullptr);
      nt = full_norm(Rt, qt);
      if (std::isfinite(nt) && (nt < (1.0 - 0.25 * lam) * nr || nt < opt.tol)) break;
      lam *= 0.5;
    }
    if (!std::isfinite(nt) || (lam < 1e-8 && nt >= nr)) throw NewtonDiverged("line search failed", history);
    // Rounding floor reached: accept the iterate when no further decrease is possible.
    if (nt >= nr && nr < 1e3 * opt.tol) break;
    q.swap(qt);
    c = ct;
    nr = nt;
  }
  if (!(nr < std::max(opt.tol, 1e-8)))
    throw NewtonDiverged(fmt::format("Newton stalled at residual {:.3e} after {} iterations", nr, it), history);

  f.unpack(q);
  f.c = c;
  f.residual_norm = nr;
  f.newton_iterations = it;
  if (opt.check_branch) {
    const double vplus = compute_v_pm(p).vplus;
    const double ur = expected_right_u(p, f.regime, vplus);
    const double tol = opt.bc == BoundaryKind::Dirichlet ? 1e-6 : 1e-2;
    const double dl = std::max({std::abs(f.u.front() - 1.0), std::abs(f.v.front()), std::abs(f.w.front())});
    const double dr = std::max({std::abs(f.u.back() - ur), std::abs(f.v.back() - vplus), std::abs(f.w.back() - vplus)});
    if (dl > tol || dr > tol)
      throw WrongBranch(fmt::format("boundary states off by {:.3e} (left) {:.3e} (right) for regime {}", dl, dr,
                                    to_string(f.regime)));
  }
  return f;
}

FrontProfile solve_front(const ModelParams& p, const SingularFront& seed, const Grid1D& grid,
                         const SolveOptions& opt) {
  return solve_front(p, skeleton_profile(seed, grid), opt);
}

FrontProfile solve_front(const ModelParams& p, const GridSpec& spec, const SolveOptions& opt) {
  return solve_front(p, build_singular_front(p), spec.build(p), opt);
}

FrontProfile resample(const FrontProfile& f, const Grid1D& grid) {
  FrontProfile g = f;
  g.grid = grid;
  const std::size_t n = grid.n();
  g.u.resize(n);
  g.v.resize(n);
  g.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = grid.nodes[i];
    g.u[i] = interp_sorted(f.grid.nodes, f.u, xi);
    g.v[i] = interp_sorted(f.grid.nodes, f.v, xi);
    g.w[i] = interp_sorted(f.grid.nodes, f.w, xi);
  }
  g.anchor_index = grid.nearest(f.phase_anchor);
  g.phase_anchor = grid.nodes[g.anchor_index];
  return g;
}

double measure_gap_width(const FrontProfile& f, std::optional<double> threshold) {
  const double th = threshold.value_or(kDefaultGapThresholdFactor * f.params.epsilon);
  if (!(th > 0.0)) return 0.0;
  const auto& x = f.grid.nodes;
  double best = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    if (f.u[i] < th && f.v[i] < th) {
      std::size_t j = i;
      while (j + 1 < x.size() && f.u[j + 1] < th && f.v[j + 1] < th) ++j;
      best = std::max(best, x[j] - x[i]);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return best;
}

FrontProfile continue_front(const FrontProfile& start, const std::string& param_name, double target, int n_steps,
                            const GridSpec& spec, const SolveOptions& opt) {
  const double p0 = start.params.get(param_name);
  if (target == p0) return start;
  if (n_steps < 1) throw ValidationError("continue_front needs n_steps >= 1");
  const bool regrid = param_name == "epsilon";
  FrontProfile cur = start;
  double last = p0;
  auto attempt = [&](double value) {
    ModelParams p = cur.params;
    p.set(param_name, value);
    FrontProfile guess = regrid ? resample(cur, spec.build(p)) : cur;
    return solve_front(p, guess, opt);
  };
  for (int s = 1; s <= n_steps; ++s) {
    const double value = p0 + (target - p0) * double(s) / n_steps;
    try {
      cur = attempt(value);
    } catch (const Error&) {
      const double mid = 0.5 * (last + value);
      try {
        cur = attempt(mid);
        cur = attempt(value);
      } catch (const Error& e) {
        throw HomotopyStuck(fmt::format("continuation in {} stuck between {} and {}: {}", param_name, last, value,
                                        e.what()),
                            cur.params.get(param_name));
      }
    }
    last = value;
    spdlog::info("continuation {} = {} c = {:.8f} regime {}", param_name, value, cur.c, to_string(cur.regime));
  }
  return cur;
}

nlohmann::json tw_report(const FrontProfile& f) {
  return {{"c", f.c},
          {"residual_norm", f.residual_norm},
          {"gap_width", measure_gap_width(f)},
          {"regime", to_string(f.regime)},
          {"n", f.grid.n()},
          {"newton_iterations", f.newton_iterations},
          {"phase_anchor", f.phase_anchor},
          {"bc", to_string(f.bc)}};
}

std::vector<double> node_derivative(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    d[i] = -hr / (hl * (hl + hr)) * f[i - 1] + (hr - hl) / (hl * hr) * f[i] + hl / (hr * (hl + hr)) * f[i + 1];
  }
  d[0] = (f[1] - f[0]) / (x[1] - x[0]);
  d[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
  return d;
}

}  // namespace tumorfront
