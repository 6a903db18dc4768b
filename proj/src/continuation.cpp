#include "tumorfront/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"
#include "tumorfront/spectral.hpp"

namespace tumorfront {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool needs_regrid(const std::string& name) { return name == "epsilon" || name == "delta3"; }
}  // namespace

void to_json(nlohmann::json& j, const SweepOptions& o) {
  j = {{"grid", o.grid}, {"solver", o.solver}, {"compute_lambda2", o.compute_lambda2},
       {"max_halvings", o.max_halvings}};
}

void from_json(const nlohmann::json& j, SweepOptions& o) {
  JsonReader r(j, "sweep_options");
  if (auto* g = r.child("grid")) o.grid = g->get<GridSpec>();
  if (auto* s = r.child("solver")) o.solver = s->get<SolveOptions>();
  r.get("compute_lambda2", o.compute_lambda2);
  r.get("max_halvings", o.max_halvings);
  r.finish();
}

BranchPoint make_point(const FrontProfile& f, const std::string& name, bool compute_lambda2) {
  const ModelParams& p = f.params;
  BranchPoint b;
  b.param_value = p.get(name);
  b.c = f.c;
  b.gap_width = measure_gap_width(f);
  b.regime = f.regime;
  b.residual_norm = f.residual_norm;
  b.lambda2 = kNaN;
  if (compute_lambda2) {
    try {
      b.lambda2 = lambda2_solvability(f).value;
    } catch (const Error& e) {
      spdlog::warn("lambda2 at {} = {} failed: {}", name, b.param_value, e.what());
    }
  }
  b.gap_signed = kNaN;
  try {
    const double ws = solve_w_star(p);
    b.gap_signed = std::log(p.delta1 * ws) / (p.epsilon * std::sqrt(p.delta3));
  } catch (const Error&) {
  }
  return b;
}

ContinuationBranch sweep(const ModelParams& base, const std::string& name, double lo, double hi, int n_points,
                         const SweepOptions& opt) {
  if (n_points < 1) throw ValidationError("sweep needs n_points >= 1");
  base.get(name);
  ContinuationBranch br;
  br.swept_param = name;

  std::vector<FrontProfile> good;  // last two converged profiles
  auto attempt = [&](double value) -> std::optional<FrontProfile> {
    ModelParams p = base;
    p.set(name, value);
    try {
      p.validate();
    } catch (const Error& e) {
      spdlog::warn("sweep {} = {}: {}", name, value, e.what());
      return std::nullopt;
    }
    auto fresh = [&]() -> std::optional<FrontProfile> {
      try {
        return solve_front(p, opt.grid, opt.solver);
      } catch (const Error& e) {
        spdlog::debug("fresh solve at {} = {} failed: {}", name, value, e.what());
        return std::nullopt;
      }
    };
    if (good.empty()) return fresh();
    const FrontProfile& g1 = good.back();
    FrontProfile guess = g1;
    if (needs_regrid(name)) {
      guess = resample(g1, opt.grid.build(p));
    } else if (good.size() == 2) {
      // secant predictor in (profile, speed)
      const FrontProfile& g0 = good.front();
      const double s = (value - g1.params.get(name)) / (g1.params.get(name) - g0.params.get(name));
      std::vector<double> q1 = g1.packed(), q0 = g0.packed();
      for (std::size_t k = 0; k < q1.size(); ++k) q1[k] += s * (q1[k] - q0[k]);
      guess.unpack(q1);
      guess.c = g1.c + s * (g1.c - g0.c);
    }
    try {
      return solve_front(p, guess, opt.solver);
    } catch (const Error& e) {
      spdlog::debug("continued solve at {} = {} failed: {}", name, value, e.what());
      return fresh();
    }
  };
  auto accept = [&](FrontProfile f) {
    good.push_back(std::move(f));
    if (good.size() > 2) good.erase(good.begin());
  };

  for (int k = 0; k < n_points; ++k) {
    const double target = n_points == 1 ? lo : lo + (hi - lo) * double(k) / (n_points - 1);
    auto r = attempt(target);
    for (int m = 1; !r && !good.empty() && m <= opt.max_halvings; ++m) {
      const double from = good.back().params.get(name);
      const int pieces = 1 << m;
      bool ok = true;
      for (int s = 1; s < pieces && ok; ++s) {
        auto mid = attempt(from + (target - from) * double(s) / pieces);
        if (mid) accept(*mid);
        else ok = false;
      }
      if (ok) r = attempt(target);
    }
    if (!r) {
      spdlog::warn("sweep {}: no converged front at {}", name, target);
      br.failures.push_back(target);
      continue;
    }
    br.points.push_back(make_point(*r, name, opt.compute_lambda2));
    spdlog::info("sweep {} = {:.6g} c = {:.8f} lambda2 = {:.6g}", name, target, r->c, br.points.back().lambda2);
    accept(std::move(*r));
  }
  return br;
}

BranchField branch_field_from_string(const std::string& s) {
  if (s == "lambda2") return BranchField::Lambda2;
  if (s == "gap_width") return BranchField::GapWidth;
  throw ValidationError(fmt::format("unknown branch field \"{}\"", s));
}

namespace {

double field_of(const BranchPoint& b, BranchField f) { return f == BranchField::Lambda2 ? b.lambda2 : b.gap_signed; }

double field_at(const ModelParams& base, const std::string& name, double value, BranchField field,
                const SweepOptions& opt) {
  ModelParams p = base;
  p.set(name, value);
  if (field == BranchField::GapWidth)
    return std::log(p.delta1 * solve_w_star(p)) / (p.epsilon * std::sqrt(p.delta3));
  return lambda2_solvability(solve_front(p, opt.grid, opt.solver)).value;
}

}  // namespace

std::vector<ZeroCrossing> find_zero(const ContinuationBranch& br, BranchField field, const ModelParams& base,
                                    const SweepOptions& opt, double tol) {
  std::vector<ZeroCrossing> out;
  for (std::size_t k = 0; k + 1 < br.points.size(); ++k) {
    double a = br.points[k].param_value, b = br.points[k + 1].param_value;
    double fa = field_of(br.points[k], field), fb = field_of(br.points[k + 1], field);
    if (!(std::isfinite(fa) && std::isfinite(fb)) || fa * fb > 0.0) continue;
    if (fa == 0.0) {
      out.push_back({a, 0.0, 0});
      continue;
    }
    if (fb == 0.0) continue;
    // Illinois regula falsi
    int side = 0, it = 0;
    double x = a, fx = fa;
    for (; it < 80; ++it) {
      x = (a * fb - b * fa) / (fb - fa);
      fx = field_at(base, br.swept_param, x, field, opt);
      if (std::abs(fx) < tol || std::abs(b - a) < 1e-14 * std::max(1.0, std::abs(x))) break;
      if (fx * fb < 0.0) {
        a = b;
        fa = fb;
        side = 0;
      } else if (side == 1) {
        fa *= 0.5;
      } else {
        side = 1;
      }
      b = x;
      fb = fx;
    }
    out.push_back({x, fx, it + 1});
  }
  if (out.empty())
    throw NoSignChange(fmt::format("{} has no sign change along the {} branch",
                                   field == BranchField::Lambda2 ? "lambda2" : "gap_width", br.swept_param));
  return out;
}

void write_branch_csv(const ContinuationBranch& b, const std::filesystem::path& path) {
  CsvWriter w(path, {"param", "c", "lambda2", "gap_width", "regime"});
  for (const auto& p : b.points)
    w.raw(fmt::format("{},{},{},{},{}", fmt_num(p.param_value), fmt_num(p.c), fmt_num(p.lambda2),
                      fmt_num(p.gap_width), to_string(p.regime)));
}

void to_json(nlohmann::json& j, const BoundaryOptions& o) {
  j = {{"sweep", o.sweep}, {"step", o.step}, {"edge_scan_points", o.edge_scan_points},
       {"max_points", o.max_points}, {"tol", o.tol}};
}

void from_json(const nlohmann::json& j, BoundaryOptions& o) {
  JsonReader r(j, "boundary_options");
  if (auto* s = r.child("sweep")) o.sweep = s->get<SweepOptions>();
  r.get("step", o.step);
  r.get("edge_scan_points", o.edge_scan_points);
  r.get("max_points", o.max_points);
  r.get("tol", o.tol);
  r.finish();
}

double lambda2_at(const ModelParams& p, const SweepOptions& opt) {
  return lambda2_solvability(solve_front(p, opt.grid, opt.solver)).value;
}

namespace {

// lambda2 on the region in normalized coordinates (X, Y) in [0, 1]^2.
struct PlaneField {
  ModelParams base;
  Region r;
  const SweepOptions& opt;
  int evaluations = 0;

  double x_of(double X) const { return r.x_min + X * (r.x_max - r.x_min); }
  double y_of(double Y) const { return r.y_min + Y * (r.y_max - r.y_min); }
  double operator()(double X, double Y) {
    ModelParams p = base;
    p.delta1 = x_of(X);
    p.delta2 = y_of(Y);
    ++evaluations;
    return lambda2_at(p, opt);
  }
  double safe(double X, double Y) {
    try {
      return (*this)(X, Y);
    } catch (const Error&) {
      return kNaN;
    }
  }
};

bool inside(double X, double Y) { return X >= 0.0 && X <= 1.0 && Y >= 0.0 && Y <= 1.0; }

}  // namespace

BoundaryCurve trace_boundary(const ModelParams& base, const Region& region, const BoundaryOptions& opt) {
  if (!(region.x_max > region.x_min && region.y_max > region.y_min))
    throw ValidationError("trace_boundary region must have positive extent");
  PlaneField F{base, region, opt.sweep};
  BoundaryCurve out;

  // edge scan: left, bottom, top, right; first sign change seeds the curve
  struct Edge {
    double X0, Y0, X1, Y1;
  };
  const Edge edges[] = {{0, 0, 0, 1}, {0, 0, 1, 0}, {0, 1, 1, 1}, {1, 0, 1, 1}};
  double sx = kNaN, sy = kNaN, ex = 0.0;
  for (const Edge& e : edges) {
    double tp = kNaN, fp = kNaN;
    for (int k = 0; k < opt.edge_scan_points; ++k) {
      const double t = double(k) / (opt.edge_scan_points - 1);
      const double f = F.safe(e.X0 + t * (e.X1 - e.X0), e.Y0 + t * (e.Y1 - e.Y0));
      if (std::isfinite(f) && std::isfinite(fp) && f * fp <= 0.0) {
        double a = tp, b = t, fa = fp, fb = f;
        double tm = b;
        for (int it = 0; it < 60; ++it) {
          tm = (a * fb - b * fa) / (fb - fa);
          const double fm = F(e.X0 + tm * (e.X1 - e.X0), e.Y0 + tm * (e.Y1 - e.Y0));
          if (std::abs(fm) < opt.tol) break;
          if (fm * fb < 0.0) {
            a = b;
            fa = fb;
          } else {
            fa *= 0.5;
          }
          b = tm;
          fb = fm;
        }
        sx = e.X0 + tm * (e.X1 - e.X0);
        sy = e.Y0 + tm * (e.Y1 - e.Y0);
        ex = e.X1 - e.X0;
        break;
      }
      if (std::isfinite(f)) {
        tp = t;
        fp = f;
      }
    }
    if (std::isfinite(sx)) break;
  }
  if (!std::isfinite(sx)) throw BoundaryNotFound("no sign change of lambda2 on the region edges");

  // march: tangent from a forward-difference gradient, corrector along the normal line
  const double h = 1e-5;
  double X = sx, Y = sy, tX = 0.0, tY = 0.0;  // initial direction points into the region
  if (ex == 0.0) {
    tX = sx == 0.0 ? 1.0 : -1.0;
    tY = 0.0;
  } else {
    tX = 0.0;
    tY = sy == 0.0 ? 1.0 : -1.0;
  }
  double fP = F(X, Y);
  out.termination = "max_points";
  for (int k = 0; k < opt.max_points; ++k) {
    out.points.emplace_back(F.x_of(X), F.y_of(Y));
    out.residuals.push_back(fP);
    const double gX = (F(X + h, Y) - fP) / h, gY = (F(X, Y + h) - fP) / h;
    const double gn = std::hypot(gX, gY);
    if (!(gn > 0.0)) {
      out.termination = "degenerate_gradient";
      break;
    }
    if (k == 0) out.stable_side = gY > 0.0 ? "below" : "above";
    double dX = -gY / gn, dY = gX / gn;
    if (dX * tX + dY * tY < 0.0) {
      dX = -dX;
      dY = -dY;
    }
    tX = dX;
    tY = dY;
    bool placed = false;
    for (int halving = 0; halving <= 3 && !placed; ++halving) {
      const double st = opt.step / double(1 << halving);
      const double PX = X + st * tX, PY = Y + st * tY;
      if (!inside(PX, PY)) break;
      // secant along the gradient direction
      double s0 = 0.0, f0 = F.safe(PX, PY);
      if (!std::isfinite(f0)) continue;
      double s1 = -f0 / gn, f1 = F.safe(PX + s1 * gX / gn, PY + s1 * gY / gn);
      for (int it = 0; it < 25 && std::isfinite(f1) && std::abs(f1) >= opt.tol; ++it) {
        const double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = F.safe(PX + s1 * gX / gn, PY + s1 * gY / gn);
      }
      if (std::isfinite(f1) && std::abs(f1) < opt.tol && std::abs(s1) < 2.0 * st) {
        X = PX + s1 * gX / gn;
        Y = PY + s1 * gY / gn;
        fP = f1;
        placed = true;
      }
    }
    if (!placed) {
      const double PX = X + opt.step * tX, PY = Y + opt.step * tY;
      out.termination = inside(PX, PY) ? "corrector_failed" : "CurveExitedRegion";
      break;
    }
    if (!inside(X, Y)) {
      out.termination = "CurveExitedRegion";
      break;
    }
  }
  spdlog::info("boundary: {} points, {} lambda2 evaluations, {}", out.points.size(), F.evaluations,
               out.termination);

  for (int k = 0; k <= 64; ++k) {
    ModelParams p = base;
    p.delta2 = region.y_min + (region.y_max - region.y_min) * k / 64.0;
    try {
      const double vp = compute_v_pm(p).vplus;
      out.regime_curve.emplace_back(1.0 / vp, p.delta2);
    } catch (const Error&) {
    }
  }
  return out;
}

void write_boundary_csv(const BoundaryCurve& b, const std::filesystem::path& path) {
  CsvWriter w(path, {"delta1", "delta2", "side"});
  for (const auto& [x, y] : b.points) w.raw(fmt::format("{},{},lambda2_zero", fmt_num(x), fmt_num(y)));
  for (const auto& [x, y] : b.regime_curve) w.raw(fmt::format("{},{},benign_malignant", fmt_num(x), fmt_num(y)));
}

}  // namespace tumorfront
