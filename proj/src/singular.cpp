#include "tumorfront/singular.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "tumorfront/errors.hpp"

namespace tumorfront {

namespace {

constexpr double kFoldGuard = 1e-10;

// sqrt(R(V+)) on the upper layer branch, 2 V+ - (1 + a).
double sqrt_radicand_at_vplus(const ModelParams& p, double vplus) {
  if (p.delta2 == 0.0) return 1.0 - p.a;
  const double s = std::sqrt(std::max(0.0, v_discriminant(p)));
  const double sb = (s - p.delta2) / p.rho;
  if (!(sb > 0.0))
    throw NoRoot(fmt::format("V+ = {} lies on the middle layer branch; no slow manifold reaches it", vplus));
  return sb;
}

// Mean-value factor (A + sqrt(AB) + B) / (sqrt A + sqrt B); equals 1.5 sqrt(A) when A = B.
double mean_factor(double sa, double sb) { return (sa * sa + sa * sb + sb * sb) / (sa + sb); }

}  // namespace

std::string to_string(Subspace s) { return s == Subspace::NormalCells ? "U_eq_1_minus_d1w" : "U_eq_0"; }

Subspace subspace_from_string(const std::string& s) {
  if (s == "U_eq_1_minus_d1w") return Subspace::NormalCells;
  if (s == "U_eq_0") return Subspace::NoNormalCells;
  throw ValidationError(fmt::format("unknown subspace \"{}\"", s));
}

double layer_radicand(double w, const ModelParams& p) {
  const double d = 1.0 - p.a;
  return d * d - 4.0 * p.delta2 * w / p.rho;
}

LayerBranches layer_branches(double w, const ModelParams& p) {
  if (!(w >= 0.0)) throw ValidationError(fmt::format("acid level w = {} must be nonnegative", w));
  const double R = layer_radicand(w, p);
  if (R < 0.0) throw BeyondFold(fmt::format("radicand {} < 0 at w = {}", R, w));
  const double sr = p.delta2 == 0.0 ? 1.0 - p.a : std::sqrt(R);
  return {(1.0 + p.a - sr) / 2.0, (1.0 + p.a + sr) / 2.0};
}

double layer_diffusion(double w, const ModelParams& p, Subspace s) {
  if (s == Subspace::NoNormalCells) return 1.0 + p.kappa;
  if (p.delta1 * w >= 1.0)
    throw SubspaceInvalid(fmt::format("delta1 w = {} >= 1: normal cells cannot persist", p.delta1 * w));
  return p.kappa + p.delta1 * w;
}

namespace {
LayerBranches guarded_branches(double w, const ModelParams& p) {
  const LayerBranches b = layer_branches(w, p);
  if (layer_radicand(w, p) < kFoldGuard)
    throw BeyondFold(fmt::format("w = {} within {} of the fold", w, kFoldGuard));
  return b;
}
}  // namespace

double layer_speed(double w, const ModelParams& p, Subspace s) {
  const LayerBranches b = guarded_branches(w, p);
  const double D = layer_diffusion(w, p, s);
  return std::sqrt(2.0 * D * p.rho) * (b.vplus / 2.0 - b.vminus);
}

LayerPoint layer_front(double xi, double w, const ModelParams& p, Subspace s) {
  const LayerBranches b = guarded_branches(w, p);
  const double D = layer_diffusion(w, p, s);
  const double c = std::sqrt(2.0 * D * p.rho) * (b.vplus / 2.0 - b.vminus);
  const double k = b.vplus / 2.0 * std::sqrt(p.rho / (2.0 * D));
  const double t = std::tanh(k * xi);
  const double v = b.vplus / 2.0 * (1.0 + t);
  const double dv = b.vplus / 2.0 * k * (1.0 - t * t);
  return {v, D * dv - c * v};
}

HamiltonianPair::HamiltonianPair(const ModelParams& p) : params(p), Vplus(compute_v_pm(p).vplus) {}

double HamiltonianPair::E0(double w, double pz) const { return 0.5 * pz * pz - 0.5 * params.delta3 * w * w; }

double HamiltonianPair::vplus_integral(double w) const {
  const double sa = std::sqrt(std::max(0.0, layer_radicand(w, params)));
  const double sb = sqrt_radicand_at_vplus(params, Vplus);
  return (w - Vplus) * (0.5 * (1.0 + params.a) + mean_factor(sa, sb) / 3.0);
}

double HamiltonianPair::Eplus(double w, double pz) const {
  return 0.5 * pz * pz - params.delta3 * (0.5 * (w - Vplus) * (w + Vplus) - vplus_integral(w));
}

double w_star_residual(double w, const ModelParams& p) {
  const double vp = compute_v_pm(p).vplus;
  const double sa = std::sqrt(std::max(0.0, layer_radicand(w, p)));
  const double sb = sqrt_radicand_at_vplus(p, vp);
  return vp * vp + (w - vp) * ((1.0 + p.a) + 2.0 / 3.0 * mean_factor(sa, sb));
}

double solve_w_star(const ModelParams& p) {
  if (p.delta2 == 0.0) return 0.5;
  const double vp = compute_v_pm(p).vplus;
  auto f = [&](double w) { return w_star_residual(w, p); };
  const double lo = 0.0, hi = vp;
  const double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw NoRoot(fmt::format("matching residual has no sign change on (0, {}): {} {}", vp, flo, fhi));
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                             boost::math::tools::eps_tolerance<double>(), iters);
  double w = 0.5 * (r.first + r.second);
  if (std::abs(f(r.first)) < std::abs(f(w))) w = r.first;
  if (std::abs(f(r.second)) < std::abs(f(w))) w = r.second;
  return w;
}

std::string to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::Benign: return "Benign";
    case RegimeTag::MalignantNoGap: return "MalignantNoGap";
    case RegimeTag::MalignantGap: return "MalignantGap";
    case RegimeTag::Crossover: return "Crossover";
  }
  return "?";
}

Regime classify_regime(const ModelParams& p) {
  const double vp = compute_v_pm(p).vplus;
  const double ws = solve_w_star(p);
  Regime r{RegimeTag::Benign, p.delta1 * vp - 1.0, p.delta1 * ws - 1.0};
  if (std::abs(r.gap_discriminator) < kCrossoverTol) r.tag = RegimeTag::Crossover;
  else if (r.benign_discriminator < 0.0) r.tag = RegimeTag::Benign;
  else if (r.gap_discriminator < 0.0) r.tag = RegimeTag::MalignantNoGap;
  else r.tag = RegimeTag::MalignantGap;
  return r;
}

double slow_plus_momentum(double w, const ModelParams& p) {
  const double vp = compute_v_pm(p).vplus;
  const double sa = std::sqrt(std::max(0.0, layer_radicand(w, p)));
  const double sb = sqrt_radicand_at_vplus(p, vp);
  const double corr = 8.0 * p.delta2 / (3.0 * p.rho) * (sa + 0.5 * sb) / ((sa + sb) * (sa + sb));
  return std::sqrt(p.delta3) * (vp - w) * std::sqrt(1.0 + corr);
}

SlowOrbits slow_orbits(const ModelParams& p, double w_star, int n_samples) {
  const double vp = compute_v_pm(p).vplus;
  if (!(w_star > 0.0 && w_star < vp))
    throw ValidationError(fmt::format("w* = {} outside (0, V+ = {})", w_star, vp));
  const double sd3 = std::sqrt(p.delta3);
  SlowOrbits o;
  const double tail = std::log(1e-8);
  auto minus_branch = [&](double w) { return p.delta1 * w < 1.0 ? "M0_1" : "M0_0"; };
  auto plus_branch = [&](double w) { return p.delta1 * w < 1.0 ? "M+_1" : "M+_0"; };
  for (int j = 0; j <= n_samples; ++j) {
    const double zeta = tail / sd3 * (1.0 - double(j) / n_samples);
    const double w = w_star * std::exp(sd3 * zeta);
    o.minus.push_back({zeta, w, sd3 * w, minus_branch(w)});
  }

  // zeta(w) = int dw / p; in s = ln(V+ - w) the integrand (V+ - w) / p is smooth and bounded
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto dzeta_ds = [&](double s) {
    const double w = vp - std::exp(s);
    return std::exp(s) / slow_plus_momentum(w, p);
  };
  const double s0 = std::log(vp - w_star);
  double zeta = 0.0;
  double sprev = s0;
  o.plus.push_back({0.0, w_star, slow_plus_momentum(w_star, p), plus_branch(w_star)});
  for (int j = 1; j <= n_samples; ++j) {
    const double s = s0 + tail * double(j) / n_samples;
    const double w = vp - std::exp(s);
    double err = 0.0;
    zeta -= GK::integrate(dzeta_ds, sprev, s, 5, 1e-11, &err);
    const double pw = slow_plus_momentum(w, p);
    if (!(pw > 0.0) || !std::isfinite(zeta))
      throw IntegrationFailure(fmt::format("slow orbit lost sign consistency at w = {} (p = {})", w, pw));
    o.plus.push_back({zeta, w, pw, plus_branch(w)});
    sprev = s;
  }

  o.I_minus = sd3 * w_star * w_star / 2.0;
  double err = 0.0;
  o.I_plus = GK::integrate([&](double w) { return slow_plus_momentum(w, p); }, w_star, vp, 8, 1e-12, &err);
  return o;
}

GapWidth singular_gap_width(const ModelParams& p) {
  const Regime r = classify_regime(p);
  if (r.tag != RegimeTag::MalignantGap) return {0.0, 0.0};
  const double ws = solve_w_star(p);
  const double z = std::log(p.delta1 * ws) / std::sqrt(p.delta3);
  return {z, z / p.epsilon};
}

LayerPoint SingularFront::layer(double xi) const { return layer_front(xi, w_star, params, subspace); }

double SingularFront::layer_rate() const { return v_plus_star / 2.0 * std::sqrt(params.rho / (2.0 * layer_D)); }

SingularFront build_singular_front(const ModelParams& p) {
  p.validate();
  SingularFront f;
  f.params = p;
  f.Vplus = compute_v_pm(p).vplus;
  f.regime = classify_regime(p);
  f.w_star = solve_w_star(p);
  const bool normal = p.delta1 * f.w_star < 1.0 && f.regime.tag != RegimeTag::Crossover;
  f.subspace = normal ? Subspace::NormalCells : Subspace::NoNormalCells;
  f.u_star = normal ? 1.0 - p.delta1 * f.w_star : 0.0;
  const LayerBranches b = layer_branches(f.w_star, p);
  f.v_plus_star = b.vplus;
  f.v_minus_star = b.vminus;
  f.layer_D = layer_diffusion(f.w_star, p, f.subspace);
  f.c_star = layer_speed(f.w_star, p, f.subspace);
  f.slow = slow_orbits(p, f.w_star);
  f.gap = singular_gap_width(p);
  return f;
}

nlohmann::json singular_report(const SingularFront& f) {
  return {{"regime", to_string(f.regime.tag)},
          {"w_star", f.w_star},
          {"c_star", f.c_star},
          {"u_star", f.u_star},
          {"v_plus_star", f.v_plus_star},
          {"gap_width_zeta", f.gap.zeta},
          {"gap_width_xi", f.gap.xi},
          {"I_minus", f.slow.I_minus},
          {"I_plus", f.slow.I_plus},
          {"subspace", to_string(f.subspace)},
          {"benign_discriminator", f.regime.benign_discriminator},
          {"gap_discriminator", f.regime.gap_discriminator}};
}

}  // namespace tumorfront
