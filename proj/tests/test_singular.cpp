#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "tumorfront/errors.hpp"
#include "tumorfront/singular.hpp"

using namespace tumorfront;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi), fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Matching residual from direct quadrature of 1 + a + sqrt(radicand).
double w_star_oracle(const ModelParams& p, int n) {
  const double vp = compute_v_pm(p).vplus;
  auto integrand = [&](double z) { return 1.0 + p.a + std::sqrt((1 - p.a) * (1 - p.a) - 4 * p.delta2 * z / p.rho); };
  return bisect([&](double w) { return vp * vp - simpson(integrand, w, vp, n); }, 0.0, vp);
}

ModelParams with(double a, double delta1, double delta2) {
  ModelParams p;
  p.a = a;
  p.delta1 = delta1;
  p.delta2 = delta2;
  return p;
}

}  // namespace

TEST_CASE("layer branches: closed forms and cubic roots") {
  ModelParams p = with(0.3, 12.5, 0.0);
  for (double w : {0.0, 0.4, 2.0}) {
    const auto b = layer_branches(w, p);
    CHECK(b.vminus == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(b.vplus == doctest::Approx(1.0).epsilon(1e-15));
  }
  p = with(0.1, 12.5, 0.1);
  const double w_fold = (1 - p.a) * (1 - p.a) * p.rho / (4 * p.delta2);
  const auto f = layer_branches(w_fold, p);
  CHECK(f.vplus == doctest::Approx(0.55).epsilon(1e-7));
  CHECK(f.vminus == doctest::Approx(0.55).epsilon(1e-7));
  CHECK_THROWS_AS(layer_branches(w_fold * 1.01, p), BeyondFold);
  CHECK_THROWS_AS(layer_speed(w_fold, p, Subspace::NoNormalCells), BeyondFold);

  auto cubic = [&](double v) { return p.rho * (1 - v) * (v - p.a) - p.delta2 * 0.5; };
  const auto b = layer_branches(0.5, p);
  CHECK(b.vplus == doctest::Approx(bisect(cubic, 0.55, 1.0)).epsilon(1e-12));
  CHECK(b.vminus == doctest::Approx(bisect([&](double v) { return -cubic(v); }, 0.1, 0.55)).epsilon(1e-12));
}

TEST_CASE("layer front solves the travelling layer equation") {
  for (const ModelParams& p : {with(0.1, 12.5, 0.1), with(0.35, 12.5, 0.1), with(0.25, 11.5, 3.0)}) {
    ModelParams q = p;
    if (p.delta2 == 3.0) {
      q.kappa = 0.05;
      q.rho = 15;
      q.delta3 = 1;
    }
    for (Subspace s : {Subspace::NormalCells, Subspace::NoNormalCells})
      for (double w : {0.0, 0.02, 0.05}) {
        if (s == Subspace::NormalCells && q.delta1 * w >= 1) {
          CHECK_THROWS_AS(layer_front(0.0, w, q, s), SubspaceInvalid);
          continue;
        }
        const auto br = layer_branches(w, q);
        const double D = layer_diffusion(w, q, s), c = layer_speed(w, q, s);
        const double k = br.vplus / 2 * std::sqrt(q.rho / (2 * D));
        double worst = 0.0;
        for (int i = 0; i <= 1000; ++i) {
          const double xi = -50.0 / k + 100.0 / k * i / 1000.0;
          const LayerPoint lp = layer_front(xi, w, q, s);
          const double t = std::tanh(k * xi);
          const double v1 = br.vplus / 2 * k * (1 - t * t);
          const double v2 = -2 * k * t * v1;
          const double v = lp.v;
          worst = std::max(worst, std::abs(D * v2 - c * v1 + q.rho * v * (1 - v) * (v - q.a) - q.delta2 * v * w));
          CHECK(lp.q == doctest::Approx(D * v1 - c * v).epsilon(1e-12).scale(1.0));
        }
        CHECK(worst < 1e-10);
        CHECK(layer_front(0.0, w, q, s).v == doctest::Approx(br.vplus / 2));
        CHECK(layer_front(-60.0 / k, w, q, s).v < 1e-40);
        CHECK(layer_front(60.0 / k, w, q, s).v == doctest::Approx(br.vplus).epsilon(1e-14));
      }
  }
}

TEST_CASE("layer speed special cases") {
  ModelParams p = with(0.5, 12.5, 0.0);
  CHECK(std::abs(layer_speed(0.3, p, Subspace::NoNormalCells)) < 1e-15);
  p = with(0.2, 12.5, 0.0);
  CHECK(layer_speed(0.0, p, Subspace::NormalCells) == doctest::Approx(std::sqrt(2 * p.kappa) * (0.5 - 0.2)));
  CHECK_THROWS_AS(layer_diffusion(0.1, p, Subspace::NormalCells), SubspaceInvalid);
}

TEST_CASE("w* matches the quadrature oracle and the Hamiltonian matching") {
  CHECK(solve_w_star(with(0.3, 12.5, 0.0)) == 0.5);
  for (const ModelParams& p : {with(0.1, 12.5, 0.1), with(0.25, 12.5, 0.1), with(0.35, 12.5, 0.1)}) {
    const double ws = solve_w_star(p);
    const double o1 = w_star_oracle(p, 2000), o2 = w_star_oracle(p, 4000);
    CHECK(std::abs(o1 - o2) < 1e-10);
    CHECK(std::abs(ws - o2) < 1e-10);
    CHECK(std::abs(w_star_residual(ws, p)) < 1e-12);
    const HamiltonianPair H(p);
    CHECK(std::abs(H.Eplus(ws, std::sqrt(p.delta3) * ws)) < 1e-10);
    CHECK(std::abs(H.E0(ws, std::sqrt(p.delta3) * ws)) < 1e-15);
    CHECK(std::abs(H.Eplus(H.Vplus, 0.0)) < 1e-15);
    CHECK(ws > 0.0);
    CHECK(ws < H.Vplus);
  }
}

TEST_CASE("regime classification") {
  CHECK(classify_regime(ModelParams{}).tag == RegimeTag::MalignantGap);
  CHECK(classify_regime(with(0.1, 0.5, 0.0)).tag == RegimeTag::Benign);
  CHECK(classify_regime(with(0.1, 2.0, 0.0)).tag == RegimeTag::Crossover);
  CHECK(classify_regime(with(0.1, 2.0, 0.1)).tag == RegimeTag::MalignantNoGap);
  ModelParams bad = with(0.1, 12.5, 0.9);
  CHECK_THROWS_AS(classify_regime(bad), ComplexRoots);
}

TEST_CASE("slow orbits: closed forms, momentum and the change of variables identity") {
  for (double a : {0.1, 0.25, 0.35}) {
    const ModelParams p = with(a, 12.5, 0.1);
    const double ws = solve_w_star(p);
    const SlowOrbits o = slow_orbits(p, ws);
    const double sd3 = std::sqrt(p.delta3);
    CHECK(o.I_minus == doctest::Approx(sd3 * ws * ws / 2).epsilon(1e-13));
    for (const auto& s : o.minus) {
      CHECK(s.w == doctest::Approx(ws * std::exp(sd3 * s.zeta)).epsilon(1e-12));
      CHECK(s.p == doctest::Approx(sd3 * s.w).epsilon(1e-12));
    }
    const HamiltonianPair H(p);
    double prev_zeta = -1.0, prev_w = 0.0;
    for (const auto& s : o.plus) {
      CHECK(std::abs(H.Eplus(s.w, s.p)) < 1e-10);
      CHECK(s.p == doctest::Approx(slow_plus_momentum(s.w, p)).epsilon(1e-12));
      CHECK(s.zeta > prev_zeta);
      CHECK(s.w > prev_w);
      prev_zeta = s.zeta;
      prev_w = s.w;
    }
    CHECK(o.plus.front().w == doctest::Approx(ws).epsilon(1e-12));
    CHECK(H.Vplus - o.plus.back().w < 1e-6);
    CHECK(o.plus.back().p < 1e-5);
    // I_plus = int p^2 dzeta = int p dw
    const double ref = simpson([&](double w) { return slow_plus_momentum(w, p); }, ws, H.Vplus, 20000);
    CHECK(o.I_plus == doctest::Approx(ref).epsilon(1e-8));
    // zeta along the plus orbit against int dw / p between two interior samples
    const auto& s1 = o.plus[o.plus.size() / 4];
    const auto& s2 = o.plus[o.plus.size() / 2];
    const double dz = simpson([&](double w) { return 1.0 / slow_plus_momentum(w, p); }, s1.w, s2.w, 20000);
    CHECK(s2.zeta - s1.zeta == doctest::Approx(dz).epsilon(1e-8));
  }
}

TEST_CASE("gap width increases with delta1 and vanishes without a gap") {
  double prev = -1.0;
  for (int i = 2; i <= 150; ++i) {
    const double g = singular_gap_width(with(0.1, 0.1 * i, 0.1)).zeta;
    CHECK(g >= prev);
    prev = g;
  }
  CHECK(singular_gap_width(with(0.1, 0.5, 0.0)).zeta == 0.0);
  CHECK(singular_gap_width(with(0.1, 2.0, 0.0)).zeta == 0.0);
  const ModelParams p;
  const auto g = singular_gap_width(p);
  CHECK(g.zeta == doctest::Approx(std::log(p.delta1 * solve_w_star(p)) / std::sqrt(p.delta3)));
  CHECK(g.xi == doctest::Approx(g.zeta / p.epsilon));
}

TEST_CASE("singular front assembly") {
  const ModelParams b = with(0.25, 0.5, 0.0);
  const SingularFront s = build_singular_front(b);
  CHECK(s.regime.tag == RegimeTag::Benign);
  CHECK(s.w_star == 0.5);
  CHECK(s.u_star == doctest::Approx(0.75));
  CHECK(s.c_star == doctest::Approx(std::sqrt(2 * (b.kappa + 0.25)) * 0.25));

  const ModelParams p;
  const SingularFront g = build_singular_front(p);
  CHECK(g.regime.tag == RegimeTag::MalignantGap);
  CHECK(g.u_star == 0.0);
  CHECK(g.c_star == doctest::Approx(layer_speed(g.w_star, p, Subspace::NoNormalCells)));
  CHECK(g.subspace == Subspace::NoNormalCells);
  const bool split = std::any_of(g.slow.minus.begin(), g.slow.minus.end(), [](auto& s) { return s.branch == "M0_1"; }) &&
                     std::any_of(g.slow.minus.begin(), g.slow.minus.end(), [](auto& s) { return s.branch == "M0_0"; });
  CHECK(split);
  const auto rep = singular_report(g);
  for (const char* k : {"regime", "w_star", "c_star", "u_star", "v_plus_star", "gap_width_zeta", "gap_width_xi", "I_minus", "I_plus"})
    CHECK(rep.contains(k));
}
