#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>

#include "doctest.h"
#include "tumorfront/errors.hpp"
#include "tumorfront/spectral.hpp"

using namespace tumorfront;

namespace {

ModelParams set_a(double a) {
  ModelParams p;
  p.a = a;
  return p;
}

const FrontProfile& a10_front() {
  static const FrontProfile f = solve_front(set_a(0.1));
  return f;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("dense eigenvalues of a block matrix with known spectrum") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A(0, 0) = -1.0;
  A(1, 1) = 2.0;
  A(2, 2) = 0.5;
  A(2, 3) = -3.0;
  A(3, 2) = 3.0;
  A(3, 3) = 0.5;
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(4, 4)).householderQ();
  auto ev = dense_eigenvalues(Q * A * Q.transpose());
  std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); });
  CHECK(std::abs(ev[0] - std::complex<double>(-1, 0)) < 1e-12);
  CHECK(std::abs(ev[1] - std::complex<double>(0.5, -3)) < 1e-12);
  CHECK(std::abs(ev[2] - std::complex<double>(0.5, 3)) < 1e-12);
  CHECK(std::abs(ev[3] - std::complex<double>(2, 0)) < 1e-12);
}

TEST_CASE("linearized operator is the Frechet derivative of the comoving residual") {
  const FrontProfile& f = a10_front();
  const LinearizedOperator op = assemble_L(f, 0.0);
  const std::vector<double> q0 = f.packed();
  const double e2 = f.params.epsilon * f.params.epsilon;
  std::vector<double> dir(q0.size(), 0.0);
  for (int k : op.keep) dir[std::size_t(k)] = std::sin(0.01 * k) * std::exp(-std::pow(f.grid.nodes[std::size_t(k) / 3] / 40.0, 2));
  const double h = 1e-6;
  std::vector<double> qp = q0, qm = q0, rp, rm;
  for (std::size_t i = 0; i < q0.size(); ++i) {
    qp[i] += h * dir[i];
    qm[i] -= h * dir[i];
  }
  tw_residual_packed(f.params, f.grid.nodes, qp, f.c, f.bc, rp);
  tw_residual_packed(f.params, f.grid.nodes, qm, f.c, f.bc, rm);
  // the residual carries epsilon^2 on its w rows
  const Eigen::VectorXd Lx = op.L0 * op.restrict(dir);
  double worst = 0.0, scale = 0.0;
  for (std::size_t r = 0; r < op.keep.size(); ++r) {
    const std::size_t k = std::size_t(op.keep[r]);
    double fd = (rp[k] - rm[k]) / (2 * h);
    if (k % 3 == 2) fd /= e2;
    worst = std::max(worst, std::abs(fd - Lx[Eigen::Index(r)]));
    scale = std::max(scale, std::abs(fd));
  }
  CHECK(worst < 1e-6 * scale);
}

TEST_CASE("L(ell) is even in ell and differs from L(0) by the diagonal symbol") {
  const FrontProfile& f = a10_front();
  const LinearizedOperator a = assemble_L(f, 0.03), b = assemble_L(f, -0.03), z = assemble_L(f, 0.0);
  const Eigen::SparseMatrix<double> d = a.matrix() - b.matrix();
  CHECK(d.norm() == 0.0);
  const Eigen::SparseMatrix<double> dz = z.matrix() - a.matrix();
  Eigen::VectorXd diag = dz.diagonal();
  CHECK((diag - 0.03 * 0.03 * z.B).norm() < 1e-14 * z.matrix().diagonal().norm());
  CHECK(std::abs(dz.norm() - diag.norm()) < 1e-9 * diag.norm());
}

TEST_CASE("wave derivative is an approximate kernel vector") {
  const FrontProfile& f = a10_front();
  const LinearizedOperator op = assemble_L(f, 0.0);
  const Eigen::VectorXd t = translation_mode(f, op);
  const Eigen::SparseMatrix<double> L = op.matrix();
  const Eigen::VectorXd r = L * t;
  double n1 = 0.0;
  for (int k = 0; k < L.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it) n1 = std::max(n1, std::abs(it.value()));
  CHECK(r.norm() < 1e-4 * n1 * t.norm());
}

TEST_CASE("adjoint null vector: residual, pairing and scaling invariance of lambda2") {
  const FrontProfile& f = a10_front();
  const AdjointSolution adj = adjoint(f);
  CHECK(adj.residual < 1e-8);
  CHECK(adj.sigma_2 > 10 * adj.sigma_min);
  CHECK(adj.pairing > 0.0);
  // trapezoid pairing with q'
  const auto& x = f.grid.nodes;
  const auto du = node_derivative(x, f.u), dv = node_derivative(x, f.v), dw = node_derivative(x, f.w);
  double pair = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wt = 0.5 * ((i > 0 ? x[i] - x[i - 1] : 0.0) + (i + 1 < x.size() ? x[i + 1] - x[i] : 0.0));
    pair += wt * (adj.uA[i] * du[i] + adj.vA[i] * dv[i] + adj.wA[i] * dw[i]);
  }
  CHECK(pair == doctest::Approx(1.0).epsilon(1e-8));

  const Lambda2Result base = lambda2_solvability(f, adj);
  AdjointSolution scaled = adj;
  for (auto* a : {&scaled.uA, &scaled.vA, &scaled.wA})
    for (double& v : *a) v *= -3.7;
  scaled.y *= -3.7;
  CHECK(lambda2_solvability(f, scaled).value == doctest::Approx(base.value).epsilon(1e-12));
  CHECK(base.value == doctest::Approx(0.046908).epsilon(1e-3));
  CHECK(base.sign == 1);
}

TEST_CASE("quadratic fit agrees with the solvability value") {
  for (double a : {0.1, 0.25}) {
    const FrontProfile f = solve_front(set_a(a));
    const double s = lambda2_solvability(f).value;
    const Lambda2Result q = lambda2_quadratic_fit(f);
    CHECK(q.value == doctest::Approx(s).epsilon(0.02));
    // halving the window keeps the estimate
    const double half = lambda2_quadratic_fit(f, 0.5 * q.components.at("ell_max")).value;
    CHECK(half == doctest::Approx(q.value).epsilon(0.01));
  }
}

TEST_CASE("dense spectrum of the a = 0.1 front: translation eigenvalue and stable remainder") {
  GridSpec g;
  g.hc = 0.3;
  const FrontProfile f = solve_front(set_a(0.1), g);
  const SpectrumResult s = spectrum_1d(f, 10);
  CHECK(std::abs(s.leading) < 1e-4);
  CHECK(s.max_re_excluding_translation < 0.0);
  CHECK(s.n_unstable_excluding_translation == 0);
  for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) CHECK(s.eigenvalues[i].real() <= s.eigenvalues[i - 1].real());
}

TEST_CASE("critical curve is even and quadratic for small ell") {
  const FrontProfile& f = a10_front();
  const double l2 = lambda2_solvability(f).value;
  const double e = default_ell_scale(f.params);
  const auto curve = critical_curve(f, {0.0, -0.05 * e, 0.05 * e, 0.1 * e});
  REQUIRE(curve.size() == 4);
  CHECK(curve[1].lambda == doctest::Approx(curve[2].lambda).epsilon(1e-6));
  // the discrete translation eigenvalue is not exactly zero
  const double l0 = curve[0].lambda;
  CHECK(std::abs(l0) < 1e-6);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    CHECK(curve[k].overlap >= 0.5);
    CHECK((curve[k].lambda - l0) / (curve[k].ell * curve[k].ell) == doctest::Approx(l2).epsilon(0.05));
  }
}

TEST_CASE("asymptotic route: components and the normal-cell correction identity") {
  const SingularFront s = build_singular_front(set_a(0.1));
  const Lambda2Result r = lambda2_asymptotic(s);
  CHECK(r.components.at("coupling_u") == 0.0);  // no normal cells at the jump
  CHECK(r.components.at("I_minus") == doctest::Approx(s.slow.I_minus));
  CHECK(r.value > 0.0);
  CHECK(sign_criterion(s) == 1);

  // Benign front: the bounded solution of c u' = -F_u u - v' vbar' integrates to int v' vbar' / |F_u|.
  ModelParams p = set_a(0.1);
  p.delta1 = 0.5;
  const SingularFront b = build_singular_front(p);
  REQUIRE(b.u_star > 0.0);
  const UbarSamples u = ubar_profile(b, 4001);
  double integral = 0.0;
  for (std::size_t i = 1; i < u.xi.size(); ++i) integral += 0.5 * (u.xi[i] - u.xi[i - 1]) * (u.ubar[i] + u.ubar[i - 1]);
  const double k = b.v_plus_star * std::sqrt(p.rho / (2 * b.layer_D)), g = b.c_star / b.layer_D;
  auto dv = [&](double x) { return b.v_plus_star * k * std::exp(-k * x) / std::pow(1 + std::exp(-k * x), 2); };
  auto ddv = [&](double x) { return (dv(x + 1e-5) - dv(x - 1e-5)) / 2e-5; };
  const double kernel = simpson([&](double x) { return dv(x) * (ddv(x) - g * dv(x)) * std::exp(-g * x); }, -40.0 / (2 * k - g), 40.0 / (k + g), 40000);
  const double Fu = 1 - 2 * b.u_star - p.delta1 * b.w_star;
  CHECK(Fu < 0.0);
  CHECK(integral == doctest::Approx(kernel / std::abs(Fu)).epsilon(1e-4));
}

TEST_CASE("asymptotic route rejects non-invading fronts") {
  ModelParams p = set_a(0.45);
  const SingularFront s = build_singular_front(p);
  REQUIRE(s.c_star <= 0.0);
  CHECK_THROWS_AS(lambda2_asymptotic(s), ValidationError);
}
