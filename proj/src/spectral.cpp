#include "tumorfront/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tumorfront/errors.hpp"

namespace tumorfront {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

// Neumaier-compensated dot product.
double dot_compensated(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double t = a[i] * b[i];
    const double n = s + t;
    comp += std::abs(s) >= std::abs(t) ? (s - n) + t : (t - n) + s;
    s = n;
  }
  return s + comp;
}

double norm1(const SpMat& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double col = 0.0;
    for (SpMat::InnerIterator it(A, k); it; ++it) col += std::abs(it.value());
    m = std::max(m, col);
  }
  return m;
}

SpMat shifted(const SpMat& A, double sigma) {
  SpMat I(A.rows(), A.cols());
  I.setIdentity();
  SpMat M = A - sigma * I;
  M.makeCompressed();
  return M;
}

struct EigPair {
  double lambda;
  Eigen::VectorXd x;
};

EigPair inverse_iteration(const SpMat& A, double sigma, Eigen::VectorXd x, int max_it = 80, double tol = 1e-13) {
  LU lu;
  lu.compute(shifted(A, sigma));
  if (lu.info() != Eigen::Success) throw EigSolverFailure(fmt::format("shifted factorization failed at {}", sigma));
  x.normalize();
  const Eigen::VectorXd x0 = x;
  double lam = x.dot(A * x);
  for (int it = 0; it < max_it; ++it) {
    Eigen::VectorXd z = lu.solve(x);
    if (!z.allFinite()) throw EigSolverFailure("non-finite inverse iterate");
    z.normalize();
    if (z.dot(x0) < 0.0) z = -z;
    const double ln = z.dot(A * z);
    const double dx = (z - x).norm();
    x.swap(z);
    const bool done = std::abs(ln - lam) <= tol * std::max(1.0, std::abs(ln)) && dx < 1e-9;
    lam = ln;
    if (done) break;
  }
  return {lam, x};
}

}  // namespace

SpMat LinearizedOperator::matrix() const {
  if (ell == 0.0) return L0;
  SpMat M = L0;
  const double l2 = ell * ell;
  for (Eigen::Index i = 0; i < B.size(); ++i)
    if (B[i] != 0.0) M.coeffRef(i, i) -= l2 * B[i];
  M.makeCompressed();
  return M;
}

Eigen::VectorXd LinearizedOperator::restrict(const std::vector<double>& packed) const {
  Eigen::VectorXd x(Eigen::Index(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) x[Eigen::Index(k)] = packed[std::size_t(keep[k])];
  return x;
}

std::vector<double> LinearizedOperator::expand(const Eigen::VectorXd& x) const {
  std::vector<double> out(3 * n_nodes, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) out[std::size_t(keep[k])] = x[Eigen::Index(k)];
  return out;
}

std::uint64_t profile_hash(const FrontProfile& f) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](double d) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &d, sizeof d);
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto* a : {&f.grid.nodes, &f.u, &f.v, &f.w})
    for (double d : *a) mix(d);
  mix(f.c);
  for (const char* name : ModelParams::names()) mix(f.params.get(name));
  return h;
}

LinearizedOperator assemble_L(const FrontProfile& f, double ell) {
  const ModelParams& p = f.params;
  const std::size_t n = f.grid.n();
  TwJacobian tj = tw_jacobian(p, f.grid.nodes, f.packed(), f.c, f.bc);
  // undo the epsilon^2 row scaling of the w equations
  const double ie2 = 1.0 / (p.epsilon * p.epsilon);
  Eigen::VectorXd rs = Eigen::VectorXd::Ones(Eigen::Index(3 * n));
  for (std::size_t i = 0; i < n; ++i) rs[Eigen::Index(3 * i + 2)] = ie2;
  SpMat J = rs.asDiagonal() * tj.J;

  LinearizedOperator op;
  op.ell = ell;
  op.n_nodes = n;
  op.profile_hash = profile_hash(f);
  std::vector<bool> clamped(3 * n, false);
  if (f.bc == BoundaryKind::Dirichlet)
    for (std::size_t k : {std::size_t(0), std::size_t(1), std::size_t(2), 3 * (n - 1) + 1, 3 * (n - 1) + 2})
      clamped[k] = true;
  std::vector<int> pos(3 * n, -1);
  for (std::size_t k = 0; k < 3 * n; ++k)
    if (!clamped[k]) {
      pos[k] = int(op.keep.size());
      op.keep.push_back(int(k));
    }
  const Eigen::Index N = Eigen::Index(op.keep.size());
  std::vector<Eigen::Triplet<double>> T;
  T.reserve(std::size_t(J.nonZeros()));
  for (int col = 0; col < J.outerSize(); ++col) {
    if (pos[std::size_t(col)] < 0) continue;
    for (SpMat::InnerIterator it(J, col); it; ++it) {
      const int r = pos[std::size_t(it.row())];
      if (r >= 0) T.emplace_back(r, pos[std::size_t(col)], it.value());
    }
  }
  op.L0.resize(N, N);
  op.L0.setFromTriplets(T.begin(), T.end());
  op.L0.makeCompressed();
  op.B.resize(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const std::size_t idx = std::size_t(op.keep[std::size_t(k)]);
    const std::size_t field = idx % 3, node = idx / 3;
    op.B[k] = field == 0 ? 0.0 : field == 1 ? 1.0 + p.kappa - f.u[node] : ie2;
  }
  return op;
}

Eigen::VectorXd translation_mode(const FrontProfile& f, const LinearizedOperator& op) {
  const auto& x = f.grid.nodes;
  FrontProfile d = f;
  d.u = node_derivative(x, f.u);
  d.v = node_derivative(x, f.v);
  d.w = node_derivative(x, f.w);
  return op.restrict(d.packed());
}

SpectrumResult spectrum_1d(const FrontProfile& f, int n_eigs, double ell, double tol) {
  if (n_eigs < 1) throw ValidationError("n_eigs must be >= 1");
  const LinearizedOperator op = assemble_L(f, ell);
  const SpMat A = op.matrix();
  const Eigen::Index N = A.rows();
  const Eigen::VectorXd qp = translation_mode(f, op);

  std::vector<std::complex<double>> ev;
  if (std::size_t(N) <= kDenseEigLimit) {
    ev = dense_eigenvalues(Eigen::MatrixXd(A));
  } else {
    // subspace iteration on (A - sigma)^-1 with a Rayleigh-Ritz projection
    const double sigma = 0.05;
    LU lu;
    lu.compute(shifted(A, sigma));
    if (lu.info() != Eigen::Success) throw EigSolverFailure("shifted factorization failed");
    const Eigen::Index k = std::min<Eigen::Index>(N, n_eigs + 8);
    Eigen::MatrixXd Q(N, k);
    Q.col(0) = qp.normalized();
    for (Eigen::Index j = 1; j < k; ++j)
      for (Eigen::Index i = 0; i < N; ++i) Q(i, j) = std::cos(double((i + 1) * (j + 1)) * 0.7071067811865476);
    for (int it = 0; it < 200; ++it) {
      Eigen::MatrixXd Z(N, k);
      for (Eigen::Index j = 0; j < k; ++j) Z.col(j) = lu.solve(Q.col(j));
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
      Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, k);
    }
    const Eigen::MatrixXd H = Q.transpose() * (A * Q);
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
    if (es.info() != Eigen::Success) throw EigSolverFailure("Ritz eigensolve failed");
    for (Eigen::Index j = 0; j < k; ++j) ev.push_back(es.eigenvalues()[j]);
  }
  std::stable_sort(ev.begin(), ev.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });

  const EigPair tr = inverse_iteration(A, 1e-3, qp);
  std::size_t lead = 0;
  for (std::size_t i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - tr.lambda) < std::abs(ev[lead] - tr.lambda)) lead = i;

  SpectrumResult r;
  r.ell = ell;
  r.leading = ev[lead];
  r.max_re_excluding_translation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i == lead) continue;
    r.max_re_excluding_translation = std::max(r.max_re_excluding_translation, ev[i].real());
    if (ev[i].real() > tol) ++r.n_unstable_excluding_translation;
  }
  ev.resize(std::min(ev.size(), std::size_t(n_eigs)));
  r.eigenvalues = std::move(ev);
  return r;
}

std::vector<CriticalPoint> critical_curve(const FrontProfile& f, const std::vector<double>& ells) {
  for (double l : ells)
    if (!(std::abs(l) <= 0.5)) throw ValidationError(fmt::format("|ell| = {} exceeds 0.5", std::abs(l)));
  LinearizedOperator op = assemble_L(f, 0.0);
  const Eigen::VectorXd qp = translation_mode(f, op);
  EigPair cur = inverse_iteration(op.L0, 1e-3, qp);

  std::vector<std::size_t> order(ells.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(ells[i]) < std::abs(ells[j]); });

  std::vector<CriticalPoint> out(ells.size());
  double l2_prev = 0.0, slope = 0.0;
  for (std::size_t idx : order) {
    const double l2 = ells[idx] * ells[idx];
    if (l2 == l2_prev && l2 != 0.0) {
      out[idx] = {ells[idx], cur.lambda, 1.0};
      continue;
    }
    EigPair next = cur;
    double overlap = 1.0;
    if (l2 != 0.0) {
      op.ell = std::abs(ells[idx]);
      const double pred = cur.lambda + slope * (l2 - l2_prev);
      const double sigma = pred + 1e-7 * (1.0 + std::abs(pred));
      next = inverse_iteration(op.matrix(), sigma, cur.x);
      overlap = std::abs(next.x.dot(cur.x));
      if (overlap < 0.5)
        throw BranchLost(fmt::format("eigenvector overlap {:.3f} < 0.5 between ell^2 = {} and {}", overlap,
                                     l2_prev, l2));
      slope = (next.lambda - cur.lambda) / (l2 - l2_prev);
      l2_prev = l2;
      cur = next;
    }
    out[idx] = {ells[idx], cur.lambda, overlap};
  }
  return out;
}

AdjointSolution adjoint(const FrontProfile& f) {
  const LinearizedOperator op = assemble_L(f, 0.0);
  const SpMat& A = op.L0;
  const Eigen::Index N = A.rows();
  const Eigen::VectorXd qp = translation_mode(f, op);
  LU lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw AdjointDegenerate("linearization is exactly singular in LU");

  // inverse iteration on (A A^T)^-1 with a two-vector block to expose sigma_2
  Eigen::MatrixXd Y(N, 2);
  Y.col(0) = qp.normalized();
  Y.col(1) = Eigen::VectorXd::Ones(N).normalized();
  for (int it = 0; it < 40; ++it) {
    Eigen::MatrixXd Z(N, 2);
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd t = lu.solve(Eigen::VectorXd(Y.col(j)));
      Z.col(j) = lu.transpose().solve(t);
    }
    if (!Z.allFinite()) throw EigSolverFailure("non-finite adjoint iterate");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
    Y = qr.householderQ() * Eigen::MatrixXd::Identity(N, 2);
  }
  const Eigen::MatrixXd AtY = A.transpose() * Y;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(AtY.transpose() * AtY));
  AdjointSolution s;
  s.y = Y * es.eigenvectors().col(0);
  s.y.normalize();
  s.sigma_min = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
  s.sigma_2 = std::sqrt(std::max(0.0, es.eigenvalues()[1]));
  if (s.sigma_2 < 10.0 * s.sigma_min)
    throw AdjointDegenerate(fmt::format("sigma_2 = {:.3e} within 10x of sigma_min = {:.3e}", s.sigma_2, s.sigma_min));
  s.pairing = dot_compensated(s.y, qp);
  if (s.pairing < 0.0) {
    s.y = -s.y;
    s.pairing = -s.pairing;
  }
  s.residual = (A.transpose() * s.y).norm() / norm1(A);

  // node arrays relative to trapezoid weights, so that the trapezoid pairing reproduces y . q'
  const auto& x = f.grid.nodes;
  const std::size_t n = x.size();
  std::vector<double> wq(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    wq[i] += 0.5 * (x[i + 1] - x[i]);
    wq[i + 1] += 0.5 * (x[i + 1] - x[i]);
  }
  const std::vector<double> full = op.expand(s.y);
  s.uA.resize(n);
  s.vA.resize(n);
  s.wA.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = 1.0 / (wq[i] * s.pairing);
    s.uA[i] = full[3 * i] * sc;
    s.vA[i] = full[3 * i + 1] * sc;
    s.wA[i] = full[3 * i + 2] * sc;
  }
  spdlog::debug("adjoint sigma_min {:.3e} sigma_2 {:.3e} relres {:.3e}", s.sigma_min, s.sigma_2, s.residual);
  return s;
}

std::string to_string(Lambda2Method m) {
  switch (m) {
    case Lambda2Method::Solvability: return "Solvability";
    case Lambda2Method::Asymptotic: return "Asymptotic";
    case Lambda2Method::QuadraticFit: return "QuadraticFit";
  }
  return "?";
}

void to_json(nlohmann::json& j, const Lambda2Result& r) {
  j = {{"value", r.value}, {"method", to_string(r.method)}, {"components", r.components}, {"sign", r.sign}};
}

namespace {
int sign_of(double v) { return v > 0.0 ? 1 : v < 0.0 ? -1 : 0; }
}  // namespace

Lambda2Result lambda2_solvability(const FrontProfile& f) { return lambda2_solvability(f, adjoint(f)); }

Lambda2Result lambda2_solvability(const FrontProfile& f, const AdjointSolution& adj) {
  const LinearizedOperator op = assemble_L(f, 0.0);
  const Eigen::VectorXd qp = translation_mode(f, op);
  Eigen::VectorXd yv = Eigen::VectorXd::Zero(qp.size()), yw = yv;
  for (Eigen::Index k = 0; k < qp.size(); ++k) {
    const int field = op.keep[std::size_t(k)] % 3;
    if (field == 1) yv[k] = adj.y[k] * op.B[k];
    if (field == 2) yw[k] = adj.y[k] * op.B[k];
  }
  const double num_v = dot_compensated(yv, qp);
  const double num_w = dot_compensated(yw, qp);
  const double den = dot_compensated(adj.y, qp);
  Lambda2Result r;
  r.method = Lambda2Method::Solvability;
  r.value = -(num_v + num_w) / den;
  r.sign = sign_of(r.value);
  r.components = {{"numerator_v", num_v},
                  {"numerator_slow", num_w},
                  {"denominator", den},
                  {"sigma_min", adj.sigma_min},
                  {"sigma_2", adj.sigma_2},
                  {"adjoint_residual", adj.residual}};
  return r;
}

namespace {

constexpr double kEnvelope = 1e-14;

// Layer profile v* = v+ / (1 + e^{-kappa xi}) with the exponential weight e^{-g xi}.
struct LayerKernel {
  double vp, kappa, g;
  double v(double xi) const { return vp / (1.0 + std::exp(-kappa * xi)); }
  double dv(double xi) const {
    const double t = std::exp(-kappa * std::abs(xi));
    return vp * kappa * t / ((1.0 + t) * (1.0 + t));
  }
  double ddv(double xi) const { return -kappa * std::tanh(0.5 * kappa * xi) * dv(xi); }
  double vbar(double xi) const { return dv(xi) * std::exp(-g * xi); }
  double dvbar(double xi) const { return (ddv(xi) - g * dv(xi)) * std::exp(-g * xi); }
};

struct AsymptoticSetup {
  LayerKernel K;
  double c, D, us, Fu;
  double x_left, x_right;
};

AsymptoticSetup asymptotic_setup(const SingularFront& s) {
  const ModelParams& p = s.params;
  if (!(s.c_star > 0.0))
    throw ValidationError(fmt::format("asymptotic route needs an invading front, c* = {}", s.c_star));
  AsymptoticSetup a;
  a.c = s.c_star;
  a.D = s.layer_D;
  a.us = s.u_star;
  a.Fu = 1.0 - 2.0 * a.us - p.delta1 * s.w_star;
  a.K = {s.v_plus_star, 2.0 * s.layer_rate(), a.c / a.D};
  const double left_rate = 2.0 * a.K.kappa - a.K.g;
  if (!(left_rate > 0.0))
    throw DivergentWeight(fmt::format("weight rate {} exceeds profile decay rate {}", a.K.g, 2.0 * a.K.kappa));
  const double L = -std::log(kEnvelope);
  a.x_left = L / left_rate;
  a.x_right = L / (a.K.kappa + a.K.g);
  return a;
}

double integrate_line(const std::function<double(double)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err = 0.0;
  return GK::integrate(f, a, 0.0, 12, 1e-13, &err) + GK::integrate(f, 0.0, b, 12, 1e-13, &err);
}

using OdeState = std::array<double, 2>;

// Integrates (ubar, int delta1 u* ubar) backward from x_right; the observer sees each accepted state.
template <class Obs>
OdeState integrate_ubar(const SingularFront& s, const AsymptoticSetup& a, double x_end, Obs&& obs,
                        const std::vector<double>* times = nullptr) {
  namespace ode = boost::numeric::odeint;
  const double d1us = s.params.delta1 * a.us;
  auto rhs = [&](const OdeState& y, OdeState& dy, double xi) {
    dy[0] = -(a.Fu / a.c) * y[0] - a.K.dv(xi) * a.K.dvbar(xi) / a.c;
    dy[1] = d1us * y[0];
  };
  OdeState y{0.0, 0.0};
  auto stepper = ode::make_controlled(1e-13, 1e-12, ode::runge_kutta_dopri5<OdeState>());
  if (times) {
    ode::integrate_times(stepper, rhs, y, times->begin(), times->end(), -1e-3, obs);
  } else {
    ode::integrate_adaptive(stepper, rhs, y, a.x_right, x_end, -1e-3);
  }
  return y;
}

double ubar_left_extent(const AsymptoticSetup& a) {
  const double L = -std::log(kEnvelope);
  return a.us > 0.0 ? std::max(a.x_left, L * a.c / a.us) : a.x_left;
}

}  // namespace

Lambda2Result lambda2_asymptotic(const SingularFront& s) {
  const ModelParams& p = s.params;
  const AsymptoticSetup a = asymptotic_setup(s);
  const LayerKernel& K = a.K;
  const double den = integrate_line([&](double x) { return K.dv(x) * K.vbar(x); }, -a.x_left, a.x_right);
  const double coup_v = p.delta2 * integrate_line([&](double x) { return K.v(x) * K.vbar(x); }, -a.x_left, a.x_right);
  double coup_u = 0.0;
  if (a.us > 0.0) {
    const OdeState y = integrate_ubar(s, a, -ubar_left_extent(a), [](const OdeState&, double) {});
    coup_u = -y[1];
  }
  const double I = s.slow.I_minus + s.slow.I_plus;
  const double pref = 1.0 / (p.epsilon * p.delta3 * s.v_plus_star);
  Lambda2Result r;
  r.method = Lambda2Method::Asymptotic;
  r.value = pref * I / den * (coup_u + coup_v);
  r.sign = sign_of(r.value);
  r.components = {{"I_minus", s.slow.I_minus},
                  {"I_plus", s.slow.I_plus},
                  {"numerator_slow", I},
                  {"denominator", den},
                  {"coupling", coup_u + coup_v},
                  {"coupling_u", coup_u},
                  {"coupling_v", coup_v},
                  {"prefactor", pref},
                  {"alpha_ratio", 0.0},
                  {"weight_rate", K.g},
                  {"decay_rate", 2.0 * K.kappa}};
  return r;
}

int sign_criterion(const SingularFront& s) { return sign_of(lambda2_asymptotic(s).components.at("coupling")); }

UbarSamples ubar_profile(const SingularFront& s, int n_samples) {
  const AsymptoticSetup a = asymptotic_setup(s);
  UbarSamples out;
  if (n_samples < 2) throw ValidationError("ubar_profile needs at least 2 samples");
  const double xl = -ubar_left_extent(a);
  std::vector<double> times(static_cast<std::size_t>(n_samples));
  for (int j = 0; j < n_samples; ++j) times[std::size_t(j)] = a.x_right + (xl - a.x_right) * j / (n_samples - 1);
  integrate_ubar(
      s, a, xl,
      [&](const OdeState& y, double xi) {
        out.xi.push_back(xi);
        out.ubar.push_back(y[0]);
      },
      &times);
  std::reverse(out.xi.begin(), out.xi.end());
  std::reverse(out.ubar.begin(), out.ubar.end());
  return out;
}

double default_ell_scale(const ModelParams& p) { return p.epsilon * std::sqrt(p.delta3); }

Lambda2Result lambda2_quadratic_fit(const FrontProfile& f, double ell_max, int n_points) {
  if (n_points < 3) throw ValidationError("quadratic fit needs at least 3 points");
  if (ell_max <= 0.0) ell_max = 0.1 * default_ell_scale(f.params);
  std::vector<double> ells(std::size_t(n_points) + 1);
  for (int j = 0; j <= n_points; ++j) ells[std::size_t(j)] = ell_max * j / n_points;
  const auto curve = critical_curve(f, ells);
  // lambda = c0 + c2 ell^2 + c4 ell^4 in the scaled variable t = (ell / ell_max)^2
  Eigen::MatrixXd M(n_points + 1, 3);
  Eigen::VectorXd b(n_points + 1);
  for (int j = 0; j <= n_points; ++j) {
    const double t = std::pow(curve[std::size_t(j)].ell / ell_max, 2);
    M(j, 0) = 1.0;
    M(j, 1) = t;
    M(j, 2) = t * t;
    b[j] = curve[std::size_t(j)].lambda;
  }
  const Eigen::Vector3d coef = M.colPivHouseholderQr().solve(b);
  const double s2 = ell_max * ell_max;
  Lambda2Result r;
  r.method = Lambda2Method::QuadraticFit;
  r.value = coef[1] / s2;
  r.sign = sign_of(r.value);
  r.components = {{"lambda0", coef[0]},
                  {"quartic", coef[2] / (s2 * s2)},
                  {"ell_max", ell_max},
                  {"n_points", double(n_points)}};
  return r;
}

}  // namespace tumorfront
