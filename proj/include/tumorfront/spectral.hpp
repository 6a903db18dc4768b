#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "json.hpp"
#include "tumorfront/singular.hpp"
#include "tumorfront/traveling_wave.hpp"

namespace tumorfront {

// Linearization about a front, restricted to the unknowns that are not clamped.
// L(ell) = L0 - ell^2 diag(B); the ell^2 coefficient is (0, 1 + kappa - u, epsilon^-2) per node.
struct LinearizedOperator {
  Eigen::SparseMatrix<double> L0;
  Eigen::VectorXd B;
  std::vector<int> keep;  // packed (3 i + field) index of each row
  double ell = 0.0;
  std::size_t n_nodes = 0;
  std::uint64_t profile_hash = 0;

  Eigen::SparseMatrix<double> matrix() const;
  Eigen::VectorXd restrict(const std::vector<double>& packed) const;
  std::vector<double> expand(const Eigen::VectorXd& x) const;
};

std::uint64_t profile_hash(const FrontProfile& f);

LinearizedOperator assemble_L(const FrontProfile& profile, double ell);

// Discrete wave derivative q' on the kept unknowns.
Eigen::VectorXd translation_mode(const FrontProfile& profile, const LinearizedOperator& op);

// Eigenvalues of a dense real matrix (Hessenberg + real Schur), unsorted.
std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& A);

inline constexpr std::size_t kDenseEigLimit = 3000;

struct SpectrumResult {
  double ell = 0.0;
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  std::complex<double> leading;                   // continuation of the translation mode
  int n_unstable_excluding_translation = 0;
  // Largest real part once the leading eigenvalue is removed.
  double max_re_excluding_translation = 0.0;
};

SpectrumResult spectrum_1d(const FrontProfile& profile, int n_eigs, double ell = 0.0, double tol = 1e-4);

struct CriticalPoint {
  double ell;
  double lambda;
  double overlap;
};

std::vector<CriticalPoint> critical_curve(const FrontProfile& profile, const std::vector<double>& ell_values);

struct AdjointSolution {
  std::vector<double> uA, vA, wA;  // normalized so that the trapezoid pairing with q' is 1
  Eigen::VectorXd y;               // discrete left null vector on the kept unknowns, unit length
  double sigma_min = 0.0;
  double sigma_2 = 0.0;
  double residual = 0.0;  // |L^T y| / |L|_1
  double pairing = 0.0;   // y . q'
};

AdjointSolution adjoint(const FrontProfile& profile);

enum class Lambda2Method { Solvability, Asymptotic, QuadraticFit };
std::string to_string(Lambda2Method m);

struct Lambda2Result {
  double value = 0.0;
  Lambda2Method method = Lambda2Method::Solvability;
  std::map<std::string, double> components;
  int sign = 0;
};

void to_json(nlohmann::json& j, const Lambda2Result& r);

Lambda2Result lambda2_solvability(const FrontProfile& profile);
Lambda2Result lambda2_solvability(const FrontProfile& profile, const AdjointSolution& adj);

Lambda2Result lambda2_asymptotic(const SingularFront& s);

// Sign of the coupling integral alone.
int sign_criterion(const SingularFront& s);

// Backward solution of the bounded normal-cell correction on xi in [x0, x1]; returns samples.
struct UbarSamples {
  std::vector<double> xi, ubar;
};
UbarSamples ubar_profile(const SingularFront& s, int n_samples = 400);

// ell_max = 0 selects 0.1 epsilon sqrt(delta3).
Lambda2Result lambda2_quadratic_fit(const FrontProfile& profile, double ell_max = 0.0, int n_points = 8);

double default_ell_scale(const ModelParams& p);

}  // namespace tumorfront
