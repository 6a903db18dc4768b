#include <fmt/format.h>

#include "tumorfront/errors.hpp"
#include "tumorfront/spectral.hpp"

namespace tumorfront {

std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw ValidationError("dense_eigenvalues needs a square matrix");
  const Eigen::Index n = A.rows();
  if (n == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw EigSolverFailure(fmt::format("real Schur iteration failed for n = {}", n));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = es.eigenvalues()[Eigen::Index(i)];
  return out;
}

}  // namespace tumorfront
