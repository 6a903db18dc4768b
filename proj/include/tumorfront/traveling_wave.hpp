#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "json.hpp"
#include "tumorfront/grid.hpp"
#include "tumorfront/model.hpp"
#include "tumorfront/singular.hpp"

namespace tumorfront {

// Dirichlet clamps v, w at both ends and u on the left; Neumann uses mirrored ghost nodes,
// matching the simulation's boundary treatment.
enum class BoundaryKind { Dirichlet, Neumann };
std::string to_string(BoundaryKind b);
BoundaryKind boundary_from_string(const std::string& s);

struct FrontProfile {
  Grid1D grid;
  std::vector<double> u, v, w;
  double c = 0.0;
  ModelParams params;
  double residual_norm = 0.0;
  double phase_anchor = 0.0;
  std::size_t anchor_index = 0;
  double anchor_value = 0.0;
  BoundaryKind bc = BoundaryKind::Dirichlet;
  RegimeTag regime = RegimeTag::MalignantGap;
  int newton_iterations = 0;

  // Interleaved (u, v, w) per node.
  std::vector<double> packed() const;
  void unpack(const std::vector<double>& q);
};

struct TwResidual {
  std::vector<double> u, v, w;
  double max_norm() const;
};

// Rows of the w equation are multiplied by epsilon^2 so that their rounding floor
// does not grow like epsilon^-2 h^-2.
TwResidual tw_residual(const FrontProfile& profile);

void tw_residual_packed(const ModelParams& p, const std::vector<double>& x, const std::vector<double>& q,
                        double c, BoundaryKind bc, std::vector<double>& out);

struct TwJacobian {
  Eigen::SparseMatrix<double> J;  // d residual / d q
  std::vector<double> Jc;         // d residual / d c
};

TwJacobian tw_jacobian(const ModelParams& p, const std::vector<double>& x, const std::vector<double>& q, double c,
                       BoundaryKind bc);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 60;
  BoundaryKind bc = BoundaryKind::Dirichlet;
  bool check_branch = true;
};

void to_json(nlohmann::json& j, const SolveOptions& o);
void from_json(const nlohmann::json& j, SolveOptions& o);

// Singular skeleton (slow orbits + tanh layer) sampled on a grid.
FrontProfile skeleton_profile(const SingularFront& s, const Grid1D& grid);

FrontProfile solve_front(const ModelParams& p, const FrontProfile& initial, const SolveOptions& opt = {});
FrontProfile solve_front(const ModelParams& p, const SingularFront& seed, const Grid1D& grid,
                         const SolveOptions& opt = {});
// Skeleton seed on spec.build(p).
FrontProfile solve_front(const ModelParams& p, const GridSpec& spec = {}, const SolveOptions& opt = {});

// Linear interpolation onto another grid; values outside are held constant.
FrontProfile resample(const FrontProfile& f, const Grid1D& grid);

inline constexpr double kDefaultGapThresholdFactor = 10.0;

// Longest xi-interval with u < threshold and v < threshold; threshold <= 0 gives 0.
double measure_gap_width(const FrontProfile& f, std::optional<double> threshold = std::nullopt);

// Natural-parameter homotopy. Regrids through spec when the parameter is epsilon.
FrontProfile continue_front(const FrontProfile& start, const std::string& param_name, double target, int n_steps,
                            const GridSpec& spec = {}, const SolveOptions& opt = {});

nlohmann::json tw_report(const FrontProfile& f);

// Discrete derivative used for q' (centered on interior nodes, one-sided at the ends).
std::vector<double> node_derivative(const std::vector<double>& x, const std::vector<double>& f);

}  // namespace tumorfront
