#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorfront/grid.hpp"
#include "tumorfront/singular.hpp"
#include "tumorfront/traveling_wave.hpp"

namespace tumorfront {

struct BranchPoint {
  double param_value = 0.0;
  double c = 0.0;
  double lambda2 = 0.0;  // Solvability route; NaN when the adjoint solve failed
  double gap_width = 0.0;
  // Singular gap width ln(delta1 w*) / (epsilon sqrt(delta3)), negative when there is no gap.
  double gap_signed = 0.0;
  RegimeTag regime = RegimeTag::MalignantGap;
  double residual_norm = 0.0;
};

struct ContinuationBranch {
  std::string swept_param;
  std::vector<BranchPoint> points;
  std::vector<double> failures;
};

struct SweepOptions {
  GridSpec grid;
  SolveOptions solver;
  bool compute_lambda2 = true;
  int max_halvings = 3;
};

void to_json(nlohmann::json& j, const SweepOptions& o);
void from_json(const nlohmann::json& j, SweepOptions& o);

// Evaluates one branch record from a converged profile.
BranchPoint make_point(const FrontProfile& f, const std::string& param_name, bool compute_lambda2 = true);

ContinuationBranch sweep(const ModelParams& p, const std::string& param_name, double lo, double hi, int n_points,
                         const SweepOptions& opt = {});

enum class BranchField { Lambda2, GapWidth };
BranchField branch_field_from_string(const std::string& s);

struct ZeroCrossing {
  double param_value;
  double field_value;
  int iterations;
};

// Refines every sign change of the field between consecutive branch points; the gap-width field
// uses gap_signed.
std::vector<ZeroCrossing> find_zero(const ContinuationBranch& branch, BranchField field, const ModelParams& base,
                                    const SweepOptions& opt = {}, double tol = 1e-8);

void write_branch_csv(const ContinuationBranch& b, const std::filesystem::path& path);

struct Region {
  double x_min, x_max, y_min, y_max;
};

struct BoundaryOptions {
  SweepOptions sweep;
  double step = 0.5;        // arclength step in the (x, y) plane
  int edge_scan_points = 32;
  int max_points = 200;
  double tol = 1e-9;
};

void to_json(nlohmann::json& j, const BoundaryOptions& o);
void from_json(const nlohmann::json& j, BoundaryOptions& o);

struct BoundaryCurve {
  std::string param_x = "delta1", param_y = "delta2";
  std::vector<std::pair<double, double>> points;
  std::vector<double> residuals;  // lambda2 at each point
  std::string stable_side;        // "below" or "above" in param_y
  std::vector<std::pair<double, double>> regime_curve;  // delta1 V+ (delta2) = 1
  std::string termination;
};

// Solvability lambda2 at params (fresh solve from the singular skeleton).
double lambda2_at(const ModelParams& p, const SweepOptions& opt);

BoundaryCurve trace_boundary(const ModelParams& p, const Region& region, const BoundaryOptions& opt = {});

void write_boundary_csv(const BoundaryCurve& b, const std::filesystem::path& path);

}  // namespace tumorfront
