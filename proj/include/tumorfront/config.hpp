#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorfront/continuation.hpp"
#include "tumorfront/grid.hpp"
#include "tumorfront/model.hpp"
#include "tumorfront/simulation.hpp"
#include "tumorfront/spectral.hpp"
#include "tumorfront/traveling_wave.hpp"

namespace tumorfront {

struct TwBlock {
  GridSpec grid;
  SolveOptions solver;
};

struct SpectrumBlock {
  GridSpec grid;  // hc defaults to 0.2 so that the dense path applies
  int n_eigs = 20;
  std::vector<double> ells{0.0};
  std::vector<double> critical_ells;  // empty: no lambda_c(ell) continuation
  double tol = 1e-4;

  SpectrumBlock() { grid.hc = 0.2; }
};

struct Lambda2Block {
  std::string method = "all";  // solvability, asymptotic, quadratic_fit or all
  double ell_max = 0.0;
  int n_points = 8;
};

struct SweepBlock {
  std::string param = "delta1";
  double lo = 0.05, hi = 15.0;
  int n_points = 30;
  SweepOptions options;
  std::vector<std::string> find_zero;  // fields to refine: lambda2, gap_width
};

struct BoundaryBlock {
  Region region{0.5, 15.0, 0.0, 0.3};
  BoundaryOptions options;
};

struct VerifyBlock {
  std::string golden_dir;  // empty: the source tree's tests/golden
};

struct RunConfig {
  ModelParams params;
  TwBlock tw;
  SpectrumBlock spectrum;
  Lambda2Block lambda2;
  SweepBlock sweep;
  BoundaryBlock boundary;
  SimConfig simulate;
  VerifyBlock verify;
  std::string output_dir = "out";
  std::optional<std::uint64_t> rng_seed;  // overrides simulate.rng_seed
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Rejects unknown keys at every level and validates the parameters.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace tumorfront
