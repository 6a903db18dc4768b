#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tumorfront/model.hpp"

namespace tumorfront {

// Invariant subspace of the layer problem: normal cells frozen at 1 - delta1 w, or absent.
enum class Subspace { NormalCells, NoNormalCells };
std::string to_string(Subspace s);
Subspace subspace_from_string(const std::string& s);

struct LayerBranches {
  double vminus;
  double vplus;
};

// Radicand (1-a)^2 - 4 delta2 w / rho of the layer fixed-point branches.
double layer_radicand(double w, const ModelParams& p);
LayerBranches layer_branches(double w, const ModelParams& p);

double layer_diffusion(double w, const ModelParams& p, Subspace s);
double layer_speed(double w, const ModelParams& p, Subspace s);

struct LayerPoint {
  double v;
  double q;
};

LayerPoint layer_front(double xi, double w, const ModelParams& p, Subspace s);

// Hamiltonians of the two reduced slow flows; both vanish at their saddles.
struct HamiltonianPair {
  explicit HamiltonianPair(const ModelParams& p);
  double E0(double w, double pz) const;
  double Eplus(double w, double pz) const;
  // Antiderivative of v+(s) from V+ to w.
  double vplus_integral(double w) const;

  ModelParams params;
  double Vplus;
};

// Matching residual V+^2 + int_{V+}^{w} (1 + a + sqrt(R(z))) dz in closed form.
double w_star_residual(double w, const ModelParams& p);
double solve_w_star(const ModelParams& p);

enum class RegimeTag { Benign, MalignantNoGap, MalignantGap, Crossover };
std::string to_string(RegimeTag t);

struct Regime {
  RegimeTag tag;
  double benign_discriminator;  // delta1 V+ - 1
  double gap_discriminator;     // delta1 w* - 1
};

inline constexpr double kCrossoverTol = 1e-8;

Regime classify_regime(const ModelParams& p);

struct SlowSample {
  double zeta;
  double w;
  double p;
  std::string branch;
};

struct SlowOrbits {
  std::vector<SlowSample> minus;
  std::vector<SlowSample> plus;
  double I_minus;
  double I_plus;
};

// Level set E+ = 0 through (V+, 0), written without cancellation.
double slow_plus_momentum(double w, const ModelParams& p);

SlowOrbits slow_orbits(const ModelParams& p, double w_star, int n_samples = 200);

struct GapWidth {
  double zeta;
  double xi;
};

GapWidth singular_gap_width(const ModelParams& p);

struct SingularFront {
  ModelParams params;
  Regime regime;
  Subspace subspace;
  double Vplus;
  double w_star;
  double c_star;
  double u_star;
  double v_plus_star;
  double v_minus_star;
  double layer_D;
  SlowOrbits slow;
  GapWidth gap;

  LayerPoint layer(double xi) const;
  // Decay rate of v*' away from the interface.
  double layer_rate() const;
};

SingularFront build_singular_front(const ModelParams& p);

nlohmann::json singular_report(const SingularFront& f);

}  // namespace tumorfront
