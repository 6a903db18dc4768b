#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tumorfront {

struct ModelParams {
  double a = 0.1;
  double kappa = 0.1;
  double delta1 = 12.5;
  double delta2 = 0.1;
  double delta3 = 70.0;
  double rho = 1.0;
  double epsilon = 0.0063;

  // Throws ValidationError naming the first offending field.
  void validate() const;

  double get(const std::string& name) const;
  void set(const std::string& name, double value);
  static const std::array<const char*, 7>& names();
};

void to_json(nlohmann::json& j, const ModelParams& p);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelParams& p);

struct State {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

struct ReactionJet {
  double F, G, H;
  double F_u, F_w;
  double G_u, G_v, G_w;
  double H_v, H_w;
};

ReactionJet reaction_jet(const ModelParams& p, const State& s);

// Roots of rho V^2 - (rho(1+a) - delta2) V + rho a = 0.
struct VRoots {
  double vminus;
  double vplus;
  bool fold;  // double root
};

double v_discriminant(const ModelParams& p);
VRoots compute_v_pm(const ModelParams& p);

enum class StateLabel { P1, P2, P3plus, P3minus, P4plus, P4minus };
std::string to_string(StateLabel l);

struct SteadyState {
  StateLabel label;
  State values;
  bool stable = false;
  bool relevant = false;
};

void to_json(nlohmann::json& j, const SteadyState& s);

struct CriterionValue {
  std::string name;
  double value;
  bool pass;
};

struct StabilityReport {
  bool stable;
  std::vector<CriterionValue> criteria;  // F_u<0, G_v<0, G_v+H_w<0, det>0
};

StabilityReport steady_state_stability(const ModelParams& p, const State& s);

// P1 and P2 always; P3 and P4 pairs only when the roots are real.
std::vector<SteadyState> steady_states(const ModelParams& p);

// Rightmost real part of the full 3x3 linearization for |l|^2 = l2.
double linearization_growth(const ModelParams& p, const State& s, double l2);

}  // namespace tumorfront
