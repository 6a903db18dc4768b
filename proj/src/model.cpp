#include "tumorfront/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <fmt/format.h>

#include "tumorfront/errors.hpp"

namespace tumorfront {

std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::ComplexRoots: return "ComplexRoots";
    case ErrorKind::NotEquilibrium: return "NotEquilibrium";
    case ErrorKind::BeyondFold: return "BeyondFold";
    case ErrorKind::SubspaceInvalid: return "SubspaceInvalid";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::WrongBranch: return "WrongBranch";
    case ErrorKind::HomotopyStuck: return "HomotopyStuck";
    case ErrorKind::EigSolverFailure: return "EigSolverFailure";
    case ErrorKind::BranchLost: return "BranchLost";
    case ErrorKind::AdjointDegenerate: return "AdjointDegenerate";
    case ErrorKind::DivergentWeight: return "DivergentWeight";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::BoundaryNotFound: return "BoundaryNotFound";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
  }
  return "Error";
}

const std::array<const char*, 7>& ModelParams::names() {
  static const std::array<const char*, 7> n{"a", "kappa", "delta1", "delta2", "delta3", "rho", "epsilon"};
  return n;
}

void ModelParams::validate() const {
  auto bad = [](const char* name, double v, const char* rule) {
    throw ValidationError(fmt::format("parameter \"{}\" = {} violates {}", name, v, rule));
  };
  for (const char* n : names()) {
    if (!std::isfinite(get(n))) bad(n, get(n), "finiteness");
  }
  if (!(a > 0.0 && a < 1.0)) bad("a", a, "0 < a < 1");
  if (!(kappa > 0.0)) bad("kappa", kappa, "kappa > 0");
  if (!(delta2 >= 0.0)) bad("delta2", delta2, "delta2 >= 0");
  if (!(delta2 < delta1)) bad("delta1", delta1, "delta2 < delta1");
  if (!(delta3 > 0.0)) bad("delta3", delta3, "delta3 > 0");
  if (!(rho > 0.0)) bad("rho", rho, "rho > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) bad("epsilon", epsilon, "0 < epsilon < 1");
}

double ModelParams::get(const std::string& name) const {
  if (name == "a") return a;
  if (name == "kappa") return kappa;
  if (name == "delta1") return delta1;
  if (name == "delta2") return delta2;
  if (name == "delta3") return delta3;
  if (name == "rho") return rho;
  if (name == "epsilon") return epsilon;
  throw UnknownKey(fmt::format("unknown parameter \"{}\"", name));
}

void ModelParams::set(const std::string& name, double value) {
  if (name == "a") a = value;
  else if (name == "kappa") kappa = value;
  else if (name == "delta1") delta1 = value;
  else if (name == "delta2") delta2 = value;
  else if (name == "delta3") delta3 = value;
  else if (name == "rho") rho = value;
  else if (name == "epsilon") epsilon = value;
  else throw UnknownKey(fmt::format("unknown parameter \"{}\"", name));
}

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json::object();
  for (const char* n : ModelParams::names()) j[n] = p.get(n);
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  if (!j.is_object()) throw ParseError("params must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& names = ModelParams::names();
    if (std::find_if(names.begin(), names.end(), [&](const char* n) { return it.key() == n; }) == names.end())
      throw UnknownKey(fmt::format("unknown key \"params.{}\"", it.key()));
    if (!it.value().is_number())
      throw ValidationError(fmt::format("parameter \"{}\" must be a number", it.key()));
    p.set(it.key(), it.value().get<double>());
  }
}

ReactionJet reaction_jet(const ModelParams& p, const State& s) {
  const double u = s.u, v = s.v, w = s.w;
  ReactionJet j{};
  j.F = u * (1.0 - u) - p.delta1 * u * w;
  j.G = p.rho * v * (1.0 - v) * (v - p.a) - p.delta2 * v * w;
  j.H = p.delta3 * (v - w);
  j.F_u = 1.0 - 2.0 * u - p.delta1 * w;
  j.F_w = -p.delta1 * u;
  j.G_u = 0.0;
  j.G_v = p.rho * (-3.0 * v * v + 2.0 * (1.0 + p.a) * v - p.a) - p.delta2 * w;
  j.G_w = -p.delta2 * v;
  j.H_v = p.delta3;
  j.H_w = -p.delta3;
  return j;
}

double v_discriminant(const ModelParams& p) {
  // (rho(1+a)-d2)^2 - 4 rho^2 a, regrouped so that d2 = 0 gives (rho(1-a))^2 exactly
  const double r1 = p.rho * (1.0 - p.a);
  return r1 * r1 - p.delta2 * (2.0 * p.rho * (1.0 + p.a) - p.delta2);
}

VRoots compute_v_pm(const ModelParams& p) {
  if (p.delta2 == 0.0) return {p.a, 1.0, false};
  const double b = p.rho * (1.0 + p.a) - p.delta2;
  const double disc = v_discriminant(p);
  const double scale = b * b + 4.0 * p.rho * p.rho * p.a;
  if (disc < -64.0 * std::numeric_limits<double>::epsilon() * scale)
    throw ComplexRoots(fmt::format("discriminant {} < 0: no nontrivial tumor state", disc));
  if (disc <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
    const double v = b / (2.0 * p.rho);
    return {v, v, true};
  }
  const double s = std::sqrt(disc);
  // larger-magnitude root first, the other from the product rule V+ V- = a
  if (b >= 0.0) {
    const double vp = (b + s) / (2.0 * p.rho);
    return {p.a / vp, vp, false};
  }
  const double vm = (b - s) / (2.0 * p.rho);
  return {vm, p.a / vm, false};
}

std::string to_string(StateLabel l) {
  switch (l) {
    case StateLabel::P1: return "P1";
    case StateLabel::P2: return "P2";
    case StateLabel::P3plus: return "P3plus";
    case StateLabel::P3minus: return "P3minus";
    case StateLabel::P4plus: return "P4plus";
    case StateLabel::P4minus: return "P4minus";
  }
  return "?";
}

void to_json(nlohmann::json& j, const SteadyState& s) {
  j = {{"label", to_string(s.label)},
       {"U", s.values.u},
       {"V", s.values.v},
       {"W", s.values.w},
       {"stable", s.stable},
       {"relevant", s.relevant}};
}

StabilityReport steady_state_stability(const ModelParams& p, const State& s) {
  const ReactionJet j = reaction_jet(p, s);
  const double res = std::max({std::abs(j.F), std::abs(j.G), std::abs(j.H)});
  if (res > 1e-8) throw NotEquilibrium(fmt::format("reaction residual {} at ({}, {}, {})", res, s.u, s.v, s.w));
  StabilityReport r;
  const double det = j.G_v * j.H_w - j.G_w * j.H_v;
  r.criteria = {{"F_u", j.F_u, j.F_u < 0.0},
                {"G_v", j.G_v, j.G_v < 0.0},
                {"G_v+H_w", j.G_v + j.H_w, j.G_v + j.H_w < 0.0},
                {"G_vH_w-G_wH_v", det, det > 0.0}};
  r.stable = std::all_of(r.criteria.begin(), r.criteria.end(), [](const CriterionValue& c) { return c.pass; });
  return r;
}

std::vector<SteadyState> steady_states(const ModelParams& p) {
  std::vector<SteadyState> out;
  auto push = [&](StateLabel l, State s, bool relevant) {
    SteadyState ss{l, s, false, relevant};
    ss.stable = steady_state_stability(p, s).stable;
    out.push_back(ss);
  };
  push(StateLabel::P1, {0.0, 0.0, 0.0}, true);
  push(StateLabel::P2, {1.0, 0.0, 0.0}, true);
  VRoots r;
  try {
    r = compute_v_pm(p);
  } catch (const ComplexRoots&) {
    return out;
  }
  const bool pos = r.vminus > 0.0 && r.vplus > 0.0;
  const bool benign = p.delta1 * r.vplus < 1.0;
  push(StateLabel::P3plus, {1.0 - p.delta1 * r.vplus, r.vplus, r.vplus}, pos && benign);
  push(StateLabel::P3minus, {1.0 - p.delta1 * r.vminus, r.vminus, r.vminus}, pos && benign);
  push(StateLabel::P4plus, {0.0, r.vplus, r.vplus}, r.vplus > 0.0);
  push(StateLabel::P4minus, {0.0, r.vminus, r.vminus}, r.vminus > 0.0);
  return out;
}

double linearization_growth(const ModelParams& p, const State& s, double l2) {
  const ReactionJet j = reaction_jet(p, s);
  const double a11 = -(1.0 + p.kappa - s.u) * l2 + j.G_v;
  const double a22 = -l2 / (p.epsilon * p.epsilon) + j.H_w;
  const double tr = a11 + a22;
  const double det = a11 * a22 - j.G_w * j.H_v;
  const double disc = tr * tr / 4.0 - det;
  const double block = disc >= 0.0 ? tr / 2.0 + std::sqrt(disc) : tr / 2.0;
  return std::max(j.F_u, block);
}

}  // namespace tumorfront
