#include "tumorfront/config.hpp"

#include <algorithm>

#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"

namespace tumorfront {

namespace {

const std::vector<std::string> kLambda2Methods{"solvability", "asymptotic", "quadratic_fit", "all"};

TwBlock tw_from(const nlohmann::json& j) {
  TwBlock b;
  JsonReader r(j, "tw");
  if (auto* g = r.child("grid")) b.grid = g->get<GridSpec>();
  if (auto* s = r.child("solver")) b.solver = s->get<SolveOptions>();
  r.finish();
  return b;
}

SpectrumBlock spectrum_from(const nlohmann::json& j) {
  SpectrumBlock b;
  JsonReader r(j, "spectrum");
  if (auto* g = r.child("grid")) b.grid = g->get<GridSpec>();
  r.get("n_eigs", b.n_eigs);
  r.get("ells", b.ells);
  r.get("critical_ells", b.critical_ells);
  r.get("tol", b.tol);
  r.finish();
  if (b.n_eigs < 1) throw ValidationError("\"spectrum.n_eigs\" must be >= 1");
  if (b.ells.empty()) throw ValidationError("\"spectrum.ells\" must not be empty");
  return b;
}

Lambda2Block lambda2_from(const nlohmann::json& j) {
  Lambda2Block b;
  JsonReader r(j, "lambda2");
  r.get("method", b.method);
  r.get("ell_max", b.ell_max);
  r.get("n_points", b.n_points);
  r.finish();
  if (std::find(kLambda2Methods.begin(), kLambda2Methods.end(), b.method) == kLambda2Methods.end())
    throw ValidationError(fmt::format("\"lambda2.method\" = \"{}\" is not one of solvability, asymptotic, "
                                      "quadratic_fit, all",
                                      b.method));
  if (b.n_points < 3) throw ValidationError("\"lambda2.n_points\" must be >= 3");
  return b;
}

SweepBlock sweep_from(const nlohmann::json& j) {
  SweepBlock b;
  JsonReader r(j, "sweep");
  r.get("param", b.param);
  r.get("lo", b.lo);
  r.get("hi", b.hi);
  r.get("n_points", b.n_points);
  if (auto* o = r.child("options")) b.options = o->get<SweepOptions>();
  r.get("find_zero", b.find_zero);
  r.finish();
  const auto& names = ModelParams::names();
  if (std::find(names.begin(), names.end(), b.param) == names.end())
    throw ValidationError(fmt::format("\"sweep.param\" = \"{}\" is not a model parameter", b.param));
  if (b.n_points < 2) throw ValidationError("\"sweep.n_points\" must be >= 2");
  for (const auto& f : b.find_zero) branch_field_from_string(f);
  return b;
}

BoundaryBlock boundary_from(const nlohmann::json& j) {
  BoundaryBlock b;
  JsonReader r(j, "boundary");
  if (auto* g = r.child("region")) {
    JsonReader rr(*g, "boundary.region");
    rr.get("x_min", b.region.x_min);
    rr.get("x_max", b.region.x_max);
    rr.get("y_min", b.region.y_min);
    rr.get("y_max", b.region.y_max);
    rr.finish();
  }
  if (auto* o = r.child("options")) b.options = o->get<BoundaryOptions>();
  r.finish();
  if (!(b.region.x_min < b.region.x_max) || !(b.region.y_min < b.region.y_max))
    throw ValidationError("\"boundary.region\" must have x_min < x_max and y_min < y_max");
  return b;
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  j["params"] = c.params;
  j["tw"] = {{"grid", c.tw.grid}, {"solver", c.tw.solver}};
  j["spectrum"] = {{"grid", c.spectrum.grid},
                   {"n_eigs", c.spectrum.n_eigs},
                   {"ells", c.spectrum.ells},
                   {"critical_ells", c.spectrum.critical_ells},
                   {"tol", c.spectrum.tol}};
  j["lambda2"] = {{"method", c.lambda2.method}, {"ell_max", c.lambda2.ell_max}, {"n_points", c.lambda2.n_points}};
  j["sweep"] = {{"param", c.sweep.param},
                {"lo", c.sweep.lo},
                {"hi", c.sweep.hi},
                {"n_points", c.sweep.n_points},
                {"options", c.sweep.options},
                {"find_zero", c.sweep.find_zero}};
  j["boundary"] = {{"region",
                    {{"x_min", c.boundary.region.x_min},
                     {"x_max", c.boundary.region.x_max},
                     {"y_min", c.boundary.region.y_min},
                     {"y_max", c.boundary.region.y_max}}},
                   {"options", c.boundary.options}};
  j["simulate"] = c.simulate;
  j["verify"] = {{"golden_dir", c.verify.golden_dir}};
  j["output_dir"] = c.output_dir;
  if (c.rng_seed) j["rng_seed"] = *c.rng_seed;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  JsonReader r(j, "config");
  if (auto* p = r.child("params")) c.params = p->get<ModelParams>();
  if (auto* b = r.child("tw")) c.tw = tw_from(*b);
  if (auto* b = r.child("spectrum")) c.spectrum = spectrum_from(*b);
  if (auto* b = r.child("lambda2")) c.lambda2 = lambda2_from(*b);
  if (auto* b = r.child("sweep")) c.sweep = sweep_from(*b);
  if (auto* b = r.child("boundary")) c.boundary = boundary_from(*b);
  if (auto* b = r.child("simulate")) c.simulate = b->get<SimConfig>();
  if (auto* b = r.child("verify")) {
    JsonReader rv(*b, "verify");
    rv.get("golden_dir", c.verify.golden_dir);
    rv.finish();
  }
  r.get("output_dir", c.output_dir);
  std::uint64_t seed = 0;
  if (r.get("rng_seed", seed)) c.rng_seed = seed;
  r.finish();
  c.params.validate();
  if (c.rng_seed) c.simulate.rng_seed = *c.rng_seed;
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(path);
  // a run manifest replays the configuration it records
  if (j.is_object() && j.contains("tumorfront_manifest")) return config_from_json(j.at("config"));
  return config_from_json(j);
}

}  // namespace tumorfront
