#include "tumorfront/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tumorfront/continuation.hpp"
#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"
#include "tumorfront/model.hpp"
#include "tumorfront/simulation.hpp"
#include "tumorfront/singular.hpp"
#include "tumorfront/spectral.hpp"
#include "tumorfront/traveling_wave.hpp"

namespace tumorfront {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"classify", "singular", "tw",       "spectrum", "lambda2",
                                              "sweep",    "boundary", "simulate", "verify"};
  return names;
}

std::string usage_text() {
  std::string s = "usage: tumorfront <command> [--config PATH] [--out DIR] [--threads N] [--seed N]\n"
                  "commands:";
  for (const auto& c : command_names()) s += " " + c;
  return s + "\n";
}

fs::path default_golden_dir() { return fs::path(TUMORFRONT_SOURCE_DIR) / "tests" / "golden"; }

namespace {

void write_profile_csv(const FrontProfile& f, const fs::path& path) {
  CsvWriter w(path, {"xi", "u", "v", "w"});
  for (std::size_t i = 0; i < f.grid.n(); ++i) w.row({f.grid.nodes[i], f.u[i], f.v[i], f.w[i]});
}

json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

CommandResult cmd_classify(const RunConfig& cfg, const fs::path& out) {
  const Regime r = classify_regime(cfg.params);
  json states = json::array();
  for (const auto& s : steady_states(cfg.params)) states.push_back(s);
  CommandResult res;
  res.summary = {{"regime", to_string(r.tag)},
                 {"benign_discriminator", r.benign_discriminator},
                 {"gap_discriminator", r.gap_discriminator},
                 {"steady_states", states}};
  write_json(out / "classify.json", res.summary);
  res.artifacts = {"classify.json"};
  res.stdout_text = to_string(r.tag) + "\n";
  return res;
}

CommandResult cmd_singular(const RunConfig& cfg, const fs::path& out) {
  const SingularFront s = build_singular_front(cfg.params);
  CommandResult res;
  res.summary = singular_report(s);
  write_json(out / "singular.json", res.summary);
  {
    CsvWriter w(out / "slow_orbits.csv", {"zeta", "w", "p", "branch"});
    for (const auto* orbit : {&s.slow.minus, &s.slow.plus})
      for (const auto& q : *orbit) w.raw(fmt::format("{},{},{},{}", fmt_num(q.zeta), fmt_num(q.w), fmt_num(q.p), q.branch));
  }
  res.artifacts = {"singular.json", "slow_orbits.csv"};
  return res;
}

CommandResult cmd_tw(const RunConfig& cfg, const fs::path& out) {
  const FrontProfile f = solve_front(cfg.params, cfg.tw.grid, cfg.tw.solver);
  CommandResult res;
  res.summary = tw_report(f);
  write_json(out / "tw.json", res.summary);
  write_profile_csv(f, out / "profile.csv");
  res.artifacts = {"tw.json", "profile.csv"};
  return res;
}

CommandResult cmd_spectrum(const RunConfig& cfg, const fs::path& out) {
  const SpectrumBlock& b = cfg.spectrum;
  const FrontProfile f = solve_front(cfg.params, b.grid, cfg.tw.solver);
  CommandResult res;
  json per_ell = json::array();
  {
    CsvWriter w(out / "spectrum.csv", {"ell", "re", "im"});
    for (double ell : b.ells) {
      const SpectrumResult s = spectrum_1d(f, b.n_eigs, ell, b.tol);
      for (const auto& z : s.eigenvalues) w.row({ell, z.real(), z.imag()});
      per_ell.push_back({{"ell", ell},
                         {"leading", complex_json(s.leading)},
                         {"n_unstable_excluding_translation", s.n_unstable_excluding_translation},
                         {"max_re_excluding_translation", s.max_re_excluding_translation},
                         {"n_eigenvalues", s.eigenvalues.size()}});
    }
  }
  res.artifacts = {"spectrum.csv", "profile.csv", "spectrum.json"};
  write_profile_csv(f, out / "profile.csv");
  res.summary = {{"c", f.c}, {"n_nodes", f.grid.n()}, {"spectra", per_ell}};
  if (!b.critical_ells.empty()) {
    const auto curve = critical_curve(f, b.critical_ells);
    CsvWriter w(out / "critical_curve.csv", {"ell", "lambda", "overlap"});
    for (const auto& q : curve) w.row({q.ell, q.lambda, q.overlap});
    res.artifacts.push_back("critical_curve.csv");
  }
  write_json(out / "spectrum.json", res.summary);
  return res;
}

CommandResult cmd_lambda2(const RunConfig& cfg, const fs::path& out) {
  const Lambda2Block& b = cfg.lambda2;
  const bool all = b.method == "all";
  CommandResult res;
  res.summary = json::object();
  std::optional<FrontProfile> f;
  auto profile = [&]() -> const FrontProfile& {
    if (!f) f = solve_front(cfg.params, cfg.tw.grid, cfg.tw.solver);
    return *f;
  };
  auto attempt = [&](const std::string& name, auto&& fn) {
    if (!all && b.method != name) return;
    if (!all) {
      res.summary[name] = fn();
      return;
    }
    try {
      res.summary[name] = fn();
    } catch (const Error& e) {
      res.summary[name] = error_json(e)["error"];
    }
  };
  attempt("solvability", [&] { return json(lambda2_solvability(profile())); });
  attempt("asymptotic", [&] { return json(lambda2_asymptotic(build_singular_front(cfg.params))); });
  attempt("quadratic_fit", [&] { return json(lambda2_quadratic_fit(profile(), b.ell_max, b.n_points)); });
  if (f) res.summary["c"] = f->c;
  write_json(out / "lambda2.json", res.summary);
  res.artifacts = {"lambda2.json"};
  return res;
}

json branch_point_json(const BranchPoint& q) {
  return {{"param", q.param_value}, {"c", q.c},       {"lambda2", q.lambda2},
          {"gap_width", q.gap_width}, {"gap_signed", q.gap_signed}, {"regime", to_string(q.regime)}};
}

CommandResult cmd_sweep(const RunConfig& cfg, const fs::path& out) {
  const SweepBlock& b = cfg.sweep;
  const ContinuationBranch br = sweep(cfg.params, b.param, b.lo, b.hi, b.n_points, b.options);
  write_branch_csv(br, out / "branch.csv");
  CommandResult res;
  res.artifacts = {"branch.csv", "sweep.json"};
  json zeros = json::object();
  for (const auto& name : b.find_zero) {
    json arr = json::array();
    try {
      for (const auto& z : find_zero(br, branch_field_from_string(name), cfg.params, b.options))
        arr.push_back({{"param", z.param_value}, {"value", z.field_value}, {"iterations", z.iterations}});
      zeros[name] = arr;
    } catch (const NoSignChange& e) {
      zeros[name] = error_json(e)["error"];
    }
  }
  json pts = json::array();
  for (const auto& q : br.points) pts.push_back(branch_point_json(q));
  res.summary = {{"param", br.swept_param},
                 {"n_points", br.points.size()},
                 {"failures", br.failures},
                 {"zeros", zeros},
                 {"points", pts}};
  write_json(out / "sweep.json", res.summary);
  return res;
}

CommandResult cmd_boundary(const RunConfig& cfg, const fs::path& out) {
  const BoundaryCurve c = trace_boundary(cfg.params, cfg.boundary.region, cfg.boundary.options);
  write_boundary_csv(c, out / "boundary.csv");
  CommandResult res;
  res.artifacts = {"boundary.csv", "boundary.json"};
  json pts = json::array();
  for (std::size_t i = 0; i < c.points.size(); ++i)
    pts.push_back({{"delta1", c.points[i].first}, {"delta2", c.points[i].second}, {"lambda2", c.residuals[i]}});
  res.summary = {{"param_x", c.param_x},           {"param_y", c.param_y},
                 {"n_points", c.points.size()},     {"stable_side", c.stable_side},
                 {"termination", c.termination},   {"points", pts}};
  write_json(out / "boundary.json", res.summary);
  return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  const SimConfig& sc = cfg.simulate;
  sc.validate(cfg.params);
  const FrontProfile base = solve_front(cfg.params, cfg.tw.grid, cfg.tw.solver);
  SolveOptions so = cfg.tw.solver;
  so.bc = BoundaryKind::Neumann;
  const FrontProfile prof = solve_front(cfg.params, resample(base, sim_grid(sc)), so);
  const double level = 0.5 * build_singular_front(cfg.params).v_plus_star;
  const Field2D init = init_planar(prof, sc.ny, sc.Ly, sc.noise_amplitude, sc.rng_seed);
  const RunResult r = run(sc, init, level, out / "snapshots");

  CommandResult res;
  write_profile_csv(prof, out / "profile.csv");
  res.artifacts = {"profile.csv", "snapshots/diagnostics.csv", "growth_rates.csv", "simulate.json"};
  for (std::size_t i = 0; i < r.snapshot_times.size(); ++i)
    for (const char* n : {"u", "v", "w"}) res.artifacts.push_back(fmt::format("snapshots/{}_{:05d}.csv", n, i));

  json rates = json::array();
  {
    CsvWriter w(out / "growth_rates.csv", {"k", "ell", "sigma", "sigma_stderr", "monotone", "n_samples"});
    try {
      for (const auto& g : growth_rates(r.diagnostics, sc.fit_start, sc.t_end)) {
        w.row({double(g.k), g.ell, g.sigma, g.sigma_stderr, g.monotone ? 1.0 : 0.0, double(g.n_samples)});
        rates.push_back({{"k", g.k}, {"ell", g.ell}, {"sigma", g.sigma}, {"monotone", g.monotone}});
      }
    } catch (const WindowTooShort& e) {
      spdlog::warn("{}", e.what());
    }
  }
  double vmin = *std::min_element(r.final_state.v.begin(), r.final_state.v.end());
  res.summary = {{"frame_speed", init.frame_speed}, {"dt", r.dt},
                 {"t_end", r.final_state.time},     {"interface_level", level},
                 {"v_min_final", vmin},             {"growth_rates", rates}};
  write_json(out / "simulate.json", res.summary);
  return res;
}

// Compares numbers with a relative tolerance and everything else exactly; records each mismatch.
// Null entries in expected (padding from sparse array selections) match anything.
void compare(const json& expected, const json& actual, double rtol, const std::string& path, json& diffs) {
  if (expected.is_null()) return;
  if (expected.is_number() && actual.is_number()) {
    const double e = expected.get<double>(), a = actual.get<double>();
    const bool both_nan = std::isnan(e) && std::isnan(a);
    if (!both_nan && !(std::abs(a - e) <= rtol * std::abs(e) + 1e-300))
      diffs.push_back({{"key", path}, {"expected", e}, {"actual", a}});
    return;
  }
  if (expected.is_object() && actual.is_object()) {
    for (auto it = expected.begin(); it != expected.end(); ++it) {
      if (!actual.contains(it.key())) {
        diffs.push_back({{"key", path + "." + it.key()}, {"expected", it.value()}, {"actual", nullptr}});
        continue;
      }
      compare(it.value(), actual.at(it.key()), rtol, path + "." + it.key(), diffs);
    }
    return;
  }
  if (expected.is_array() && actual.is_array() && expected.size() <= actual.size()) {
    for (std::size_t i = 0; i < expected.size(); ++i)
      compare(expected[i], actual[i], rtol, fmt::format("{}[{}]", path, i), diffs);
    return;
  }
  if (expected != actual) diffs.push_back({{"key", path}, {"expected", expected}, {"actual", actual}});
}

std::vector<fs::path> golden_cases(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(fmt::format("golden directory {} not found", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

json select_keys(const json& summary, const std::vector<std::string>& keys) {
  json out = json::object();
  for (const auto& k : keys) {
    const json::json_pointer ptr("/" + k);
    if (!summary.contains(ptr)) throw ValidationError(fmt::format("golden key \"{}\" missing from summary", k));
    out[ptr] = summary.at(ptr);
  }
  return out;
}

CommandResult cmd_verify(const RunConfig& cfg, const fs::path& out) {
  const fs::path dir = cfg.verify.golden_dir.empty() ? default_golden_dir() : fs::path(cfg.verify.golden_dir);
  CommandResult res;
  json cases = json::array();
  int failed = 0;
  for (const auto& file : golden_cases(dir)) {
    const json g = read_json(file);
    const std::string name = file.stem().string();
    const std::string command = g.at("command").get<std::string>();
    if (command == "verify") throw ValidationError(fmt::format("golden case {} cannot run verify", name));
    const RunConfig c = config_from_json(g.at("config"));
    const fs::path sub = out / "cases" / name;
    fs::create_directories(sub);
    json diffs = json::array();
    std::string error;
    try {
      const CommandResult r = execute(command, c, sub);
      compare(g.at("expected"), r.summary, g.value("rtol", 1e-9), name, diffs);
    } catch (const Error& e) {
      error = e.what();
    }
    const bool pass = diffs.empty() && error.empty();
    if (!pass) ++failed;
    cases.push_back({{"name", name}, {"command", command}, {"pass", pass}, {"diffs", diffs}, {"error", error}});
    spdlog::info("verify {}: {}", name, pass ? "pass" : "FAIL");
  }
  res.summary = {{"golden_dir", dir.string()},
                 {"n_cases", cases.size()},
                 {"n_failed", failed},
                 {"cases", cases}};
  res.ok = failed == 0;
  write_json(out / "verify.json", res.summary);
  res.artifacts = {"verify.json"};
  return res;
}

}  // namespace

CommandResult execute(const std::string& command, const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  if (command == "classify") return cmd_classify(cfg, out);
  if (command == "singular") return cmd_singular(cfg, out);
  if (command == "tw") return cmd_tw(cfg, out);
  if (command == "spectrum") return cmd_spectrum(cfg, out);
  if (command == "lambda2") return cmd_lambda2(cfg, out);
  if (command == "sweep") return cmd_sweep(cfg, out);
  if (command == "boundary") return cmd_boundary(cfg, out);
  if (command == "simulate") return cmd_simulate(cfg, out);
  if (command == "verify") return cmd_verify(cfg, out);
  throw ValidationError(fmt::format("unknown command \"{}\"", command));
}

json manifest_json(const std::string& command, const RunConfig& cfg, const std::vector<std::string>& artifacts) {
  return {{"tumorfront_manifest", 1},
          {"version", TUMORFRONT_VERSION},
          {"command", command},
          {"config", cfg},
          {"artifacts", artifacts}};
}

json error_json(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    json j = {{"kind", std::string(error_name(err->kind()))}, {"message", err->what()}};
    if (const auto* b = dynamic_cast<const BlowUp*>(err)) j["time"] = b->time();
    if (const auto* h = dynamic_cast<const HomotopyStuck*>(err)) j["last_good"] = h->last_good();
    if (const auto* n = dynamic_cast<const NewtonDiverged*>(err)) j["residual_history"] = n->history();
    return {{"error", j}};
  }
  return {{"error", {{"kind", "Internal"}, {"message", e.what()}}}};
}

int dispatch(const std::string& command, const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
    os << usage_text();
    return 2;
  }
  try {
    const CommandResult r = execute(command, cfg, out);
    write_json(out / "manifest.json", manifest_json(command, cfg, r.artifacts));
    if (!r.stdout_text.empty())
      os << r.stdout_text;
    else
      os << r.summary.dump(2) << "\n";
    return r.ok ? 0 : 1;
  } catch (const std::exception& e) {
    const json j = error_json(e);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!ec) write_json(out / "error.json", j);
    os << j.dump(2) << "\n";
    return 1;
  }
}

void update_golden(const fs::path& dir, const fs::path& scratch) {
  for (const auto& file : golden_cases(dir)) {
    json g = read_json(file);
    const RunConfig c = config_from_json(g.at("config"));
    const CommandResult r = execute(g.at("command").get<std::string>(), c, scratch / file.stem());
    g["expected"] = select_keys(r.summary, g.at("keys").get<std::vector<std::string>>());
    write_json(file, g);
    spdlog::info("updated golden case {}", file.stem().string());
  }
}

}  // namespace tumorfront
