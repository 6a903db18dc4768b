#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tumorfront/commands.hpp"
#include "tumorfront/config.hpp"
#include "tumorfront/errors.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tumorfront");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("TUMORFRONT_LOG")) {
    const std::string s = env;
    if (s == "error") spdlog::set_level(spdlog::level::err);
    else if (s == "info") spdlog::set_level(spdlog::level::info);
    else if (s == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("TUMORFRONT_LOG={} not recognised; using info", s);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Front solver and transverse stability toolkit for the acid-mediated invasion model"};
  std::string command, config_path, out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool update = false;
  app.add_option("command", command, "one of: classify singular tw spectrum lambda2 sweep boundary simulate verify")
      ->required();
  app.add_option("--config", config_path, "JSON config or run manifest");
  app.add_option("--out", out_dir, "artifact directory (overrides output_dir)");
  app.add_option("--threads", threads, "worker threads (default: all cores)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_flag("--update-golden", update, "with verify: rewrite the expected values of the golden cases");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << tumorfront::usage_text();
    app.exit(e);
    return 2;
  }

  const auto& names = tumorfront::command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    std::cout << tumorfront::usage_text();
    return 2;
  }
  if (threads > 0) omp_set_num_threads(threads);

  tumorfront::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = tumorfront::parse_config(config_path);
    if (seed_opt->count()) {
      cfg.rng_seed = seed;
      cfg.simulate.rng_seed = seed;
    }
  } catch (const std::exception& e) {
    std::cout << tumorfront::error_json(e).dump(2) << "\n";
    return 2;
  }
  const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(out_dir);

  if (update) {
    if (command != "verify") {
      std::cout << "--update-golden applies to verify only\n" << tumorfront::usage_text();
      return 2;
    }
    try {
      tumorfront::update_golden(
          cfg.verify.golden_dir.empty() ? tumorfront::default_golden_dir() : std::filesystem::path(cfg.verify.golden_dir), out);
    } catch (const std::exception& e) {
      std::cout << tumorfront::error_json(e).dump(2) << "\n";
      return 1;
    }
    return 0;
  }
  return tumorfront::dispatch(command, cfg, out, std::cout);
}
