#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"
#include "tumorfront/model.hpp"
#include "tumorfront/traveling_wave.hpp"

namespace tumorfront {

// Node-centred fields on [xi0, xi0 + (nx-1) dx] x [0, ny dy), stored row-major with y fastest.
struct Field2D {
  std::size_t nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  double xi0 = 0.0;
  std::vector<double> u, v, w;
  double time = 0.0;
  double frame_speed = 0.0;
  ModelParams params;

  std::size_t idx(std::size_t i, std::size_t j) const { return i * ny + j; }
  double xi(std::size_t i) const { return xi0 + double(i) * dx; }
};

struct SimConfig {
  double xi_min = -190.0;
  double Lx = 380.0;
  double Ly = 1000.0;
  std::size_t nx = 512;
  std::size_t ny = 256;
  double dt = 0.0;  // 0 selects the cross-diffusion limit 0.2 dx^2 / (1 + kappa)
  double t_end = 6000.0;
  double snapshot_interval = 0.0;  // 0 writes only the final state
  double diag_interval = 20.0;
  double noise_amplitude = 1e-3;
  std::uint64_t rng_seed = 1;
  int n_modes = 8;
  double fit_start = 200.0;  // growth-rate window is [fit_start, t_end]

  double dx() const { return Lx / double(nx - 1); }
  double dy() const { return Ly / double(ny); }
  double resolved_dt(const ModelParams& p) const;
  // Throws ValidationError on inconsistent sizes or an unstable time step.
  void validate(const ModelParams& p) const;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

// Uniform Neumann grid matching a simulation configuration.
Grid1D sim_grid(const SimConfig& cfg);

Field2D init_planar(const FrontProfile& profile, std::size_t ny, double Ly, double noise_amplitude,
                    std::uint64_t seed);

// First-order IMEX stepper. W diffusion and decay are implicit (FFT in y, tridiagonal in xi);
// cross-diffusion and reactions are explicit; u uses a positivity-preserving split of its reaction.
class Stepper {
 public:
  Stepper(const Field2D& shape, double dt);
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  void step(Field2D& f);
  double dt() const { return dt_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double dt_;
};

Field2D step(const Field2D& f, double dt);

struct ModeDiagnostics {
  double Ly = 0.0;
  std::vector<double> times;
  std::vector<int> modes;
  // amplitude[s][k] at times[s], for modes[k]
  std::vector<std::vector<double>> interface_amplitude;
  std::vector<std::vector<double>> slice_amplitude;
};

// Interface position per column where v first crosses level from below (linear interpolation).
std::vector<double> interface_position(const Field2D& f, double level);

// |DFT_k| / ny of a periodic sequence; k = 0 gives the mean.
double mode_amplitude(const std::vector<double>& s, int k);

struct RunResult {
  Field2D final_state;
  ModeDiagnostics diagnostics;
  std::vector<double> snapshot_times;
  double dt = 0.0;  // step actually used: resolved_dt shrunk to divide t_end
};

RunResult run(const SimConfig& cfg, const Field2D& initial, double interface_level,
              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

void write_snapshot(const Field2D& f, const std::filesystem::path& dir, int index);
void write_diagnostics_csv(const ModeDiagnostics& d, const std::filesystem::path& path);

struct GrowthRate {
  int k;
  double ell;
  double sigma;
  double sigma_stderr;
  bool monotone;
  int n_samples;
};

// Least-squares fit of log amplitude on [t0, t1] per mode (interface amplitudes).
std::vector<GrowthRate> growth_rates(const ModeDiagnostics& d, double t0, double t1);

}  // namespace tumorfront
