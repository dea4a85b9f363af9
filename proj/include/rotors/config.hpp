#pragma once

// One JSON document describes a run: the model, the integrator, the seed and
// the settings of every experiment. Every field has an explicit default and
// unknown keys are rejected.

#include "rotors/lyapunov.hpp"
#include "rotors/model.hpp"
#include "rotors/observables.hpp"
#include "rotors/sde.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rotors {

struct StationarySettings {
  /// Discarded time at the start of the run.
  double burn_in = 1000;
  /// Observation spacing for histograms, fluxes, moments and dwell times.
  double sample_interval = 1.0;
  /// Spacing of the samples entering the KS statistics (nearly independent).
  double ks_interval = 10.0;
  std::size_t n_batches = 20;
};

struct HistogramSettings {
  std::size_t bins = 400;
  /// Range per momentum; unset means mean +- 6 sd of the run.
  std::array<std::optional<std::array<double, 2>>, 3> range{};
  double mode_smoothing = 2.0;
  double mode_min_height = 0.05;
  double dwell_band = 0.2;
};

struct LyapunovSettings {
  LyapunovParams params{};
  std::size_t n_points = 100000;
  /// Degree at which F is cut inside V; unset keeps all of F.
  std::optional<int> truncation{};
};

struct ControlSettings {
  State from{};
  State to{};
  double eps = 0.05;
  std::vector<double> deltas{0.08, 0.04, 0.02, 0.01, 0.005};
  double h = 1e-5;
  /// Row spacing, in steps, of the trajectory CSV.
  std::size_t csv_stride = 1000;
};

struct ExperimentConfig {
  ChainParams model{};
  std::optional<std::uint64_t> seed{};
  State initial{};
  IntegratorSpec integrator{Scheme::strang_splitting, 1e-3, 1e6, 1000};
  StationarySettings stationary{};
  HistogramSettings histogram{};
  DriftScanSpec drift_scan{};
  LyapunovSettings lyapunov{};
  ControlSettings control{};
  std::string output_dir = "rotors-out";

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const State& x);
State state_from_json(const nlohmann::json& j);

}  // namespace rotors
