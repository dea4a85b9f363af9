#pragma once

// Long stationary runs and the statistics computed from them.

#include "rotors/config.hpp"
#include "rotors/observables.hpp"

#include <json.hpp>

#include <array>
#include <vector>

namespace rotors {

struct StationaryRun {
  /// States every sample_interval after the burn-in.
  std::vector<State> samples;
  double sample_interval = 0;
  /// Every ks_interval, for the distribution tests.
  std::size_t ks_stride = 1;

  std::vector<double> momentum(int i) const;
  std::vector<double> ks_momentum(int i) const;
};

/// One trajectory from config.initial for burn_in + integrator.total_time.
StationaryRun run_stationary(const ExperimentConfig& config, std::uint64_t seed);

struct EquilibriumCheck {
  double T = 0;
  std::array<double, 3> ks{};
  FluxStats flux;
  bool ks_pass = false;
  bool flux_pass = false;
  bool pass() const { return ks_pass && flux_pass; }
};

/// KS of each p_i against N(0, T) below ks_limit, and |J_b| within 3
/// standard errors of zero.
EquilibriumCheck equilibrium_check(const StationaryRun& run, const ChainParams& params, double ks_limit = 0.01,
                                   std::size_t n_batches = 20);

nlohmann::json to_json(const EquilibriumCheck& check);

struct MarginalSummary {
  std::array<BatchEstimate, 3> mean{};
  std::array<double, 3> ks_best_fit{};
  KurtosisEstimate p2_kurtosis;
  std::array<Histogram, 3> hist{Histogram(0, 1, 1), Histogram(0, 1, 1), Histogram(0, 1, 1)};
  std::vector<Mode> p2_modes;
  std::optional<DwellStats> dwell;
  std::optional<DwellThresholds> dwell_thresholds;
};

/// Histograms, modes of p2 and, when there are two modes, dwell times.
MarginalSummary summarize_marginals(const StationaryRun& run, const HistogramSettings& settings,
                                    std::size_t n_batches = 20);

nlohmann::json to_json(const MarginalSummary& summary);

}  // namespace rotors
