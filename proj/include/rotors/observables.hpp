#pragma once

#include "rotors/model.hpp"
#include "rotors/sde.hpp"
#include "rotors/state.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rotors {

// ---------------------------------------------------------------------------
// histograms

class Histogram {
 public:
  Histogram(double lo, double hi, std::size_t n_bins);
  /// 400 bins over [mean - 6 sd, mean + 6 sd].
  static Histogram around(double mean, double sd, std::size_t n_bins = 400);

  void record(double sample, double weight = 1.0);
  /// Adds the tallies of a histogram with identical binning.
  void merge(const Histogram& other);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t n_bins() const { return counts_.size(); }
  double bin_width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
  double bin_lo(std::size_t i) const { return lo_ + static_cast<double>(i) * bin_width(); }
  double bin_hi(std::size_t i) const { return lo_ + static_cast<double>(i + 1) * bin_width(); }
  double bin_center(std::size_t i) const { return lo_ + (static_cast<double>(i) + 0.5) * bin_width(); }

  const std::vector<double>& counts() const { return counts_; }
  double underflow() const { return underflow_; }
  double overflow() const { return overflow_; }
  double total() const { return total_; }

  /// counts / (total * bin width); integrates to the in-range fraction.
  std::vector<double> density() const;
  void write_csv(std::ostream& os) const;

 private:
  double lo_, hi_;
  std::vector<double> counts_;
  double underflow_ = 0, overflow_ = 0, total_ = 0;
};

// ---------------------------------------------------------------------------
// distribution tests and moments

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// sup |F_n - F| of the samples against a continuous cdf.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf);

double ks_normal(std::vector<double> samples, double mean = 0.0, double sd = 1.0);
/// Against the Gaussian with the sample mean and standard deviation.
double ks_best_fit_normal(std::vector<double> samples);

/// Mean and standard error from non-overlapping batch means, for correlated
/// series. The trailing partial batch is dropped.
struct BatchEstimate {
  double mean = 0;
  double std_error = 0;
  std::size_t n_batches = 0;
};
BatchEstimate batch_means(std::span<const double> series, std::size_t n_batches = 20);

struct KurtosisEstimate {
  double excess = 0;
  /// From the spread of per-batch excess kurtosis.
  double std_error = 0;
};
KurtosisEstimate excess_kurtosis(std::span<const double> series, std::size_t n_batches = 20);

// ---------------------------------------------------------------------------
// heat flux

struct FluxStats {
  double J1 = 0, J3 = 0;
  double stderr1 = 0, stderr3 = 0;
  /// Standard error of J1 + J3 from batch means of the summed series.
  double stderr_sum = 0;
  std::size_t n_samples = 0;
};

/// J_b = time average of gamma_b (T_b - p_b^2) + tau_b p_b over a stationary series.
FluxStats heat_flux(std::span<const State> series, const ChainParams& params, std::size_t n_batches = 20);

nlohmann::json to_json(const FluxStats& f);

// ---------------------------------------------------------------------------
// conditional drift of p2

struct DriftEstimate {
  double omega = 0;
  double window = 0;
  std::size_t n_paths = 0;
  double mean_slope = 0;
  double std_error = 0;
  /// Mean |p2(window) - omega| over the paths.
  double mean_excursion = 0;
};

struct DriftScanSpec {
  std::vector<double> omegas{10, 20, 40};
  /// One window per omega, or a single window used for all.
  std::vector<double> windows{10, 30, 100};
  std::size_t n_paths = 10000;
  /// The regression uses t in [tail_start * window, window].
  double tail_start = 0.1;
  /// p2 sampling interval inside the window.
  double sample_interval = 0.05;
  IntegratorSpec integrator{};
};

/// Starts paths at q uniform, p_b ~ N(tau_b / gamma_b, T_b), p2 = omega and
/// averages the per-path least-squares slope of p2(t). Throws RegimeViolation
/// when the mean excursion exceeds 10% of omega (omega != 0).
std::vector<DriftEstimate> conditional_drift(const ChainParams& params, const DriftScanSpec& spec, const RngSpec& rng,
                                             unsigned jobs = 0);

/// Least-squares fit of log|slope| against log omega; returns the exponent.
double drift_exponent(std::span<const DriftEstimate> estimates);

void write_drift_csv(std::ostream& os, std::span<const DriftEstimate> estimates);

// ---------------------------------------------------------------------------
// modes and regime switching

struct Mode {
  double location = 0;
  double height = 0;
};

/// Local maxima of the Gaussian-smoothed density (width in bins), highest
/// first; ties broken by location. Maxima lower than min_relative_height
/// times the global maximum, or whose dip to a higher neighbouring maximum is
/// shallower than that fraction, are discarded as noise.
std::vector<Mode> find_modes(const Histogram& hist, double smoothing_width = 2.0, double min_relative_height = 0.05);

struct DwellThresholds {
  double low_mode = 0;
  double high_mode = 0;
  /// Hysteresis band as a fraction of the mode separation, centred between the modes.
  double band = 0.2;

  double lower() const;
  double upper() const;
};

struct DwellStats {
  double mean_low = 0, mean_high = 0;
  /// Standard errors of the two means (sample sd / sqrt(n)); 0 below two sojourns.
  double se_low = 0, se_high = 0;
  std::size_t n_low = 0, n_high = 0;
  std::size_t switches = 0;
  /// Initial and final sojourns are censored and excluded from the means.
  double censored_time = 0;
  bool single_censored_dwell() const { return switches == 0; }
};

/// Streaming regime classifier.
class DwellTracker {
 public:
  explicit DwellTracker(DwellThresholds thresholds);
  void add(double t, double value);
  DwellStats result() const;

 private:
  DwellThresholds th_;
  int regime_ = 0;  // -1 low, +1 high, 0 undecided
  double start_ = 0, last_ = 0, first_ = 0;
  bool any_ = false;
  bool first_switch_seen_ = false;
  double sum_low_ = 0, sum_high_ = 0, sumsq_low_ = 0, sumsq_high_ = 0;
  std::size_t n_low_ = 0, n_high_ = 0, switches_ = 0;
};

DwellStats dwell_times(std::span<const double> series, double dt, const DwellThresholds& thresholds);

// ---------------------------------------------------------------------------

template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace rotors
