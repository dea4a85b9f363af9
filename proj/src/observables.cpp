#include "rotors/observables.hpp"

#include "rotors/errors.hpp"
#include "rotors/parallel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace rotors {

// ---------------------------------------------------------------------------
// Histogram

Histogram::Histogram(double lo, double hi, std::size_t n_bins) : lo_(lo), hi_(hi), counts_(n_bins, 0.0) {
  if (n_bins < 1) throw ConfigError("histogram needs at least one bin");
  if (!(hi > lo)) throw ConfigError("histogram range must have hi > lo");
}

Histogram Histogram::around(double mean, double sd, std::size_t n_bins) {
  if (!(sd > 0)) sd = 1.0;
  return Histogram(mean - 6 * sd, mean + 6 * sd, n_bins);
}

void Histogram::record(double sample, double weight) {
  total_ += weight;
  if (sample < lo_) {
    underflow_ += weight;
  } else if (sample >= hi_) {
    overflow_ += weight;
  } else {
    auto i = static_cast<std::size_t>((sample - lo_) / bin_width());
    counts_[std::min(i, counts_.size() - 1)] += weight;
  }
}

void Histogram::merge(const Histogram& other) {
  if (other.lo_ != lo_ || other.hi_ != hi_ || other.counts_.size() != counts_.size())
    throw PreconditionError("merging histograms with different binning");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
  total_ += other.total_;
}

std::vector<double> Histogram::density() const {
  std::vector<double> d(counts_.size(), 0.0);
  if (total_ <= 0) return d;
  for (std::size_t i = 0; i < counts_.size(); ++i) d[i] = counts_[i] / (total_ * bin_width());
  return d;
}

void Histogram::write_csv(std::ostream& os) const {
  auto d = density();
  os << "bin_lo,bin_hi,density\n";
  os.precision(12);
  for (std::size_t i = 0; i < counts_.size(); ++i) os << bin_lo(i) << ',' << bin_hi(i) << ',' << d[i] << '\n';
}

// ---------------------------------------------------------------------------
// distributions

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

double ks_normal(std::vector<double> samples, double mean, double sd) {
  return ks_statistic(std::move(samples), [&](double x) { return normal_cdf(x, mean, sd); });
}

double ks_best_fit_normal(std::vector<double> samples) {
  double n = static_cast<double>(samples.size());
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (n - 1));
  return ks_normal(std::move(samples), mean, sd);
}

namespace {

double mean_of(std::span<const double> xs) {
  double m = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) m += (xs[i] - m) / static_cast<double>(i + 1);
  return m;
}

double sample_sd(std::span<const double> xs) {
  double m = mean_of(xs), ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double excess_of(std::span<const double> xs) {
  double m = mean_of(xs), m2 = 0, m4 = 0;
  for (double x : xs) {
    double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  double n = static_cast<double>(xs.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace

BatchEstimate batch_means(std::span<const double> series, std::size_t n_batches) {
  if (n_batches < 2) throw PreconditionError("batch means needs at least two batches");
  std::size_t size = series.size() / n_batches;
  if (size < 1) throw PreconditionError("series too short for the requested number of batches");
  std::vector<double> means;
  for (std::size_t b = 0; b < n_batches; ++b) means.push_back(mean_of(series.subspan(b * size, size)));
  BatchEstimate e;
  e.mean = mean_of(means);
  e.std_error = sample_sd(means) / std::sqrt(static_cast<double>(n_batches));
  e.n_batches = n_batches;
  return e;
}

KurtosisEstimate excess_kurtosis(std::span<const double> series, std::size_t n_batches) {
  if (n_batches < 2) throw PreconditionError("kurtosis needs at least two batches");
  std::size_t size = series.size() / n_batches;
  if (size < 4) throw PreconditionError("series too short for the requested number of batches");
  std::vector<double> per_batch;
  for (std::size_t b = 0; b < n_batches; ++b) per_batch.push_back(excess_of(series.subspan(b * size, size)));
  KurtosisEstimate k;
  k.excess = excess_of(series.first(size * n_batches));
  k.std_error = sample_sd(per_batch) / std::sqrt(static_cast<double>(n_batches));
  return k;
}

// ---------------------------------------------------------------------------
// heat flux

FluxStats heat_flux(std::span<const State> series, const ChainParams& params, std::size_t n_batches) {
  std::vector<double> j1, j3, sum;
  const double g1 = params.gamma1.get_d(), g3 = params.gamma3.get_d();
  const double T1 = params.T1.get_d(), T3 = params.T3.get_d();
  const double t1 = params.tau1.get_d(), t3 = params.tau3.get_d();
  for (const auto& x : series) {
    double a = g1 * (T1 - x.p[0] * x.p[0]) + t1 * x.p[0];
    double b = g3 * (T3 - x.p[2] * x.p[2]) + t3 * x.p[2];
    j1.push_back(a);
    j3.push_back(b);
    sum.push_back(a + b);
  }
  auto e1 = batch_means(j1, n_batches);
  auto e3 = batch_means(j3, n_batches);
  auto es = batch_means(sum, n_batches);
  FluxStats f;
  f.J1 = e1.mean;
  f.J3 = e3.mean;
  f.stderr1 = e1.std_error;
  f.stderr3 = e3.std_error;
  f.stderr_sum = es.std_error;
  f.n_samples = series.size();
  return f;
}

nlohmann::json to_json(const FluxStats& f) {
  return {{"J1", f.J1},
          {"J3", f.J3},
          {"stderr1", f.stderr1},
          {"stderr3", f.stderr3},
          {"stderr_sum", f.stderr_sum},
          {"n_samples", f.n_samples}};
}

// ---------------------------------------------------------------------------
// conditional drift

std::vector<DriftEstimate> conditional_drift(const ChainParams& params, const DriftScanSpec& spec, const RngSpec& rng,
                                             unsigned jobs) {
  if (spec.omegas.empty()) throw ConfigError("drift scan needs at least one omega");
  if (spec.windows.size() != 1 && spec.windows.size() != spec.omegas.size())
    throw ConfigError("drift scan needs one window, or one window per omega");
  if (spec.n_paths < 2) throw ConfigError("drift scan needs at least two paths");
  if (!(spec.tail_start >= 0 && spec.tail_start < 1)) throw ConfigError("tail_start must lie in [0, 1)");
  ForceField field(params);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<DriftEstimate> out;

  for (std::size_t w = 0; w < spec.omegas.size(); ++w) {
    const double omega = spec.omegas[w];
    const double window = spec.windows.size() == 1 ? spec.windows[0] : spec.windows[w];
    IntegratorSpec integ = spec.integrator;
    integ.total_time = window;
    integ.record_stride = std::max<long>(1, std::lround(spec.sample_interval / integ.h));
    integ.validate();
    const double t0 = spec.tail_start * window;

    struct PathResult {
      double slope, excursion;
    };
    auto results = parallel_map(spec.n_paths, jobs, [&](std::size_t i) {
      std::mt19937_64 init(substream_seed(rng.master_seed, i + (w << 40), 1));
      std::uniform_real_distribution<double> angle(0.0, two_pi);
      boost::random::normal_distribution<double> normal;
      State x0;
      for (int k = 0; k < 3; ++k) x0.q[k] = angle(init);
      for (int b : {1, 3}) {
        double mean = params.tau(b).get_d() / params.gamma(b).get_d();
        x0.p[b - 1] = mean + std::sqrt(params.T(b).get_d()) * normal(init);
      }
      x0.p[1] = omega;

      double st = 0, sy = 0, stt = 0, sty = 0, n = 0, last = omega;
      CallbackObserver obs([&](double t, const State& x) {
        last = x.p[1];
        if (t < t0) return;
        double y = x.p[1] - omega;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        n += 1;
      });
      Observer* list[] = {&obs};
      NormalStream noise(substream_seed(rng.master_seed, i + (w << 40)));
      simulate(x0, field, integ, noise, list);
      double denom = n * stt - st * st;
      double slope = denom > 0 ? (n * sty - st * sy) / denom : 0.0;
      return PathResult{slope, std::abs(last - omega)};
    });

    std::vector<double> slopes;
    double excursion = 0;
    for (const auto& r : results) {
      slopes.push_back(r.slope);
      excursion += r.excursion;
    }
    DriftEstimate e;
    e.omega = omega;
    e.window = window;
    e.n_paths = spec.n_paths;
    e.mean_slope = mean_of(slopes);
    e.std_error = sample_sd(slopes) / std::sqrt(static_cast<double>(slopes.size()));
    e.mean_excursion = excursion / static_cast<double>(results.size());
    if (omega != 0 && e.mean_excursion > 0.1 * std::abs(omega))
      throw RegimeViolation("mean |p2 - omega| = " + std::to_string(e.mean_excursion) + " exceeds 10% of omega = " +
                            std::to_string(omega) + "; shorten the window");
    out.push_back(e);
  }
  return out;
}

double drift_exponent(std::span<const DriftEstimate> estimates) {
  if (estimates.size() < 2) throw PreconditionError("exponent fit needs at least two estimates");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& e : estimates) {
    double x = std::log(std::abs(e.omega)), y = std::log(std::abs(e.mean_slope));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_drift_csv(std::ostream& os, std::span<const DriftEstimate> estimates) {
  os << "omega,slope,stderr\n";
  os.precision(12);
  for (const auto& e : estimates) os << e.omega << ',' << e.mean_slope << ',' << e.std_error << '\n';
}

// ---------------------------------------------------------------------------
// modes

std::vector<Mode> find_modes(const Histogram& hist, double smoothing_width, double min_relative_height) {
  const auto d = hist.density();
  const std::size_t n = d.size();
  std::vector<double> s(n, 0.0);
  if (smoothing_width > 0) {
    const int reach = static_cast<int>(std::ceil(4 * smoothing_width));
    std::vector<double> kernel;
    for (int j = -reach; j <= reach; ++j)
      kernel.push_back(std::exp(-0.5 * (j / smoothing_width) * (j / smoothing_width)));
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0, norm = 0;
      for (int j = -reach; j <= reach; ++j) {
        long k = static_cast<long>(i) + j;
        if (k < 0 || k >= static_cast<long>(n)) continue;
        acc += kernel[j + reach] * d[k];
        norm += kernel[j + reach];
      }
      s[i] = acc / norm;
    }
  } else {
    s = d;
  }

  // Plateaus count once, at their centre.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    bool left = i == 0 || s[i - 1] < s[i];
    bool right = j + 1 == n || s[j + 1] < s[i];
    if (left && right && s[i] > 0) peaks.push_back((i + j) / 2);
    i = j + 1;
  }
  if (peaks.empty()) return {};
  double top = 0;
  for (auto p : peaks) top = std::max(top, s[p]);
  const double floor = min_relative_height * top;

  std::vector<Mode> modes;
  for (auto p : peaks) {
    if (s[p] < floor) continue;
    // Topographic prominence: the dip to the nearest higher peak on each side.
    double left_min = s[p], right_min = s[p];
    bool left_higher = false, right_higher = false;
    for (std::size_t k = p; k-- > 0;) {
      left_min = std::min(left_min, s[k]);
      if (s[k] > s[p]) {
        left_higher = true;
        break;
      }
    }
    for (std::size_t k = p + 1; k < n; ++k) {
      right_min = std::min(right_min, s[k]);
      if (s[k] > s[p]) {
        right_higher = true;
        break;
      }
    }
    double base = 0;
    if (left_higher && right_higher) base = std::max(left_min, right_min);
    else if (left_higher) base = left_min;
    else if (right_higher) base = right_min;
    if (left_higher || right_higher) {
      if (s[p] - base < floor) continue;
    }
    modes.push_back({hist.bin_center(p), s[p]});
  }
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.height != b.height) return a.height > b.height;
    return a.location < b.location;
  });
  return modes;
}

// ---------------------------------------------------------------------------
// dwell times

double DwellThresholds::lower() const {
  double mid = 0.5 * (low_mode + high_mode);
  return mid - 0.5 * band * (high_mode - low_mode);
}

double DwellThresholds::upper() const {
  double mid = 0.5 * (low_mode + high_mode);
  return mid + 0.5 * band * (high_mode - low_mode);
}

DwellTracker::DwellTracker(DwellThresholds thresholds) : th_(thresholds) {
  if (!(th_.high_mode > th_.low_mode)) throw PreconditionError("dwell thresholds need high_mode > low_mode");
  if (!(th_.band >= 0 && th_.band < 1)) throw PreconditionError("hysteresis band must lie in [0, 1)");
}

void DwellTracker::add(double t, double value) {
  if (!any_) {
    first_ = t;
    any_ = true;
  }
  last_ = t;
  int next = regime_;
  if (value <= th_.lower()) next = -1;
  if (value >= th_.upper()) next = +1;
  if (regime_ == 0) {
    if (next != 0) {
      regime_ = next;
      start_ = t;
    }
    return;
  }
  if (next == regime_) return;
  double duration = t - start_;
  if (first_switch_seen_) {
    if (regime_ < 0) {
      sum_low_ += duration;
      sumsq_low_ += duration * duration;
      ++n_low_;
    } else {
      sum_high_ += duration;
      sumsq_high_ += duration * duration;
      ++n_high_;
    }
  }
  first_switch_seen_ = true;
  ++switches_;
  regime_ = next;
  start_ = t;
}

DwellStats DwellTracker::result() const {
  DwellStats s;
  s.n_low = n_low_;
  s.n_high = n_high_;
  s.mean_low = n_low_ ? sum_low_ / static_cast<double>(n_low_) : 0.0;
  s.mean_high = n_high_ ? sum_high_ / static_cast<double>(n_high_) : 0.0;
  auto se = [](double sum, double sumsq, std::size_t n) {
    if (n < 2) return 0.0;
    const double dn = static_cast<double>(n), mean = sum / dn;
    return std::sqrt(std::max(0.0, (sumsq - dn * mean * mean) / (dn - 1)) / dn);
  };
  s.se_low = se(sum_low_, sumsq_low_, n_low_);
  s.se_high = se(sum_high_, sumsq_high_, n_high_);
  s.switches = switches_;
  double completed = sum_low_ + sum_high_;
  s.censored_time = any_ ? (last_ - first_) - completed : 0.0;
  return s;
}

DwellStats dwell_times(std::span<const double> series, double dt, const DwellThresholds& thresholds) {
  DwellTracker tracker(thresholds);
  for (std::size_t i = 0; i < series.size(); ++i) tracker.add(static_cast<double>(i) * dt, series[i]);
  return tracker.result();
}

}  // namespace rotors
