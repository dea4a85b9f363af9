#include "rotors/experiment.hpp"

#include "rotors/errors.hpp"

#include <cmath>

namespace rotors {

std::vector<double> StationaryRun::momentum(int i) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(x.p[i]);
  return out;
}

std::vector<double> StationaryRun::ks_momentum(int i) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < samples.size(); k += ks_stride) out.push_back(samples[k].p[i]);
  return out;
}

StationaryRun run_stationary(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  StationaryRun run;
  IntegratorSpec spec = config.integrator;
  const long stride = std::max<long>(1, std::lround(config.stationary.sample_interval / spec.h));
  spec.record_stride = stride;
  spec.total_time = config.stationary.burn_in + config.integrator.total_time;
  run.sample_interval = static_cast<double>(stride) * spec.h;
  run.ks_stride = std::max<std::size_t>(1, static_cast<std::size_t>(
                                               std::lround(config.stationary.ks_interval / run.sample_interval)));
  run.samples.reserve(static_cast<std::size_t>(config.integrator.total_time / run.sample_interval) + 2);
  const double burn_in = config.stationary.burn_in;
  CallbackObserver obs([&](double t, const State& x) {
    if (t >= burn_in) run.samples.push_back(x);
  });
  Observer* list[] = {&obs};
  simulate(config.initial, config.model, spec, RngSpec{seed}, list);
  if (run.samples.size() < 2) throw ConfigError("stationary run produced fewer than two samples");
  return run;
}

EquilibriumCheck equilibrium_check(const StationaryRun& run, const ChainParams& params, double ks_limit,
                                   std::size_t n_batches) {
  if (params.T1 != params.T3 || params.tau1 != 0 || params.tau3 != 0)
    throw PreconditionError("equilibrium check needs T1 = T3 and no torques");
  EquilibriumCheck out;
  out.T = params.T1.get_d();
  const double sd = std::sqrt(out.T);
  out.ks_pass = true;
  for (int i = 0; i < 3; ++i) {
    out.ks[i] = ks_normal(run.ks_momentum(i), 0.0, sd);
    if (!(out.ks[i] < ks_limit)) out.ks_pass = false;
  }
  out.flux = heat_flux(run.samples, params, n_batches);
  out.flux_pass = std::abs(out.flux.J1) < 3 * out.flux.stderr1 && std::abs(out.flux.J3) < 3 * out.flux.stderr3;
  return out;
}

nlohmann::json to_json(const EquilibriumCheck& c) {
  return {{"T", c.T},
          {"ks", {{"p1", c.ks[0]}, {"p2", c.ks[1]}, {"p3", c.ks[2]}}},
          {"ks_pass", c.ks_pass},
          {"flux", to_json(c.flux)},
          {"flux_pass", c.flux_pass},
          {"pass", c.pass()}};
}

MarginalSummary summarize_marginals(const StationaryRun& run, const HistogramSettings& settings,
                                    std::size_t n_batches) {
  MarginalSummary out;
  std::array<std::vector<double>, 3> series;
  for (int i = 0; i < 3; ++i) {
    series[i] = run.momentum(i);
    out.mean[i] = batch_means(series[i], n_batches);
    out.ks_best_fit[i] = ks_best_fit_normal(run.ks_momentum(i));
    double mean = out.mean[i].mean, ss = 0;
    for (double v : series[i]) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(series[i].size() - 1));
    Histogram h = settings.range[i] ? Histogram((*settings.range[i])[0], (*settings.range[i])[1], settings.bins)
                                    : Histogram::around(mean, sd, settings.bins);
    for (double v : series[i]) h.record(v);
    out.hist[i] = h;
  }
  out.p2_kurtosis = excess_kurtosis(series[1], n_batches);
  out.p2_modes = find_modes(out.hist[1], settings.mode_smoothing, settings.mode_min_height);
  if (out.p2_modes.size() == 2) {
    DwellThresholds th;
    th.low_mode = std::min(out.p2_modes[0].location, out.p2_modes[1].location);
    th.high_mode = std::max(out.p2_modes[0].location, out.p2_modes[1].location);
    th.band = settings.dwell_band;
    out.dwell_thresholds = th;
    out.dwell = dwell_times(series[1], run.sample_interval, th);
  }
  return out;
}

nlohmann::json to_json(const MarginalSummary& s) {
  nlohmann::json means = nlohmann::json::object();
  const char* names[3] = {"p1", "p2", "p3"};
  for (int i = 0; i < 3; ++i)
    means[names[i]] = {{"mean", s.mean[i].mean}, {"std_error", s.mean[i].std_error}};
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : s.p2_modes) modes.push_back({{"location", m.location}, {"height", m.height}});
  nlohmann::json out = {
      {"means", means},
      {"ks_best_fit_normal", {{"p1", s.ks_best_fit[0]}, {"p2", s.ks_best_fit[1]}, {"p3", s.ks_best_fit[2]}}},
      {"p2_excess_kurtosis", {{"value", s.p2_kurtosis.excess}, {"std_error", s.p2_kurtosis.std_error}}},
      {"p2_modes", modes},
      {"dwell", nullptr}};
  if (s.dwell) {
    const auto& d = *s.dwell;
    out["dwell"] = {{"low_threshold", s.dwell_thresholds->lower()},
                    {"high_threshold", s.dwell_thresholds->upper()},
                    {"mean_low", d.mean_low},
                    {"mean_high", d.mean_high},
                    {"se_low", d.se_low},
                    {"se_high", d.se_high},
                    {"n_low", d.n_low},
                    {"n_high", d.n_high},
                    {"switches", d.switches},
                    {"censored_time", d.censored_time}};
  }
  return out;
}

}  // namespace rotors
