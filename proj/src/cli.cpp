#include "rotors/cli.hpp"

#include "rotors/averaging.hpp"
#include "rotors/config.hpp"
#include "rotors/control.hpp"
#include "rotors/errors.hpp"
#include "rotors/experiment.hpp"
#include "rotors/lyapunov.hpp"
#include "rotors/observables.hpp"
#include "rotors/parallel.hpp"
#include "rotors/sde.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace rotors {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Common& c, bool randomized) {
  cmd->add_option("--config", c.config_path, "JSON configuration file");
  cmd->add_option("--jobs", c.jobs, "worker threads (0: all cores)");
  cmd->add_flag("--print-config", c.print_config, "print the effective configuration and exit");
  if (randomized) cmd->add_option("--seed", c.seed, "master seed (required unless the config sets one)");
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' in " + what);
    }
  }
  return out;
}

State parse_state(const std::string& text, const std::string& what) {
  auto v = parse_list(text, what);
  if (v.size() != 6) throw ConfigError(what + " needs six comma-separated numbers q1,q2,q3,p1,p2,p3");
  State x;
  for (int i = 0; i < 3; ++i) {
    x.q[i] = v[i];
    x.p[i] = v[3 + i];
  }
  return x;
}

fs::path output_dir(const ExperimentConfig& config) {
  fs::path dir = config.output_dir;
  if (const char* env = std::getenv("ROTORS_OUTPUT_DIR"); env && *env) dir = env;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::uint64_t require_seed(const ExperimentConfig& config) {
  if (!config.seed) throw ConfigError("this command is randomized: pass --seed N (or set \"seed\" in the config)");
  return *config.seed;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_average(const ExperimentConfig& config, int target_degree, std::ostream& out) {
  AveragingOptions opts;
  opts.target_degree = target_degree;
  EffectiveDynamics eff = average_p2(config.model, opts);
  json j = to_json(eff);
  write_json(output_dir(config) / "effective.json", j);
  out << j.dump(2) << "\n";
  return exit_ok;
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  fs::path path = output_dir(config) / "trajectory.csv";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  CsvWriter writer(os);
  Observer* list[] = {&writer};
  State end = simulate(config.initial, config.model, config.integrator, RngSpec{seed}, list);
  out << "final state " << to_json(end).dump() << "\nwrote " << path.string() << "\n";
  return exit_ok;
}

int cmd_equilibrium(const ExperimentConfig& config, double ks_limit, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  StationaryRun run = run_stationary(config, seed);
  EquilibriumCheck check = equilibrium_check(run, config.model, ks_limit, config.stationary.n_batches);
  json j = to_json(check);
  j["ks_limit"] = ks_limit;
  j["n_ks_samples"] = run.ks_momentum(0).size();
  write_json(output_dir(config) / "equilibrium.json", j);
  out << j.dump(2) << "\n" << (check.pass() ? "PASS" : "FAIL") << "\n";
  return check.pass() ? exit_ok : exit_fail;
}

int cmd_drift(const ExperimentConfig& config, unsigned jobs, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  EffectiveDynamics eff = average_p2(config.model);
  const double alpha = eff.alpha.get_d();
  auto est = conditional_drift(config.model, config.drift_scan, RngSpec{seed}, jobs);
  fs::path dir = output_dir(config);
  {
    std::ofstream os(dir / "drift.csv", std::ios::binary);
    write_drift_csv(os, est);
  }
  bool pass = true;
  json rows = json::array();
  for (const auto& e : est) {
    double predicted = -alpha / (e.omega * e.omega * e.omega);
    double rel = std::abs(e.mean_slope - predicted) / std::abs(predicted);
    bool ok = rel <= 0.25;
    pass = pass && ok;
    rows.push_back({{"omega", e.omega},
                    {"window", e.window},
                    {"n_paths", e.n_paths},
                    {"slope", e.mean_slope},
                    {"std_error", e.std_error},
                    {"predicted", predicted},
                    {"relative_deviation", rel},
                    {"within_25_percent", ok},
                    {"mean_excursion", e.mean_excursion}});
  }
  json j = {{"alpha", alpha}, {"estimates", rows}};
  if (est.size() >= 2) {
    double exponent = drift_exponent(est);
    bool ok = std::abs(exponent + 3) <= 0.3;
    pass = pass && ok;
    j["exponent"] = exponent;
    j["exponent_within_0.3_of_minus_3"] = ok;
  }
  j["pass"] = pass;
  write_json(dir / "drift.json", j);
  out << j.dump(2) << "\n" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? exit_ok : exit_fail;
}

int cmd_lyapunov(const ExperimentConfig& config, bool search, unsigned jobs, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  EffectiveDynamics eff = average_p2(config.model);
  LyapunovParams lyp = config.lyapunov.params;
  json j;
  if (search) {
    SearchSpec spec;
    spec.seed = seed;
    spec.jobs = jobs;
    SearchResult found = search_parameters(config.model, eff, lyp, spec);
    if (!found.found) {
      json fail = {{"pass", false}, {"search", "no (R, A, M) on the grid gives LV < 0 outside K"}};
      write_json(output_dir(config) / "lyapunov.json", fail);
      out << fail.dump(2) << "\nFAIL\n";
      return exit_fail;
    }
    lyp = found.lyp;
    j["search"] = {{"c4_max", found.c4_max}};
  }
  LyapunovFunction V(config.model, lyp, eff, config.lyapunov.truncation);
  DriftScanOptions opts;
  opts.n_points = config.lyapunov.n_points;
  opts.seed = seed;
  opts.jobs = jobs;
  opts.throw_on_failure = false;
  DriftScanReport rep = drift_scan(V, opts);
  json report = to_json(rep, lyp);
  for (auto& [k, v] : j.items()) report[k] = v;
  SandwichFit fit = fit_sandwich(V, 10000, seed + 1);
  std::size_t violations = sandwich_violations(V, fit, opts.n_points, seed);
  report["sandwich"] = {{"c1", fit.c1}, {"c2", fit.c2}, {"violations", violations}};
  double fd = V.fd_discrepancy(1000, seed);
  report["fd_discrepancy"] = fd;
  bool pass = rep.pass && violations == 0 && fd < 1e-4;
  report["pass"] = pass;
  write_json(output_dir(config) / "lyapunov.json", report);
  out << report.dump(2) << "\n" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? exit_ok : exit_fail;
}

int cmd_control(const ExperimentConfig& config, std::ostream& out) {
  const auto& c = config.control;
  ControllabilityReport rep = verify_controllability(c.from, c.to, c.eps, c.deltas, config.model, c.h);
  fs::path dir = output_dir(config);
  write_json(dir / "plan.json", to_json(rep.plan));
  double smallest = *std::min_element(c.deltas.begin(), c.deltas.end());
  OuterTrajectories outer = synthesize_outer(rep.plan, config.model, smallest, c.from, c.to);
  std::vector<std::pair<double, State>> samples;
  integrate_controlled(outer, config.model, c.from, c.h, &samples, c.csv_stride);
  {
    std::ofstream os(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(os, samples, outer);
  }
  json j = to_json(rep);
  write_json(dir / "control_report.json", j);
  out << j.dump(2) << "\n" << (rep.achieved ? "PASS" : "FAIL") << "\n";
  return rep.achieved ? exit_ok : exit_fail;
}

int cmd_hist(const ExperimentConfig& config, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  StationaryRun run = run_stationary(config, seed);
  MarginalSummary s = summarize_marginals(run, config.histogram, config.stationary.n_batches);
  fs::path dir = output_dir(config);
  const char* names[3] = {"p1", "p2", "p3"};
  for (int i = 0; i < 3; ++i) {
    std::ofstream os(dir / (std::string("hist_") + names[i] + ".csv"), std::ios::binary);
    s.hist[i].write_csv(os);
  }
  json j = to_json(s);
  write_json(dir / "modes.json", j);
  out << j.dump(2) << "\n";
  return exit_ok;
}

int cmd_flux(const ExperimentConfig& config, std::ostream& out) {
  const std::uint64_t seed = require_seed(config);
  StationaryRun run = run_stationary(config, seed);
  FluxStats f = heat_flux(run.samples, config.model, config.stationary.n_batches);
  json j = to_json(f);
  write_json(output_dir(config) / "flux.json", j);
  out << j.dump(2) << "\n";
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rotor chain laboratory"};
  app.require_subcommand(1);

  Common common;
  int target_degree = -4;
  std::optional<double> total_time, T_eq;
  std::optional<long> stride;
  std::optional<std::string> scheme;
  std::optional<double> h;
  double ks_limit = 0.01;
  std::optional<std::size_t> n_paths;
  std::optional<std::string> omegas;
  std::optional<double> beta, A, R, M, c4;
  std::optional<int> k;
  std::optional<std::size_t> n_points;
  bool search = false;
  std::optional<std::string> from, to, deltas;
  std::optional<double> eps;

  auto* average = app.add_subcommand("average", "symbolic averaging of the middle rotor");
  add_common(average, common, false);
  average->add_option("--target-degree", target_degree, "largest degree left in the residual drift");

  auto* simulate_cmd = app.add_subcommand("simulate", "integrate one trajectory to CSV");
  add_common(simulate_cmd, common, true);
  simulate_cmd->add_option("--t", total_time, "total time");
  simulate_cmd->add_option("--stride", stride, "steps between CSV rows");
  simulate_cmd->add_option("--scheme", scheme, "em or split");
  simulate_cmd->add_option("--dt", h, "time step");

  auto* equilibrium = app.add_subcommand("equilibrium-check", "Gibbs marginals and zero flux at T1 = T3");
  add_common(equilibrium, common, true);
  equilibrium->add_option("--T", T_eq, "common bath temperature (sets tau = 0)");
  equilibrium->add_option("--t", total_time, "measured time after burn-in");
  equilibrium->add_option("--ks-limit", ks_limit, "KS threshold");

  auto* drift = app.add_subcommand("drift-scan", "conditional drift of p2 at fixed large speeds");
  add_common(drift, common, true);
  drift->add_option("--paths", n_paths, "paths per omega");
  drift->add_option("--omegas", omegas, "comma-separated omegas");

  auto* lyap = app.add_subcommand("lyapunov-scan", "sampled check of the drift inequality");
  add_common(lyap, common, true);
  lyap->add_option("--beta", beta, "inverse temperature in the exponent");
  lyap->add_option("--A", A, "weight of the middle correction");
  lyap->add_option("--k", k, "power of the outer radius in the split");
  lyap->add_option("--R", R, "offset of the split scale");
  lyap->add_option("--M", M, "outer radius bounding the compact set");
  lyap->add_option("--c4", c4, "constant in phi");
  lyap->add_option("--n", n_points, "number of sampled states");
  lyap->add_flag("--search", search, "search (R, A, M, c4) before scanning");

  auto* control = app.add_subcommand("control", "plan and replay a steering of the chain");
  add_common(control, common, false);
  control->add_option("--from", from, "q1,q2,q3,p1,p2,p3");
  control->add_option("--to", to, "q1,q2,q3,p1,p2,p3");
  control->add_option("--eps", eps, "target accuracy");
  control->add_option("--delta", deltas, "comma-separated bridging budgets");

  auto* hist = app.add_subcommand("hist", "stationary histograms, modes and dwell times");
  add_common(hist, common, true);
  hist->add_option("--t", total_time, "measured time after burn-in");

  auto* flux = app.add_subcommand("flux", "stationary heat fluxes");
  add_common(flux, common, true);
  flux->add_option("--t", total_time, "measured time after burn-in");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    ExperimentConfig config = common.config_path.empty() ? ExperimentConfig{} : load_config(common.config_path);
    if (common.seed) config.seed = common.seed;
    if (total_time) config.integrator.total_time = *total_time;
    if (stride) config.integrator.record_stride = *stride;
    if (scheme) config.integrator.scheme = parse_scheme(*scheme);
    if (h) config.integrator.h = *h;
    if (T_eq) {
      config.model.T1 = config.model.T3 = rational_from_json(json(*T_eq));
      config.model.tau1 = config.model.tau3 = 0;
    }
    if (n_paths) config.drift_scan.n_paths = *n_paths;
    if (omegas) {
      config.drift_scan.omegas = parse_list(*omegas, "--omegas");
      if (config.drift_scan.windows.size() != 1 && config.drift_scan.windows.size() != config.drift_scan.omegas.size())
        throw ConfigError("--omegas changes the number of omegas; set drift_scan.windows in the config to match");
    }
    auto& l = config.lyapunov.params;
    if (beta) l.beta = *beta;
    if (A) l.A = *A;
    if (k) l.k = *k;
    if (R) l.R = *R;
    if (M) l.M = *M;
    if (c4) l.c4 = *c4;
    if (n_points) config.lyapunov.n_points = *n_points;
    if (from) config.control.from = parse_state(*from, "--from");
    if (to) config.control.to = parse_state(*to, "--to");
    if (eps) config.control.eps = *eps;
    if (deltas) config.control.deltas = parse_list(*deltas, "--delta");
    config.validate();

    if (common.print_config) {
      out << to_json(config).dump(2) << "\n";
      return exit_ok;
    }
    const unsigned jobs = resolve_jobs(common.jobs);
    if (average->parsed()) return cmd_average(config, target_degree, out);
    if (simulate_cmd->parsed()) return cmd_simulate(config, out);
    if (equilibrium->parsed()) return cmd_equilibrium(config, ks_limit, out);
    if (drift->parsed()) return cmd_drift(config, jobs, out);
    if (lyap->parsed()) return cmd_lyapunov(config, search, jobs, out);
    if (control->parsed()) return cmd_control(config, out);
    if (hist->parsed()) return cmd_hist(config, out);
    if (flux->parsed()) return cmd_flux(config, out);
    err << "no subcommand\n";
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Unsupported& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    err << "FAIL: " << e.what() << "\n";
    return exit_fail;
  } catch (const std::exception& e) {
    err << "FAIL: " << e.what() << "\n";
    return exit_fail;
  }
}

}  // namespace rotors
