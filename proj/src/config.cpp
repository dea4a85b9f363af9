#include "rotors/config.hpp"

#include "rotors/errors.hpp"

#include <fstream>
#include <set>

namespace rotors {

namespace {

using nlohmann::json;

/// Object reader that rejects keys it was not asked about.
class Block {
 public:
  Block(const json& j, std::string where, std::set<std::string> known) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
    for (const auto& [key, value] : j.items())
      if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  template <typename T>
  void get(const char* key, T& dst) const {
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + path(key) + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string where_;
};

json range_json(const std::optional<std::array<double, 2>>& r) {
  if (!r) return nullptr;
  return {(*r)[0], (*r)[1]};
}

}  // namespace

nlohmann::json to_json(const State& x) {
  return {{"q", {x.q[0], x.q[1], x.q[2]}}, {"p", {x.p[0], x.p[1], x.p[2]}}};
}

State state_from_json(const nlohmann::json& j) {
  Block b(j, "state", {"q", "p"});
  State x;
  std::vector<double> q{0, 0, 0}, p{0, 0, 0};
  b.get("q", q);
  b.get("p", p);
  if (q.size() != 3 || p.size() != 3) throw ConfigError("state q and p need three entries each");
  for (int i = 0; i < 3; ++i) {
    x.q[i] = q[i];
    x.p[i] = p[i];
  }
  return x;
}

void ExperimentConfig::validate() const {
  model.validate();
  integrator.validate();
  if (!(stationary.burn_in >= 0)) throw ConfigError("stationary.burn_in must be >= 0");
  if (!(stationary.sample_interval >= integrator.h)) throw ConfigError("stationary.sample_interval must be >= h");
  if (!(stationary.ks_interval >= stationary.sample_interval))
    throw ConfigError("stationary.ks_interval must be >= sample_interval");
  if (stationary.n_batches < 2) throw ConfigError("stationary.n_batches must be >= 2");
  if (histogram.bins < 1) throw ConfigError("histogram.bins must be >= 1");
  for (const auto& r : histogram.range)
    if (r && !((*r)[1] > (*r)[0])) throw ConfigError("histogram ranges need hi > lo");
  if (!(histogram.dwell_band > 0 && histogram.dwell_band < 1)) throw ConfigError("histogram.dwell_band must be in (0, 1)");
  drift_scan.integrator.validate();
  if (drift_scan.omegas.empty()) throw ConfigError("drift_scan.omegas is empty");
  if (drift_scan.windows.size() != 1 && drift_scan.windows.size() != drift_scan.omegas.size())
    throw ConfigError("drift_scan.windows needs one entry or one per omega");
  lyapunov.params.validate(model);
  if (lyapunov.n_points < 1) throw ConfigError("lyapunov.n_points must be >= 1");
  if (!(control.eps > 0)) throw ConfigError("control.eps must be > 0");
  if (control.deltas.empty()) throw ConfigError("control.deltas is empty");
  for (double d : control.deltas)
    if (!(d > 0)) throw ConfigError("control.deltas must be > 0");
  if (!(control.h > 0)) throw ConfigError("control.h must be > 0");
  if (control.csv_stride < 1) throw ConfigError("control.csv_stride must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& l = c.lyapunov.params;
  return {
      {"model", to_json(c.model)},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"initial_state", to_json(c.initial)},
      {"integrator",
       {{"scheme", to_string(c.integrator.scheme)},
        {"h", c.integrator.h},
        {"total_time", c.integrator.total_time},
        {"record_stride", c.integrator.record_stride}}},
      {"stationary",
       {{"burn_in", c.stationary.burn_in},
        {"sample_interval", c.stationary.sample_interval},
        {"ks_interval", c.stationary.ks_interval},
        {"n_batches", c.stationary.n_batches}}},
      {"histogram",
       {{"bins", c.histogram.bins},
        {"p1", range_json(c.histogram.range[0])},
        {"p2", range_json(c.histogram.range[1])},
        {"p3", range_json(c.histogram.range[2])},
        {"mode_smoothing", c.histogram.mode_smoothing},
        {"mode_min_height", c.histogram.mode_min_height},
        {"dwell_band", c.histogram.dwell_band}}},
      {"drift_scan",
       {{"omegas", c.drift_scan.omegas},
        {"windows", c.drift_scan.windows},
        {"n_paths", c.drift_scan.n_paths},
        {"tail_start", c.drift_scan.tail_start},
        {"sample_interval", c.drift_scan.sample_interval},
        {"scheme", to_string(c.drift_scan.integrator.scheme)},
        {"h", c.drift_scan.integrator.h}}},
      {"lyapunov",
       {{"beta", l.beta},
        {"A", l.A},
        {"k", l.k},
        {"R", l.R},
        {"M", l.M},
        {"c4", l.c4},
        {"n_points", c.lyapunov.n_points},
        {"truncation", c.lyapunov.truncation ? json(*c.lyapunov.truncation) : json(nullptr)}}},
      {"control",
       {{"from", to_json(c.control.from)},
        {"to", to_json(c.control.to)},
        {"eps", c.control.eps},
        {"deltas", c.control.deltas},
        {"h", c.control.h},
        {"csv_stride", c.control.csv_stride}}},
      {"output_dir", c.output_dir},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  Block top(j, "config",
            {"model", "seed", "initial_state", "integrator", "stationary", "histogram", "drift_scan", "lyapunov",
             "control", "output_dir"});
  ExperimentConfig c;
  if (top.has("model")) c.model = chain_params_from_json(top.at("model"));
  if (top.has("seed")) {
    std::uint64_t seed = 0;
    top.get("seed", seed);
    c.seed = seed;
  }
  if (top.has("initial_state")) c.initial = state_from_json(top.at("initial_state"));
  if (top.has("integrator")) {
    Block b(top.at("integrator"), "integrator", {"scheme", "h", "total_time", "record_stride"});
    std::string scheme = to_string(c.integrator.scheme);
    b.get("scheme", scheme);
    c.integrator.scheme = parse_scheme(scheme);
    b.get("h", c.integrator.h);
    b.get("total_time", c.integrator.total_time);
    b.get("record_stride", c.integrator.record_stride);
  }
  if (top.has("stationary")) {
    Block b(top.at("stationary"), "stationary", {"burn_in", "sample_interval", "ks_interval", "n_batches"});
    b.get("burn_in", c.stationary.burn_in);
    b.get("sample_interval", c.stationary.sample_interval);
    b.get("ks_interval", c.stationary.ks_interval);
    b.get("n_batches", c.stationary.n_batches);
  }
  if (top.has("histogram")) {
    Block b(top.at("histogram"), "histogram",
            {"bins", "p1", "p2", "p3", "mode_smoothing", "mode_min_height", "dwell_band"});
    b.get("bins", c.histogram.bins);
    const char* names[3] = {"p1", "p2", "p3"};
    for (int i = 0; i < 3; ++i) {
      if (!b.has(names[i])) continue;
      std::array<double, 2> r{};
      b.get(names[i], r);
      c.histogram.range[i] = r;
    }
    b.get("mode_smoothing", c.histogram.mode_smoothing);
    b.get("mode_min_height", c.histogram.mode_min_height);
    b.get("dwell_band", c.histogram.dwell_band);
  }
  if (top.has("drift_scan")) {
    Block b(top.at("drift_scan"), "drift_scan",
            {"omegas", "windows", "n_paths", "tail_start", "sample_interval", "scheme", "h"});
    b.get("omegas", c.drift_scan.omegas);
    b.get("windows", c.drift_scan.windows);
    b.get("n_paths", c.drift_scan.n_paths);
    b.get("tail_start", c.drift_scan.tail_start);
    b.get("sample_interval", c.drift_scan.sample_interval);
    std::string scheme = to_string(c.drift_scan.integrator.scheme);
    b.get("scheme", scheme);
    c.drift_scan.integrator.scheme = parse_scheme(scheme);
    b.get("h", c.drift_scan.integrator.h);
  }
  if (top.has("lyapunov")) {
    Block b(top.at("lyapunov"), "lyapunov", {"beta", "A", "k", "R", "M", "c4", "n_points", "truncation"});
    auto& l = c.lyapunov.params;
    b.get("beta", l.beta);
    b.get("A", l.A);
    b.get("k", l.k);
    b.get("R", l.R);
    b.get("M", l.M);
    b.get("c4", l.c4);
    b.get("n_points", c.lyapunov.n_points);
    if (b.has("truncation")) {
      int t = 0;
      b.get("truncation", t);
      c.lyapunov.truncation = t;
    }
  }
  if (top.has("control")) {
    Block b(top.at("control"), "control", {"from", "to", "eps", "deltas", "h", "csv_stride"});
    if (b.has("from")) c.control.from = state_from_json(b.at("from"));
    if (b.has("to")) c.control.to = state_from_json(b.at("to"));
    b.get("eps", c.control.eps);
    b.get("deltas", c.control.deltas);
    b.get("h", c.control.h);
    b.get("csv_stride", c.control.csv_stride);
  }
  top.get("output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace rotors
