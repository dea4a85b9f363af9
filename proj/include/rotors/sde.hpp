#pragma once

#include "rotors/model.hpp"
#include "rotors/state.hpp"

#include <boost/random/normal_distribution.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rotors {

enum class Scheme { euler_maruyama, strang_splitting };

std::string to_string(Scheme s);
/// Accepts "em", "euler_maruyama", "split", "strang_splitting".
Scheme parse_scheme(const std::string& name);

struct IntegratorSpec {
  Scheme scheme = Scheme::strang_splitting;
  double h = 1e-3;
  double total_time = 0;
  long record_stride = 1;

  /// Throws ConfigError unless h > 0, total_time >= 0 and record_stride >= 1.
  void validate() const;
  long n_steps() const;
};

/// Trajectory i draws from a generator seeded by substream_seed(master_seed, i).
struct RngSpec {
  std::uint64_t master_seed = 0;
};

/// splitmix64 of (master, index, salt); distinct inputs give unrelated seeds.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt = 0);

/// Standard normal stream. Boost's ziggurat sampler is used because its
/// output, unlike std::normal_distribution, is fixed across standard libraries.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Double-precision forces with the harmonics unpacked for speed. gamma and T
/// may be zero here, which switches off the baths.
class ForceField {
 public:
  explicit ForceField(const ChainParams& params);
  ForceField(const ChainParams& params, bool with_baths);

  Forces operator()(const State& x) const;

  double gamma[2]{};
  double temperature[2]{};
  double tau[2]{};

 private:
  struct Wave {
    int k;
    double a, b;  // a cos + b sin
  };
  static double slope(const std::vector<Wave>& waves, double s);
  std::vector<Wave> w1_, w3_, u1_, u2_, u3_;
};

/// Noise for one step, consumed as (B1, B3) pairs. Euler-Maruyama reads the
/// first pair; the splitting scheme reads one pair per half step.
using StepNoise = std::array<double, 4>;

int normals_per_step(Scheme s);

/// One step of the scheme; angles are reduced mod 2 pi. Throws NonFinite.
State step(const State& x, const ForceField& field, const IntegratorSpec& spec, const StepNoise& noise);
State step(const State& x, const ChainParams& params, const IntegratorSpec& spec, const StepNoise& noise);

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void observe(double t, const State& x) = 0;
};

/// Keeps every observation in memory.
class SeriesRecorder : public Observer {
 public:
  void observe(double t, const State& x) override;
  std::vector<double> times;
  std::vector<State> states;
};

/// Streams t,q1,q2,q3,p1,p2,p3 rows with a header.
class CsvWriter : public Observer {
 public:
  explicit CsvWriter(std::ostream& os);
  void observe(double t, const State& x) override;

 private:
  std::ostream& os_;
};

/// Adapts a callable.
class CallbackObserver : public Observer {
 public:
  explicit CallbackObserver(std::function<void(double, const State&)> fn) : fn_(std::move(fn)) {}
  void observe(double t, const State& x) override { fn_(t, x); }

 private:
  std::function<void(double, const State&)> fn_;
};

/// Integrates from x0, calling every observer at t = 0 and after every
/// record_stride steps. Deterministic in (x0, params, spec, rng, trajectory).
State simulate(const State& x0, const ChainParams& params, const IntegratorSpec& spec, const RngSpec& rng,
               std::span<Observer* const> observers, std::uint64_t trajectory = 0);
State simulate(const State& x0, const ForceField& field, const IntegratorSpec& spec, NormalStream& noise,
               std::span<Observer* const> observers);

using StateSampler = std::function<State(std::mt19937_64&)>;
using FinalObservable = std::function<std::vector<double>(const State&)>;

struct EnsembleSummary {
  std::size_t n_traj = 0;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> std_error;
};

/// Runs n_traj trajectories on independent substreams (the initial state of
/// trajectory i is drawn from its own salted substream) and reduces the
/// observable of the final states in trajectory order.
EnsembleSummary ensemble(const StateSampler& sampler, const ChainParams& params, const IntegratorSpec& spec,
                         const RngSpec& rng, std::size_t n_traj, const FinalObservable& observable,
                         unsigned jobs = 0);

struct SmallModelMoments {
  double mean = 0;
  double variance = 0;
  double second_moment = 0;
};

/// Exact moments of dp = kappa sin(omega t) dt - gamma p dt + sqrt(2 gamma T) dB.
SmallModelMoments small_model_moments(double omega, double gamma, double T, double kappa, double t, double p0 = 0);

struct SmallModelEstimate {
  double mean = 0, mean_stderr = 0;
  double second_moment = 0, second_moment_stderr = 0;
};

/// Monte Carlo of the same linear model by exact OU half steps around a
/// midpoint kick.
SmallModelEstimate small_model_monte_carlo(double omega, double gamma, double T, double kappa, double t,
                                           std::size_t n_paths, double h, const RngSpec& rng, double p0 = 0,
                                           unsigned jobs = 0);

}  // namespace rotors
