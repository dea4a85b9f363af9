#include "rotors/sde.hpp"

#include "rotors/errors.hpp"
#include "rotors/parallel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace rotors {

std::string to_string(Scheme s) {
  return s == Scheme::euler_maruyama ? "euler_maruyama" : "strang_splitting";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "em" || name == "euler_maruyama") return Scheme::euler_maruyama;
  if (name == "split" || name == "strang_splitting") return Scheme::strang_splitting;
  throw ConfigError("unknown scheme '" + name + "' (expected em or split)");
}

void IntegratorSpec::validate() const {
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError("time step h must be > 0");
  if (!(total_time >= 0) || !std::isfinite(total_time)) throw ConfigError("total_time must be >= 0");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
}

long IntegratorSpec::n_steps() const { return std::lround(total_time / h); }

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ index) ^ salt);
}

// ---------------------------------------------------------------------------
// forces

ForceField::ForceField(const ChainParams& params) : ForceField(params, true) {}

ForceField::ForceField(const ChainParams& params, bool with_baths) {
  for (int b : {0, 1}) {
    int idx = b == 0 ? 1 : 3;
    gamma[b] = with_baths ? params.gamma(idx).get_d() : 0.0;
    temperature[b] = with_baths ? params.T(idx).get_d() : 0.0;
    tau[b] = params.tau(idx).get_d();
  }
  auto unpack = [](const TrigPotential& pot) {
    std::vector<Wave> out;
    TrigPotential force = pot.derivative();
    for (const auto& h : force.harmonics())
      out.push_back({h.k, h.cos_coeff.get_d(), h.sin_coeff.get_d()});
    return out;
  };
  w1_ = unpack(params.W1);
  w3_ = unpack(params.W3);
  u1_ = unpack(params.U1);
  u2_ = unpack(params.U2);
  u3_ = unpack(params.U3);
}

double ForceField::slope(const std::vector<Wave>& waves, double s) {
  double v = 0;
  for (const auto& w : waves) {
    double ks = w.k * s;
    if (w.a == 0) {
      v += w.b * std::sin(ks);
    } else if (w.b == 0) {
      v += w.a * std::cos(ks);
    } else {
      v += w.a * std::cos(ks) + w.b * std::sin(ks);
    }
  }
  return v;
}

Forces ForceField::operator()(const State& x) const {
  double w1 = slope(w1_, x.q[1] - x.q[0]);
  double w3 = slope(w3_, x.q[1] - x.q[2]);
  Forces f;
  f.phi1 = w1;
  f.phi3 = w3;
  f.phi2 = -w1 - w3;
  if (!u1_.empty()) f.phi1 -= slope(u1_, x.q[0]);
  if (!u3_.empty()) f.phi3 -= slope(u3_, x.q[2]);
  if (!u2_.empty()) f.phi2 -= slope(u2_, x.q[1]);
  return f;
}

// ---------------------------------------------------------------------------
// stepping

int normals_per_step(Scheme s) { return s == Scheme::euler_maruyama ? 2 : 4; }

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

inline double wrap(double a) {
  if (a >= two_pi) {
    a -= two_pi;
    if (a >= two_pi) a = std::fmod(a, two_pi);
  } else if (a < 0) {
    a += two_pi;
    if (a < 0) a = std::fmod(a, two_pi) + two_pi;
  }
  return a >= two_pi ? 0.0 : a;
}

// Precomputed coefficients and the force at the current state.
class Stepper {
 public:
  Stepper(const ForceField& field, const IntegratorSpec& spec) : field_(field), spec_(spec) {
    for (int b = 0; b < 2; ++b) {
      double g = field.gamma[b], T = field.temperature[b];
      decay_[b] = std::exp(-0.5 * g * spec.h);
      ou_scale_[b] = std::sqrt(T * (1.0 - decay_[b] * decay_[b]));
      full_decay_[b] = decay_[b] * decay_[b];
      full_scale_[b] = std::sqrt(T * (1.0 - full_decay_[b] * full_decay_[b]));
      em_scale_[b] = std::sqrt(2.0 * g * T * spec.h);
    }
  }

  void advance(State& x, const StepNoise& xi) {
    if (spec_.scheme == Scheme::euler_maruyama) {
      euler(x, xi[0], xi[1]);
    } else {
      ou(x, xi[0], xi[1]);
      verlet(x);
      ou(x, xi[2], xi[3]);
    }
    check(x);
  }

  // Leapfrog part of the splitting step: kick h/2, drift h, kick h/2.
  void verlet(State& x) {
    const double h = spec_.h;
    if (!cached_) {
      force_ = field_(x);
      cached_ = true;
    }
    kick(x, 0.5 * h);
    x.q[0] = wrap(x.q[0] + h * x.p[0]);
    x.q[1] = wrap(x.q[1] + h * x.p[1]);
    x.q[2] = wrap(x.q[2] + h * x.p[2]);
    force_ = field_(x);
    kick(x, 0.5 * h);
  }

  void euler(State& x, double xi1, double xi3) {
    const double h = spec_.h;
    Forces f = field_(x);
    double p1 = x.p[0], p2 = x.p[1], p3 = x.p[2];
    x.p[0] += h * (f.phi1 + field_.tau[0] - field_.gamma[0] * p1) + em_scale_[0] * xi1;
    x.p[1] += h * f.phi2;
    x.p[2] += h * (f.phi3 + field_.tau[1] - field_.gamma[1] * p3) + em_scale_[1] * xi3;
    x.q[0] = wrap(x.q[0] + h * p1);
    x.q[1] = wrap(x.q[1] + h * p2);
    x.q[2] = wrap(x.q[2] + h * p3);
  }

  /// Exact OU flow over h/2.
  void ou(State& x, double xi1, double xi3) {
    x.p[0] = decay_[0] * x.p[0] + ou_scale_[0] * xi1;
    x.p[2] = decay_[1] * x.p[2] + ou_scale_[1] * xi3;
  }

  /// Exact OU flow over h: two consecutive half steps in one draw per channel.
  void ou_full(State& x, double xi1, double xi3) {
    x.p[0] = full_decay_[0] * x.p[0] + full_scale_[0] * xi1;
    x.p[2] = full_decay_[1] * x.p[2] + full_scale_[1] * xi3;
  }

  static void check(const State& x) {
    if (!x.all_finite()) throw NonFinite("state became non-finite; reduce the time step h");
  }

  void invalidate() { cached_ = false; }

 private:
  void kick(State& x, double dt) {
    x.p[0] += dt * (force_.phi1 + field_.tau[0]);
    x.p[1] += dt * force_.phi2;
    x.p[2] += dt * (force_.phi3 + field_.tau[1]);
  }

  const ForceField& field_;
  const IntegratorSpec& spec_;
  double decay_[2], ou_scale_[2], full_decay_[2], full_scale_[2], em_scale_[2];
  Forces force_;
  bool cached_ = false;
};

}  // namespace

State step(const State& x, const ForceField& field, const IntegratorSpec& spec, const StepNoise& noise) {
  spec.validate();
  Stepper stepper(field, spec);
  State y = x;
  stepper.advance(y, noise);
  return y;
}

State step(const State& x, const ChainParams& params, const IntegratorSpec& spec, const StepNoise& noise) {
  return step(x, ForceField(params), spec, noise);
}

// ---------------------------------------------------------------------------
// observers and trajectories

void SeriesRecorder::observe(double t, const State& x) {
  times.push_back(t);
  states.push_back(x);
}

CsvWriter::CsvWriter(std::ostream& os) : os_(os) {
  os_ << "t,q1,q2,q3,p1,p2,p3\n";
  os_.precision(17);
}

void CsvWriter::observe(double t, const State& x) {
  os_ << t << ',' << x.q[0] << ',' << x.q[1] << ',' << x.q[2] << ',' << x.p[0] << ',' << x.p[1] << ','
      << x.p[2] << '\n';
}

State simulate(const State& x0, const ForceField& field, const IntegratorSpec& spec, NormalStream& noise,
               std::span<Observer* const> observers) {
  spec.validate();
  State x = x0;
  x.wrap_angles();
  for (auto* obs : observers) obs->observe(0.0, x);
  const long n = spec.n_steps();
  Stepper stepper(field, spec);
  auto fail = [](long i) {
    return NonFinite("state became non-finite at step " + std::to_string(i) + "; reduce the time step h");
  };
  if (spec.scheme == Scheme::euler_maruyama) {
    for (long i = 1; i <= n; ++i) {
      double xi1 = noise(), xi3 = noise();
      stepper.euler(x, xi1, xi3);
      if (!x.all_finite()) throw fail(i);
      if (i % spec.record_stride == 0)
        for (auto* obs : observers) obs->observe(static_cast<double>(i) * spec.h, x);
    }
    return x;
  }
  // O(h/2) [B A B O(h)]... B A B O(h/2): between observations the closing
  // half step of one step and the opening half step of the next are merged,
  // which leaves the law of every observed state unchanged.
  bool open = true;
  for (long i = 1; i <= n; ++i) {
    if (open) {
      double xi1 = noise(), xi3 = noise();
      stepper.ou(x, xi1, xi3);
    }
    stepper.verlet(x);
    bool record = i % spec.record_stride == 0 || i == n;
    double xi1 = noise(), xi3 = noise();
    if (record) {
      stepper.ou(x, xi1, xi3);
    } else {
      stepper.ou_full(x, xi1, xi3);
    }
    open = record;
    if (!x.all_finite()) throw fail(i);
    if (i % spec.record_stride == 0)
      for (auto* obs : observers) obs->observe(static_cast<double>(i) * spec.h, x);
  }
  return x;
}

State simulate(const State& x0, const ChainParams& params, const IntegratorSpec& spec, const RngSpec& rng,
               std::span<Observer* const> observers, std::uint64_t trajectory) {
  ForceField field(params);
  NormalStream noise(substream_seed(rng.master_seed, trajectory));
  return simulate(x0, field, spec, noise, observers);
}

namespace {

struct Moments {
  std::vector<double> mean, m2;
  std::size_t n = 0;

  void add(const std::vector<double>& v) {
    if (mean.empty()) {
      mean.assign(v.size(), 0.0);
      m2.assign(v.size(), 0.0);
    }
    ++n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double d = v[i] - mean[i];
      mean[i] += d / static_cast<double>(n);
      m2[i] += d * (v[i] - mean[i]);
    }
  }
};

}  // namespace

EnsembleSummary ensemble(const StateSampler& sampler, const ChainParams& params, const IntegratorSpec& spec,
                         const RngSpec& rng, std::size_t n_traj, const FinalObservable& observable,
                         unsigned jobs) {
  if (n_traj < 1) throw PreconditionError("ensemble needs n_traj >= 1");
  spec.validate();
  ForceField field(params);
  auto values = parallel_map(n_traj, jobs, [&](std::size_t i) {
    std::mt19937_64 init(substream_seed(rng.master_seed, i, 1));
    State x0 = sampler(init);
    NormalStream noise(substream_seed(rng.master_seed, i));
    return observable(simulate(x0, field, spec, noise, {}));
  });
  Moments acc;
  for (const auto& v : values) acc.add(v);
  EnsembleSummary out;
  out.n_traj = n_traj;
  out.mean = acc.mean;
  for (std::size_t i = 0; i < acc.mean.size(); ++i) {
    double var = n_traj > 1 ? acc.m2[i] / static_cast<double>(n_traj - 1) : 0.0;
    out.variance.push_back(var);
    out.std_error.push_back(std::sqrt(var / static_cast<double>(n_traj)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear test model

SmallModelMoments small_model_moments(double omega, double gamma, double T, double kappa, double t, double p0) {
  if (omega == 0) throw PreconditionError("small model needs omega != 0");
  double denom = gamma * gamma + omega * omega;
  double decay = std::exp(-gamma * t);
  SmallModelMoments m;
  m.mean = kappa * (gamma * std::sin(omega * t) - omega * std::cos(omega * t)) / denom +
           (p0 + kappa * omega / denom) * decay;
  m.variance = T * (1.0 - decay * decay);
  m.second_moment = m.mean * m.mean + m.variance;
  return m;
}

SmallModelEstimate small_model_monte_carlo(double omega, double gamma, double T, double kappa, double t,
                                           std::size_t n_paths, double h, const RngSpec& rng, double p0,
                                           unsigned jobs) {
  if (omega == 0) throw PreconditionError("small model needs omega != 0");
  if (n_paths < 2) throw PreconditionError("small model Monte Carlo needs at least two paths");
  const long n = std::lround(t / h);
  const double decay = std::exp(-0.5 * gamma * h);
  const double scale = std::sqrt(T * (1.0 - decay * decay));
  auto finals = parallel_map(n_paths, jobs, [&](std::size_t i) {
    NormalStream noise(substream_seed(rng.master_seed, i));
    double p = p0;
    for (long k = 0; k < n; ++k) {
      double mid = (static_cast<double>(k) + 0.5) * h;
      p = decay * p + scale * noise();
      p += h * kappa * std::sin(omega * mid);
      p = decay * p + scale * noise();
    }
    return p;
  });
  Moments first, second;
  for (double p : finals) {
    first.add({p});
    second.add({p * p});
  }
  double N = static_cast<double>(n_paths);
  SmallModelEstimate est;
  est.mean = first.mean[0];
  est.mean_stderr = std::sqrt(first.m2[0] / (N - 1) / N);
  est.second_moment = second.mean[0];
  est.second_moment_stderr = std::sqrt(second.m2[0] / (N - 1) / N);
  return est;
}

}  // namespace rotors
