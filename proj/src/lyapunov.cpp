#include "rotors/lyapunov.hpp"

#include "rotors/errors.hpp"
#include "rotors/parallel.hpp"
#include "rotors/sde.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace rotors {

void LyapunovParams::validate(const ChainParams& params) const {
  double t_max = std::max(params.T1.get_d(), params.T3.get_d());
  if (!(beta > 0) || !(beta * t_max < 1)) throw ConfigError("beta must satisfy 0 < beta < 1 / max(T1, T3)");
  if (!(A > 0)) throw ConfigError("A must be > 0");
  if (!(R > 0)) throw ConfigError("R must be > 0");
  if (!(M > 0)) throw ConfigError("M must be > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(c4 > 0)) throw ConfigError("c4 must be > 0");
}

std::string to_string(Region r) {
  switch (r) {
    case Region::omega1: return "omega1";
    case Region::omega2: return "omega2";
    case Region::omega3: return "omega3";
  }
  return "?";
}

namespace {

double outer_r(const State& x) { return x.p[0] * x.p[0] + x.p[2] * x.p[2]; }

double split_scale(double r, const LyapunovParams& lyp) { return std::pow(r, lyp.k) + lyp.R; }

}  // namespace

RegionLabel region(const State& x, const LyapunovParams& lyp) {
  double r = outer_r(x);
  double D = split_scale(r, lyp);
  double a = std::abs(x.p[1]);
  RegionLabel out;
  if (a < D) {
    out.region = Region::omega1;
  } else if (a > 2 * D) {
    out.region = Region::omega3;
  } else {
    out.region = Region::omega2;
  }
  out.in_K = out.region != Region::omega3 && r <= lyp.M;
  return out;
}

Cutoff cutoff(double s) {
  double a = std::abs(s);
  if (a <= 1) return {0, 0, 0};
  if (a >= 2) return {1, 0, 0};
  double t = a - 1;
  double value = t * t * t * (10 - 15 * t + 6 * t * t);
  double d1 = 30 * t * t * (1 - t) * (1 - t);
  double d2 = 60 * t * (1 - t) * (1 - 2 * t);
  return {value, s > 0 ? d1 : -d1, d2};
}

double phi(double s, double c4) { return c4 * s / (2 + std::log(s)); }

double phi_prime(double s, double c4) {
  double L = std::log(s);
  return c4 * (1 + L) / ((2 + L) * (2 + L));
}

double phi_second(double s, double c4) {
  double L = std::log(s);
  return -c4 * L / (s * (2 + L) * (2 + L) * (2 + L));
}

double h_phi_inverse(double t, double c4) { return std::exp(std::sqrt(2 * c4 * t + 4) - 2); }

// ---------------------------------------------------------------------------
// LyapunovFunction

LyapunovFunction::LyapunovFunction(const ChainParams& params, const LyapunovParams& lyp, const EffectiveDynamics& eff,
                                   std::optional<int> truncation)
    : params_(params), lyp_(lyp) {
  lyp_.validate(params_);
  if (truncation) {
    for (const auto& [m, c] : eff.F.terms())
      if (m.l >= *truncation) F_.add_term(m, c);
  } else {
    F_ = eff.F;
  }
  ItoCalculus calc(params_);
  ItoForm form = calc.ito(PhasePoly::momentum(2) + F_);
  drift_ = form.drift;
  F_num_ = NumericPoly(F_);
  drift_num_ = NumericPoly(form.drift);
  sigma_num_[0] = NumericPoly(form.diff1);
  sigma_num_[1] = NumericPoly(form.diff3);
  H_num_ = NumericPoly(calc.model().H);
  for (int b : {0, 1}) {
    int idx = b == 0 ? 1 : 3;
    gamma_[b] = params_.gamma(idx).get_d();
    T_[b] = params_.T(idx).get_d();
    tau_[b] = params_.tau(idx).get_d();
  }
}

double LyapunovFunction::energy(const State& x) const { return hamiltonian(x, params_); }

double LyapunovFunction::rest_energy(const State& x) const {
  double e = 0.5 * (x.p[0] * x.p[0] + x.p[2] * x.p[2]);
  for (int i = 1; i <= 3; ++i) e += params_.U(i)(x.q[i - 1]);
  e += params_.W1(x.q[1] - x.q[0]);
  e += params_.W3(x.q[1] - x.q[2]);
  return e;
}

double LyapunovFunction::p2_tilde(const State& x) const { return x.p[1] + F_num_(x); }

double LyapunovFunction::rho(const State& x) const {
  return cutoff(x.p[1] / split_scale(outer_r(x), lyp_)).value;
}

double LyapunovFunction::v_scaled(const State& x) const {
  double base = std::exp(-lyp_.beta * energy(x)) + 1.0;
  double r = rho(x);
  if (r == 0) return base;
  double F = F_num_(x);
  double pt = x.p[1] + F;
  double E = lyp_.beta * (x.p[1] * F + 0.5 * F * F - rest_energy(x));
  return base + lyp_.A * r * pt * pt * std::exp(E);
}

double LyapunovFunction::log_v(const State& x) const {
  return lyp_.beta * energy(x) + std::log(v_scaled(x));
}

double LyapunovFunction::v(const State& x) const { return std::exp(log_v(x)); }

double LyapunovFunction::phi_scaled(const State& x) const {
  double vs = v_scaled(x);
  double logv = lyp_.beta * energy(x) + std::log(vs);
  return lyp_.c4 * vs / (2 + logv);
}

double LyapunovFunction::lexp_scaled(const State& x) const {
  const double beta = lyp_.beta;
  double out = 0;
  for (int b : {0, 1}) {
    double p = x.p[b == 0 ? 0 : 2];
    out += -gamma_[b] * beta * (1 - beta * T_[b]) * p * p + beta * tau_[b] * p + gamma_[b] * beta * T_[b];
  }
  return out;
}

double LyapunovFunction::lv_scaled(const State& x) const {
  double out = lexp_scaled(x);
  const double r = outer_r(x);
  const double D = split_scale(r, lyp_);
  const double p2 = x.p[1];
  const double s = p2 / D;
  const Cutoff chi = cutoff(s);
  if (chi.value == 0 && chi.d1 == 0 && chi.d2 == 0) return out;

  const double beta = lyp_.beta;
  const int k = lyp_.k;
  const double F = F_num_(x);
  const double pt = p2 + F;
  const double e = std::exp(beta * (p2 * F + 0.5 * F * F - rest_energy(x)));
  const double G = pt * pt * e;
  const double G1 = (2 * pt + beta * pt * pt * pt) * e;
  const double G2 = (2 + 5 * beta * pt * pt + beta * beta * pt * pt * pt * pt) * e;
  const double a = drift_num_(x);
  const double sigma[2] = {sigma_num_[0](x), sigma_num_[1](x)};
  const Forces f = forces(x, params_);
  const double phi_b[2] = {f.phi1, f.phi3};

  double Lrho = f.phi2 * chi.d1 / D;
  double cross = 0, noise = 0;
  const double rk1 = k >= 1 ? std::pow(r, k - 1) : 0.0;
  const double rk2 = k >= 2 ? std::pow(r, k - 2) : 0.0;
  for (int b : {0, 1}) {
    const double pb = x.p[b == 0 ? 0 : 2];
    const double Db = 2.0 * k * rk1 * pb;
    const double Dbb = 2.0 * k * rk1 + (k >= 2 ? 4.0 * k * (k - 1) * rk2 * pb * pb : 0.0);
    const double ds = -p2 * Db / (D * D);
    const double dss = -p2 * (Dbb / (D * D) - 2 * Db * Db / (D * D * D));
    const double rho_b = chi.d1 * ds;
    const double rho_bb = chi.d2 * ds * ds + chi.d1 * dss;
    Lrho += (phi_b[b] + tau_[b] - gamma_[b] * pb) * rho_b + gamma_[b] * T_[b] * rho_bb;
    cross += 2 * gamma_[b] * T_[b] * rho_b * G1 * sigma[b];
    noise += gamma_[b] * T_[b] * sigma[b] * sigma[b];
  }
  out += lyp_.A * (chi.value * (G1 * a + G2 * noise) + G * Lrho + cross);
  return out;
}

template <typename Scalar>
Scalar LyapunovFunction::v_scaled_t(const StateT<Scalar>& x) const {
  using std::abs;
  using std::exp;
  using std::pow;
  const Scalar beta(lyp_.beta);
  const Scalar H = H_num_(x);
  Scalar out = exp(-beta * H) + 1;
  const Scalar r = x.p[0] * x.p[0] + x.p[2] * x.p[2];
  const Scalar D = pow(r, lyp_.k) + Scalar(lyp_.R);
  const Scalar a = abs(x.p[1]) / D;
  if (a <= 1) return out;
  Scalar chi(1);
  if (a < 2) {
    const Scalar t = a - 1;
    chi = t * t * t * (10 - 15 * t + 6 * t * t);
  }
  const Scalar pt = x.p[1] + F_num_(x);
  return out + Scalar(lyp_.A) * chi * pt * pt * exp(beta * (pt * pt / 2 - H));
}

double LyapunovFunction::lv_scaled_fd(const State& x, double h) const {
  using Quad = boost::multiprecision::number<boost::multiprecision::cpp_bin_float_quad::backend_type,
                                             boost::multiprecision::et_off>;
  StateT<Quad> x0;
  for (int i = 0; i < 3; ++i) {
    x0.q[i] = x.q[i];
    x0.p[i] = x.p[i];
  }
  Quad step(h);
  auto shifted = [&](bool momentum, int i, const Quad& d) {
    StateT<Quad> y = x0;
    (momentum ? y.p : y.q)[i] += d;
    return y;
  };
  auto d1 = [&](auto&& g, bool momentum, int i) {
    return (g(shifted(momentum, i, step)) - g(shifted(momentum, i, -step))) / (2 * step);
  };
  auto d2 = [&](auto&& g, int i) {
    return (g(shifted(true, i, step)) - 2 * g(x0) + g(shifted(true, i, -step))) / (step * step);
  };
  auto energy_q = [&](const StateT<Quad>& y) { return H_num_(y); };
  auto vhat = [&](const StateT<Quad>& y) { return v_scaled_t(y); };

  const Forces fo = forces(x, params_);
  const Quad drift_p[3] = {Quad(fo.phi1 + tau_[0] - gamma_[0] * x.p[0]), Quad(fo.phi2),
                           Quad(fo.phi3 + tau_[1] - gamma_[1] * x.p[2])};
  const int outer[2] = {0, 2};
  auto generator = [&](auto&& g) {
    Quad out = 0;
    for (int i = 0; i < 3; ++i) out += x0.p[i] * d1(g, false, i) + drift_p[i] * d1(g, true, i);
    for (int b : {0, 1}) out += Quad(gamma_[b] * T_[b]) * d2(g, outer[b]);
    return out;
  };

  const Quad beta(lyp_.beta);
  const Quad v0 = vhat(x0);
  auto estimate = [&] {
    Quad out = generator(vhat) + beta * v0 * generator(energy_q);
    for (int b : {0, 1}) {
      const Quad Hb = d1(energy_q, true, outer[b]);
      const Quad vb = d1(vhat, true, outer[b]);
      out += Quad(gamma_[b] * T_[b]) * (beta * beta * Hb * Hb * v0 + 2 * beta * Hb * vb);
    }
    return out;
  };
  // Richardson extrapolation over steps h and h / 2
  const Quad coarse = estimate();
  step /= 2;
  const Quad fine = estimate();
  return static_cast<double>((4 * fine - coarse) / 3);
}

double LyapunovFunction::fd_discrepancy(std::size_t n, std::uint64_t seed, double h) const {
  std::mt19937_64 gen(substream_seed(seed, 0, 3));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    State x;
    for (int j = 0; j < 3; ++j) x.q[j] = std::numbers::pi * (1 + u(gen));
    x.p[0] = 5 * u(gen);
    x.p[2] = 5 * u(gen);
    x.p[1] = 3 * split_scale(outer_r(x), lyp_) * u(gen);
    double a = lv_scaled(x);
    double b = lv_scaled_fd(x, h);
    double rel = std::abs(a - b) / (1 + std::abs(a));
    if (!(rel <= worst)) worst = rel;  // NaN propagates as a failure
  }
  return worst;
}

double p2_tilde(const State& x, const EffectiveDynamics& eff, std::optional<int> truncation_degree) {
  PhasePoly F;
  for (const auto& [m, c] : eff.F.terms())
    if (!truncation_degree || m.l >= *truncation_degree) F.add_term(m, c);
  return x.p[1] + F.evaluate(x);
}

double v_eval(const State& x, const LyapunovParams& lyp, const EffectiveDynamics& eff, const ChainParams& params) {
  return LyapunovFunction(params, lyp, eff).v(x);
}

double lv_eval(const State& x, const LyapunovParams& lyp, const EffectiveDynamics& eff, const ChainParams& params) {
  LyapunovFunction V(params, lyp, eff);
  return V.lv_scaled(x) * std::exp(lyp.beta * V.energy(x));
}

// ---------------------------------------------------------------------------
// sampling

std::string to_string(Stratum s) {
  switch (s) {
    case Stratum::omega1_outside_K: return "omega1_outside_K";
    case Stratum::omega2_outside_K: return "omega2_outside_K";
    case Stratum::omega3: return "omega3";
    case Stratum::ray_p2: return "ray_p2";
    case Stratum::ray_p1: return "ray_p1";
    case Stratum::inside_K: return "inside_K";
  }
  return "?";
}

State scan_point(std::size_t i, const LyapunovParams& lyp, std::uint64_t seed) {
  std::mt19937_64 gen(substream_seed(seed, i, 2));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double two_pi = 2 * std::numbers::pi;
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u01(gen)); };
  auto sign = [&] { return u01(gen) < 0.5 ? -1.0 : 1.0; };

  State x;
  for (int j = 0; j < 3; ++j) x.q[j] = two_pi * u01(gen);
  auto set_outer = [&](double r) {
    double theta = two_pi * u01(gen);
    x.p[0] = std::sqrt(r) * std::cos(theta);
    x.p[2] = std::sqrt(r) * std::sin(theta);
  };
  const double r_max = 20 * lyp.M;
  switch (static_cast<Stratum>(i % n_strata)) {
    case Stratum::omega1_outside_K: {
      double r = log_uniform(lyp.M * (1 + 1e-12), r_max);
      set_outer(r);
      x.p[1] = sign() * u01(gen) * split_scale(r, lyp);
      break;
    }
    case Stratum::omega2_outside_K: {
      double r = log_uniform(lyp.M * (1 + 1e-12), r_max);
      set_outer(r);
      x.p[1] = sign() * (1 + u01(gen)) * split_scale(r, lyp);
      break;
    }
    case Stratum::omega3: {
      double r = u01(gen) < 0.5 ? 50 * u01(gen) : log_uniform(1e-3, r_max);
      set_outer(r);
      x.p[1] = sign() * 2 * split_scale(r, lyp) * (1 + 1e-12) * std::pow(10.0, 3 * u01(gen));
      break;
    }
    case Stratum::ray_p2: {
      x.p[0] = x.p[2] = 0;
      x.p[1] = sign() * log_uniform(0.5 * lyp.R, 1e6);
      break;
    }
    case Stratum::ray_p1: {
      x.p[0] = sign() * log_uniform(1e-2, std::sqrt(r_max));
      x.p[1] = 0;
      x.p[2] = u01(gen) < 0.5 ? 0.0 : u01(gen) - 0.5;
      break;
    }
    case Stratum::inside_K: {
      double r = lyp.M * u01(gen);
      set_outer(r);
      x.p[1] = sign() * 2 * u01(gen) * split_scale(r, lyp);
      break;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// drift scan

namespace {

struct PointResult {
  RegionLabel label;
  double value = 0;  // (LV + phi(V)) e^{-beta H} outside K, LV e^{-beta H} inside
  bool finite = true;
};

void keep_worst(ScanWorst& w, const State& x, double value, std::size_t index) {
  if (!w.found || value > w.value) {
    w.state = x;
    w.value = value;
    w.index = index;
    w.found = true;
  }
}

nlohmann::json state_json(const State& x) {
  return {{"q", {x.q[0], x.q[1], x.q[2]}}, {"p", {x.p[0], x.p[1], x.p[2]}}};
}

}  // namespace

DriftScanReport drift_scan(const LyapunovFunction& V, const DriftScanOptions& options) {
  const auto& lyp = V.lyp();
  auto results = parallel_map(options.n_points, options.jobs, [&](std::size_t i) {
    State x = scan_point(i, lyp, options.seed);
    PointResult r;
    r.label = region(x, lyp);
    double lv = V.lv_scaled(x);
    r.value = r.label.in_K ? lv : lv + V.phi_scaled(x);
    r.finite = std::isfinite(r.value);
    return r;
  });

  DriftScanReport rep;
  rep.n_points = options.n_points;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.finite) {
      ++rep.non_finite;
      continue;
    }
    State x = scan_point(i, lyp, options.seed);
    if (r.label.in_K) {
      keep_worst(rep.worst_inside_K, x, r.value, i);
    } else {
      int reg = static_cast<int>(r.label.region);
      rep.margin[reg] = std::max(rep.margin[reg], r.value);
      ++rep.count[reg];
      keep_worst(rep.worst_outside_K, x, r.value, i);
    }
  }
  rep.pass = rep.non_finite == 0 && (!rep.worst_outside_K.found || rep.worst_outside_K.value <= 0);
  if (!rep.pass && options.throw_on_failure) {
    std::ostringstream os;
    os << "drift condition fails";
    if (rep.non_finite) os << " (" << rep.non_finite << " non-finite evaluations)";
    if (rep.worst_outside_K.found)
      os << "; worst state outside K " << state_json(rep.worst_outside_K.state).dump()
         << " with (LV + phi(V)) e^{-beta H} = " << rep.worst_outside_K.value;
    os << "; try a larger A or M, or a smaller beta";
    throw ParameterRejection(os.str());
  }
  return rep;
}

nlohmann::json to_json(const DriftScanReport& rep, const LyapunovParams& lyp) {
  auto worst = [](const ScanWorst& w) -> nlohmann::json {
    if (!w.found) return nullptr;
    return {{"state", state_json(w.state)}, {"value", w.value}, {"sample", w.index}};
  };
  nlohmann::json margins = nlohmann::json::object();
  for (int r = 0; r < 3; ++r) {
    margins[to_string(static_cast<Region>(r))] = {
        {"max_scaled_LV_plus_phiV", rep.count[r] ? nlohmann::json(rep.margin[r]) : nlohmann::json(nullptr)},
        {"points_outside_K", rep.count[r]}};
  }
  nlohmann::json out = {{"pass", rep.pass},
                        {"n_points", rep.n_points},
                        {"non_finite", rep.non_finite},
                        {"scaling", "values are multiplied by exp(-beta H) at the state"},
                        {"params",
                         {{"beta", lyp.beta}, {"A", lyp.A}, {"k", lyp.k}, {"R", lyp.R}, {"M", lyp.M}, {"c4", lyp.c4}}},
                        {"worst_outside_K", worst(rep.worst_outside_K)},
                        {"worst_inside_K", worst(rep.worst_inside_K)},
                        {"margins_by_region", margins}};
  if (rep.worst_outside_K.found) out["worst_outside_K"]["LV_plus_phiV"] = rep.worst_outside_K.value;
  return out;
}

// ---------------------------------------------------------------------------
// sandwich bounds

SandwichFit fit_sandwich(const LyapunovFunction& V, std::size_t n_points, std::uint64_t seed) {
  SandwichFit fit{std::numeric_limits<double>::infinity(), 0.0};
  const double beta = V.lyp().beta;
  for (std::size_t i = 0; i < n_points; ++i) {
    State x = scan_point(i, V.lyp(), seed);
    double vs = V.v_scaled(x);
    double lower = vs - std::exp(-beta * V.energy(x));  // (V - 1) e^{-beta H}
    fit.c1 = std::min(fit.c1, lower);
    fit.c2 = std::max(fit.c2, vs / (1 + x.p[1] * x.p[1]));
  }
  fit.c1 *= 0.5;
  fit.c2 *= 2.0;
  return fit;
}

std::size_t sandwich_violations(const LyapunovFunction& V, const SandwichFit& fit, std::size_t n_points,
                                std::uint64_t seed) {
  std::size_t bad = 0;
  const double beta = V.lyp().beta;
  for (std::size_t i = 0; i < n_points; ++i) {
    State x = scan_point(i, V.lyp(), seed);
    double vs = V.v_scaled(x);
    double lower = vs - std::exp(-beta * V.energy(x));
    if (!(lower >= fit.c1) || !(vs <= fit.c2 * (1 + x.p[1] * x.p[1]))) ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// parameter search

SearchResult search_parameters(const ChainParams& params, const EffectiveDynamics& eff, const LyapunovParams& base,
                               const SearchSpec& spec) {
  SearchResult best;
  best.lyp = base;
  for (double R : spec.R_grid) {
  for (double M : spec.M_grid) {
    for (double A : spec.A_grid) {
      LyapunovParams lyp = base;
      lyp.R = R;
      lyp.A = A;
      lyp.M = M;
      lyp.c4 = 1.0;
      LyapunovFunction V(params, lyp, eff);
      auto ratios = parallel_map(spec.pilot_points, spec.jobs, [&](std::size_t i) {
        State x = scan_point(i, lyp, spec.seed);
        if (region(x, lyp).in_K) return std::numeric_limits<double>::infinity();
        double lv = V.lv_scaled(x);
        if (!(lv < 0)) return -1.0;
        return -lv / V.phi_scaled(x);
      });
      double bound = std::numeric_limits<double>::infinity();
      for (double r : ratios) bound = std::min(bound, r);
      if (!(bound > 0) || !std::isfinite(bound)) continue;
      if (!best.found || bound > best.c4_max) {
        best.found = true;
        best.c4_max = bound;
        best.lyp = lyp;
        best.lyp.c4 = 0.5 * bound;
      }
    }
  }
  }
  return best;
}

}  // namespace rotors
