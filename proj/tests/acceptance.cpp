// End-to-end acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all nine
//   acceptance 3 7        run a subset
//
// Exit status 0 iff every criterion that ran passed.

#include "rotors/averaging.hpp"
#include "rotors/control.hpp"
#include "rotors/experiment.hpp"
#include "rotors/lyapunov.hpp"
#include "rotors/observables.hpp"
#include "rotors/sde.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rotors;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PhasePoly p2(int power = 1) { return PhasePoly::momentum(2, power); }

double mean_square(const TrigPotential& W) {
  const int n = 512;
  double s = 0;
  for (int j = 0; j < n; ++j) {
    double v = W(2 * pi * j / n);
    s += v * v;
  }
  return s / n;
}

PhasePoly random_poly(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_terms(1, 8), outer(0, 3), l(-4, 3), wave(-3, 3), num(-12, 12), den(1, 9);
  PhasePoly f;
  int n = n_terms(rng);
  for (int i = 0; i < n; ++i) {
    Monomial m{outer(rng), l(rng), outer(rng), wave(rng), wave(rng), wave(rng)};
    f.add_term(m, ComplexRational(Rational(num(rng), den(rng)), Rational(num(rng), den(rng))));
  }
  return f.symmetrized();
}

State random_state(std::mt19937_64& rng, double p_scale) {
  std::uniform_real_distribution<double> angle(0, 2 * pi), mom(-p_scale, p_scale);
  State x;
  for (int i = 0; i < 3; ++i) {
    x.q[i] = angle(rng);
    x.p[i] = mom(rng);
  }
  return x;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Clock clock;
  struct Case {
    Rational g1, g3, kappa;
  };
  std::vector<Case> cases = {{1, 1, 1},
                             {Rational(3, 2), Rational(1, 5), Rational(2, 3)},
                             {Rational(7, 3), Rational(5, 4), 3},
                             {Rational(1, 10), 4, Rational(5, 7)}};
  double worst_quad = 0;
  for (const auto& c : cases) {
    ChainParams p = ChainParams::benchmark(1, 10);
    p.gamma1 = c.g1;
    p.gamma3 = c.g3;
    p.W1 = p.W3 = TrigPotential::minus_cos(c.kappa);
    EffectiveDynamics eff = average_p2(p);
    SymbolicModel sym(p);
    Rational alpha = (c.g1 + c.g3) * c.kappa * c.kappa / 2;
    if (eff.alpha != alpha) return {false, "alpha = " + to_string(eff.alpha) + ", expected " + to_string(alpha)};
    if (eff.a.degree() != -3 || eff.a.degree_part(-3) != PhasePoly::constant(-alpha) * p2(-3))
      return {false, "leading drift term is " + to_string(eff.a.degree_part(-3))};
    if (eff.sigma1.degree_part(-2) != sym.W1 * p2(-2) || eff.sigma3.degree_part(-2) != sym.W3 * p2(-2))
      return {false, "leading diffusion terms differ from W_b / p2^2"};
    if (eff.F.degree_part(-1) != sym.Phi2 * p2(-1)) return {false, "leading correction differs from Phi2 / p2"};
    double quad = c.g1.get_d() * mean_square(p.W1) + c.g3.get_d() * mean_square(p.W3);
    worst_quad = std::max(worst_quad, std::abs(quad - alpha.get_d()));
  }
  double t = clock.seconds();
  bool ok = worst_quad < 1e-10 && t < 5;
  return {ok, fmt("%zu rational cases exact; |alpha - quadrature| <= %.1e; %.2f s", cases.size(), worst_quad, t)};
}

Outcome criterion2() {
  Clock clock;
  std::mt19937_64 rng(2024);
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    PhasePoly f = random_poly(rng);
    PhasePoly Qf = q_transform(f);
    if (!q2_average(Qf).is_zero()) return {false, "nonzero <Qf> for " + to_string(f)};
    if (p2() * partial(Qf, Var::q2) != f - q2_average(f)) return {false, "p2 dQf/dq2 != f - <f> for " + to_string(f)};
  }
  std::vector<ChainParams> models = {ChainParams::benchmark(1, 10), ChainParams::benchmark(10, 15, 20)};
  models.back().gamma1 = Rational(3, 2);
  models.back().W3 = TrigPotential::minus_cos(Rational(1, 2));
  for (const auto& p : models) {
    EffectiveDynamics eff = average_p2(p);
    ItoForm form = ItoCalculus(p).ito(p2() + eff.F);
    if (form.drift != eff.a || form.diff1 != eff.sigma1 || form.diff3 != eff.sigma3)
      return {false, "ito(p2 + F) does not reproduce (a, sigma)"};
  }
  double t = clock.seconds();
  return {t < 30, fmt("%d random inputs and %zu models exact; %.2f s", n, models.size(), t)};
}

Outcome criterion3() {
  ChainParams p = ChainParams::benchmark(1, 10, 2);
  p.gamma1 = Rational(3, 2);
  p.tau1 = Rational(-1, 2);
  SymbolicModel sym(p);
  PhasePoly expected;
  for (int b : {1, 3}) {
    PhasePoly pb = PhasePoly::momentum(b);
    expected += pb * ComplexRational(p.tau(b)) + (PhasePoly::constant(p.T(b)) - pb * pb) * ComplexRational(p.gamma(b));
  }
  if (generator_apply(sym.H, p) != expected) return {false, "symbolic LH differs from the energy balance"};

  EffectiveDynamics eff = average_p2(p);
  LyapunovParams lyp;
  LyapunovFunction V(p, lyp, eff);
  const double beta = lyp.beta;
  const Var qv[3] = {Var::q1, Var::q2, Var::q3}, pv[3] = {Var::p1, Var::p2, Var::p3};
  NumericPoly dq[3], dp[3], dpp[3];
  for (int i = 0; i < 3; ++i) {
    dq[i] = NumericPoly(partial(sym.H, qv[i]));
    dp[i] = NumericPoly(partial(sym.H, pv[i]));
    dpp[i] = NumericPoly(partial(partial(sym.H, pv[i]), pv[i]));
  }
  const double gT[2] = {1.5 * 1, 1.0 * 10};
  std::mt19937_64 rng(3);
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    State x = random_state(rng, 15);
    Drift d = sde_drift(x, p);
    // (L e^{beta H}) e^{-beta H} by the chain rule through the partials of H
    double first = 0;
    for (int i = 0; i < 3; ++i) first += d.dq[i] * dq[i](x) + d.dp[i] * dp[i](x);
    double analytic = beta * first;
    for (int b : {0, 2}) {
      double Hp = dp[b](x);
      analytic += gT[b / 2] * (beta * beta * Hp * Hp + beta * dpp[b](x));
    }
    double closed = V.lexp_scaled(x);
    worst = std::max(worst, std::abs(closed - analytic) / std::max(1.0, std::abs(analytic)));
  }
  return {worst < 1e-10, fmt("LH exact; Le^{bH} closed form vs chain rule max rel %.1e over 1000 states", worst)};
}

Outcome criterion4() {
  Clock clock;
  ExperimentConfig c;
  c.model = ChainParams::benchmark(1, 1);
  c.integrator.h = 1e-3;
  c.integrator.total_time = 1e6;
  StationaryRun run = run_stationary(c, 4);
  EquilibriumCheck e = equilibrium_check(run, c.model, 0.01, c.stationary.n_batches);
  return {e.pass(), fmt("KS p1 %.4f p2 %.4f p3 %.4f; J1 = %.2e (%.1f se), J3 = %.2e (%.1f se); %.0f s", e.ks[0],
                        e.ks[1], e.ks[2], e.flux.J1, e.flux.J1 / e.flux.stderr1, e.flux.J3,
                        e.flux.J3 / e.flux.stderr3, clock.seconds())};
}

Outcome criterion5() {
  Clock clock;
  ChainParams p = ChainParams::benchmark(1, 1);
  const double alpha = average_p2(p).alpha.get_d();
  DriftScanSpec spec;
  spec.omegas = {10, 20, 40};
  spec.n_paths = 10000;
  auto est = conditional_drift(p, spec, RngSpec{5});
  bool ok = true;
  std::ostringstream os;
  for (const auto& e : est) {
    double ref = -alpha / (e.omega * e.omega * e.omega);
    double rel = e.mean_slope / ref - 1;
    ok = ok && std::abs(rel) <= 0.25;
    os << fmt("w=%g: %+.0f%%; ", e.omega, 100 * rel);
  }
  double expo = drift_exponent(est);
  double t = clock.seconds();
  ok = ok && std::abs(expo + 3) <= 0.3 && t < 600;
  os << fmt("exponent %.3f; %.0f s", expo, t);
  return {ok, os.str()};
}

Outcome criterion6() {
  SmallModelEstimate mc = small_model_monte_carlo(20, 1, 1, 1, 5, 100000, 1e-3, RngSpec{6});
  SmallModelMoments exact = small_model_moments(20, 1, 1, 1, 5);
  double z = (mc.second_moment - exact.second_moment) / mc.second_moment_stderr;
  return {std::abs(z) < 3, fmt("E p^2: MC %.5f, exact %.5f, %.2f se", mc.second_moment, exact.second_moment, z)};
}

Outcome criterion7() {
  Clock clock;
  ChainParams p = ChainParams::benchmark(1, 10);
  EffectiveDynamics eff = average_p2(p);
  LyapunovParams lyp;
  LyapunovFunction V(p, lyp, eff);
  DriftScanOptions opt;
  opt.n_points = 100000;
  opt.seed = 7;
  opt.throw_on_failure = false;
  DriftScanReport rep = drift_scan(V, opt);
  SandwichFit fit = fit_sandwich(V, 10000, 8);
  std::size_t violations = sandwich_violations(V, fit, opt.n_points, opt.seed);
  double fd = V.fd_discrepancy(1000, 9);

  // H_phi^{-1} against a direct quadrature of H_phi
  double worst_h = 0;
  for (double t : {0.0, 1.0, 100.0, 1e4, 1e6}) {
    double u = h_phi_inverse(t, lyp.c4);
    const int n = 4000;
    double L = std::log(u), sum = 0;
    for (int i = 0; i <= n; ++i) {
      double s = std::exp(L * i / n);
      sum += ((i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2)) * s / phi(s, lyp.c4);
    }
    worst_h = std::max(worst_h, std::abs(sum * L / (3 * n) - t) / (1 + t));
  }
  bool ok = rep.pass && rep.non_finite == 0 && violations == 0 && fd < 1e-4 && worst_h < 1e-8;
  return {ok, fmt("scan %s on %zu points (worst scaled LV+phi(V) outside K %.3g); sandwich c1=%.3g c2=%.3g, %zu "
                  "violations; FD %.1e; H_phi inverse %.1e; %.0f s",
                  rep.pass ? "PASS" : "FAIL", rep.n_points, rep.worst_outside_K.value, fit.c1, fit.c2, violations, fd,
                  worst_h, clock.seconds())};
}

Outcome criterion8() {
  Clock clock;
  ChainParams p = ChainParams::benchmark(1, 1);
  ForceBounds bounds = force_bounds(p);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0, 2 * pi), outer(-2, 2), middle(-5, 5), dp(-10, 10);
  const std::vector<double> deltas{0.08, 0.04, 0.02, 0.01, 0.005};
  double worst_reduced = 0, worst_error = 0;
  int failed = 0, not_monotone = 0;
  std::vector<std::pair<double, double>> law;
  for (int n = 0; n < 100; ++n) {
    State xi, xf;
    for (int i = 0; i < 3; ++i) {
      xi.q[i] = angle(rng);
      xf.q[i] = angle(rng);
    }
    xi.p << outer(rng), middle(rng), outer(rng);
    xf.p << outer(rng), xi.p[1] + dp(rng), outer(rng);
    PiecewisePlan plan = plan_middle(xi.q[1], xi.p[1], xf.q[1], xf.p[1], bounds, p);
    ReducedState end = replay_reduced(plan);
    worst_reduced = std::max({worst_reduced, angle_distance(end.q, xf.q[1]), std::abs(end.p - xf.p[1])});
    try {
      ControllabilityReport rep = verify_controllability(xi, xf, 0.05, deltas, p);
      if (!rep.achieved) ++failed;
      if (!rep.monotone) ++not_monotone;
      worst_error = std::max(worst_error, rep.runs.back().error);
      law.emplace_back(std::abs(xf.p[1] - xi.p[1]), rep.T_star);
    } catch (const NotConverging&) {
      ++not_monotone;
    }
  }
  TimeLaw fit = fit_time_law(law);
  double slope_cap = 1.1 / bounds.K_star;
  bool ok = worst_reduced <= 1e-8 && failed == 0 && not_monotone == 0 && fit.c2 <= slope_cap;
  return {ok, fmt("reduced max miss %.1e; %d unreached, %d non-monotone; worst error at delta=%.3g: %.4f; T* = %.3f + "
                  "%.4f |dp2| (cap %.4f); %.0f s",
                  worst_reduced, failed, not_monotone, deltas.back(), worst_error, fit.c1, fit.c2, slope_cap,
                  clock.seconds())};
}

Outcome criterion9() {
  Clock clock;
  std::ostringstream os;
  bool ok = true;

  ExperimentConfig a;
  a.model = ChainParams::benchmark(1, 10);
  a.integrator.total_time = 1e6;
  MarginalSummary sa = summarize_marginals(run_stationary(a, 91), a.histogram, a.stationary.n_batches);
  double kz = sa.p2_kurtosis.excess / sa.p2_kurtosis.std_error;
  bool pass_a = sa.ks_best_fit[0] < 0.02 && sa.ks_best_fit[2] < 0.02 && std::abs(kz) > 5;
  os << fmt("(a) %s: KS best-fit p1 %.4f p3 %.4f, p2 excess kurtosis %.3f (%.1f se); ", pass_a ? "pass" : "fail",
            sa.ks_best_fit[0], sa.ks_best_fit[2], sa.p2_kurtosis.excess, kz);
  ok = ok && pass_a;

  // p2 stays near each mode for ~1e5 time units, so the run is extended in
  // chunks of 1e7 until the two mean dwell times are 3 standard errors apart
  // (or 1e8 is reached); p2 is kept in single precision to bound memory.
  ExperimentConfig b;
  b.model = ChainParams::benchmark(10, 15, 20);
  const HistogramSettings& hs = b.histogram;
  const double chunk = 1e7, cap = 1e8;
  IntegratorSpec spec = b.integrator;
  spec.record_stride = std::max<long>(1, std::lround(b.stationary.sample_interval / spec.h));
  const double dt = static_cast<double>(spec.record_stride) * spec.h;
  const std::uint64_t seed = 92;

  spec.total_time = b.stationary.burn_in;
  State x = simulate(b.initial, b.model, spec, RngSpec{seed}, {}, 0);

  Histogram hist(-30, 50, hs.bins);
  std::vector<float> series;
  double sum_p1 = 0, sum_p3 = 0;
  CallbackObserver obs([&](double t, const State& y) {
    if (t == 0) return;  // already recorded as the end of the previous chunk
    series.push_back(static_cast<float>(y.p[1]));
    hist.record(y.p[1]);
    sum_p1 += y.p[0];
    sum_p3 += y.p[2];
  });
  Observer* list[] = {&obs};
  spec.total_time = chunk;
  std::vector<Mode> found;
  std::optional<DwellStats> dwell;
  double measured = 0;
  bool resolved = false;
  for (std::uint64_t c = 1; !resolved && measured < cap; ++c) {
    series.reserve(series.size() + static_cast<std::size_t>(chunk / dt) + 1);
    x = simulate(x, b.model, spec, RngSpec{seed}, list, c);
    measured += chunk;
    found = find_modes(hist, hs.mode_smoothing, hs.mode_min_height);
    dwell.reset();
    if (found.size() == 2) {
      DwellThresholds th;
      th.low_mode = std::min(found[0].location, found[1].location);
      th.high_mode = std::max(found[0].location, found[1].location);
      th.band = hs.dwell_band;
      DwellTracker tracker(th);
      for (std::size_t i = 0; i < series.size(); ++i) tracker.add(static_cast<double>(i) * dt, series[i]);
      dwell = tracker.result();
      resolved = dwell->n_low > 1 && dwell->n_high > 1 &&
                 std::abs(dwell->mean_high - dwell->mean_low) >= 3 * std::hypot(dwell->se_high, dwell->se_low);
      std::cerr << fmt("  9(b) %.0e: near 20 %.0f +- %.0f (%zu), near 0 %.0f +- %.0f (%zu)\n", measured,
                       dwell->mean_high, dwell->se_high, dwell->n_high, dwell->mean_low, dwell->se_low, dwell->n_low);
    }
  }
  const double n = static_cast<double>(series.size());
  const double mean_p1 = sum_p1 / n, mean_p3 = sum_p3 / n;
  bool modes_ok = found.size() == 2;
  std::string modes;
  for (const auto& m : found) modes += fmt("%.2f ", m.location);
  if (modes_ok) {
    double lo = std::min(found[0].location, found[1].location);
    double hi = std::max(found[0].location, found[1].location);
    modes_ok = std::abs(lo) <= 1.5 && std::abs(hi - 20) <= 1.5;
  }
  bool means_ok = std::abs(mean_p3 - 20) <= 0.5 && std::abs(mean_p1) <= 0.5;
  bool dwell_ok = dwell && dwell->n_low > 0 && dwell->n_high > 0 && dwell->mean_high < dwell->mean_low;
  bool pass_b = modes_ok && means_ok && dwell_ok;
  os << fmt("(b) %s: %.0e time units, p2 modes [ %s], <p1> %.3f, <p3> %.3f", pass_b ? "pass" : "fail", measured,
            modes.c_str(), mean_p1, mean_p3);
  if (dwell)
    os << fmt(", dwell near 20 %.0f +- %.0f (%zu) vs near 0 %.0f +- %.0f (%zu)%s", dwell->mean_high, dwell->se_high,
              dwell->n_high, dwell->mean_low, dwell->se_low, dwell->n_low, resolved ? "" : ", not resolved at the cap");
  ok = ok && pass_b;
  os << fmt("; %.0f s", clock.seconds());
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                          criterion4, criterion5, criterion6,
                                                          criterion7, criterion8, criterion9};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [criterion numbers 1-9]\n";
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) selected.push_back(n);

  int failures = 0;
  for (int n : selected) {
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "PASSED ") << selected.size() - failures << "/" << selected.size() << std::endl;
  return failures ? 1 : 0;
}
