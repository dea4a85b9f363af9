#include "rotors/control.hpp"

#include "rotors/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rotors {

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

struct Wave {
  int k;
  double c, s;  // c cos(k x) + s sin(k x)
};

/// Double-precision image of the derivative of a potential.
std::vector<Wave> force_waves(const TrigPotential& pot) {
  std::vector<Wave> out;
  TrigPotential force = pot.derivative();
  for (const Harmonic& h : force.harmonics()) out.push_back({h.k, h.cos_coeff.get_d(), h.sin_coeff.get_d()});
  return out;
}

double eval_waves(const std::vector<Wave>& waves, double x) {
  double sum = 0;
  for (const Wave& w : waves) sum += w.c * std::cos(w.k * x) + w.s * std::sin(w.k * x);
  return sum;
}

std::pair<double, double> extrema(const std::vector<Wave>& waves) {
  if (waves.empty()) return {0.0, 0.0};
  constexpr int n = 4096;
  const double step = two_pi / n;
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = eval_waves(waves, i * step);

  auto refine = [&](int i, double sign) {
    // golden-section search for the maximum of sign * w on [x_{i-1}, x_{i+1}]
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double lo = (i - 1) * step, hi = (i + 1) * step;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = sign * eval_waves(waves, x1), f2 = sign * eval_waves(waves, x2);
    for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = sign * eval_waves(waves, x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = sign * eval_waves(waves, x1);
      }
    }
    return std::max({sign * values[i], f1, f2}) * sign;
  };
  int imin = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  int imax = static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
  return {refine(imin, -1.0), refine(imax, 1.0)};
}

}  // namespace

ForceBounds force_bounds(const ChainParams& params) {
  if (params.W1.is_zero() && params.W3.is_zero()) throw DegenerateForce("both interaction potentials vanish");
  ForceBounds out;
  for (int b : {1, 3}) {
    auto [lo, hi] = extrema(force_waves(params.W(b)));
    out.K_minus += lo;
    out.K_plus += hi;
  }
  if (!(out.K_minus < 0 && out.K_plus > 0)) throw DegenerateForce("force range does not contain 0 in its interior");
  out.K_star = std::min(std::abs(out.K_minus), std::abs(out.K_plus));
  return out;
}

// ---------------------------------------------------------------------------
// reduced model

double PiecewisePlan::total_time() const {
  double t = 0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

PiecewisePlan plan_middle(double q2i, double p2i, double q2f, double p2f, const ForceBounds& bounds,
                          const ChainParams& params) {
  if (!params.U2.is_zero()) throw Unsupported("planning requires U2 = 0");
  if (!(bounds.K_minus < 0 && bounds.K_plus > 0)) throw PreconditionError("force bounds must satisfy K- < 0 < K+");
  PiecewisePlan plan;
  plan.q2i = q2i;
  plan.p2i = p2i;
  plan.q2f = q2f;
  plan.p2f = p2f;
  double g = p2f >= p2i ? bounds.K_plus : bounds.K_minus;
  plan.Theta = (p2f - p2i) / g;
  if (plan.Theta > 0) plan.segments.push_back({plan.Theta, g});
  double q_theta = q2i + p2i * plan.Theta + 0.5 * g * plan.Theta * plan.Theta;
  plan.Delta = std::sqrt(two_pi / bounds.K_star) * (1 + 1e-9);
  double shift = std::fmod(q2f - q_theta - 2 * plan.Delta * p2f, two_pi);
  if (shift < 0) shift += two_pi;
  plan.a = shift / (plan.Delta * plan.Delta);
  plan.segments.push_back({plan.Delta, plan.a});
  plan.segments.push_back({plan.Delta, -plan.a});
  return plan;
}

ReducedState reduced_state(const PiecewisePlan& plan, double t) {
  double q = plan.q2i, p = plan.p2i, start = 0;
  for (std::size_t j = 0; j < plan.segments.size(); ++j) {
    const auto& seg = plan.segments[j];
    double s = t - start;
    if (s <= seg.duration || j + 1 == plan.segments.size()) {
      s = std::clamp(s, 0.0, seg.duration);
      return {q + p * s + 0.5 * seg.g * s * s, p + seg.g * s, seg.g};
    }
    q += p * seg.duration + 0.5 * seg.g * seg.duration * seg.duration;
    p += seg.g * seg.duration;
    start += seg.duration;
  }
  return {q, p, 0};
}

ReducedState replay_reduced(const PiecewisePlan& plan) {
  double q = plan.q2i, p = plan.p2i;
  for (const auto& seg : plan.segments) {
    q += p * seg.duration + 0.5 * seg.g * seg.duration * seg.duration;
    p += seg.g * seg.duration;
  }
  return {q, p, 0};
}

double angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), two_pi);
  return std::min(d, two_pi - d);
}

// ---------------------------------------------------------------------------
// piecewise polynomials

const PiecewisePoly::Piece& PiecewisePoly::locate(double t) const {
  if (pieces_.empty()) throw PreconditionError("empty piecewise polynomial");
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t, [](double v, const Piece& p) { return v < p.t1; });
  if (it == pieces_.end()) return pieces_.back();
  return *it;
}

double PiecewisePoly::value(double t) const {
  const Piece& p = locate(t);
  double s = t - p.t0;
  return p.c[0] + s * (p.c[1] + s * (p.c[2] + s * (p.c[3] + s * (p.c[4] + s * p.c[5]))));
}

double PiecewisePoly::derivative(double t) const {
  const Piece& p = locate(t);
  double s = t - p.t0;
  return p.c[1] + s * (2 * p.c[2] + s * (3 * p.c[3] + s * (4 * p.c[4] + s * 5 * p.c[5])));
}

double PiecewisePoly::second_derivative(double t) const {
  const Piece& p = locate(t);
  double s = t - p.t0;
  return 2 * p.c[2] + s * (6 * p.c[3] + s * (12 * p.c[4] + s * 20 * p.c[5]));
}

double OuterTrajectories::bridge_length() const {
  double sum = 0;
  for (const auto& b : bridges) sum += b.t1 - b.t0;
  return sum;
}

bool OuterTrajectories::in_bridge(double t) const {
  for (const auto& b : bridges)
    if (t >= b.t0 && t <= b.t1) return true;
  return false;
}

// ---------------------------------------------------------------------------
// outer trajectories

namespace {

struct Jet {
  double y, v, a;
};

/// Quintic on [0, L] with the given jets at both ends.
std::array<double, 6> hermite5(const Jet& j0, const Jet& j1, double L) {
  std::array<double, 6> c{};
  c[0] = j0.y;
  c[1] = j0.v * L;
  c[2] = 0.5 * j0.a * L * L;
  double Y = j1.y - (c[0] + c[1] + c[2]);
  double V = j1.v * L - (c[1] + 2 * c[2]);
  double A = j1.a * L * L - 2 * c[2];
  c[3] = 10 * Y - 4 * V + 0.5 * A;
  c[4] = -15 * Y + 7 * V - A;
  c[5] = 6 * Y - 3 * V + 0.5 * A;
  // back to the unscaled variable s = t - t0
  double Lk = 1;
  for (int i = 1; i < 6; ++i) {
    Lk *= L;
    c[i] /= Lk;
  }
  return c;
}

double kappa_of(const TrigPotential& W, int b) {
  if (W.is_zero()) return 0.0;
  const auto& hs = W.harmonics();
  if (hs.size() != 1 || hs[0].k != 1 || hs[0].sin_coeff != 0)
    throw Unsupported("outer synthesis supports W" + std::to_string(b) + " = -kappa cos only");
  return -hs[0].cos_coeff.get_d();
}

}  // namespace

OuterTrajectories synthesize_outer(const PiecewisePlan& plan, const ChainParams& params, double delta,
                                   const State& x_initial, const State& x_final) {
  if (!(delta > 0)) throw PreconditionError("delta must be > 0");
  if (plan.segments.empty()) throw PreconditionError("empty plan");
  const double kappa[2] = {kappa_of(params.W1, 1), kappa_of(params.W3, 3)};
  const double K = std::abs(kappa[0]) + std::abs(kappa[1]);
  if (K == 0) throw DegenerateForce("both interaction potentials vanish");

  const std::size_t n_seg = plan.segments.size();
  std::vector<double> start(n_seg), Q(n_seg), P(n_seg);
  std::vector<std::array<double, 2>> theta(n_seg);
  {
    double t = 0, q = plan.q2i, p = plan.p2i;
    for (std::size_t j = 0; j < n_seg; ++j) {
      const auto& seg = plan.segments[j];
      if (std::abs(seg.g) > K * (1 + 1e-12)) {
        std::ostringstream os;
        os << "segment " << j << " requires |g| = " << std::abs(seg.g) << " > " << K;
        throw Unachievable(os.str());
      }
      start[j] = t;
      Q[j] = q;
      P[j] = p;
      for (int b : {0, 1}) {
        double sgn = kappa[b] > 0 ? 1.0 : kappa[b] < 0 ? -1.0 : 0.0;
        theta[j][b] = std::asin(std::clamp(-sgn * seg.g / K, -1.0, 1.0));
      }
      q += p * seg.duration + 0.5 * seg.g * seg.duration * seg.duration;
      p += seg.g * seg.duration;
      t += seg.duration;
    }
  }
  const double T = plan.total_time();

  // bridge at each change of g, plus one at either end
  std::vector<std::size_t> switches;
  double min_seg = plan.segments[0].duration;
  for (std::size_t j = 1; j < n_seg; ++j) {
    if (plan.segments[j].g != plan.segments[j - 1].g) switches.push_back(j);
    min_seg = std::min(min_seg, plan.segments[j].duration);
  }
  const double ell = std::min(delta / static_cast<double>(switches.size() + 2), min_seg / 3);

  auto star = [&](int b, std::size_t j, double t) {
    double s = t - start[j];
    double g = plan.segments[j].g;
    return Jet{Q[j] - theta[j][b] + P[j] * s + 0.5 * g * s * s, P[j] + g * s, g};
  };
  auto segment_piece = [&](int b, std::size_t j, double t0, double t1) {
    Jet j0 = star(b, j, t0);
    PiecewisePoly::Piece piece{t0, t1, {j0.y, j0.v, 0.5 * j0.a, 0, 0, 0}};
    return piece;
  };
  auto lift = [](double angle, double near) { return angle + two_pi * std::round((near - angle) / two_pi); };

  OuterTrajectories out;
  out.plan = plan;
  out.total_time = T;
  out.bridges.push_back({0, ell});
  for (std::size_t j : switches) out.bridges.push_back({start[j] - ell / 2, start[j] + ell / 2});
  out.bridges.push_back({T - ell, T});

  for (int b : {0, 1}) {
    PiecewisePoly poly;
    const int idx = b == 0 ? 0 : 2;
    // initial bridge
    Jet end0 = star(b, 0, ell);
    Jet begin{lift(x_initial.q[idx], end0.y), x_initial.p[idx], 0};
    poly.append({0, ell, hermite5(begin, end0, ell)});
    double cursor = ell;
    std::size_t seg = 0;
    for (std::size_t j : switches) {
      double t_left = start[j] - ell / 2, t_right = start[j] + ell / 2;
      // plain pieces up to the bridge; segments without a change of g join
      while (seg + 1 < j) {
        poly.append(segment_piece(b, seg, cursor, start[seg + 1]));
        cursor = start[seg + 1];
        ++seg;
      }
      poly.append(segment_piece(b, seg, cursor, t_left));
      poly.append({t_left, t_right, hermite5(star(b, j - 1, t_left), star(b, j, t_right), ell)});
      cursor = t_right;
      seg = j;
    }
    while (seg + 1 < n_seg) {
      poly.append(segment_piece(b, seg, cursor, start[seg + 1]));
      cursor = start[seg + 1];
      ++seg;
    }
    poly.append(segment_piece(b, seg, cursor, T - ell));
    Jet j0 = star(b, seg, T - ell);
    Jet j1{lift(x_final.q[idx], j0.y), x_final.p[idx], 0};
    poly.append({T - ell, T, hermite5(j0, j1, ell)});
    (b == 0 ? out.q1 : out.q3) = std::move(poly);
  }
  return out;
}

double middle_force(const ChainParams& params, double q1, double q2, double q3) {
  Forces f = forces(State{Eigen::Vector3d(q1, q2, q3), Eigen::Vector3d::Zero()}, params);
  return f.phi2;
}

State integrate_controlled(const OuterTrajectories& outer, const ChainParams& params, const State& x_initial,
                           double h, std::vector<std::pair<double, State>>* samples, std::size_t stride) {
  if (!(h > 0)) throw PreconditionError("h must be > 0");
  const auto w1 = force_waves(params.W1);
  const auto w3 = force_waves(params.W3);
  const auto u2 = force_waves(params.U2);
  auto p2_force = [&](double q1, double q2, double q3) {
    return -eval_waves(w1, q2 - q1) - eval_waves(w3, q2 - q3) - eval_waves(u2, q2);
  };

  using Vec = Eigen::Matrix<double, 6, 1>;
  Vec y;
  y << outer.q1.pieces().front().c[0], x_initial.q[1], outer.q3.pieces().front().c[0], x_initial.p[0],
      x_initial.p[1], x_initial.p[2];
  std::size_t step_count = 0;
  auto record = [&](double t) {
    if (!samples) return;
    if (step_count % stride == 0) samples->push_back({t, State{y.head<3>(), y.tail<3>()}});
  };
  record(0.0);

  const auto& pieces1 = outer.q1.pieces();
  const auto& pieces3 = outer.q3.pieces();
  for (std::size_t k = 0; k < pieces1.size(); ++k) {
    const auto& a = pieces1[k];
    const auto& c = pieces3[k];
    auto accel = [](const PiecewisePoly::Piece& p, double s) {
      return 2 * p.c[2] + s * (6 * p.c[3] + s * (12 * p.c[4] + s * 20 * p.c[5]));
    };
    auto rhs = [&](double s, const Vec& z) {
      Vec d;
      d << z[3], z[4], z[5], accel(a, s), p2_force(z[0], z[1], z[2]), accel(c, s);
      return d;
    };
    const double L = a.t1 - a.t0;
    if (L <= 0) continue;
    const std::size_t n = static_cast<std::size_t>(std::ceil(L / h - 1e-9));
    const double dt = L / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) * dt;
      Vec k1 = rhs(s, y);
      Vec k2 = rhs(s + dt / 2, y + dt / 2 * k1);
      Vec k3 = rhs(s + dt / 2, y + dt / 2 * k2);
      Vec k4 = rhs(s + dt, y + dt * k3);
      y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      ++step_count;
      record(a.t0 + s + dt);
    }
  }
  return State{y.head<3>(), y.tail<3>()};
}

double state_distance(const State& x, const State& y) {
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    double dq = angle_distance(x.q[i], y.q[i]);
    double dp = x.p[i] - y.p[i];
    sum += dq * dq + dp * dp;
  }
  return std::sqrt(sum);
}

ControllabilityReport verify_controllability(const State& x_initial, const State& x_final, double eps,
                                             std::vector<double> deltas, const ChainParams& params, double h) {
  if (deltas.empty()) throw PreconditionError("no delta values");
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  ControllabilityReport rep;
  rep.eps = eps;
  rep.bounds = force_bounds(params);
  rep.plan = plan_middle(x_initial.q[1], x_initial.p[1], x_final.q[1], x_final.p[1], rep.bounds, params);
  rep.T_star = rep.plan.total_time();
  for (double delta : deltas) {
    OuterTrajectories outer = synthesize_outer(rep.plan, params, delta, x_initial, x_final);
    ControlRun run;
    run.delta = delta;
    run.final_state = integrate_controlled(outer, params, x_initial, h);
    run.error = state_distance(run.final_state, x_final);
    run.bridge_length = outer.bridge_length();
    for (int b : {1, 3})
      for (const auto& p : outer.q(b).pieces())
        for (double t : {p.t0, 0.5 * (p.t0 + p.t1), p.t1})
          run.max_abs_control = std::max(run.max_abs_control, std::abs(outer.control(b, t)));
    rep.runs.push_back(run);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.runs.size(); ++i)
    if (rep.runs[i].error > rep.runs[i - 1].error + 1e-9) rep.monotone = false;
  for (const auto& run : rep.runs) {
    if (run.error <= eps) {
      rep.achieved = true;
      rep.delta0 = run.delta;
      break;
    }
  }
  if (!rep.monotone) {
    std::ostringstream os;
    os << "final-state error does not decrease with delta:";
    for (const auto& run : rep.runs) os << " (delta " << run.delta << ", error " << run.error << ")";
    throw NotConverging(os.str());
  }
  return rep;
}

TimeLaw fit_time_law(const std::vector<std::pair<double, double>>& dp_and_time) {
  const double n = static_cast<double>(dp_and_time.size());
  if (dp_and_time.size() < 2) throw PreconditionError("need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : dp_and_time) {
    x = std::abs(x);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw PreconditionError("degenerate time-law fit");
  TimeLaw law;
  law.c2 = (n * sxy - sx * sy) / denom;
  law.c1 = (sy - law.c2 * sx) / n;
  return law;
}

nlohmann::json to_json(const PiecewisePlan& plan) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : plan.segments) segs.push_back({{"duration", s.duration}, {"g", s.g}});
  ReducedState end = replay_reduced(plan);
  return {{"segments", segs},
          {"Theta", plan.Theta},
          {"Delta", plan.Delta},
          {"a", plan.a},
          {"T_star", plan.total_time()},
          {"from", {plan.q2i, plan.p2i}},
          {"to", {plan.q2f, plan.p2f}},
          {"reduced_end", {end.q, end.p}},
          {"reduced_error", std::hypot(angle_distance(end.q, plan.q2f), end.p - plan.p2f)}};
}

nlohmann::json to_json(const ControllabilityReport& rep) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    const State& x = r.final_state;
    runs.push_back({{"delta", r.delta},
                    {"error", r.error},
                    {"bridge_length", r.bridge_length},
                    {"max_abs_control", r.max_abs_control},
                    {"final_state", {{"q", {x.q[0], x.q[1], x.q[2]}}, {"p", {x.p[0], x.p[1], x.p[2]}}}}});
  }
  return {{"plan", to_json(rep.plan)},
          {"bounds", {{"K_minus", rep.bounds.K_minus}, {"K_plus", rep.bounds.K_plus}, {"K_star", rep.bounds.K_star}}},
          {"T_star", rep.T_star},
          {"eps", rep.eps},
          {"runs", runs},
          {"monotone", rep.monotone},
          {"achieved", rep.achieved},
          {"delta0", rep.achieved ? nlohmann::json(rep.delta0) : nlohmann::json(nullptr)}};
}

void write_trajectory_csv(std::ostream& os, const std::vector<std::pair<double, State>>& samples,
                          const OuterTrajectories& outer) {
  os << "t,q1,q2,q3,p1,p2,p3,q2bar,p2bar,g,f1,f3\n";
  os.precision(17);
  for (const auto& [t, x] : samples) {
    ReducedState r = reduced_state(outer.plan, t);
    os << t << ',' << x.q[0] << ',' << x.q[1] << ',' << x.q[2] << ',' << x.p[0] << ',' << x.p[1] << ',' << x.p[2]
       << ',' << r.q << ',' << r.p << ',' << r.g << ',' << outer.control(1, t) << ',' << outer.control(3, t) << '\n';
  }
}

}  // namespace rotors
