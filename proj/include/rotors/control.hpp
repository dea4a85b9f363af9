#pragma once

// Steering the middle rotor with forces exerted through the outer rotors.
//
// Reduced model:  q2' = p2, p2' = g(t) with g piecewise constant.
// Full model:     q_i' = p_i, p2' = -sum_b w_b(q2 - q_b), p_b' = f_b(t).

#include "rotors/model.hpp"
#include "rotors/state.hpp"

#include <json.hpp>

#include <array>
#include <iosfwd>
#include <vector>

namespace rotors {

struct ForceBounds {
  double K_minus = 0;
  double K_plus = 0;
  /// min(|K+|, |K-|)
  double K_star = 0;
};

/// K- = sum_b min w_b, K+ = sum_b max w_b, from a dense grid refined by
/// golden-section search. Throws DegenerateForce when both W_b vanish.
ForceBounds force_bounds(const ChainParams& params);

struct Segment {
  double duration = 0;
  double g = 0;
};

struct PiecewisePlan {
  std::vector<Segment> segments;
  double Theta = 0, Delta = 0, a = 0;
  double q2i = 0, p2i = 0, q2f = 0, p2f = 0;

  double total_time() const;
};

/// Three segments: g = K+ (or K-) for Theta = (p2f - p2i) / K+-, then +a and
/// -a for Delta = sqrt(2 pi / K*) (1 + 1e-9) each, with
/// a Delta^2 = q2f - q2(Theta) - 2 Delta p2f mod 2 pi. The first segment is
/// omitted when p2f = p2i. Throws Unsupported when U2 is not zero.
PiecewisePlan plan_middle(double q2i, double p2i, double q2f, double p2f, const ForceBounds& bounds,
                          const ChainParams& params);

/// Exact solution of the reduced model under the plan.
struct ReducedState {
  double q = 0, p = 0, g = 0;
};
ReducedState reduced_state(const PiecewisePlan& plan, double t);
/// End point of the reduced model; q is not wrapped.
ReducedState replay_reduced(const PiecewisePlan& plan);

/// Distance on the circle, in [0, pi].
double angle_distance(double a, double b);

/// A C^2 piecewise polynomial in t - t0 on consecutive intervals.
class PiecewisePoly {
 public:
  struct Piece {
    double t0 = 0, t1 = 0;
    std::array<double, 6> c{};  // c[0] + c[1] s + ... + c[5] s^5, s = t - t0
  };

  void append(const Piece& piece) { pieces_.push_back(piece); }
  const std::vector<Piece>& pieces() const { return pieces_; }

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

 private:
  const Piece& locate(double t) const;
  std::vector<Piece> pieces_;
};

struct Interval {
  double t0 = 0, t1 = 0;
};

struct OuterTrajectories {
  PiecewisePlan plan;
  PiecewisePoly q1, q3;
  /// Bridging intervals, total length <= delta.
  std::vector<Interval> bridges;
  double total_time = 0;

  const PiecewisePoly& q(int b) const { return b == 1 ? q1 : q3; }
  double bridge_length() const;
  bool in_bridge(double t) const;
  /// The control f_b = q_b''.
  double control(int b, double t) const { return q(b).second_derivative(t); }
};

/// Bond b carries the share |kappa_b| / (|kappa_1| + |kappa_3|) of g, so
/// q_b* = q2bar - arcsin(-sgn(kappa_b) g / (|kappa_1| + |kappa_3|)). Jumps at
/// segment changes and the boundary conditions are bridged by quintic Hermite
/// pieces matching position, velocity and acceleration. Requires
/// W_b = -kappa_b cos (Unsupported otherwise); throws Unachievable when some
/// |g| exceeds |kappa_1| + |kappa_3|.
OuterTrajectories synthesize_outer(const PiecewisePlan& plan, const ChainParams& params, double delta,
                                   const State& x_initial, const State& x_final);

/// Total force on p2 in the full model with the outer rotors at q1, q3.
double middle_force(const ChainParams& params, double q1, double q2, double q3);

/// Classical RK4 for the full model under the synthesized controls, with the
/// step adjusted to divide the horizon. Optionally records every stride-th step.
State integrate_controlled(const OuterTrajectories& outer, const ChainParams& params, const State& x_initial,
                           double h = 1e-5, std::vector<std::pair<double, State>>* samples = nullptr,
                           std::size_t stride = 1000);

/// Euclidean distance with angles compared on the circle.
double state_distance(const State& x, const State& y);

struct ControlRun {
  double delta = 0;
  double error = 0;
  double bridge_length = 0;
  double max_abs_control = 0;
  State final_state;
};

struct ControllabilityReport {
  PiecewisePlan plan;
  ForceBounds bounds;
  double T_star = 0;
  std::vector<ControlRun> runs;
  bool monotone = false;
  bool achieved = false;
  /// Largest delta in the list whose error is <= eps (when achieved).
  double delta0 = 0;
  double eps = 0;
};

/// Plans, synthesizes and replays for every delta in decreasing order. Throws
/// NotConverging, with the table of errors, when the error increases as delta
/// decreases.
ControllabilityReport verify_controllability(const State& x_initial, const State& x_final, double eps,
                                             std::vector<double> deltas, const ChainParams& params,
                                             double h = 1e-5);

/// Least-squares fit T* = c1 + c2 |dp2|.
struct TimeLaw {
  double c1 = 0, c2 = 0;
};
TimeLaw fit_time_law(const std::vector<std::pair<double, double>>& dp_and_time);

nlohmann::json to_json(const PiecewisePlan& plan);
nlohmann::json to_json(const ControllabilityReport& report);
void write_trajectory_csv(std::ostream& os, const std::vector<std::pair<double, State>>& samples,
                          const OuterTrajectories& outer);

}  // namespace rotors
