#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace rotors {

/// A point (q, p) of T^3 x R^3.
template <typename Scalar>
struct StateT {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Vector3 q = Vector3::Zero();
  Vector3 p = Vector3::Zero();

  StateT() = default;
  StateT(const Vector3& q_, const Vector3& p_) : q(q_), p(p_) {}

  /// Reduces every angle into [0, 2 pi).
  void wrap_angles() {
    constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    for (int i = 0; i < 3; ++i) {
      q[i] = std::fmod(q[i], two_pi);
      if (q[i] < Scalar(0)) q[i] += two_pi;
      if (q[i] >= two_pi) q[i] = Scalar(0);
    }
  }

  bool all_finite() const { return q.allFinite() && p.allFinite(); }
};

using State = StateT<double>;

/// Signed distance between two angles, in (-pi, pi].
inline double angle_difference(double a, double b) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double d = std::remainder(a - b, two_pi);
  return d;
}

}  // namespace rotors
