#pragma once

#include "rotors/phase_poly.hpp"
#include "rotors/rational.hpp"
#include "rotors/state.hpp"

#include <json.hpp>

#include <array>
#include <vector>

namespace rotors {

/// One harmonic a*cos(k s) + b*sin(k s) of a potential.
struct Harmonic {
  int k = 1;
  Rational cos_coeff{0};
  Rational sin_coeff{0};

  friend bool operator==(const Harmonic&, const Harmonic&) = default;
};

/// Zero-mean trigonometric polynomial on the circle.
class TrigPotential {
 public:
  TrigPotential() = default;
  /// Throws ConfigError for k < 1.
  explicit TrigPotential(std::vector<Harmonic> harmonics);

  /// -kappa cos(s)
  static TrigPotential minus_cos(const Rational& kappa = 1);

  const std::vector<Harmonic>& harmonics() const { return harmonics_; }
  bool is_zero() const;

  /// The force accessor: the derivative, again a zero-mean trig polynomial.
  TrigPotential derivative() const;
  TrigPotential scaled(const Rational& factor) const;

  double operator()(double s) const;
  /// Derivative value.
  double slope(double s) const;

  /// The potential as a function of the angle combination k . q.
  PhasePoly as_poly(std::array<int, 3> wave) const;

  friend bool operator==(const TrigPotential&, const TrigPotential&) = default;

 private:
  std::vector<Harmonic> harmonics_;
};

/// Physical parameters of the chain. gamma, T, tau are kept exact so that the
/// symbolic generator stays in rational arithmetic; double views are cached.
struct ChainParams {
  Rational gamma1{1}, gamma3{1};
  Rational T1{1}, T3{1};
  Rational tau1{0}, tau3{0};
  TrigPotential W1 = TrigPotential::minus_cos();
  TrigPotential W3 = TrigPotential::minus_cos();
  TrigPotential U1, U2, U3;

  /// Benchmark configuration: U = 0, W_b = -cos, gamma_b = 1, tau1 = 0.
  static ChainParams benchmark(const Rational& T1, const Rational& T3, const Rational& tau3 = 0);

  /// Throws ConfigError unless gamma_b > 0, T_b > 0 and some W_b is non-zero.
  void validate() const;

  const Rational& gamma(int b) const { return b == 1 ? gamma1 : gamma3; }
  const Rational& T(int b) const { return b == 1 ? T1 : T3; }
  const Rational& tau(int b) const { return b == 1 ? tau1 : tau3; }
  const TrigPotential& W(int b) const { return b == 1 ? W1 : W3; }
  const TrigPotential& U(int i) const { return i == 1 ? U1 : i == 2 ? U2 : U3; }

  /// sqrt(2 gamma_b T_b), the noise amplitude of channel b.
  double noise_amplitude(int b) const;

  friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

nlohmann::json to_json(const ChainParams& params);
/// Reads {gamma1, gamma3, T1, T3, tau1, tau3, W1, W3, U1, U2, U3}; rationals
/// as [num, den], integers, decimal strings or JSON numbers. Missing keys keep
/// their benchmark defaults; unknown keys are rejected.
ChainParams chain_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// numeric model

double hamiltonian(const State& x, const ChainParams& params);

struct Forces {
  double phi1 = 0, phi2 = 0, phi3 = 0;
};

/// phi_b = w_b(q2 - q_b) - u_b(q_b), phi_2 = -w_1 - w_3 - u_2(q2).
Forces forces(const State& x, const ChainParams& params);

struct Drift {
  Eigen::Vector3d dq;
  Eigen::Vector3d dp;
  /// Noise amplitudes on p1 and p3.
  double amplitude1 = 0, amplitude3 = 0;
};

Drift sde_drift(const State& x, const ChainParams& params);

// ---------------------------------------------------------------------------
// symbolic model

/// Wave vector of q2 - q_b.
std::array<int, 3> bond_wave(int b);

/// Symbolic pieces of the model, built once per parameter set.
struct SymbolicModel {
  PhasePoly W1, W3;     // W_b(q2 - q_b)
  PhasePoly w1, w3;     // w_b(q2 - q_b)
  PhasePoly U1, U2, U3; // U_i(q_i)
  PhasePoly Phi2;       // W1 + W3 + U2
  PhasePoly phi1, phi2, phi3;
  PhasePoly H;

  explicit SymbolicModel(const ChainParams& params);

  const PhasePoly& W(int b) const { return b == 1 ? W1 : W3; }
  const PhasePoly& w(int b) const { return b == 1 ? w1 : w3; }
  const PhasePoly& phi(int i) const { return i == 1 ? phi1 : i == 2 ? phi2 : phi3; }
};

/// Symbolic infinitesimal generator L applied to f.
PhasePoly generator_apply(const PhasePoly& f, const ChainParams& params);
PhasePoly generator_apply(const PhasePoly& f, const ChainParams& params, const SymbolicModel& sym);

}  // namespace rotors
