#pragma once

// Ito bookkeeping d = d+ + d0 + d- and the order-by-order elimination of the
// fast q2 oscillations in dp2.

#include "rotors/model.hpp"
#include "rotors/phase_poly.hpp"

#include <json.hpp>

#include <map>
#include <optional>

namespace rotors {

/// Drift and diffusions of d f(X_t). Diffusions exclude sqrt(2 gamma_b T_b).
struct ItoForm {
  PhasePoly drift;
  PhasePoly diff1;
  PhasePoly diff3;

  const PhasePoly& diff(int b) const { return b == 1 ? diff1 : diff3; }
  PhasePoly& diff(int b) { return b == 1 ? diff1 : diff3; }
  bool is_zero() const { return drift.is_zero() && diff1.is_zero() && diff3.is_zero(); }

  ItoForm& operator+=(const ItoForm& o);
  ItoForm& operator-=(const ItoForm& o);
  friend ItoForm operator+(ItoForm a, const ItoForm& b) { return a += b; }
  friend ItoForm operator-(ItoForm a, const ItoForm& b) { return a -= b; }
  friend ItoForm operator-(const ItoForm& a) { return ItoForm{} - a; }
  friend bool operator==(const ItoForm&, const ItoForm&) = default;
};

/// Params and their symbolic force polynomials, bundled for the operators below.
class ItoCalculus {
 public:
  explicit ItoCalculus(ChainParams params);

  const ChainParams& params() const { return params_; }
  const SymbolicModel& model() const { return sym_; }

  /// p2 df/dq2
  PhasePoly dplus(const PhasePoly& f) const;
  /// phi2 df/dp2
  PhasePoly dminus(const PhasePoly& f) const;
  /// Outer-rotor part, first and second order, with diff_b = df/dp_b.
  ItoForm dzero(const PhasePoly& f) const;
  /// Sum p_b df/dq_b only: the part of d0 that outer_absorb inverts.
  PhasePoly transport(const PhasePoly& f) const;
  ItoForm ito(const PhasePoly& f) const;

 private:
  ChainParams params_;
  SymbolicModel sym_;
};

PhasePoly dplus(const PhasePoly& f);
PhasePoly dminus(const PhasePoly& f, const ChainParams& params);
ItoForm dzero(const PhasePoly& f, const ChainParams& params);
ItoForm ito(const PhasePoly& f, const ChainParams& params);

struct AveragingStep {
  PhasePoly mean;
  PhasePoly correction;
  ItoForm extra;
};

/// f dt = <f> dt - d0(Qf) - d-(Qf) + d(Qf): returns <f>, Qf and the Ito form
/// of -d0(Qf) - d-(Qf).
AveragingStep averaging_step(const PhasePoly& f, const ItoCalculus& calc);
AveragingStep averaging_step(const PhasePoly& f, const ChainParams& params);

struct Absorption {
  /// Psi with sum_b p_b dPsi/dq_b = absorbable part of g; nullopt if none.
  std::optional<PhasePoly> absorbed;
  /// Mode (k1, k3) = (0, 0) content of g: a genuine averaged drift.
  PhasePoly genuine;
  /// Ito form of -(d0 Psi - transport Psi) - d- Psi.
  ItoForm remainder;
};

/// Throws PreconditionError if g depends on q2 and NotDivisible if some mode
/// is not divisible by its transport symbol i(k1 p1 + k3 p3).
Absorption outer_absorb(const PhasePoly& g, const ItoCalculus& calc);
Absorption outer_absorb(const PhasePoly& g, const ChainParams& params);

struct EffectiveDynamics {
  PhasePoly F;
  PhasePoly a;
  PhasePoly sigma1;
  PhasePoly sigma3;
  int residual_drift_degree = 0;
  int residual_diff_degree = 0;

  /// alpha in a = -alpha / p2^3 + ...; the constant coefficient of p2^-3.
  Rational alpha;
  /// q2-averaged drift met at each eliminated degree, before absorption.
  std::map<int, PhasePoly> averaged_by_degree;
  int passes = 0;

  const PhasePoly& sigma(int b) const { return b == 1 ? sigma1 : sigma3; }
};

struct AveragingOptions {
  /// Residual non-averaged drift must end at degree <= target_degree.
  int target_degree = -4;
  int max_passes = 20;
};

EffectiveDynamics average_p2(const ChainParams& params, const AveragingOptions& options = {});

/// Angle-free terms: averaged drift that no change of variable removes.
bool is_genuine(const Monomial& m);

nlohmann::json to_json(const EffectiveDynamics& eff);
nlohmann::json to_json(const ItoForm& form);

/// Plain-text summary naming alpha and the leading terms.
std::string report(const EffectiveDynamics& eff);

}  // namespace rotors
