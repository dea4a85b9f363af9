#pragma once

// V = 1 + A rho(p) pt^2 exp(beta pt^2 / 2) + exp(beta H), pt = p2 + F(x), and
// the drift inequality LV <= c3 1_K - phi(V), phi(s) = c4 s / (2 + log s).
//
// V and LV overflow quickly, so everything is evaluated after division by
// exp(beta H): the "scaled" quantities below. Signs are unchanged.

#include "rotors/averaging.hpp"
#include "rotors/model.hpp"
#include "rotors/phase_poly.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rotors {

struct LyapunovParams {
  double beta = 0.05;
  double A = 200;
  int k = 2;
  double R = 300;
  double M = 2000;
  double c4 = 1.75e-4;

  /// Throws ConfigError unless beta < 1 / max T, A, R, M > 0 and k >= 1.
  void validate(const ChainParams& params) const;
};

enum class Region { omega1, omega2, omega3 };

struct RegionLabel {
  Region region = Region::omega1;
  bool in_K = false;
};

std::string to_string(Region r);

/// Omega1: |p2| < r^k + R; Omega3: |p2| > 2 r^k + 2 R; Omega2 otherwise,
/// with r = p1^2 + p3^2. K = (Omega1 u Omega2) n {r <= M}.
RegionLabel region(const State& x, const LyapunovParams& lyp);

/// The quintic smoothstep in |s| on [1, 2] and its first two derivatives.
struct Cutoff {
  double value, d1, d2;
};
Cutoff cutoff(double s);

double phi(double s, double c4);
double phi_prime(double s, double c4);
double phi_second(double s, double c4);
/// Inverse of H_phi(u) = int_1^u ds / phi(s): exp(sqrt(2 c4 t + 4) - 2).
double h_phi_inverse(double t, double c4);

class LyapunovFunction {
 public:
  /// truncation: keep the terms of F of degree >= truncation (nullopt: all).
  LyapunovFunction(const ChainParams& params, const LyapunovParams& lyp, const EffectiveDynamics& eff,
                   std::optional<int> truncation = std::nullopt);

  const LyapunovParams& lyp() const { return lyp_; }
  const PhasePoly& F() const { return F_; }
  /// Exact drift and diffusions of p2 + F under the truncation in force.
  const PhasePoly& drift() const { return drift_; }

  double p2_tilde(const State& x) const;
  double rho(const State& x) const;

  /// V exp(-beta H)
  double v_scaled(const State& x) const;
  /// log V
  double log_v(const State& x) const;
  /// V itself; may be +inf.
  double v(const State& x) const;
  /// (LV) exp(-beta H)
  double lv_scaled(const State& x) const;
  /// phi(V) exp(-beta H)
  double phi_scaled(const State& x) const;
  /// (L exp(beta H)) exp(-beta H) from the closed form.
  double lexp_scaled(const State& x) const;

  /// LV by central differences with step h, in quadruple precision:
  /// central differences of H and of V exp(-beta H) are combined by the
  /// product rule, so the Gaussian factor never enters a difference quotient.
  double lv_scaled_fd(const State& x, double h = 1e-4) const;
  /// max |LV - LV_fd| / (1 + |LV|), scaled, over n states with |p_b| <= 5 and
  /// |p2| <= 3 (r^k + R), which covers all three regions and the cutoff layer.
  double fd_discrepancy(std::size_t n, std::uint64_t seed, double h = 1e-4) const;

  double energy(const State& x) const;

 private:
  /// H - p2^2 / 2
  double rest_energy(const State& x) const;
  /// v_scaled from the polynomial images only, in any scalar type.
  template <typename Scalar>
  Scalar v_scaled_t(const StateT<Scalar>& x) const;

  ChainParams params_;
  LyapunovParams lyp_;
  PhasePoly F_, drift_;
  NumericPoly F_num_, drift_num_, sigma_num_[2], H_num_;
  double gamma_[2], T_[2], tau_[2];
};

/// Free-function forms.
double p2_tilde(const State& x, const EffectiveDynamics& eff, std::optional<int> truncation_degree);
double v_eval(const State& x, const LyapunovParams& lyp, const EffectiveDynamics& eff, const ChainParams& params);
double lv_eval(const State& x, const LyapunovParams& lyp, const EffectiveDynamics& eff, const ChainParams& params);

// ---------------------------------------------------------------------------
// scanning

enum class Stratum { omega1_outside_K, omega2_outside_K, omega3, ray_p2, ray_p1, inside_K };
std::string to_string(Stratum s);
constexpr int n_strata = 6;

/// Deterministic stratified sample: point i comes from stratum i mod 6 and
/// its own substream of the seed.
State scan_point(std::size_t i, const LyapunovParams& lyp, std::uint64_t seed);

struct ScanWorst {
  State state;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  bool found = false;
};

struct DriftScanReport {
  bool pass = false;
  std::size_t n_points = 0;
  /// max of (LV + phi(V)) exp(-beta H) outside K.
  ScanWorst worst_outside_K;
  /// max of LV exp(-beta H) inside K.
  ScanWorst worst_inside_K;
  /// max of (LV + phi(V)) exp(-beta H) per region, outside K.
  double margin[3] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity()};
  std::size_t count[3] = {0, 0, 0};
  std::size_t non_finite = 0;
};

struct DriftScanOptions {
  std::size_t n_points = 100000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  bool throw_on_failure = true;
};

/// PASS iff every sampled point outside K has LV + phi(V) <= 0. Throws
/// ParameterRejection on failure unless disabled.
DriftScanReport drift_scan(const LyapunovFunction& V, const DriftScanOptions& options);

nlohmann::json to_json(const DriftScanReport& report, const LyapunovParams& lyp);

struct SandwichFit {
  double c1 = 0;
  double c2 = 0;
};

/// c1 = min (V - 1) / e^{beta H}, c2 = max V / ((1 + p2^2) e^{beta H}) over
/// the points, then loosened by a factor of 2 each.
SandwichFit fit_sandwich(const LyapunovFunction& V, std::size_t n_points, std::uint64_t seed);
/// Number of points violating 1 + c1 e^{beta H} <= V <= c2 (1 + p2^2) e^{beta H}.
std::size_t sandwich_violations(const LyapunovFunction& V, const SandwichFit& fit, std::size_t n_points,
                                std::uint64_t seed);

struct SearchSpec {
  std::vector<double> R_grid{10, 30, 100, 300};
  std::vector<double> A_grid{10, 20, 50, 100, 200, 500, 1000};
  std::vector<double> M_grid{50, 100, 200, 500, 1000, 2000, 5000, 10000};
  std::size_t pilot_points = 20000;
  std::uint64_t seed = 99;
  unsigned jobs = 0;
};

struct SearchResult {
  LyapunovParams lyp;
  /// min over the pilot, outside K, of -LV / phi_1(V) with c4 = 1.
  double c4_max = 0;
  bool found = false;
};

/// For fixed beta and k: over the (R, A, M) grid keeps the pairs with LV < 0 on
/// every pilot point outside K and picks the one allowing the largest c4;
/// c4 is set to half of that bound. Ties keep the first pair in grid order.
SearchResult search_parameters(const ChainParams& params, const EffectiveDynamics& eff, const LyapunovParams& base,
                               const SearchSpec& spec);

}  // namespace rotors
