#include "rotors/model.hpp"

#include <cmath>
#include <set>

namespace rotors {

// ---------------------------------------------------------------------------
// TrigPotential

TrigPotential::TrigPotential(std::vector<Harmonic> harmonics) {
  for (auto& h : harmonics) {
    if (h.k < 1) throw ConfigError("trig potential harmonics need k >= 1 (zero mean)");
    if (sgn(h.cos_coeff) == 0 && sgn(h.sin_coeff) == 0) continue;
    harmonics_.push_back(std::move(h));
  }
}

TrigPotential TrigPotential::minus_cos(const Rational& kappa) {
  return TrigPotential({Harmonic{1, -kappa, Rational(0)}});
}

bool TrigPotential::is_zero() const { return harmonics_.empty(); }

TrigPotential TrigPotential::derivative() const {
  // d/ds [a cos ks + b sin ks] = k b cos ks - k a sin ks
  std::vector<Harmonic> out;
  for (const auto& h : harmonics_) out.push_back({h.k, h.k * h.sin_coeff, -h.k * h.cos_coeff});
  return TrigPotential(std::move(out));
}

TrigPotential TrigPotential::scaled(const Rational& factor) const {
  std::vector<Harmonic> out;
  for (const auto& h : harmonics_) out.push_back({h.k, factor * h.cos_coeff, factor * h.sin_coeff});
  return TrigPotential(std::move(out));
}

double TrigPotential::operator()(double s) const {
  double v = 0;
  for (const auto& h : harmonics_)
    v += h.cos_coeff.get_d() * std::cos(h.k * s) + h.sin_coeff.get_d() * std::sin(h.k * s);
  return v;
}

double TrigPotential::slope(double s) const {
  double v = 0;
  for (const auto& h : harmonics_)
    v += h.k * (h.sin_coeff.get_d() * std::cos(h.k * s) - h.cos_coeff.get_d() * std::sin(h.k * s));
  return v;
}

PhasePoly TrigPotential::as_poly(std::array<int, 3> wave) const {
  PhasePoly f;
  for (const auto& h : harmonics_) {
    std::array<int, 3> kw{h.k * wave[0], h.k * wave[1], h.k * wave[2]};
    f += PhasePoly::cos_wave(kw, h.cos_coeff);
    f += PhasePoly::sin_wave(kw, h.sin_coeff);
  }
  return f;
}

// ---------------------------------------------------------------------------
// ChainParams

ChainParams ChainParams::benchmark(const Rational& T1, const Rational& T3, const Rational& tau3) {
  ChainParams p;
  p.T1 = T1;
  p.T3 = T3;
  p.tau3 = tau3;
  return p;
}

void ChainParams::validate() const {
  if (sgn(gamma1) <= 0 || sgn(gamma3) <= 0) throw ConfigError("coupling rates gamma_b must be > 0");
  if (sgn(T1) <= 0 || sgn(T3) <= 0) throw ConfigError("temperatures T_b must be > 0");
  if (W1.is_zero() && W3.is_zero())
    throw ConfigError("at least one interaction potential W_b must be non-zero");
}

double ChainParams::noise_amplitude(int b) const {
  return std::sqrt(2.0 * gamma(b).get_d() * T(b).get_d());
}

nlohmann::json to_json(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  auto part = [](const mpz_class& z) -> nlohmann::json {
    if (z.fits_slong_p()) return z.get_si();
    return z.get_str();
  };
  return nlohmann::json::array({part(c.get_num()), part(c.get_den())});
}

Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    if (j.size() != 2) throw ConfigError("rational must be [num, den]");
    auto integer = [](const nlohmann::json& v) -> mpz_class {
      if (v.is_number_integer()) return mpz_class(v.get<long>());
      if (v.is_string()) return mpz_class(v.get<std::string>(), 10);
      throw ConfigError("rational [num, den] entries must be integers");
    };
    mpz_class den = integer(j[1]);
    if (den == 0) throw ConfigError("zero denominator");
    Rational r(integer(j[0]), den);
    r.canonicalize();
    return r;
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number_float()) return rational_from_double(j.get<double>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw ConfigError("expected a rational ([num, den], integer, or decimal)");
}

namespace {

nlohmann::json potential_json(const TrigPotential& pot) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : pot.harmonics())
    arr.push_back({h.k, to_json(h.cos_coeff), to_json(h.sin_coeff)});
  return arr;
}

TrigPotential potential_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + ": expected a list of [k, a, b]");
  std::vector<Harmonic> hs;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer())
      throw ConfigError(name + ": each harmonic must be [k, a, b] with integer k");
    hs.push_back({e[0].get<int>(), rational_from_json(e[1]), rational_from_json(e[2])});
  }
  return TrigPotential(std::move(hs));
}

}  // namespace

nlohmann::json to_json(const ChainParams& p) {
  return {{"gamma1", to_json(p.gamma1)}, {"gamma3", to_json(p.gamma3)},
          {"T1", to_json(p.T1)},         {"T3", to_json(p.T3)},
          {"tau1", to_json(p.tau1)},     {"tau3", to_json(p.tau3)},
          {"W1", potential_json(p.W1)},  {"W3", potential_json(p.W3)},
          {"U1", potential_json(p.U1)},  {"U2", potential_json(p.U2)},
          {"U3", potential_json(p.U3)}};
}

ChainParams chain_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model parameters must be a JSON object");
  static const std::set<std::string> known = {"gamma1", "gamma3", "T1", "T3", "tau1", "tau3",
                                              "W1",     "W3",     "U1", "U2", "U3"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown model key '" + key + "'");
  ChainParams p;
  auto rat = [&](const char* key, Rational& dst) {
    if (j.contains(key)) dst = rational_from_json(j.at(key));
  };
  auto pot = [&](const char* key, TrigPotential& dst) {
    if (j.contains(key)) dst = potential_from_json(j.at(key), key);
  };
  rat("gamma1", p.gamma1);
  rat("gamma3", p.gamma3);
  rat("T1", p.T1);
  rat("T3", p.T3);
  rat("tau1", p.tau1);
  rat("tau3", p.tau3);
  pot("W1", p.W1);
  pot("W3", p.W3);
  pot("U1", p.U1);
  pot("U2", p.U2);
  pot("U3", p.U3);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// numeric model

double hamiltonian(const State& x, const ChainParams& params) {
  double h = 0.5 * x.p.squaredNorm();
  for (int i = 1; i <= 3; ++i) h += params.U(i)(x.q[i - 1]);
  h += params.W1(x.q[1] - x.q[0]);
  h += params.W3(x.q[1] - x.q[2]);
  return h;
}

Forces forces(const State& x, const ChainParams& params) {
  double w1 = params.W1.slope(x.q[1] - x.q[0]);
  double w3 = params.W3.slope(x.q[1] - x.q[2]);
  Forces f;
  f.phi1 = w1 - params.U1.slope(x.q[0]);
  f.phi3 = w3 - params.U3.slope(x.q[2]);
  f.phi2 = -w1 - w3 - params.U2.slope(x.q[1]);
  return f;
}

Drift sde_drift(const State& x, const ChainParams& params) {
  Forces f = forces(x, params);
  Drift d;
  d.dq = x.p;
  d.dp[0] = f.phi1 + params.tau1.get_d() - params.gamma1.get_d() * x.p[0];
  d.dp[1] = f.phi2;
  d.dp[2] = f.phi3 + params.tau3.get_d() - params.gamma3.get_d() * x.p[2];
  d.amplitude1 = params.noise_amplitude(1);
  d.amplitude3 = params.noise_amplitude(3);
  return d;
}

// ---------------------------------------------------------------------------
// symbolic model

std::array<int, 3> bond_wave(int b) {
  return b == 1 ? std::array<int, 3>{-1, 1, 0} : std::array<int, 3>{0, 1, -1};
}

SymbolicModel::SymbolicModel(const ChainParams& params) {
  W1 = params.W1.as_poly(bond_wave(1));
  W3 = params.W3.as_poly(bond_wave(3));
  w1 = params.W1.derivative().as_poly(bond_wave(1));
  w3 = params.W3.derivative().as_poly(bond_wave(3));
  U1 = params.U1.as_poly({1, 0, 0});
  U2 = params.U2.as_poly({0, 1, 0});
  U3 = params.U3.as_poly({0, 0, 1});
  PhasePoly u1 = params.U1.derivative().as_poly({1, 0, 0});
  PhasePoly u2 = params.U2.derivative().as_poly({0, 1, 0});
  PhasePoly u3 = params.U3.derivative().as_poly({0, 0, 1});
  Phi2 = W1 + W3 + U2;
  phi1 = w1 - u1;
  phi3 = w3 - u3;
  phi2 = -(w1 + w3 + u2);
  H = U1 + U2 + U3 + W1 + W3;
  for (int i = 1; i <= 3; ++i) H += PhasePoly::momentum(i, 2) * ComplexRational(Rational(1, 2));
}

PhasePoly generator_apply(const PhasePoly& f, const ChainParams& params, const SymbolicModel& sym) {
  PhasePoly out;
  out += PhasePoly::momentum(1) * partial(f, Var::q1);
  out += PhasePoly::momentum(2) * partial(f, Var::q2);
  out += PhasePoly::momentum(3) * partial(f, Var::q3);
  out += sym.phi2 * partial(f, Var::p2);
  for (int b : {1, 3}) {
    Var pb = b == 1 ? Var::p1 : Var::p3;
    PhasePoly dfb = partial(f, pb);
    PhasePoly coeff = sym.phi(b) + PhasePoly::constant(params.tau(b)) -
                      PhasePoly::momentum(b) * ComplexRational(params.gamma(b));
    out += coeff * dfb;
    out += partial(dfb, pb) * ComplexRational(params.gamma(b) * params.T(b));
  }
  return out;
}

PhasePoly generator_apply(const PhasePoly& f, const ChainParams& params) {
  return generator_apply(f, params, SymbolicModel(params));
}

}  // namespace rotors
