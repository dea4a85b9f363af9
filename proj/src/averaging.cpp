#include "rotors/averaging.hpp"

#include <sstream>

namespace rotors {

ItoForm& ItoForm::operator+=(const ItoForm& o) {
  drift += o.drift;
  diff1 += o.diff1;
  diff3 += o.diff3;
  return *this;
}

ItoForm& ItoForm::operator-=(const ItoForm& o) {
  drift -= o.drift;
  diff1 -= o.diff1;
  diff3 -= o.diff3;
  return *this;
}

// ---------------------------------------------------------------------------
// d+, d0, d-

ItoCalculus::ItoCalculus(ChainParams params) : params_(std::move(params)), sym_(params_) {}

PhasePoly ItoCalculus::dplus(const PhasePoly& f) const { return rotors::dplus(f); }

PhasePoly ItoCalculus::dminus(const PhasePoly& f) const { return sym_.phi2 * partial(f, Var::p2); }

PhasePoly ItoCalculus::transport(const PhasePoly& f) const {
  return PhasePoly::momentum(1) * partial(f, Var::q1) + PhasePoly::momentum(3) * partial(f, Var::q3);
}

ItoForm ItoCalculus::dzero(const PhasePoly& f) const {
  ItoForm out;
  out.drift = transport(f);
  for (int b : {1, 3}) {
    Var pb = b == 1 ? Var::p1 : Var::p3;
    PhasePoly dfb = partial(f, pb);
    PhasePoly coeff = sym_.phi(b) + PhasePoly::constant(params_.tau(b)) -
                      PhasePoly::momentum(b) * ComplexRational(params_.gamma(b));
    out.drift += coeff * dfb;
    out.drift += partial(dfb, pb) * ComplexRational(params_.gamma(b) * params_.T(b));
    out.diff(b) = std::move(dfb);
  }
  return out;
}

ItoForm ItoCalculus::ito(const PhasePoly& f) const {
  ItoForm out = dzero(f);
  out.drift += dplus(f);
  out.drift += dminus(f);
  return out;
}

PhasePoly dplus(const PhasePoly& f) { return PhasePoly::momentum(2) * partial(f, Var::q2); }

PhasePoly dminus(const PhasePoly& f, const ChainParams& params) {
  return ItoCalculus(params).dminus(f);
}

ItoForm dzero(const PhasePoly& f, const ChainParams& params) { return ItoCalculus(params).dzero(f); }

ItoForm ito(const PhasePoly& f, const ChainParams& params) { return ItoCalculus(params).ito(f); }

// ---------------------------------------------------------------------------
// averaging identity

namespace {

void check_degree(const PhasePoly& p, std::optional<int> bound, const char* what) {
  auto d = p.degree();
  if (d && bound && *d > *bound)
    throw std::logic_error(std::string("degree law violated by ") + what);
}

std::optional<int> shifted(std::optional<int> d, int by) {
  if (!d) return std::nullopt;
  return *d + by;
}

}  // namespace

AveragingStep averaging_step(const PhasePoly& f, const ItoCalculus& calc) {
  AveragingStep out;
  out.mean = q2_average(f);
  out.correction = q_transform(f);
  ItoForm d0 = calc.dzero(out.correction);
  PhasePoly dm = calc.dminus(out.correction);
  out.extra.drift = -(d0.drift + dm);
  out.extra.diff1 = -d0.diff1;
  out.extra.diff3 = -d0.diff3;

  auto deg = f.oscillatory_part().degree();
  check_degree(out.correction, shifted(deg, -1), "Qf");
  check_degree(d0.drift, shifted(deg, -1), "d0(Qf)");
  check_degree(dm, shifted(deg, -2), "d-(Qf)");
  return out;
}

AveragingStep averaging_step(const PhasePoly& f, const ChainParams& params) {
  return averaging_step(f, ItoCalculus(params));
}

// ---------------------------------------------------------------------------
// outer absorption

namespace {

struct ModeKey {
  int l, k1, k3;
  auto operator<=>(const ModeKey&) const = default;
};

std::string mode_name(const ModeKey& key) {
  std::ostringstream os;
  os << "mode (k1, k3) = (" << key.k1 << ", " << key.k3 << ") at p2^" << key.l;
  return os.str();
}

// Divides the polynomial in (p1, p3) of one Fourier mode by i (k1 p1 + k3 p3).
// Leading terms are eliminated in decreasing powers of p1 (or p3 when k1 = 0).
PhasePoly divide_by_transport(const ModeKey& key, std::map<std::pair<int, int>, ComplexRational> rest) {
  const ComplexRational i_k1(Rational(0), Rational(key.k1));
  const ComplexRational i_k3(Rational(0), Rational(key.k3));
  const bool lead_p1 = key.k1 != 0;
  PhasePoly quotient;
  while (!rest.empty()) {
    // The term with the largest leading exponent.
    auto it = rest.begin();
    for (auto jt = rest.begin(); jt != rest.end(); ++jt) {
      auto lead = [&](const auto& e) {
        return lead_p1 ? std::pair(e.first.first, e.first.second) : std::pair(e.first.second, e.first.first);
      };
      if (lead(*jt) > lead(*it)) it = jt;
    }
    auto [n1, n3] = it->first;
    ComplexRational c = it->second;
    int lead_exp = lead_p1 ? n1 : n3;
    if (lead_exp == 0)
      throw NotDivisible("averaged drift not absorbable: " + mode_name(key) +
                         " is not divisible by the transport symbol");
    int q1 = lead_p1 ? n1 - 1 : n1;
    int q3 = lead_p1 ? n3 : n3 - 1;
    ComplexRational qc = c / (lead_p1 ? i_k1 : i_k3);
    quotient.add_term({q1, key.l, q3, key.k1, 0, key.k3}, qc);
    // rest -= qc p1^q1 p3^q3 * i (k1 p1 + k3 p3)
    auto sub = [&](std::pair<int, int> e, const ComplexRational& v) {
      auto& slot = rest[e];
      slot = slot - v;
      if (slot.is_zero()) rest.erase(e);
    };
    if (key.k1 != 0) sub({q1 + 1, q3}, qc * i_k1);
    if (key.k3 != 0) sub({q1, q3 + 1}, qc * i_k3);
  }
  return quotient;
}

}  // namespace

Absorption outer_absorb(const PhasePoly& g, const ItoCalculus& calc) {
  std::map<ModeKey, std::map<std::pair<int, int>, ComplexRational>> modes;
  Absorption out;
  for (const auto& [m, c] : g.terms()) {
    if (m.k2 != 0) throw PreconditionError("outer_absorb needs a q2-independent argument");
    if (m.k1 == 0 && m.k3 == 0) {
      out.genuine.add_term(m, c);
      continue;
    }
    modes[{m.l, m.k1, m.k3}][{m.n1, m.n3}] = c;
  }
  if (modes.empty()) return out;

  PhasePoly psi;
  for (auto& [key, poly] : modes) psi += divide_by_transport(key, std::move(poly));

  ItoForm d0 = calc.dzero(psi);
  PhasePoly moved = calc.transport(psi);
  if (moved + out.genuine != g) throw std::logic_error("outer_absorb: transport does not reproduce g");
  out.remainder.drift = -(d0.drift - moved) - calc.dminus(psi);
  out.remainder.diff1 = -d0.diff1;
  out.remainder.diff3 = -d0.diff3;
  out.absorbed = std::move(psi);
  return out;
}

Absorption outer_absorb(const PhasePoly& g, const ChainParams& params) {
  return outer_absorb(g, ItoCalculus(params));
}

// ---------------------------------------------------------------------------
// the elimination loop

bool is_genuine(const Monomial& m) { return m.k1 == 0 && m.k2 == 0 && m.k3 == 0; }

namespace {

PhasePoly non_genuine(const PhasePoly& f) {
  PhasePoly out;
  for (const auto& [m, c] : f.terms())
    if (!is_genuine(m)) out.add_term(m, c);
  return out;
}

std::string dump(const PhasePoly& outstanding) {
  return "outstanding drift terms: " + to_string(outstanding);
}

}  // namespace

EffectiveDynamics average_p2(const ChainParams& params, const AveragingOptions& options) {
  params.validate();
  if (options.target_degree > -4) throw PreconditionError("target_degree must be <= -4");
  ItoCalculus calc(params);

  EffectiveDynamics eff;
  ItoForm state;  // Ito form of d(p2 + F)
  state.drift = calc.model().phi2;

  for (;;) {
    PhasePoly pending = non_genuine(state.drift);
    auto top = pending.degree();
    if (!top || *top <= options.target_degree) break;
    if (eff.passes == options.max_passes)
      throw NonTermination("averaging did not terminate after " + std::to_string(options.max_passes) +
                           " passes; " + dump(pending));
    ++eff.passes;

    const int d = *top;
    PhasePoly level = state.drift.degree_part(d);

    PhasePoly oscillating = level.oscillatory_part();
    if (!oscillating.is_zero()) {
      AveragingStep step = averaging_step(oscillating, calc);
      eff.F -= step.correction;
      state.drift -= oscillating;
      state += step.extra;
    }

    PhasePoly averaged = q2_average(state.drift.degree_part(d));
    eff.averaged_by_degree[d] = averaged;
    Absorption abs;
    try {
      abs = outer_absorb(averaged, calc);
    } catch (const NotDivisible& e) {
      throw NotDivisible(std::string(e.what()) + " (while eliminating degree " + std::to_string(d) + ")");
    }
    if (abs.absorbed) {
      eff.F -= *abs.absorbed;
      state.drift -= averaged - abs.genuine;
      state += abs.remainder;
    }
  }

  eff.a = state.drift;
  eff.sigma1 = state.diff1;
  eff.sigma3 = state.diff3;

  if (calc.ito(PhasePoly::momentum(2) + eff.F) != state)
    throw std::logic_error("average_p2: accumulated Ito form disagrees with ito(p2 + F)");

  PhasePoly residual = non_genuine(eff.a);
  eff.residual_drift_degree = residual.degree().value_or(options.target_degree);
  std::optional<int> diff_degree;
  for (int b : {1, 3}) {
    auto deg = (eff.sigma(b) - eff.sigma(b).degree_part(-2)).degree();
    if (deg && (!diff_degree || *deg > *diff_degree)) diff_degree = deg;
  }
  eff.residual_diff_degree = diff_degree.value_or(options.target_degree);

  eff.alpha = -eff.a.coeff({0, -3, 0, 0, 0, 0}).re;
  return eff;
}

// ---------------------------------------------------------------------------
// output

nlohmann::json to_json(const ItoForm& form) {
  return {{"drift", to_json(form.drift)}, {"diff1", to_json(form.diff1)}, {"diff3", to_json(form.diff3)}};
}

nlohmann::json to_json(const EffectiveDynamics& eff) {
  nlohmann::json averaged = nlohmann::json::object();
  for (const auto& [d, poly] : eff.averaged_by_degree) averaged[std::to_string(d)] = to_json(poly);
  return {{"alpha", to_json(eff.alpha)},
          {"alpha_decimal", eff.alpha.get_d()},
          {"F", to_json(eff.F)},
          {"a", to_json(eff.a)},
          {"sigma1", to_json(eff.sigma1)},
          {"sigma3", to_json(eff.sigma3)},
          {"residual_drift_degree", eff.residual_drift_degree},
          {"residual_diff_degree", eff.residual_diff_degree},
          {"averaged_by_degree", averaged},
          {"passes", eff.passes}};
}

std::string report(const EffectiveDynamics& eff) {
  std::ostringstream os;
  os << "alpha = " << to_string(eff.alpha) << " (" << eff.alpha.get_d() << ")\n";
  os << "F leading (p2^-1):      " << to_string(eff.F.degree_part(-1)) << "\n";
  os << "a leading (p2^-3):      " << to_string(eff.a.degree_part(-3)) << "\n";
  os << "sigma1 leading (p2^-2): " << to_string(eff.sigma1.degree_part(-2)) << "\n";
  os << "sigma3 leading (p2^-2): " << to_string(eff.sigma3.degree_part(-2)) << "\n";
  os << "residual drift degree:  " << eff.residual_drift_degree << "\n";
  os << "residual diff degree:   " << eff.residual_diff_degree << "\n";
  os << "passes:                 " << eff.passes << "\n";
  return os.str();
}

}  // namespace rotors
