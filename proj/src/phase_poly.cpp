#include "rotors/phase_poly.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>

namespace rotors {

// ---------------------------------------------------------------------------
// rationals

Rational parse_rational(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw ConfigError("empty rational literal");
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      Rational r(s, 10);
      r.canonicalize();
      if (r.get_den() == 0) throw ConfigError("zero denominator in '" + s + "'");
      return r;
    }
    std::string mantissa = s;
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
      mantissa = s.substr(0, e);
      exponent = std::stol(s.substr(e + 1));
    }
    bool negative = false;
    if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
      negative = mantissa[0] == '-';
      mantissa.erase(0, 1);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_dot = false;
    for (char c : mantissa) {
      if (c == '.') {
        if (seen_dot) throw ConfigError("malformed number '" + s + "'");
        seen_dot = true;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
        if (seen_dot) ++frac_digits;
      } else {
        throw ConfigError("malformed number '" + s + "'");
      }
    }
    if (digits.empty()) throw ConfigError("malformed number '" + s + "'");
    mpz_class num(digits, 10);
    long scale = exponent - frac_digits;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    Rational r = scale >= 0 ? Rational(num * pow10) : Rational(num, pow10);
    r.canonicalize();
    return negative ? Rational(-r) : r;
  } catch (const std::invalid_argument&) {
    throw ConfigError("malformed number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("malformed number '" + s + "'");
  }
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw ConfigError("non-finite number where a rational is expected");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw ConfigError("cannot format number");
  return parse_rational(std::string_view(buf, static_cast<std::size_t>(end - buf)));
}

std::string to_string(const Rational& r) { return r.get_str(); }

// ---------------------------------------------------------------------------
// construction

PhasePoly PhasePoly::constant(const Rational& c) {
  PhasePoly f;
  f.add_term(Monomial{}, ComplexRational(c));
  return f;
}

PhasePoly PhasePoly::term(const Monomial& m, const ComplexRational& c) {
  PhasePoly f;
  f.add_term(m, c);
  return f;
}

PhasePoly PhasePoly::momentum(int index, int power) {
  Monomial m;
  switch (index) {
    case 1:
      if (power < 0) throw PreconditionError("negative power of p1");
      m.n1 = power;
      break;
    case 2:
      m.l = power;
      break;
    case 3:
      if (power < 0) throw PreconditionError("negative power of p3");
      m.n3 = power;
      break;
    default:
      throw PreconditionError("momentum index must be 1, 2 or 3");
  }
  return term(m, ComplexRational(1));
}

PhasePoly PhasePoly::cos_wave(std::array<int, 3> k, const Rational& c) {
  if (k == std::array<int, 3>{0, 0, 0}) return constant(c);
  Rational half = c / 2;
  PhasePoly f;
  f.add_term({0, 0, 0, k[0], k[1], k[2]}, ComplexRational(half));
  f.add_term({0, 0, 0, -k[0], -k[1], -k[2]}, ComplexRational(half));
  return f;
}

PhasePoly PhasePoly::sin_wave(std::array<int, 3> k, const Rational& c) {
  if (k == std::array<int, 3>{0, 0, 0}) return {};
  // sin x = (e^{ix} - e^{-ix}) / (2i) = -i/2 e^{ix} + i/2 e^{-ix}
  Rational half = c / 2;
  PhasePoly f;
  f.add_term({0, 0, 0, k[0], k[1], k[2]}, ComplexRational(Rational(0), -half));
  f.add_term({0, 0, 0, -k[0], -k[1], -k[2]}, ComplexRational(Rational(0), half));
  return f;
}

// ---------------------------------------------------------------------------
// inspection

std::optional<int> PhasePoly::degree() const {
  if (terms_.empty()) return std::nullopt;
  int d = std::numeric_limits<int>::min();
  for (const auto& [m, c] : terms_) d = std::max(d, m.l);
  return d;
}

std::optional<int> PhasePoly::min_degree() const {
  if (terms_.empty()) return std::nullopt;
  int d = std::numeric_limits<int>::max();
  for (const auto& [m, c] : terms_) d = std::min(d, m.l);
  return d;
}

int PhasePoly::outer_momentum_degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.n1 + m.n3);
  return d;
}

ComplexRational PhasePoly::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? ComplexRational() : it->second;
}

void PhasePoly::add_term(const Monomial& m, const ComplexRational& c) {
  if (c.is_zero()) return;
  if (m.n1 < 0 || m.n3 < 0) throw PreconditionError("negative power of p1 or p3");
  ComplexRational cc = c;
  cc.re.canonicalize();
  cc.im.canonicalize();
  auto [it, inserted] = terms_.try_emplace(m, cc);
  if (!inserted) {
    it->second += cc;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

namespace {

template <typename Pred>
PhasePoly filter(const PhasePoly& f, Pred pred) {
  PhasePoly out;
  for (const auto& [m, c] : f.terms())
    if (pred(m)) out.add_term(m, c);
  return out;
}

bool is_positive_wave(const Monomial& m) {
  if (m.k1 != 0) return m.k1 > 0;
  if (m.k2 != 0) return m.k2 > 0;
  return m.k3 > 0;
}

bool is_zero_wave(const Monomial& m) { return m.k1 == 0 && m.k2 == 0 && m.k3 == 0; }

}  // namespace

PhasePoly PhasePoly::degree_part(int l) const {
  return filter(*this, [l](const Monomial& m) { return m.l == l; });
}

PhasePoly PhasePoly::above_degree(int l) const {
  return filter(*this, [l](const Monomial& m) { return m.l > l; });
}

PhasePoly PhasePoly::oscillatory_part() const {
  return filter(*this, [](const Monomial& m) { return m.k2 != 0; });
}

PhasePoly PhasePoly::angle_free_part() const { return filter(*this, is_zero_wave); }

PhasePoly PhasePoly::conj() const {
  PhasePoly out;
  for (const auto& [m, c] : terms_) out.add_term(m.conj(), c.conj());
  return out;
}

PhasePoly PhasePoly::symmetrized() const {
  PhasePoly out = *this + conj();
  out *= ComplexRational(Rational(1, 2));
  return out;
}

bool PhasePoly::is_hermitian() const {
  for (const auto& [m, c] : terms_) {
    if (!(coeff(m.conj()) == c.conj())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// arithmetic

PhasePoly& PhasePoly::operator+=(const PhasePoly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

PhasePoly& PhasePoly::operator-=(const PhasePoly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

PhasePoly& PhasePoly::operator*=(const PhasePoly& o) {
  PhasePoly out;
  for (const auto& [a, ca] : terms_) {
    for (const auto& [b, cb] : o.terms_) {
      Monomial m{a.n1 + b.n1, a.l + b.l, a.n3 + b.n3, a.k1 + b.k1, a.k2 + b.k2, a.k3 + b.k3};
      out.add_term(m, ca * cb);
    }
  }
  terms_ = std::move(out.terms_);
  return *this;
}

PhasePoly& PhasePoly::operator*=(const ComplexRational& c) {
  if (c.is_zero()) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, coeff] : terms_) coeff = coeff * c;
  return *this;
}

PhasePoly add(const PhasePoly& f, const PhasePoly& g) { return f + g; }
PhasePoly mul(const PhasePoly& f, const PhasePoly& g) { return f * g; }

// ---------------------------------------------------------------------------
// calculus

PhasePoly partial(const PhasePoly& f, Var var) {
  PhasePoly out;
  for (const auto& [m, c] : f.terms()) {
    Monomial d = m;
    switch (var) {
      case Var::q1:
      case Var::q2:
      case Var::q3: {
        int k = var == Var::q1 ? m.k1 : var == Var::q2 ? m.k2 : m.k3;
        if (k == 0) continue;
        out.add_term(d, c * ComplexRational(Rational(0), Rational(k)));
        break;
      }
      case Var::p1:
        if (m.n1 == 0) continue;
        d.n1 -= 1;
        out.add_term(d, c * ComplexRational(m.n1));
        break;
      case Var::p2:
        if (m.l == 0) continue;
        d.l -= 1;
        out.add_term(d, c * ComplexRational(m.l));
        break;
      case Var::p3:
        if (m.n3 == 0) continue;
        d.n3 -= 1;
        out.add_term(d, c * ComplexRational(m.n3));
        break;
    }
  }
  return out;
}

PhasePoly q2_average(const PhasePoly& f) {
  return filter(f, [](const Monomial& m) { return m.k2 == 0; });
}

PhasePoly lplus_inverse(const PhasePoly& g) {
  PhasePoly out;
  for (const auto& [m, c] : g.terms()) {
    if (m.k2 == 0) {
      std::ostringstream msg;
      msg << "lplus_inverse: term with k2 = 0 (p-exponents " << m.n1 << "," << m.l << "," << m.n3
          << ", wave " << m.k1 << ",0," << m.k3 << ")";
      throw NonZeroMean(msg.str());
    }
    Monomial d = m;
    d.l -= 1;
    out.add_term(d, c / ComplexRational(Rational(0), Rational(m.k2)));
  }
  return out;
}

PhasePoly q_transform(const PhasePoly& f) { return lplus_inverse(f.oscillatory_part()); }

// ---------------------------------------------------------------------------
// evaluation

std::complex<double> PhasePoly::evaluate_complex(const State& x) const {
  auto momentum = [&x](const Monomial& m) {
    return std::pow(x.p[0], m.n1) * std::pow(x.p[1], m.l) * std::pow(x.p[2], m.n3);
  };
  auto angle = [&x](const Monomial& m) {
    return double(m.k1) * x.q[0] + double(m.k2) * x.q[1] + double(m.k3) * x.q[2];
  };
  if (x.p[1] == 0.0) {
    for (const auto& [m, c] : terms_)
      if (m.l < 0) throw PoleAtZero("evaluation at p2 = 0 of a term with a negative power of p2");
  }
  double re = 0.0;
  double im = 0.0;
  for (const auto& [m, c] : terms_) {
    double cr = c.re.get_d();
    double ci = c.im.get_d();
    double mom = momentum(m);
    if (is_zero_wave(m)) {
      re += cr * mom;
      im += ci * mom;
      continue;
    }
    if (!is_positive_wave(m) && terms_.contains(m.conj())) continue;  // handled with its partner
    double th = angle(m);
    double cs = std::cos(th);
    double sn = std::sin(th);
    double pair_re = cr * cs - ci * sn;
    double pair_im = cr * sn + ci * cs;
    if (auto it = terms_.find(m.conj()); it != terms_.end() && is_positive_wave(m)) {
      double dr = it->second.re.get_d();
      double di = it->second.im.get_d();
      // partner evaluated at -theta: cos even, sin odd
      pair_re += dr * cs + di * sn;
      pair_im += -dr * sn + di * cs;
    }
    re += mom * pair_re;
    im += mom * pair_im;
  }
  return {re, im};
}

double PhasePoly::evaluate(const State& x, double prefactor) const {
  return prefactor * evaluate_complex(x).real();
}

NumericPoly::NumericPoly(const PhasePoly& f) {
  terms_.reserve(f.size());
  for (const auto& [m, c] : f.terms()) {
    terms_.push_back({m.n1, m.l, m.n3, m.k1, m.k2, m.k3, c.re.get_d(), c.im.get_d()});
    if (m.l < 0) has_negative_powers_ = true;
  }
}

// ---------------------------------------------------------------------------
// presentation

namespace {

std::string wave_string(const Monomial& m) {
  std::ostringstream os;
  bool first = true;
  auto put = [&](int k, const char* name) {
    if (k == 0) return;
    if (k < 0) {
      os << (first ? "-" : " - ");
    } else if (!first) {
      os << " + ";
    }
    if (std::abs(k) != 1) os << std::abs(k);
    os << name;
    first = false;
  };
  put(m.k2, "q2");
  put(m.k1, "q1");
  put(m.k3, "q3");
  return os.str();
}

std::string momentum_string(const Monomial& m) {
  std::ostringstream os;
  auto put = [&](int e, const char* name) {
    if (e == 0) return;
    os << "*" << name;
    if (e != 1) os << "^" << e;
  };
  put(m.n1, "p1");
  put(m.l, "p2");
  put(m.n3, "p3");
  return os.str();
}

// Orientation used for printing: leading non-zero entry among (k2, k1, k3)
// positive, so that cos(q2 - q1) prints as such.
bool print_positive(const Monomial& m) {
  if (m.k2 != 0) return m.k2 > 0;
  if (m.k1 != 0) return m.k1 > 0;
  return m.k3 > 0;
}

}  // namespace

std::string to_string(const PhasePoly& f) {
  if (f.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const Rational& coeff, const std::string& body) {
    if (sgn(coeff) == 0) return;
    Rational a = abs(coeff);
    if (first) {
      if (sgn(coeff) < 0) os << "-";
    } else {
      os << (sgn(coeff) < 0 ? " - " : " + ");
    }
    os << a.get_str() << body;
    first = false;
  };
  for (const auto& [m, c] : f.terms()) {
    std::string mom = momentum_string(m);
    if (is_zero_wave(m)) {
      emit(c.re, mom);
      if (sgn(c.im) != 0) emit(c.im, "*i" + mom);
      continue;
    }
    if (!print_positive(m)) {
      if (f.terms().contains(m.conj())) continue;
    }
    ComplexRational partner = f.coeff(m.conj());
    if (partner == c.conj()) {
      // c e^{ix} + conj(c) e^{-ix} = 2 Re c cos x - 2 Im c sin x
      std::string w = wave_string(print_positive(m) ? m : m.conj());
      Rational cre = 2 * c.re;
      Rational cim = print_positive(m) ? Rational(-2 * c.im) : Rational(2 * c.im);
      emit(cre, "*cos(" + w + ")" + mom);
      emit(cim, "*sin(" + w + ")" + mom);
    } else {
      emit(c.re, "*exp(i(" + wave_string(m) + "))" + mom);
      if (sgn(c.im) != 0) emit(c.im, "*i*exp(i(" + wave_string(m) + "))" + mom);
      if (!partner.is_zero() && print_positive(m)) {
        Monomial mc = m.conj();
        emit(partner.re, "*exp(i(" + wave_string(mc) + "))" + mom);
        if (sgn(partner.im) != 0) emit(partner.im, "*i*exp(i(" + wave_string(mc) + "))" + mom);
      }
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// serialisation

namespace {

nlohmann::json integer_json(const mpz_class& z) {
  if (z.fits_slong_p()) return z.get_si();
  return z.get_str();
}

mpz_class integer_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return mpz_class(j.get<long>());
  if (j.is_string()) return mpz_class(j.get<std::string>(), 10);
  throw ConfigError("expected an integer or an integer string");
}

}  // namespace

nlohmann::json to_json(const PhasePoly& f) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, c] : f.terms()) {
    arr.push_back({{"n1", m.n1},
                   {"l", m.l},
                   {"n3", m.n3},
                   {"k1", m.k1},
                   {"k2", m.k2},
                   {"k3", m.k3},
                   {"re_num", integer_json(c.re.get_num())},
                   {"re_den", integer_json(c.re.get_den())},
                   {"im_num", integer_json(c.im.get_num())},
                   {"im_den", integer_json(c.im.get_den())}});
  }
  return arr;
}

PhasePoly phase_poly_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("PhasePoly JSON must be an array of terms");
  PhasePoly f;
  for (const auto& t : j) {
    Monomial m{t.at("n1").get<int>(), t.at("l").get<int>(), t.at("n3").get<int>(),
               t.at("k1").get<int>(), t.at("k2").get<int>(), t.at("k3").get<int>()};
    Rational re(integer_from_json(t.at("re_num")), integer_from_json(t.at("re_den")));
    Rational im(integer_from_json(t.at("im_num")), integer_from_json(t.at("im_den")));
    re.canonicalize();
    im.canonicalize();
    f.add_term(m, ComplexRational(re, im));
  }
  return f;
}

}  // namespace rotors
