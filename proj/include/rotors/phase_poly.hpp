#pragma once

// Exact algebra of phase-space functions of the form
//
//   sum c * p1^n1 * p2^l * p3^n3 * exp(i (k1 q1 + k2 q2 + k3 q3))
//
// with complex rational c, n1, n3 >= 0 and l of any sign. The class is closed
// under products, partial derivatives, q2-averaging and the right inverse of
// p2 d/dq2 on zero-mean functions, which is all the averaging machinery needs.

#include "rotors/errors.hpp"
#include "rotors/rational.hpp"
#include "rotors/state.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rotors {

enum class Var { q1, q2, q3, p1, p2, p3 };

/// Momentum exponents and Fourier mode of one term.
struct Monomial {
  int n1 = 0;
  int l = 0;
  int n3 = 0;
  int k1 = 0;
  int k2 = 0;
  int k3 = 0;

  auto operator<=>(const Monomial&) const = default;

  std::array<int, 3> wave() const { return {k1, k2, k3}; }
  Monomial conj() const { return {n1, l, n3, -k1, -k2, -k3}; }
  bool same_momentum(const Monomial& o) const { return n1 == o.n1 && l == o.l && n3 == o.n3; }
};

class PhasePoly {
 public:
  using TermMap = std::map<Monomial, ComplexRational>;

  PhasePoly() = default;

  static PhasePoly constant(const Rational& c);
  static PhasePoly term(const Monomial& m, const ComplexRational& c);
  /// p_i^power for i in {1, 2, 3}; negative powers allowed for p2 only.
  static PhasePoly momentum(int index, int power = 1);
  /// c * cos(k . q)
  static PhasePoly cos_wave(std::array<int, 3> k, const Rational& c = 1);
  /// c * sin(k . q)
  static PhasePoly sin_wave(std::array<int, 3> k, const Rational& c = 1);

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Largest p2-exponent present; nullopt for the zero polynomial.
  std::optional<int> degree() const;
  /// Smallest p2-exponent present; nullopt for the zero polynomial.
  std::optional<int> min_degree() const;
  /// Largest total power of p1 and p3 present (0 for the zero polynomial).
  int outer_momentum_degree() const;

  /// Coefficient of a monomial (zero when absent).
  ComplexRational coeff(const Monomial& m) const;
  void add_term(const Monomial& m, const ComplexRational& c);

  /// Terms whose p2-exponent equals l.
  PhasePoly degree_part(int l) const;
  /// Terms whose p2-exponent is strictly above l.
  PhasePoly above_degree(int l) const;
  /// Terms with k2 != 0.
  PhasePoly oscillatory_part() const;
  /// Terms depending on no angle at all.
  PhasePoly angle_free_part() const;

  PhasePoly conj() const;
  /// (f + conj f) / 2: forces exact Hermitian symmetry.
  PhasePoly symmetrized() const;
  /// The term at wave -k carries the conjugate coefficient of the term at k.
  bool is_hermitian() const;

  PhasePoly& operator+=(const PhasePoly& o);
  PhasePoly& operator-=(const PhasePoly& o);
  PhasePoly& operator*=(const PhasePoly& o);
  PhasePoly& operator*=(const ComplexRational& c);

  friend PhasePoly operator+(PhasePoly a, const PhasePoly& b) { return a += b; }
  friend PhasePoly operator-(PhasePoly a, const PhasePoly& b) { return a -= b; }
  friend PhasePoly operator*(PhasePoly a, const PhasePoly& b) { return a *= b; }
  friend PhasePoly operator*(PhasePoly a, const ComplexRational& c) { return a *= c; }
  friend PhasePoly operator*(const ComplexRational& c, PhasePoly a) { return a *= c; }
  friend PhasePoly operator-(PhasePoly a) {
    a *= ComplexRational(-1);
    return a;
  }
  friend bool operator==(const PhasePoly& a, const PhasePoly& b) { return a.terms_ == b.terms_; }

  /// Real part of the value at x. Throws PoleAtZero if p2 = 0 and some l < 0.
  double evaluate(const State& x, double prefactor = 1.0) const;
  /// Full complex value, accumulated over conjugate pairs so that a Hermitian
  /// polynomial yields an imaginary part of exactly zero.
  std::complex<double> evaluate_complex(const State& x) const;

 private:
  TermMap terms_;
};

PhasePoly add(const PhasePoly& f, const PhasePoly& g);
PhasePoly mul(const PhasePoly& f, const PhasePoly& g);

/// Exact partial derivative.
PhasePoly partial(const PhasePoly& f, Var var);

/// Keeps exactly the k2 = 0 terms.
PhasePoly q2_average(const PhasePoly& f);

/// Right inverse of p2 d/dq2 on zero-mean functions, normalised to zero mean.
/// Throws NonZeroMean if some term has k2 = 0.
PhasePoly lplus_inverse(const PhasePoly& g);

/// Q f = lplus_inverse(f - <f>).
PhasePoly q_transform(const PhasePoly& f);

/// Human readable form using cos / sin of the angle combinations.
std::string to_string(const PhasePoly& f);

/// Stable serialisation: array of {n1, l, n3, k1, k2, k3, re_num, re_den,
/// im_num, im_den}, sorted by monomial. Integers are emitted as JSON strings
/// when they do not fit a signed 64-bit value.
nlohmann::json to_json(const PhasePoly& f);
PhasePoly phase_poly_from_json(const nlohmann::json& j);

/// Floating-point image of a PhasePoly for repeated evaluation.
class NumericPoly {
 public:
  struct Term {
    int n1, l, n3;
    int k1, k2, k3;
    double re, im;
  };

  NumericPoly() = default;
  explicit NumericPoly(const PhasePoly& f);

  const std::vector<Term>& terms() const { return terms_; }
  bool has_negative_powers() const { return has_negative_powers_; }

  /// Real part of the value at x.
  template <typename Scalar>
  Scalar operator()(const StateT<Scalar>& x) const {
    using std::cos;
    using std::pow;
    using std::sin;
    if (has_negative_powers_ && x.p[1] == Scalar(0)) {
      throw PoleAtZero("evaluation at p2 = 0 of a term with a negative power of p2");
    }
    Scalar sum(0);
    for (const auto& t : terms_) {
      Scalar mom = int_pow(x.p[0], t.n1) * int_pow(x.p[1], t.l) * int_pow(x.p[2], t.n3);
      Scalar angle = Scalar(t.k1) * x.q[0] + Scalar(t.k2) * x.q[1] + Scalar(t.k3) * x.q[2];
      Scalar real_part;
      if (t.k1 == 0 && t.k2 == 0 && t.k3 == 0) {
        real_part = Scalar(t.re);
      } else {
        real_part = Scalar(t.re) * cos(angle) - Scalar(t.im) * sin(angle);
      }
      sum += mom * real_part;
    }
    return sum;
  }

 private:
  template <typename Scalar>
  static Scalar int_pow(Scalar base, int e) {
    if (e == 0) return Scalar(1);
    bool invert = e < 0;
    unsigned n = static_cast<unsigned>(invert ? -e : e);
    Scalar result(1);
    while (n) {
      if (n & 1u) result *= base;
      base *= base;
      n >>= 1u;
    }
    return invert ? Scalar(1) / result : result;
  }

  std::vector<Term> terms_;
  bool has_negative_powers_ = false;
};

}  // namespace rotors
