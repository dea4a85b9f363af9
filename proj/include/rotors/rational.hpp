#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace rotors {

using Rational = mpq_class;

/// Exact complex number with rational real and imaginary parts.
struct ComplexRational {
  Rational re{0};
  Rational im{0};

  ComplexRational() = default;
  ComplexRational(Rational r) : re(std::move(r)) {}
  ComplexRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
  ComplexRational(long r) : re(r) {}

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  ComplexRational conj() const { return {re, -im}; }

  ComplexRational& operator+=(const ComplexRational& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  ComplexRational& operator-=(const ComplexRational& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  friend ComplexRational operator+(ComplexRational a, const ComplexRational& b) { return a += b; }
  friend ComplexRational operator-(ComplexRational a, const ComplexRational& b) { return a -= b; }
  friend ComplexRational operator-(const ComplexRational& a) { return {-a.re, -a.im}; }
  friend ComplexRational operator*(const ComplexRational& a, const ComplexRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend ComplexRational operator/(const ComplexRational& a, const ComplexRational& b) {
    Rational n = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
  }
  friend bool operator==(const ComplexRational& a, const ComplexRational& b) {
    return a.re == b.re && a.im == b.im;
  }
};

inline ComplexRational imag_unit() { return {Rational(0), Rational(1)}; }

/// Parses "3", "-3/4", "0.125", "1e-3" or "2.5e2" into an exact rational.
Rational parse_rational(std::string_view text);

/// Exact rational value of a finite double given through its shortest
/// round-trip decimal representation ("0.1" -> 1/10).
Rational rational_from_double(double value);

std::string to_string(const Rational& r);

}  // namespace rotors
