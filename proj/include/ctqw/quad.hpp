#pragma once

#include <compare>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

// Exact arithmetic in Z[sqrt2] and its fraction field.  Every quantity that
// decides a yes/no question elsewhere in the library (eigenvalue equality,
// rationality of eigenvalue-difference ratios, orthogonality sums) is computed
// here without rounding.  Coefficients are 128-bit and every operation checks
// for overflow; silent wraparound would turn a wrong answer into a "certified"
// one, so overflow throws instead.

namespace ctqw {

using Int = __int128;

class OverflowError : public std::overflow_error {
 public:
  explicit OverflowError(const std::string& msg) : std::overflow_error(msg) {}
};

inline Int checked_add(Int x, Int y) {
  Int r;
  if (__builtin_add_overflow(x, y, &r)) throw OverflowError("exact integer add overflowed 128 bits");
  return r;
}

inline Int checked_sub(Int x, Int y) {
  Int r;
  if (__builtin_sub_overflow(x, y, &r)) throw OverflowError("exact integer subtract overflowed 128 bits");
  return r;
}

inline Int checked_mul(Int x, Int y) {
  Int r;
  if (__builtin_mul_overflow(x, y, &r)) throw OverflowError("exact integer multiply overflowed 128 bits");
  return r;
}

inline Int checked_neg(Int x) { return checked_sub(Int{0}, x); }

// std::gcd rejects __int128 under strict -std=c++20 (not an integral type
// there), so spell out Euclid for nonnegative arguments.
inline Int gcd_nonneg(Int x, Int y) {
  while (y != 0) {
    Int r = x % y;
    x = y;
    y = r;
  }
  return x;
}

inline std::string int_to_string(Int v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  std::string digits;
  // Peel digits from |v| without negating v first: negation of the minimum
  // value would itself overflow.
  while (v != 0) {
    int d = static_cast<int>(v % 10);
    if (d < 0) d = -d;
    digits.push_back(static_cast<char>('0' + d));
    v /= 10;
  }
  if (neg) digits.push_back('-');
  return std::string(digits.rbegin(), digits.rend());
}

// a + b*sqrt(2) with integer a, b.  The representation is unique because
// sqrt(2) is irrational, so equality is coefficient equality.
struct Quad {
  Int a = 0;
  Int b = 0;

  constexpr Quad() = default;
  constexpr Quad(Int a_, Int b_) : a(a_), b(b_) {}
  static constexpr Quad integer(Int n) { return Quad{n, 0}; }
  static constexpr Quad sqrt2() { return Quad{0, 1}; }

  bool is_zero() const { return a == 0 && b == 0; }
  bool is_rational() const { return b == 0; }

  friend Quad operator+(const Quad& x, const Quad& y) {
    return Quad{checked_add(x.a, y.a), checked_add(x.b, y.b)};
  }
  friend Quad operator-(const Quad& x, const Quad& y) {
    return Quad{checked_sub(x.a, y.a), checked_sub(x.b, y.b)};
  }
  friend Quad operator-(const Quad& x) { return Quad{checked_neg(x.a), checked_neg(x.b)}; }
  // (a1 + b1 s)(a2 + b2 s) = a1 a2 + 2 b1 b2 + (a1 b2 + a2 b1) s
  friend Quad operator*(const Quad& x, const Quad& y) {
    Int a = checked_add(checked_mul(x.a, y.a), checked_mul(Int{2}, checked_mul(x.b, y.b)));
    Int b = checked_add(checked_mul(x.a, y.b), checked_mul(x.b, y.a));
    return Quad{a, b};
  }
  Quad& operator+=(const Quad& y) { return *this = *this + y; }
  Quad& operator-=(const Quad& y) { return *this = *this - y; }
  Quad& operator*=(const Quad& y) { return *this = *this * y; }

  friend bool operator==(const Quad& x, const Quad& y) { return x.a == y.a && x.b == y.b; }

  // Exact sign of a + b*sqrt2.  When a and b disagree in sign the comparison
  // reduces to a^2 vs 2 b^2; those are never equal for nonzero integers.
  int sign() const {
    if (a == 0 && b == 0) return 0;
    if (b == 0) return a > 0 ? 1 : -1;
    if (a == 0) return b > 0 ? 1 : -1;
    if ((a > 0) == (b > 0)) return a > 0 ? 1 : -1;
    Int a2 = checked_mul(a, a);
    Int b2 = checked_mul(Int{2}, checked_mul(b, b));
    if (a > 0) return a2 > b2 ? 1 : -1;  // b < 0
    return b2 > a2 ? 1 : -1;             // a < 0, b > 0
  }

  friend std::strong_ordering operator<=>(const Quad& x, const Quad& y) {
    int s = (x - y).sign();
    if (s < 0) return std::strong_ordering::less;
    if (s > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  double to_double() const {
    return static_cast<double>(a) + static_cast<double>(b) * std::numbers::sqrt2;
  }
};

// Whether d1/d2 is rational.  With d1 = a1 + b1 s and d2 = a2 + b2 s != 0 the
// quotient is rational iff the coefficient vectors are proportional, i.e.
// a1*b2 == b1*a2.  Exact, no division.
inline bool ratio_is_rational(const Quad& d1, const Quad& d2) {
  if (d2.is_zero()) throw std::invalid_argument("ratio_is_rational: zero denominator");
  return checked_mul(d1.a, d2.b) == checked_mul(d1.b, d2.a);
}

// Rendering.  The default form uses the radical glyph ("2-3√2"); the
// ASCII form is fully explicit ("2-3*sqrt2") so it survives any terminal.
inline std::string to_string(const Quad& q, bool ascii = false) {
  if (ascii) {
    std::string s = int_to_string(q.a);
    s += q.b < 0 ? '-' : '+';
    Int ab = q.b < 0 ? checked_neg(q.b) : q.b;
    s += int_to_string(ab);
    s += "*sqrt2";
    return s;
  }
  if (q.a == 0 && q.b == 0) return "0";
  std::string s;
  if (q.a != 0) s += int_to_string(q.a);
  if (q.b != 0) {
    Int ab = q.b;
    if (q.b < 0) {
      s += '-';
      ab = checked_neg(ab);
    } else if (q.a != 0) {
      s += '+';
    }
    if (ab != 1) s += int_to_string(ab);
    s += "√2";
  }
  return s;
}

namespace detail {

inline void skip_spaces(std::string_view& s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
}

inline bool eat(std::string_view& s, std::string_view tok) {
  if (s.substr(0, tok.size()) == tok) {
    s.remove_prefix(tok.size());
    return true;
  }
  return false;
}

inline bool parse_uint(std::string_view& s, Int& out) {
  if (s.empty() || s.front() < '0' || s.front() > '9') return false;
  out = 0;
  while (!s.empty() && s.front() >= '0' && s.front() <= '9') {
    out = checked_add(checked_mul(out, Int{10}), Int{s.front() - '0'});
    s.remove_prefix(1);
  }
  return true;
}

// One term of the form [sign] [digits] [("*"? radical)].  Returns false at
// end of input.
inline bool parse_term(std::string_view& s, Int& a, Int& b) {
  skip_spaces(s);
  if (s.empty()) return false;
  int sign = 1;
  if (eat(s, "+")) {
  } else if (eat(s, "-")) {
    sign = -1;
  }
  skip_spaces(s);
  Int mag = 1;
  bool had_digits = parse_uint(s, mag);
  bool star = eat(s, "*");
  bool radical = eat(s, "√2") || eat(s, "sqrt2") || eat(s, "sqrt(2)");
  if (star && !radical) throw std::invalid_argument("quad parse: '*' not followed by sqrt2");
  if (!had_digits && !radical) throw std::invalid_argument("quad parse: empty term");
  Int signed_mag = sign < 0 ? checked_neg(mag) : mag;
  if (radical)
    b = checked_add(b, signed_mag);
  else
    a = checked_add(a, signed_mag);
  return true;
}

}  // namespace detail

// Inverse of to_string for both forms; also tolerant of "sqrt(2)" and spaces.
inline Quad parse_quad(std::string_view text) {
  std::string_view s = text;
  Int a = 0, b = 0;
  if (!detail::parse_term(s, a, b)) throw std::invalid_argument("quad parse: empty input");
  while (true) {
    detail::skip_spaces(s);
    if (s.empty()) break;
    if (s.front() != '+' && s.front() != '-')
      throw std::invalid_argument("quad parse: trailing junk in \"" + std::string(text) + "\"");
    detail::parse_term(s, a, b);
  }
  return Quad{a, b};
}

// Reduced fraction of 128-bit integers, denominator > 0.
struct Rational {
  Int num = 0;
  Int den = 1;

  Rational() = default;
  Rational(Int n, Int d) : num(n), den(d) { normalize(); }
  static Rational integer(Int n) { return Rational{n, 1}; }

  void normalize() {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) {
      num = checked_neg(num);
      den = checked_neg(den);
    }
    Int g = gcd_nonneg(num < 0 ? checked_neg(num) : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool is_zero() const { return num == 0; }

  friend Rational operator+(const Rational& x, const Rational& y) {
    return Rational{checked_add(checked_mul(x.num, y.den), checked_mul(y.num, x.den)),
                    checked_mul(x.den, y.den)};
  }
  friend Rational operator-(const Rational& x, const Rational& y) {
    return Rational{checked_sub(checked_mul(x.num, y.den), checked_mul(y.num, x.den)),
                    checked_mul(x.den, y.den)};
  }
  friend Rational operator*(const Rational& x, const Rational& y) {
    return Rational{checked_mul(x.num, y.num), checked_mul(x.den, y.den)};
  }
  friend Rational operator/(const Rational& x, const Rational& y) {
    if (y.num == 0) throw std::invalid_argument("rational division by zero");
    return Rational{checked_mul(x.num, y.den), checked_mul(x.den, y.num)};
  }
  friend bool operator==(const Rational& x, const Rational& y) {
    return x.num == y.num && x.den == y.den;
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Element of Q(sqrt2): r + s*sqrt2 with rational r, s.  Used where exact sums
// need division by eigenvector norms.
struct QuadRat {
  Rational r;
  Rational s;

  QuadRat() = default;
  QuadRat(Rational r_, Rational s_) : r(r_), s(s_) {}
  static QuadRat from_quad(const Quad& q) {
    return QuadRat{Rational::integer(q.a), Rational::integer(q.b)};
  }

  bool is_zero() const { return r.is_zero() && s.is_zero(); }

  friend QuadRat operator+(const QuadRat& x, const QuadRat& y) {
    return QuadRat{x.r + y.r, x.s + y.s};
  }
  friend QuadRat operator-(const QuadRat& x, const QuadRat& y) {
    return QuadRat{x.r - y.r, x.s - y.s};
  }
  friend QuadRat operator*(const QuadRat& x, const QuadRat& y) {
    Rational two = Rational::integer(2);
    return QuadRat{x.r * y.r + two * (x.s * y.s), x.r * y.s + x.s * y.r};
  }
  QuadRat& operator+=(const QuadRat& y) { return *this = *this + y; }
  friend bool operator==(const QuadRat& x, const QuadRat& y) { return x.r == y.r && x.s == y.s; }

  // Divide by a nonzero rational (the only division the library needs).
  QuadRat div(const Rational& d) const { return QuadRat{r / d, s / d}; }

  double to_double() const { return r.to_double() + s.to_double() * std::numbers::sqrt2; }
};

}  // namespace ctqw
