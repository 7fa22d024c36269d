#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

// Inhomogeneous Diophantine approximation: given irrational theta and target
// alpha, find integers (p, q), p >= 1, with |p*theta - q - alpha| < delta.
// Inputs arrive in exact form c * sqrt2^e (the only irrationals this library
// meets are of that shape once pi is factored out), all internal arithmetic
// runs at 50 decimal digits, and every returned solution is re-verified at
// that precision before it escapes.

namespace ctqw {

using Real50 = boost::multiprecision::cpp_bin_float_50;

inline const Real50& sqrt2_50() {
  static const Real50 v = sqrt(Real50(2));
  return v;
}

// (num/den) * sqrt2^pow with integer pow (negative = divide).
struct SqrtTwoForm {
  long long num = 0;
  long long den = 1;
  int pow = 0;

  static SqrtTwoForm rational(long long n, long long d) { return {n, d, 0}; }

  bool is_rational() const { return num == 0 || pow % 2 == 0; }

  Real50 to_real() const {
    Real50 v = Real50(num) / Real50(den);
    for (int i = 0; i < pow; ++i) v *= sqrt2_50();
    for (int i = 0; i > pow; --i) v /= sqrt2_50();
    return v;
  }

  double to_double() const { return static_cast<double>(to_real()); }

  std::string describe() const {
    std::string s = std::to_string(num);
    if (den != 1) s += "/" + std::to_string(den);
    if (pow != 0) s += "*sqrt2^" + std::to_string(pow);
    return s;
  }
};

struct KroneckerOptions {
  long long p_max = 100'000'000;
  int max_levels = 200;
};

struct KroneckerSolution {
  long long p = 0;
  long long q = 0;
  double achieved = 0.0;  // |p*theta - q - alpha|, from the 50-digit check
};

class KroneckerBoundError : public std::runtime_error {
 public:
  explicit KroneckerBoundError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline Real50 residual50(const Real50& theta, const Real50& alpha, long long p, long long q) {
  Real50 r = Real50(p) * theta - Real50(q) - alpha;
  return r < 0 ? Real50(-r) : r;
}

inline long long floor50(const Real50& x) {
  return static_cast<long long>(static_cast<Real50>(floor(x)));
}

}  // namespace detail

// Exhaustive scan over p; returns the minimal-p solution or nothing.  The
// scan itself runs in double with generous slack, every candidate is
// confirmed at 50 digits.  Slow by design: it is the reference the fast path
// is tested against, and the fallback when the fast path hits its bounds.
inline std::optional<KroneckerSolution> kronecker_brute_force(const SqrtTwoForm& theta,
                                                              const SqrtTwoForm& alpha,
                                                              double delta, long long p_max) {
  Real50 th = theta.to_real(), al = alpha.to_real();
  double thd = static_cast<double>(th), ald = static_cast<double>(al);
  double slack = delta + 1e-8;  // double drift over p_max multiplications
  for (long long p = 1; p <= p_max; ++p) {
    double e = static_cast<double>(p) * thd - ald;
    long long q = std::llround(e);
    if (std::abs(e - q) < slack) {
      Real50 resid = detail::residual50(th, al, p, q);
      if (resid < delta) return KroneckerSolution{p, q, static_cast<double>(resid)};
    }
  }
  return std::nullopt;
}

// Fast path: greedy descent over the continued-fraction convergents of
// theta.  Writing eta_m = k_m*theta - h_m for convergent h_m/k_m, the
// positive-sign eta_m decrease geometrically; peeling the fractional part of
// alpha greedily as sum b_m*eta_m reaches a remainder below delta with
// p = sum b_m*k_m of order 1/delta (not 1/delta^2 like the naive
// two-convergent construction, which is what keeps delta = 1e-6 inside the
// default p bound).  Falls back to the exhaustive scan if the accumulated p
// would exceed the bound; throws KroneckerBoundError when both fail.
inline KroneckerSolution kronecker_solve(const SqrtTwoForm& theta, const SqrtTwoForm& alpha,
                                         double delta, const KroneckerOptions& opts = {}) {
  if (!(delta > 0)) throw std::invalid_argument("kronecker_solve: delta must be positive");
  if (theta.is_rational())
    throw std::invalid_argument("kronecker_solve: theta = " + theta.describe() +
                                " is rational; the approximation problem is degenerate");
  Real50 th = theta.to_real();
  if (th <= 0) throw std::invalid_argument("kronecker_solve: theta must be positive");
  Real50 al = alpha.to_real();

  long long K = detail::floor50(al);
  Real50 r = al - Real50(K);  // in [0, 1)

  // convergent recurrence; overflow of the int64 accumulators is treated as
  // "fast path out of bounds", not an error
  bool ok = true;
  long long P = 0, Q = 0;
  long long h_prev = 1, h_prev2 = 0, k_prev = 0, k_prev2 = 1;
  Real50 x = th;
  long long first_small_k = 0, first_small_h = 0;  // first level with 0 < eta < delta
  for (int level = 0; level < opts.max_levels && ok; ++level) {
    long long a = detail::floor50(x);
    long long h, k;
    if (__builtin_mul_overflow(a, h_prev, &h) || __builtin_add_overflow(h, h_prev2, &h) ||
        __builtin_mul_overflow(a, k_prev, &k) || __builtin_add_overflow(k, k_prev2, &k)) {
      ok = false;
      break;
    }
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
    Real50 eta = Real50(k) * th - Real50(h);
    if (eta > 0) {
      if (first_small_k == 0 && eta < delta) {
        first_small_k = k;
        first_small_h = h;
      }
      if (r >= delta && eta <= r) {
        long long b = detail::floor50(r / eta);
        long long dp, dq;
        if (__builtin_mul_overflow(b, k, &dp) || __builtin_add_overflow(P, dp, &P) ||
            __builtin_mul_overflow(b, h, &dq) || __builtin_add_overflow(Q, dq, &Q)) {
          ok = false;
          break;
        }
        r -= Real50(b) * eta;
      }
    }
    if (r < delta && (P != 0 || first_small_k != 0)) break;
    Real50 frac = x - Real50(a);
    if (frac == 0) {
      ok = false;  // theta looked rational at working precision
      break;
    }
    x = 1 / frac;
  }

  if (ok && r < delta) {
    if (P == 0) {  // alpha was already within delta of an integer; force p >= 1
      P = first_small_k;
      Q = first_small_h;
      ok = P != 0;
    }
    if (ok && P >= 1 && P <= opts.p_max) {
      long long p = P, q = Q - K;
      Real50 resid = detail::residual50(th, al, p, q);
      if (resid < delta) return KroneckerSolution{p, q, static_cast<double>(resid)};
    }
  }

  if (auto brute = kronecker_brute_force(theta, alpha, delta, opts.p_max)) return *brute;
  throw KroneckerBoundError(
      "kronecker_solve: no p <= " + std::to_string(opts.p_max) + " reaches |p*theta - q - alpha| < " +
      std::to_string(delta) + " for theta = " + theta.describe() + ", alpha = " +
      alpha.describe() + "; raise the p bound or relax delta");
}

}  // namespace ctqw
