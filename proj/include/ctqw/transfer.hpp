#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctqw/kronecker.hpp"
#include "ctqw/neps.hpp"
#include "ctqw/quad.hpp"
#include "ctqw/spectral.hpp"

// Classification engine.  Positive claims (PST, periodicity, PGST) carry a
// constructive time plus a numerical check; negative claims rest purely on
// exact eigenvalue arithmetic (the rationality condition on
// eigenvalue-difference ratios).  Doubles never decide a negative.

namespace ctqw {

inline std::string g17(double v) {
  if (v == 0.0) v = 0.0;  // collapse -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class SearchBoundError : public std::runtime_error {
 public:
  explicit SearchBoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// A walk time, numerically and (when it has one) in the closed form
// (num/den) * pi / sqrt2^radical.
struct TimePoint {
  double value = 0.0;
  bool symbolic = false;
  long long num = 0;
  long long den = 1;
  int radical = 0;

  static TimePoint numeric(double t) {
    TimePoint tp;
    tp.value = t;
    return tp;
  }

  static TimePoint pi_form(long long num, long long den, int radical) {
    if (den <= 0 || radical < 0) throw std::invalid_argument("bad symbolic time");
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    TimePoint tp;
    tp.symbolic = true;
    tp.num = num;
    tp.den = den;
    tp.radical = radical;
    tp.value = static_cast<double>(num) * std::numbers::pi /
               (static_cast<double>(den) * std::pow(std::numbers::sqrt2, radical));
    return tp;
  }

  static TimePoint tau(int k) { return pi_form(1, 1, k); }  // pi / sqrt2^k

  TimePoint times(long long m) const {
    if (!symbolic) return numeric(value * static_cast<double>(m));
    return pi_form(num * m, den, radical);
  }

  std::string describe() const {
    if (!symbolic) return g17(value);
    std::string s;
    if (num == 1 && den == 1)
      s = "pi";
    else if (num == 1)
      s = "pi/" + std::to_string(den);
    else {
      s = std::to_string(num) + "*pi";
      if (den != 1) s += "/" + std::to_string(den);
    }
    if (radical > 0) {
      s += "/sqrt2";
      if (radical > 1) s += "^" + std::to_string(radical);
    }
    return s;
  }
};

enum class WitnessKind { PST, PGST, PERIODIC };

inline std::string to_string(WitnessKind k) {
  switch (k) {
    case WitnessKind::PST: return "PST";
    case WitnessKind::PGST: return "PGST";
    case WitnessKind::PERIODIC: return "PERIODIC";
  }
  return "?";
}

struct TransferWitness {
  WitnessKind kind = WitnessKind::PST;
  Vertex source;
  Vertex target;
  TimePoint time;
  double fidelity = 0.0;
  Complex phase{};
  std::optional<double> epsilon;  // the bound a PGST witness beats
};

enum class CertKind { NO_PST_RATIO, PST_SUFFICIENT, PGST_CASE_I, PGST_CASE_II, PERIODIC_AT, UNKNOWN };

inline std::string to_string(CertKind k) {
  switch (k) {
    case CertKind::NO_PST_RATIO: return "NO_PST_RATIO";
    case CertKind::PST_SUFFICIENT: return "PST_SUFFICIENT";
    case CertKind::PGST_CASE_I: return "PGST_CASE_I";
    case CertKind::PGST_CASE_II: return "PGST_CASE_II";
    case CertKind::PERIODIC_AT: return "PERIODIC_AT";
    case CertKind::UNKNOWN: return "UNKNOWN";
  }
  return "?";
}

// Four support eigenvalues with (lk - ll) / (lr - ls) irrational, which rules
// out periodicity (and hence PST) at every vertex whose support contains
// them.
struct RatioQuadruple {
  Quad lk, ll, lr, ls;
};

struct Certificate {
  CertKind kind = CertKind::UNKNOWN;
  std::optional<TimePoint> time;
  std::optional<RatioQuadruple> ratio;
  std::optional<Vertex> vertex;  // a vertex the evidence was drawn from
  bool holds_all_vertices = false;
  std::vector<std::pair<std::string, std::string>> facts;  // ordered key/value payload
  std::vector<std::string> notes;

  void fact(std::string key, std::string value) { facts.emplace_back(std::move(key), std::move(value)); }
};

struct SearchOptions {
  double epsilon = 1e-3;
  long long max_q = 1'000'000;      // linear witness-time scans
  long long dense_limit = 4096;     // dense matrix verification cutoff
  KroneckerOptions kron{};
};

struct FidelitySummary {
  double t_max = 0.0;
  int samples = 0;
  double max_fidelity = 0.0;
  double at_time = 0.0;
  Vertex source, target;
};

struct TransferReport {
  NepsSpec spec;
  bool connected = false;
  ParityProfile parity;
  std::vector<Certificate> certificates;
  std::vector<TransferWitness> witnesses;
  std::optional<FidelitySummary> fidelity_summary;
  std::vector<std::string> notes;
  std::string headline = "UNKNOWN";  // PST | PGST | NO_PST | PERIODIC | UNKNOWN
};

namespace detail {

inline std::string omega_to_string(const std::vector<BasisVector>& omega) {
  std::string s = "{";
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (i) s += ",";
    s += vertex_to_string(omega[i].to_digits());
  }
  return s + "}";
}

inline std::string quad_pretty(const Quad& q) { return ctqw::to_string(q); }

}  // namespace detail

// Scans H(t) for a unit-modulus off-diagonal entry, source vertices in index
// order, first hit wins.  Constructive counterpart of the sufficient
// conditions: they promise a partner exists but not which one.
inline std::optional<TransferWitness> find_pst_witness(const NepsSpec& spec, const TimePoint& t,
                                                       double threshold = 1.0 - 1e-9) {
  long long total = spec.vertex_count();
  for (long long ui = 0; ui < total; ++ui) {
    Vertex u = vertex_tuple(spec, ui);
    std::vector<Complex> col = evolve_vertex(spec, u, t.value);
    for (long long vi = 0; vi < total; ++vi) {
      if (vi == ui) continue;
      double fid = std::abs(col[vi]);
      if (fid >= threshold) {
        TransferWitness w;
        w.kind = WitnessKind::PST;
        w.source = u;
        w.target = vertex_tuple(spec, vi);
        w.time = t;
        w.fidelity = fid;
        w.phase = col[vi];
        return w;
      }
    }
  }
  return std::nullopt;
}

// Sufficient PST condition.  All-P3 with uniform weight parity: when the
// minimum-weight layer Omega* has nonzero GF(2) sum, transfer happens at
// tau_k = pi/sqrt2^k, k the minimum weight.  All-P2: H(pi/2) equals
// (-i)^|Omega| X^sigma with sigma the GF(2) sum of all of Omega, so PST at
// pi/2 exactly when sigma != 0 (the tau_k rule is specific to P3 spectra).
// Disconnected specs still transfer within components; the rank shortfall is
// reported as a note, not a failure.
inline std::optional<std::pair<Certificate, TransferWitness>> check_pst_sufficient(
    const NepsSpec& spec) {
  ParityProfile profile = parity_profile(spec);

  TimePoint t;
  Certificate cert;
  cert.kind = CertKind::PST_SUFFICIENT;
  if (spec.all_are(Factor::P3)) {
    if (!profile.uniform()) return std::nullopt;
    const ParityClass& cls = profile.even.empty() ? profile.odd : profile.even;
    if (!cls.star_sum_nonzero()) return std::nullopt;
    int k = cls.min_weight;
    t = TimePoint::tau(k);
    cert.fact("rule", "uniform-parity minimum-weight layer with nonzero GF(2) sum");
    cert.fact("k", std::to_string(k));
    cert.fact("omega_star", detail::omega_to_string(cls.star));
    cert.fact("star_sum", vertex_to_string(BasisVector{cls.star_sum_bits, spec.arity()}.to_digits()));
  } else if (spec.all_are(Factor::P2)) {
    if (profile.full_sum_bits == 0) return std::nullopt;
    t = TimePoint::pi_form(1, 2, 0);
    cert.fact("rule", "H(pi/2) = (-i)^|Omega| X^sigma with sigma != 0");
    cert.fact("sigma", vertex_to_string(BasisVector{profile.full_sum_bits, spec.arity()}.to_digits()));
  } else {
    return std::nullopt;  // mixed factor lists are outside this condition
  }

  std::optional<TransferWitness> wit = find_pst_witness(spec, t);
  if (!wit) return std::nullopt;  // defensive; the conditions above guarantee one
  cert.time = t;
  cert.vertex = wit->source;
  if (!is_connected(spec))
    cert.notes.push_back("omega has GF(2) rank " + std::to_string(gf2_rank(spec.omega)) + " < " +
                         std::to_string(spec.arity()) +
                         ": the graph is disconnected; transfer happens inside a component");
  return std::make_pair(cert, *wit);
}

// Exact no-PST certificate for all-P3 with both parities present.  The three
// eigenvalues a+b*sqrt2 (all-third selectors), a-b*sqrt2 (all-first) and
// c+d*sqrt2 (all-third with the first selector at a coordinate touched by an
// even basis vector) lie in every vertex support, and
// (lk-ll)/(lr-ls) = 2b*sqrt2 / ((a-c)+(b-d)*sqrt2) is irrational because
// b != 0 and c != a.
inline std::optional<Certificate> check_no_pst_mixed_parity(const NepsSpec& spec) {
  if (!spec.all_are(Factor::P3)) return std::nullopt;
  ParityProfile profile = parity_profile(spec);
  if (!profile.mixed()) return std::nullopt;

  int n = spec.arity();
  std::vector<int> all_third(n, 2), all_first(n, 0);
  Quad lam_hi = eigenvalue_of(spec, all_third);   // a + b sqrt2
  Quad lam_lo = eigenvalue_of(spec, all_first);   // a - b sqrt2
  int j = -1;
  for (int i = 0; i < n && j < 0; ++i)
    for (const BasisVector& beta : profile.even.members)
      if (beta.bit(i)) {
        j = i;
        break;
      }
  if (j < 0) throw std::logic_error("no coordinate meets a nonempty even class");
  std::vector<int> flipped(n, 2);
  flipped[j] = 0;
  Quad lam_third = eigenvalue_of(spec, flipped);  // c + d sqrt2

  if (lam_hi.a != lam_lo.a || lam_hi.b != checked_neg(lam_lo.b))
    throw std::logic_error("extreme selector eigenvalues are not conjugate");
  if (lam_third.a == lam_hi.a) throw std::logic_error("flipped selector did not change the rational part");
  Quad d1 = lam_hi - lam_lo, d2 = lam_hi - lam_third;
  if (ratio_is_rational(d1, d2))
    throw std::logic_error("ratio certificate construction produced a rational ratio");

  Certificate cert;
  cert.kind = CertKind::NO_PST_RATIO;
  cert.ratio = RatioQuadruple{lam_hi, lam_lo, lam_hi, lam_third};
  cert.holds_all_vertices = true;
  cert.fact("a", int_to_string(lam_hi.a));
  cert.fact("b", int_to_string(lam_hi.b));
  cert.fact("c", int_to_string(lam_third.a));
  cert.fact("d", int_to_string(lam_third.b));
  cert.fact("flipped_coordinate", std::to_string(j));
  cert.notes.push_back("the three eigenvalues " + detail::quad_pretty(lam_hi) + ", " +
                       detail::quad_pretty(lam_lo) + ", " + detail::quad_pretty(lam_third) +
                       " lie in every vertex support and their difference ratio is irrational; "
                       "no vertex is periodic, so no PST occurs at any time");
  return cert;
}

namespace detail {

// Ratio test over one vertex support.  All pairwise difference ratios are
// rational iff every difference is rational against a fixed reference pair,
// so the scan is linear in the number of pairs against one reference.
inline std::optional<RatioQuadruple> support_ratio_violation(const std::vector<Quad>& support) {
  if (support.size() < 2) return std::nullopt;
  const Quad& lo = support.front();
  const Quad& hi = support.back();
  Quad ref = hi - lo;
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      Quad diff = support[j] - support[i];
      if (!ratio_is_rational(diff, ref)) return RatioQuadruple{support[j], support[i], hi, lo};
    }
  return std::nullopt;
}

}  // namespace detail

// Periodicity.  Uniform-parity all-P3: exact scalar evolution at 2*tau_k,
// strengthening to pi when k is even; all-P2: H(pi) = (-1)^|Omega| I always.
// Both are verified densely when the graph is small enough.  Otherwise the
// per-vertex ratio test either refutes periodicity everywhere (NO_PST_RATIO)
// or is inconclusive (UNKNOWN).
inline Certificate check_periodicity(const NepsSpec& spec, const SearchOptions& opts = {}) {
  ParityProfile profile = parity_profile(spec);

  bool constructive = false;
  TimePoint t;
  double gamma = 1.0;
  Certificate cert;
  if (spec.all_are(Factor::P3) && profile.uniform()) {
    int k = (profile.even.empty() ? profile.odd : profile.even).min_weight;
    t = k % 2 == 0 ? TimePoint::pi_form(1, 1, 0) : TimePoint::pi_form(2, 1, k);
    gamma = 1.0;
    cert.fact("rule", k % 2 == 0 ? "uniform even parity: scalar evolution at pi"
                                 : "uniform parity: scalar evolution at 2*pi/sqrt2^k");
    cert.fact("k", std::to_string(k));
    constructive = true;
  } else if (spec.all_are(Factor::P2)) {
    t = TimePoint::pi_form(1, 1, 0);
    gamma = spec.omega.size() % 2 == 0 ? 1.0 : -1.0;
    cert.fact("rule", "every P2 edge layer squares to the identity: H(pi) = (-1)^|Omega| I");
    constructive = true;
  }

  if (constructive) {
    cert.kind = CertKind::PERIODIC_AT;
    cert.time = t;
    cert.holds_all_vertices = true;
    cert.fact("gamma", g17(gamma));
    if (spec.vertex_count() <= opts.dense_limit) {
      double dev = 0.0;
      auto h = transition_matrix(spec, t.value, opts.dense_limit);
      long long total = spec.vertex_count();
      for (long long i = 0; i < total; ++i)
        for (long long j = 0; j < total; ++j)
          dev = std::max(dev, std::abs(h[i][j] - (i == j ? Complex{gamma, 0.0} : Complex{})));
      cert.fact("max_deviation", g17(dev));
      if (dev > 1e-9)
        throw std::logic_error("periodicity construction failed numeric verification: deviation " +
                               g17(dev));
    } else {
      cert.notes.push_back("dense verification skipped above the dense limit");
    }
    return cert;
  }

  // ratio test, vertex 0 first, then confirm across all vertices
  long long total = spec.vertex_count();
  std::vector<long long> passing;
  std::optional<RatioQuadruple> first_violation;
  Vertex first_vertex;
  for (long long ui = 0; ui < total; ++ui) {
    Vertex u = vertex_tuple(spec, ui);
    auto violation = detail::support_ratio_violation(eigenvalue_support(spec, u));
    if (violation) {
      if (!first_violation) {
        first_violation = violation;
        first_vertex = u;
      }
    } else {
      passing.push_back(ui);
    }
  }
  if (first_violation && passing.empty()) {
    cert.kind = CertKind::NO_PST_RATIO;
    cert.ratio = first_violation;
    cert.vertex = first_vertex;
    cert.holds_all_vertices = true;
    cert.notes.push_back(
        "every vertex support contains an irrational eigenvalue-difference ratio: the walk is "
        "periodic at no vertex and admits no PST");
    return cert;
  }
  if (first_violation) {
    cert.kind = CertKind::NO_PST_RATIO;
    cert.ratio = first_violation;
    cert.vertex = first_vertex;
    cert.holds_all_vertices = false;
    cert.notes.push_back("the ratio test fails at " + vertex_to_string(first_vertex) + " but " +
                         std::to_string(passing.size()) +
                         " vertex supports pass it; conclusions cover the failing vertices only");
    return cert;
  }
  cert.kind = CertKind::UNKNOWN;
  cert.notes.push_back(
      "the rationality condition holds on every vertex support; the ratio test cannot refute "
      "periodicity and no constructive rule applies");
  return cert;
}

namespace detail {

struct PgstScan {
  bool found = false;
  long long index = 0;  // the successful q (or p / m) of the scan
  TimePoint time;
  double fidelity = 0.0;
};

// First index in [lo, hi] whose time clears the fidelity bar.
template <typename TimeOf>
inline PgstScan scan_times(const PairKernel& kernel, long long lo, long long hi, double bar,
                           TimeOf&& time_of) {
  PgstScan r;
  for (long long i = lo; i <= hi; ++i) {
    TimePoint t = time_of(i);
    double fid = kernel.fidelity_at(t.value);
    if (fid >= bar) {
      r.found = true;
      r.index = i;
      r.time = t;
      r.fidelity = fid;
      return r;
    }
  }
  return r;
}

// Calibrated continued-fraction bound: delta starts at eps/4 and halves (at
// most 12 times) until the solved time actually clears the fidelity bar.
// Returns the solution and the delta that worked; nullopt if calibration ran
// out of halvings (the caller falls back to a bare bounded scan).
template <typename TimeOf>
inline std::optional<std::pair<KroneckerSolution, double>> calibrated_solve(
    const PairKernel& kernel, const SqrtTwoForm& theta, const SqrtTwoForm& alpha, double eps,
    double bar, const KroneckerOptions& kron, TimeOf&& time_of) {
  double delta = eps / 4.0;
  for (int i = 0; i <= 12; ++i, delta /= 2.0) {
    KroneckerSolution sol = kronecker_solve(theta, alpha, delta, kron);
    if (kernel.fidelity_at(time_of(sol).value) >= bar) return std::make_pair(sol, delta);
  }
  return std::nullopt;
}

}  // namespace detail

struct PgstResult {
  Certificate cert;
  TransferWitness witness;
};

// PGST for all-P3 with both parities present.  Each case pivots on the PST
// pair of one parity layer's own walk and approximates a commensuration
// between pi and the layer time with the Diophantine solver; candidate witness
// times are then scanned in increasing order and the first time to clear
// 1 - epsilon wins.  When both cases apply, the smaller witness time is
// reported.
//
// Case I (odd layer, star sum nonzero): times q*pi, from
//   |p * 2/sqrt2^l - q - 1/sqrt2^l| < delta, i.e. (2p-1)*tau_l close to q*pi.
// Case II (even layer, star sum nonzero): the same solve with alpha =
//   1/sqrt2^k couples the odd-layer period to the even-layer transfer time;
//   both time families 2p*tau_l and q*pi + tau_k approximate it and both are
//   scanned.
inline std::optional<PgstResult> check_pgst_mixed(const NepsSpec& spec, double epsilon,
                                                  const SearchOptions& opts = {}) {
  if (!spec.all_are(Factor::P3)) return std::nullopt;
  ParityProfile profile = parity_profile(spec);
  if (!profile.mixed()) return std::nullopt;
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");

  const int l = profile.odd.min_weight;
  const int k = profile.even.min_weight;
  const double bar = 1.0 - epsilon;
  std::vector<PgstResult> candidates;
  std::vector<std::string> case_notes;
  bool any_case_applied = false, any_scan_exhausted = false;

  auto make_candidate = [&](CertKind kind, const NepsSpec& layer, const TransferWitness& layer_wit,
                            const PairKernel& kernel, const detail::PgstScan& scan,
                            std::vector<std::pair<std::string, std::string>> extra) {
    PgstResult c;
    c.cert.kind = kind;
    c.cert.time = scan.time;
    c.cert.vertex = layer_wit.source;
    c.cert.fact("layer_omega", detail::omega_to_string(layer.omega));
    c.cert.fact("layer_pst_pair", vertex_to_string(layer_wit.source) + "->" +
                                      vertex_to_string(layer_wit.target));
    c.cert.fact("layer_pst_time", layer_wit.time.describe());
    for (auto& kv : extra) c.cert.facts.push_back(std::move(kv));
    c.cert.fact("witness_time", scan.time.describe());
    c.cert.fact("fidelity", g17(scan.fidelity));
    c.witness.kind = WitnessKind::PGST;
    c.witness.source = layer_wit.source;
    c.witness.target = layer_wit.target;
    c.witness.time = scan.time;
    c.witness.fidelity = scan.fidelity;
    c.witness.phase = kernel.amplitude_at(scan.time.value);
    c.witness.epsilon = epsilon;
    candidates.push_back(std::move(c));
  };

  if (profile.odd.star_sum_nonzero()) {
    NepsSpec layer{spec.factors, profile.odd.members};
    auto layer_pst = check_pst_sufficient(layer);
    if (layer_pst) {
      any_case_applied = true;
      PairKernel kernel(spec, layer_pst->second.source, layer_pst->second.target);
      SqrtTwoForm theta{2, 1, -l}, alpha{1, 1, -l};
      auto time_of_q = [](long long q) { return TimePoint::pi_form(q, 1, 0); };
      auto cf = detail::calibrated_solve(kernel, theta, alpha, epsilon, bar, opts.kron,
                                         [&](const KroneckerSolution& s) { return time_of_q(s.q); });
      long long hi = cf ? std::min(std::max(cf->first.q, 1ll), opts.max_q) : opts.max_q;
      detail::PgstScan scan = detail::scan_times(kernel, 1, hi, bar, time_of_q);
      if (scan.found) {
        std::vector<std::pair<std::string, std::string>> extra;
        extra.emplace_back("l", std::to_string(l));
        if (cf) {
          extra.emplace_back("diophantine_q", std::to_string(cf->first.q));
          extra.emplace_back("delta", g17(cf->second));
        }
        extra.emplace_back("q", std::to_string(scan.index));
        make_candidate(CertKind::PGST_CASE_I, layer, layer_pst->second, kernel, scan,
                       std::move(extra));
      } else {
        any_scan_exhausted = true;
      }
    } else {
      case_notes.push_back("odd layer has nonzero star sum but no transfer pair was located");
    }
  }

  if (profile.even.star_sum_nonzero()) {
    NepsSpec layer{spec.factors, profile.even.members};
    auto layer_pst = check_pst_sufficient(layer);
    if (layer_pst) {
      any_case_applied = true;
      PairKernel kernel(spec, layer_pst->second.source, layer_pst->second.target);
      SqrtTwoForm theta{2, 1, -l}, alpha{1, 1, -k};
      // family A: t = 2p * tau_l;  family B: t = q*pi + tau_k (k is even, so
      // tau_k is a rational multiple of pi)
      if (k % 2 != 0) throw std::logic_error("even parity class with odd minimum weight");
      long long pow_k = 1ll << (k / 2);
      auto time_a = [&](long long p) { return TimePoint::pi_form(2 * p, 1, l); };
      auto time_b = [&](long long q) { return TimePoint::pi_form(q * pow_k + 1, pow_k, 0); };
      auto cf = detail::calibrated_solve(kernel, theta, alpha, epsilon, bar, opts.kron,
                                         [&](const KroneckerSolution& s) { return time_a(s.p); });
      long long hi_a = cf ? std::min(std::max(cf->first.p, 1ll), opts.max_q) : opts.max_q;
      long long hi_b = cf ? std::min(std::max(cf->first.q, 1ll), opts.max_q) : opts.max_q;
      detail::PgstScan scan_a = detail::scan_times(kernel, 1, hi_a, bar, time_a);
      detail::PgstScan scan_b = detail::scan_times(kernel, 0, hi_b, bar, time_b);
      const detail::PgstScan* best = nullptr;
      if (scan_a.found && (!scan_b.found || scan_a.time.value <= scan_b.time.value)) best = &scan_a;
      else if (scan_b.found) best = &scan_b;
      if (best) {
        std::vector<std::pair<std::string, std::string>> extra;
        extra.emplace_back("l", std::to_string(l));
        extra.emplace_back("k", std::to_string(k));
        if (cf) {
          extra.emplace_back("diophantine_p", std::to_string(cf->first.p));
          extra.emplace_back("diophantine_q", std::to_string(cf->first.q));
          extra.emplace_back("delta", g17(cf->second));
        }
        extra.emplace_back("family", best == &scan_a ? "2p*tau_l" : "q*pi+tau_k");
        extra.emplace_back(best == &scan_a ? "p" : "q", std::to_string(best->index));
        make_candidate(CertKind::PGST_CASE_II, layer, layer_pst->second, kernel, *best,
                       std::move(extra));
      } else {
        any_scan_exhausted = true;
      }
    } else {
      case_notes.push_back("even layer has nonzero star sum but no transfer pair was located");
    }
  }

  if (candidates.empty()) {
    if (any_case_applied && any_scan_exhausted)
      throw SearchBoundError("PGST search exhausted the time bound q <= " +
                             std::to_string(opts.max_q) + " at epsilon = " + g17(epsilon) +
                             "; raise --max-q or relax --epsilon");
    return std::nullopt;  // neither star sum nonzero (or no layer pair): unknown
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].witness.time.value < candidates[best].witness.time.value) best = i;
  for (const std::string& n : case_notes) candidates[best].cert.notes.push_back(n);
  return candidates[best];
}

// Cartesian-product PGST.  With A periodic (scalar gamma at time T) and B
// admitting PST v -> w at time eta, T/(2*eta) irrational lets multiples m*T
// land arbitrarily close to odd multiples of eta; the product walk then
// carries (u,v) -> (u,w) with fidelity |H_A(mT)_uu * H_B(mT)_vw| -> 1.  The
// time ratio is certified irrational exactly from the closed forms.
struct ProductRole {
  TransferWitness witness;           // in (A,B) coordinate order
  Certificate periodicity;           // factor A
  Certificate transfer;              // factor B
  std::vector<std::pair<std::string, std::string>> facts;
};

inline std::optional<ProductRole> check_pgst_product(const NepsSpec& a, const NepsSpec& b,
                                                     double epsilon,
                                                     const SearchOptions& opts = {}) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  Certificate period = check_periodicity(a, opts);
  if (period.kind != CertKind::PERIODIC_AT || !period.time) return std::nullopt;
  auto pst = check_pst_sufficient(b);
  if (!pst) return std::nullopt;

  const TimePoint& T = *period.time;
  const TimePoint& eta = pst->second.time;
  // T/(2 eta) = (Tn/Td) / (2 en/ed) * sqrt2^(ek - Tk)
  SqrtTwoForm theta{T.num * eta.den, T.den * 2 * eta.num, eta.radical - T.radical};
  if (theta.is_rational())
    throw SpecError("product transfer needs rationally independent times: T = " + T.describe() +
                    " and eta = " + eta.describe() + " have rational ratio");

  Vertex base(a.arity(), 0);
  PairKernel kernel_a(a, base, base);
  PairKernel kernel_b(b, pst->second.source, pst->second.target);
  const double bar = 1.0 - epsilon;
  auto fid_at = [&](double t) { return kernel_a.fidelity_at(t) * kernel_b.fidelity_at(t); };
  auto time_of_m = [&](long long m) { return T.times(m); };

  // calibrate the Diophantine bound on the product fidelity, then take the
  // first valid multiple
  std::optional<std::pair<KroneckerSolution, double>> cf;
  {
    double delta = epsilon / 4.0;
    for (int i = 0; i <= 12 && !cf; ++i, delta /= 2.0) {
      KroneckerSolution sol = kronecker_solve(theta, SqrtTwoForm{1, 2, 0}, delta, opts.kron);
      if (fid_at(time_of_m(sol.p).value) >= bar) cf = std::make_pair(sol, delta);
    }
  }
  long long hi = cf ? std::min(std::max(cf->first.p, 1ll), opts.max_q) : opts.max_q;
  long long found_m = 0;
  for (long long m = 1; m <= hi && !found_m; ++m)
    if (fid_at(time_of_m(m).value) >= bar) found_m = m;
  if (!found_m)
    throw SearchBoundError("product PGST search exhausted m <= " + std::to_string(opts.max_q) +
                           " at epsilon = " + g17(epsilon) + "; raise --max-q or relax --epsilon");

  ProductRole role;
  TimePoint t = time_of_m(found_m);
  role.witness.kind = WitnessKind::PGST;
  role.witness.source = base;
  role.witness.source.insert(role.witness.source.end(), pst->second.source.begin(),
                             pst->second.source.end());
  role.witness.target = base;
  role.witness.target.insert(role.witness.target.end(), pst->second.target.begin(),
                             pst->second.target.end());
  role.witness.time = t;
  role.witness.fidelity = fid_at(t.value);
  role.witness.phase = kernel_a.amplitude_at(t.value) * kernel_b.amplitude_at(t.value);
  role.witness.epsilon = epsilon;
  role.periodicity = period;
  role.transfer = pst->first;
  role.facts.emplace_back("period", T.describe());
  role.facts.emplace_back("transfer_time", eta.describe());
  role.facts.emplace_back("time_ratio", theta.describe());
  role.facts.emplace_back("m", std::to_string(found_m));
  if (cf) {
    role.facts.emplace_back("diophantine_m", std::to_string(cf->first.p));
    role.facts.emplace_back("delta", g17(cf->second));
  }
  role.facts.emplace_back("witness_time", t.describe());
  role.facts.emplace_back("fidelity", g17(role.witness.fidelity));
  return role;
}

struct ProductAnalysis {
  std::vector<TransferWitness> witnesses;  // all in (A,B) coordinate order
  std::vector<Certificate> certificates;
  std::vector<std::string> notes;
};

// Runs the product search in both role assignments (A periodic / B transfers,
// then swapped) and reports every witness in (A,B) coordinates.
inline ProductAnalysis analyze_product(const NepsSpec& a, const NepsSpec& b, double epsilon,
                                       const SearchOptions& opts = {}) {
  ProductAnalysis out;
  out.notes.push_back(
      "product analysis hypotheses: one factor periodic, the other with a transfer pair, and the "
      "two closed-form times rationally independent");
  auto add_role = [&](std::optional<ProductRole> role, bool swapped) {
    if (!role) {
      out.notes.push_back(std::string("role ") + (swapped ? "B-periodic/A-transfers" : "A-periodic/B-transfers") +
                          " not applicable");
      return;
    }
    if (swapped) {
      // witness coordinates arrived as (B,A); rotate back to (A,B)
      int nb = b.arity();
      auto rotate = [nb](Vertex& v) {
        Vertex head(v.begin(), v.begin() + nb), tail(v.begin() + nb, v.end());
        v = tail;
        v.insert(v.end(), head.begin(), head.end());
      };
      rotate(role->witness.source);
      rotate(role->witness.target);
    }
    Certificate summary;
    summary.kind = role->transfer.kind;  // PST_SUFFICIENT of the transferring factor
    summary.time = role->transfer.time;
    summary.facts = role->facts;
    summary.facts.emplace_back("role", swapped ? "B-periodic/A-transfers" : "A-periodic/B-transfers");
    out.witnesses.push_back(role->witness);
    out.certificates.push_back(role->periodicity);
    out.certificates.push_back(summary);
  };
  add_role(check_pgst_product(a, b, epsilon, opts), false);
  add_role(check_pgst_product(b, a, epsilon, opts), true);
  return out;
}

// Uniform time grid of |H(t)_vu|; samples >= 2, endpoints included.
inline std::vector<std::pair<double, double>> fidelity_sweep(const NepsSpec& spec, const Vertex& u,
                                                             const Vertex& v, double t_max,
                                                             int samples) {
  if (samples < 2) throw SpecError("fidelity sweep needs at least 2 samples");
  if (!(t_max > 0)) throw SpecError("fidelity sweep needs t_max > 0");
  vertex_index(spec, u);
  vertex_index(spec, v);
  PairKernel kernel(spec, u, v);
  std::vector<std::pair<double, double>> series;
  series.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    double t = t_max * static_cast<double>(i) / static_cast<double>(samples - 1);
    series.emplace_back(t, kernel.fidelity_at(t));
  }
  return series;
}

namespace detail {

// Sampled maximum off-diagonal fidelity, only for small graphs.
inline std::optional<FidelitySummary> sampled_summary(const NepsSpec& spec,
                                                      const SearchOptions& opts) {
  long long total = spec.vertex_count();
  if (total > 32) return std::nullopt;
  FidelitySummary s;
  s.t_max = 20.0 * std::numbers::pi;
  s.samples = 2001;
  for (int i = 0; i < s.samples; ++i) {
    double t = s.t_max * static_cast<double>(i) / static_cast<double>(s.samples - 1);
    auto h = transition_matrix(spec, t, opts.dense_limit);
    for (long long x = 0; x < total; ++x)
      for (long long y = 0; y < total; ++y) {
        if (x == y) continue;
        double fid = std::abs(h[x][y]);
        if (fid > s.max_fidelity) {
          s.max_fidelity = fid;
          s.at_time = t;
          s.source = vertex_tuple(spec, y);
          s.target = vertex_tuple(spec, x);
        }
      }
  }
  return s;
}

}  // namespace detail

// Orchestration: connectivity and parity first, then the sufficient PST
// condition, the exact no-PST certificate, the PGST search, and periodicity;
// a sampled fidelity summary is attached for small graphs.  A PST witness
// coexisting with a NO_PST_RATIO certificate would mean the library
// contradicted itself, so that is checked last.
inline TransferReport classify(const NepsSpec& spec, double epsilon = 1e-3,
                               const SearchOptions& opts_in = {}) {
  SearchOptions opts = opts_in;
  opts.epsilon = epsilon;
  TransferReport report;
  report.spec = spec;
  report.connected = is_connected(spec);
  report.parity = parity_profile(spec);
  if (!report.connected)
    report.notes.push_back("omega has GF(2) rank " + std::to_string(gf2_rank(spec.omega)) +
                           " < " + std::to_string(spec.arity()) + ": the graph is disconnected");

  if (auto pst = check_pst_sufficient(spec)) {
    report.certificates.push_back(pst->first);
    report.witnesses.push_back(pst->second);
  } else if (spec.all_are(Factor::P3) && report.parity.uniform()) {
    Certificate unknown;
    unknown.kind = CertKind::UNKNOWN;
    unknown.fact("star_sum", "0");
    unknown.notes.push_back(
        "uniform parity but the minimum-weight layer of omega sums to zero over GF(2); whether "
        "such walks admit PST is an open problem, so no transfer conclusion is drawn");
    report.certificates.push_back(unknown);
  } else if (spec.all_are(Factor::P2) && report.parity.full_sum_bits == 0) {
    report.notes.push_back(
        "H(pi/2) is a scalar (the GF(2) sum of omega vanishes); the pi/2 transfer rule does not "
        "apply and no PST conclusion is drawn");
  }

  if (auto no_pst = check_no_pst_mixed_parity(spec)) report.certificates.push_back(*no_pst);

  bool have_no_pst = false;
  for (const Certificate& c : report.certificates)
    have_no_pst = have_no_pst || c.kind == CertKind::NO_PST_RATIO;
  if (have_no_pst) {
    if (auto pgst = check_pgst_mixed(spec, epsilon, opts)) {
      report.certificates.push_back(pgst->cert);
      report.witnesses.push_back(pgst->witness);
    } else if (spec.all_are(Factor::P3)) {
      report.notes.push_back(
          "PGST search not applicable: no minimum-weight parity layer has a usable transfer pair");
    }
  }

  if (!have_no_pst) {
    Certificate period = check_periodicity(spec, opts);
    report.certificates.push_back(period);
  } else {
    report.notes.push_back("periodicity is refuted by the ratio certificate above");
  }

  report.fidelity_summary = detail::sampled_summary(spec, opts);

  bool have_pst_witness = false, have_pgst_witness = false, have_periodic = false;
  for (const TransferWitness& w : report.witnesses) {
    have_pst_witness = have_pst_witness || w.kind == WitnessKind::PST;
    have_pgst_witness = have_pgst_witness || w.kind == WitnessKind::PGST;
  }
  for (const Certificate& c : report.certificates) {
    have_periodic = have_periodic || c.kind == CertKind::PERIODIC_AT;
    have_no_pst = have_no_pst || c.kind == CertKind::NO_PST_RATIO;  // the ratio scan can refute too
  }
  if (have_pst_witness && have_no_pst)
    throw std::logic_error("internal inconsistency: PST witness alongside a NO_PST_RATIO certificate");
  report.headline = have_pst_witness   ? "PST"
                    : have_pgst_witness ? "PGST"
                    : have_no_pst       ? "NO_PST"
                    : have_periodic     ? "PERIODIC"
                                        : "UNKNOWN";
  return report;
}

}  // namespace ctqw
