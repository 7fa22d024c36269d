#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// NEPS (non-complete extended p-sum) of path factors P2 and P3.  A basis set
// Omega of nonzero 0/1 vectors selects which factor coordinates move
// simultaneously: x ~ y iff some beta in Omega has x_i != y_i exactly on the
// support of beta, with adjacent coordinates in the corresponding path.

namespace ctqw {

class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Factor : std::uint8_t { P2 = 2, P3 = 3 };

inline int factor_order(Factor f) { return static_cast<int>(f); }

inline std::string factor_name(Factor f) { return f == Factor::P2 ? "P2" : "P3"; }

// One basis vector, bit i = coordinate i.
struct BasisVector {
  std::uint32_t bits = 0;
  int width = 0;

  int bit(int i) const { return (bits >> i) & 1u; }
  int weight() const { return __builtin_popcount(bits); }

  std::vector<int> to_digits() const {
    std::vector<int> d(width);
    for (int i = 0; i < width; ++i) d[i] = bit(i);
    return d;
  }

  friend bool operator==(const BasisVector& x, const BasisVector& y) {
    return x.bits == y.bits && x.width == y.width;
  }
};

using Vertex = std::vector<int>;  // coordinate i in {0 .. order(factor_i)-1}

struct NepsSpec {
  std::vector<Factor> factors;
  std::vector<BasisVector> omega;

  int arity() const { return static_cast<int>(factors.size()); }

  long long vertex_count() const {
    long long v = 1;
    for (Factor f : factors) v *= factor_order(f);
    return v;
  }

  bool all_are(Factor f) const {
    return std::all_of(factors.begin(), factors.end(), [f](Factor g) { return g == f; });
  }
};

// Validates and canonicalizes: factor list nonempty, arity <= 16, every basis
// vector nonzero and of matching width; duplicates in omega are dropped
// (keeping first occurrence) since the union in the adjacency rule ignores
// them.
inline NepsSpec make_neps(std::vector<Factor> factors, std::vector<std::uint32_t> omega_bits) {
  if (factors.empty()) throw SpecError("NEPS needs at least one factor");
  if (factors.size() > 16) throw SpecError("NEPS arity is limited to 16 factors");
  if (omega_bits.empty()) throw SpecError("basis set Omega must be nonempty");
  NepsSpec spec;
  spec.factors = std::move(factors);
  int n = spec.arity();
  for (std::uint32_t bits : omega_bits) {
    if (bits == 0) throw SpecError("basis set Omega must not contain the zero vector");
    if (bits >> n) throw SpecError("basis vector has more coordinates than there are factors");
    BasisVector b{bits, n};
    if (std::find(spec.omega.begin(), spec.omega.end(), b) == spec.omega.end())
      spec.omega.push_back(b);
  }
  return spec;
}

inline std::uint32_t pack_bits(const std::vector<int>& digits) {
  if (digits.size() > 16) throw SpecError("basis vector has more than 16 coordinates");
  std::uint32_t bits = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] != 0 && digits[i] != 1) throw SpecError("basis vector entries must be 0 or 1");
    bits |= static_cast<std::uint32_t>(digits[i]) << i;
  }
  return bits;
}

// Vertices are enumerated with coordinate 0 most significant, i.e. tuples in
// lexicographic order.
inline long long vertex_index(const NepsSpec& spec, const Vertex& v) {
  if (static_cast<int>(v.size()) != spec.arity())
    throw SpecError("vertex tuple has the wrong number of coordinates");
  long long idx = 0;
  for (int i = 0; i < spec.arity(); ++i) {
    int order = factor_order(spec.factors[i]);
    if (v[i] < 0 || v[i] >= order)
      throw SpecError("vertex coordinate " + std::to_string(i) + " out of range for " +
                      factor_name(spec.factors[i]));
    idx = idx * order + v[i];
  }
  return idx;
}

inline Vertex vertex_tuple(const NepsSpec& spec, long long idx) {
  if (idx < 0 || idx >= spec.vertex_count()) throw SpecError("vertex index out of range");
  Vertex v(spec.arity());
  for (int i = spec.arity() - 1; i >= 0; --i) {
    int order = factor_order(spec.factors[i]);
    v[i] = static_cast<int>(idx % order);
    idx /= order;
  }
  return v;
}

inline std::string vertex_to_string(const Vertex& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

// Adjacency straight from the definition; independent of any spectral
// identity so it can serve as a cross-check for them.
inline bool adjacent(const NepsSpec& spec, const Vertex& x, const Vertex& y) {
  if (static_cast<int>(x.size()) != spec.arity() || static_cast<int>(y.size()) != spec.arity())
    throw SpecError("vertex tuple has the wrong number of coordinates");
  for (const BasisVector& beta : spec.omega) {
    bool match = true;
    for (int i = 0; i < spec.arity() && match; ++i) {
      if (beta.bit(i) == 0)
        match = x[i] == y[i];
      else
        match = (x[i] - y[i] == 1) || (y[i] - x[i] == 1);
    }
    if (match) return true;
  }
  return false;
}

inline std::vector<std::vector<int>> adjacency_matrix(const NepsSpec& spec, long long dense_limit) {
  long long n = spec.vertex_count();
  if (n > dense_limit)
    throw SpecError("graph has " + std::to_string(n) + " vertices, above the dense limit " +
                    std::to_string(dense_limit));
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (long long i = 0; i < n; ++i) {
    Vertex x = vertex_tuple(spec, i);
    for (long long j = i + 1; j < n; ++j) {
      Vertex y = vertex_tuple(spec, j);
      if (adjacent(spec, x, y)) a[i][j] = a[j][i] = 1;
    }
  }
  return a;
}

// Rank of Omega over GF(2); the NEPS is connected iff the basis vectors span
// GF(2)^n.
inline int gf2_rank(const std::vector<BasisVector>& omega) {
  std::vector<std::uint32_t> rows;
  rows.reserve(omega.size());
  for (const BasisVector& b : omega) rows.push_back(b.bits);
  int rank = 0;
  for (int col = 0; col < 32; ++col) {
    std::uint32_t mask = 1u << col;
    std::size_t pivot = rank;
    while (pivot < rows.size() && !(rows[pivot] & mask)) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[rank], rows[pivot]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != static_cast<std::size_t>(rank) && (rows[r] & mask)) rows[r] ^= rows[rank];
    ++rank;
  }
  return rank;
}

inline bool is_connected(const NepsSpec& spec) { return gf2_rank(spec.omega) == spec.arity(); }

// Weight-parity split of Omega.  Even-weight vectors keep H(t) in the real
// orthogonal world at the key times; odd-weight vectors drive the sqrt2
// phases.  k and l are the minimum weights per class, and Omega*_e / Omega*_o
// the minimum-weight layers, summed coordinatewise over GF(2).
struct ParityClass {
  std::vector<BasisVector> members;
  int min_weight = 0;               // 0 when the class is empty
  std::vector<BasisVector> star;    // members of minimum weight
  std::uint32_t star_sum_bits = 0;  // GF(2) sum over star

  bool empty() const { return members.empty(); }
  bool star_sum_nonzero() const { return star_sum_bits != 0; }
};

struct ParityProfile {
  ParityClass even;
  ParityClass odd;
  std::uint32_t full_sum_bits = 0;  // GF(2) sum over all of Omega

  bool uniform() const { return even.empty() || odd.empty(); }
  bool mixed() const { return !uniform(); }
};

inline ParityProfile parity_profile(const NepsSpec& spec) {
  ParityProfile p;
  for (const BasisVector& b : spec.omega) {
    (b.weight() % 2 == 0 ? p.even : p.odd).members.push_back(b);
    p.full_sum_bits ^= b.bits;
  }
  for (ParityClass* cls : {&p.even, &p.odd}) {
    if (cls->empty()) continue;
    cls->min_weight = std::min_element(cls->members.begin(), cls->members.end(),
                                       [](const BasisVector& x, const BasisVector& y) {
                                         return x.weight() < y.weight();
                                       })
                          ->weight();
    for (const BasisVector& b : cls->members)
      if (b.weight() == cls->min_weight) {
        cls->star.push_back(b);
        cls->star_sum_bits ^= b.bits;
      }
  }
  return p;
}

}  // namespace ctqw
