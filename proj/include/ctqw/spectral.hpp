#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "ctqw/neps.hpp"
#include "ctqw/quad.hpp"

// Closed-form spectral data for NEPS of P2/P3 and the transfer quantities
// built on it.  Eigenvectors are tensor products of the fixed factor
// eigenvectors; eigenvalues come from the basis-set sum
//   Lambda_j = sum_{beta in Omega} prod_i lambda_{i,j_i}^{beta_i},
// which lives in Z[sqrt2] because the factor eigenvalues do.  Everything that
// feeds a certificate stays exact; evolution uses doubles built from the
// exact data.

namespace ctqw {

using Complex = std::complex<double>;

// Unnormalized integer eigenvectors of the path factors, eigenvalues
// ascending.  For P3 these are (1,-s2,1), (1,0,-1), (1,s2,1) with squared
// norms 4, 2, 4; for P2 (1,-1), (1,1) with squared norms 2, 2.
struct FactorBasis {
  int size = 0;
  std::array<Quad, 3> eigenvalue{};
  std::array<std::array<Quad, 3>, 3> component{};  // component[j][u]
  std::array<Int, 3> norm2{};
  // double mirrors of the exact data
  std::array<double, 3> eigenvalue_f{};
  std::array<std::array<double, 3>, 3> component_f{};
};

inline const FactorBasis& factor_basis(Factor f) {
  static const FactorBasis p2 = [] {
    FactorBasis b;
    b.size = 2;
    b.eigenvalue = {Quad{-1, 0}, Quad{1, 0}, Quad{}};
    b.component[0] = {Quad{1, 0}, Quad{-1, 0}, Quad{}};
    b.component[1] = {Quad{1, 0}, Quad{1, 0}, Quad{}};
    b.norm2 = {2, 2, 0};
    for (int j = 0; j < 2; ++j) {
      b.eigenvalue_f[j] = b.eigenvalue[j].to_double();
      for (int u = 0; u < 2; ++u) b.component_f[j][u] = b.component[j][u].to_double();
    }
    return b;
  }();
  static const FactorBasis p3 = [] {
    FactorBasis b;
    b.size = 3;
    b.eigenvalue = {Quad{0, -1}, Quad{0, 0}, Quad{0, 1}};
    b.component[0] = {Quad{1, 0}, Quad{0, -1}, Quad{1, 0}};
    b.component[1] = {Quad{1, 0}, Quad{0, 0}, Quad{-1, 0}};
    b.component[2] = {Quad{1, 0}, Quad{0, 1}, Quad{1, 0}};
    b.norm2 = {4, 2, 4};
    for (int j = 0; j < 3; ++j) {
      b.eigenvalue_f[j] = b.eigenvalue[j].to_double();
      for (int u = 0; u < 3; ++u) b.component_f[j][u] = b.component[j][u].to_double();
    }
    return b;
  }();
  return f == Factor::P2 ? p2 : p3;
}

// Eigenvector selectors j = (j_0 .. j_{n-1}) share the vertex enumeration:
// flat index with coordinate 0 most significant.
inline std::vector<int> eigen_digits(const NepsSpec& spec, long long flat) {
  return vertex_tuple(spec, flat);  // same mixed-radix layout
}

// Exact eigenvalue of the selector: sum over Omega of the per-factor
// eigenvalue products on each basis vector's support.
inline Quad eigenvalue_of(const NepsSpec& spec, const std::vector<int>& digits) {
  Quad total{};
  for (const BasisVector& beta : spec.omega) {
    Quad term{1, 0};
    for (int i = 0; i < spec.arity(); ++i)
      if (beta.bit(i)) term *= factor_basis(spec.factors[i]).eigenvalue[digits[i]];
    total += term;
  }
  return total;
}

// Exact component of eigenvector j at vertex u (product of factor
// components), and its squared norm.
inline Quad amplitude(const NepsSpec& spec, const std::vector<int>& digits, const Vertex& u) {
  Quad prod{1, 0};
  for (int i = 0; i < spec.arity(); ++i)
    prod *= factor_basis(spec.factors[i]).component[digits[i]][u[i]];
  return prod;
}

inline Int norm2_of(const NepsSpec& spec, const std::vector<int>& digits) {
  Int n = 1;
  for (int i = 0; i < spec.arity(); ++i)
    n = checked_mul(n, factor_basis(spec.factors[i]).norm2[digits[i]]);
  return n;
}

struct SpectrumEntry {
  Quad value;
  long long multiplicity = 0;
};

// Distinct eigenvalues in increasing order with multiplicities, by exact
// comparison.
inline std::vector<SpectrumEntry> distinct_spectrum(const NepsSpec& spec) {
  std::map<Quad, long long> counts;
  long long total = spec.vertex_count();
  for (long long flat = 0; flat < total; ++flat)
    ++counts[eigenvalue_of(spec, eigen_digits(spec, flat))];
  std::vector<SpectrumEntry> out;
  out.reserve(counts.size());
  for (const auto& [value, mult] : counts) out.push_back({value, mult});
  return out;
}

// Eigenvalue support of a vertex: distinct eigenvalues whose eigenspace has
// nonzero overlap with e_u.  Individual tensor eigenvectors never vanish at a
// vertex, but cancellation inside a degenerate eigenspace can, so the
// projection sum amp(j,u)^2 / norm2_j is accumulated exactly per eigenvalue.
inline std::vector<Quad> eigenvalue_support(const NepsSpec& spec, const Vertex& u) {
  std::map<Quad, QuadRat> proj;
  long long total = spec.vertex_count();
  for (long long flat = 0; flat < total; ++flat) {
    std::vector<int> digits = eigen_digits(spec, flat);
    Quad amp = amplitude(spec, digits, u);
    if (amp.is_zero()) continue;
    QuadRat w = QuadRat::from_quad(amp * amp).div(Rational::integer(norm2_of(spec, digits)));
    proj[eigenvalue_of(spec, digits)] += w;
  }
  std::vector<Quad> support;
  for (const auto& [value, weight] : proj)
    if (!weight.is_zero()) support.push_back(value);
  return support;
}

// Collapsed pair kernel: the transfer amplitude between u and v is
//   H(t)_{vu} = sum over distinct eigenvalues of W * exp(-i t lambda),
// with W = sum_j amp(j,u) amp(j,v) / norm2_j accumulated exactly and only
// then rounded.  Evaluating a time costs O(#distinct eigenvalues).
class PairKernel {
 public:
  PairKernel(const NepsSpec& spec, const Vertex& u, const Vertex& v) {
    std::map<Quad, QuadRat> acc;
    long long total = spec.vertex_count();
    for (long long flat = 0; flat < total; ++flat) {
      std::vector<int> digits = eigen_digits(spec, flat);
      Quad prod = amplitude(spec, digits, u) * amplitude(spec, digits, v);
      if (prod.is_zero()) continue;
      acc[eigenvalue_of(spec, digits)] +=
          QuadRat::from_quad(prod).div(Rational::integer(norm2_of(spec, digits)));
    }
    for (const auto& [value, weight] : acc) {
      if (weight.is_zero()) continue;
      lambda_.push_back(value.to_double());
      weight_.push_back(weight.to_double());
    }
  }

  Complex amplitude_at(double t) const {
    Complex z{};
    for (std::size_t i = 0; i < lambda_.size(); ++i)
      z += weight_[i] * std::polar(1.0, -t * lambda_[i]);
    return z;
  }

  double fidelity_at(double t) const { return std::abs(amplitude_at(t)); }

  std::size_t term_count() const { return lambda_.size(); }

 private:
  std::vector<double> lambda_;
  std::vector<double> weight_;
};

// Column u of H(t) = exp(-i t A) by axis-wise tensor contraction: start from
// the selector-indexed coefficients c_j = exp(-i t Lambda_j) amp(j,u) /
// norm2_j and contract each axis with the factor components.  O(V * n) per
// column.
inline std::vector<Complex> evolve_vertex(const NepsSpec& spec, const Vertex& u, double t) {
  long long total = spec.vertex_count();
  int n = spec.arity();
  std::vector<Complex> data(total);
  std::vector<int> digits(n, 0);
  for (long long flat = 0; flat < total; ++flat) {
    double amp = 1.0;
    Int norm2 = 1;
    for (int i = 0; i < n; ++i) {
      const FactorBasis& fb = factor_basis(spec.factors[i]);
      amp *= fb.component_f[digits[i]][u[i]];
      norm2 = checked_mul(norm2, fb.norm2[digits[i]]);
    }
    double lambda = eigenvalue_of(spec, digits).to_double();
    data[flat] = amp / static_cast<double>(norm2) * std::polar(1.0, -t * lambda);
    // next selector (odometer, last coordinate fastest)
    for (int i = n - 1; i >= 0; --i) {
      if (++digits[i] < factor_order(spec.factors[i])) break;
      digits[i] = 0;
    }
  }
  // contract axes back to vertex coordinates, last axis first (stride 1)
  long long stride = 1;
  for (int i = n - 1; i >= 0; --i) {
    const FactorBasis& fb = factor_basis(spec.factors[i]);
    int d = fb.size;
    long long block = stride * d;
    std::array<Complex, 3> in{}, out{};
    for (long long base = 0; base < total; base += block)
      for (long long off = 0; off < stride; ++off) {
        for (int j = 0; j < d; ++j) in[j] = data[base + off + j * stride];
        for (int w = 0; w < d; ++w) {
          Complex z{};
          for (int j = 0; j < d; ++j) z += fb.component_f[j][w] * in[j];
          out[w] = z;
        }
        for (int w = 0; w < d; ++w) data[base + off + w * stride] = out[w];
      }
    stride = block;
  }
  return data;
}

inline Complex transfer_amplitude(const NepsSpec& spec, const Vertex& u, const Vertex& v,
                                  double t) {
  long long total = spec.vertex_count();
  Complex z{};
  std::vector<int> digits(spec.arity(), 0);
  for (long long flat = 0; flat < total; ++flat) {
    Quad prod = amplitude(spec, digits, u) * amplitude(spec, digits, v);
    if (!prod.is_zero()) {
      double lambda = eigenvalue_of(spec, digits).to_double();
      z += prod.to_double() / static_cast<double>(norm2_of(spec, digits)) *
           std::polar(1.0, -t * lambda);
    }
    for (int i = spec.arity() - 1; i >= 0; --i) {
      if (++digits[i] < factor_order(spec.factors[i])) break;
      digits[i] = 0;
    }
  }
  return z;
}

// Full H(t), column per vertex; guarded by the dense limit.
inline std::vector<std::vector<Complex>> transition_matrix(const NepsSpec& spec, double t,
                                                           long long dense_limit) {
  long long n = spec.vertex_count();
  if (n > dense_limit)
    throw SpecError("graph has " + std::to_string(n) + " vertices, above the dense limit " +
                    std::to_string(dense_limit));
  std::vector<std::vector<Complex>> h(n, std::vector<Complex>(n));
  for (long long u = 0; u < n; ++u) {
    std::vector<Complex> col = evolve_vertex(spec, vertex_tuple(spec, u), t);
    for (long long v = 0; v < n; ++v) h[v][u] = col[v];
  }
  return h;
}

}  // namespace ctqw
