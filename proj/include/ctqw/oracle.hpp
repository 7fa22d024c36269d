#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Self-contained numerical oracle: a cyclic Jacobi eigensolver for real
// symmetric matrices and exp(-i t A) built from it.  Deliberately independent
// of the exact spectral machinery (and of everything else in this library, so
// it can be compiled on its own) -- agreement between the two routes is what
// the tests certify.  Classic Jacobi is slow but its accuracy is easy to
// reason about, which is the point of an oracle.

namespace ctqw::oracle {

struct DenseMatrix {
  int n = 0;
  std::vector<double> a;  // row-major n*n

  DenseMatrix() = default;
  explicit DenseMatrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static DenseMatrix identity(int n) {
    DenseMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

struct EigenResult {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column k is the eigenvector for values[k]
};

// Cyclic Jacobi with the standard stable rotation choice; converges
// quadratically once off-diagonal mass is small.  Throws if the input is not
// symmetric or the sweep budget is exhausted.
inline EigenResult jacobi_eigen(DenseMatrix m) {
  const int n = m.n;
  if (n <= 0) throw std::invalid_argument("jacobi_eigen: empty matrix");
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(m.at(i, j)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-12 * std::max(1.0, scale))
        throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");

  double fro = 0.0;
  for (double x : m.a) fro += x * x;
  fro = std::sqrt(fro);

  DenseMatrix v = DenseMatrix::identity(n);
  const double tol = 1e-14 * std::max(1.0, fro);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
    if (std::sqrt(2.0 * off) < tol) {
      EigenResult r;
      r.values.resize(n);
      for (int i = 0; i < n; ++i) r.values[i] = m.at(i, i);
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int x, int y) { return r.values[x] < r.values[y]; });
      EigenResult sorted;
      sorted.values.resize(n);
      sorted.vectors = DenseMatrix(n);
      for (int k = 0; k < n; ++k) {
        sorted.values[k] = r.values[order[k]];
        for (int i = 0; i < n; ++i) sorted.vectors.at(i, k) = v.at(i, order[k]);
      }
      return sorted;
    }
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = m.at(p, q);
        if (std::abs(apq) <= tol / (4.0 * n * n)) continue;
        double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double mip = m.at(i, p), miq = m.at(i, q);
          m.at(i, p) = c * mip - s * miq;
          m.at(i, q) = s * mip + c * miq;
        }
        for (int i = 0; i < n; ++i) {
          double mpi = m.at(p, i), mqi = m.at(q, i);
          m.at(p, i) = c * mpi - s * mqi;
          m.at(q, i) = s * mpi + c * mqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = v.at(i, p), viq = v.at(i, q);
          v.at(i, p) = c * vip - s * viq;
          v.at(i, q) = s * vip + c * viq;
        }
      }
  }
  throw std::runtime_error("jacobi_eigen: did not converge in 60 sweeps");
}

// exp(-i t A) for symmetric A, row-major complex n*n, via the spectral
// decomposition of the oracle eigensolver.
inline std::vector<std::complex<double>> expm_unitary(const DenseMatrix& a, double t) {
  EigenResult e = jacobi_eigen(a);
  const int n = a.n;
  std::vector<std::complex<double>> phase(n);
  for (int k = 0; k < n; ++k) phase[k] = std::polar(1.0, -t * e.values[k]);
  std::vector<std::complex<double>> u(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::complex<double> z{};
      for (int k = 0; k < n; ++k) z += e.vectors.at(i, k) * phase[k] * e.vectors.at(j, k);
      u[static_cast<std::size_t>(i) * n + j] = z;
    }
  return u;
}

inline double unitary_deviation(const std::vector<std::complex<double>>& u, int n) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::complex<double> dot{};
      for (int k = 0; k < n; ++k)
        dot += std::conj(u[static_cast<std::size_t>(k) * n + i]) *
               u[static_cast<std::size_t>(k) * n + j];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace ctqw::oracle
