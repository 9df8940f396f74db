#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "luq/common.hpp"
#include "luq/rng.hpp"

namespace luq {

/// Fixed-dimension real vector.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : e_(dim, fill) {}
  explicit Vector(std::vector<double> entries) : e_(std::move(entries)) {}
  Vector(std::initializer_list<double> entries) : e_(entries) {}

  static Vector zero(std::size_t dim) { return Vector(dim); }

  std::size_t dim() const { return e_.size(); }
  double& operator[](std::size_t i) { return e_[i]; }
  double operator[](std::size_t i) const { return e_[i]; }
  const std::vector<double>& entries() const { return e_; }

  Vector& operator+=(const Vector& o);
  Vector& operator-=(const Vector& o);
  Vector& operator*=(double s);
  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(double s, Vector v) { return v *= s; }

  double dot(const Vector& o) const;
  double norm() const;
  double norm_sq() const { return dot(*this); }
  bool all_finite() const;

 private:
  std::vector<double> e_;
};

/// Dense symmetric matrix. Only the upper triangle is stored; reads mirror
/// it, so the symmetry invariant cannot be broken by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : d_(dim), u_(dim * (dim + 1) / 2, 0.0) {}

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(const std::vector<double>& diag);

  std::size_t dim() const { return d_; }

  double operator()(std::size_t i, std::size_t j) const {
    return i <= j ? u_[index(i, j)] : u_[index(j, i)];
  }
  void set(std::size_t i, std::size_t j, double v) {
    u_[i <= j ? index(i, j) : index(j, i)] = v;
  }

  /// Packed upper triangle in row-major order (the serialization layout).
  const std::vector<double>& upper() const { return u_; }
  static SymMatrix from_upper(std::size_t dim, const std::vector<double>& upper);

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix m) { return m *= s; }

  Vector apply(const Vector& v) const;  // m * v
  double frobenius_norm() const;
  bool all_finite() const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * d_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t d_ = 0;
  std::vector<double> u_;
};

struct EigenDecomposition {
  std::vector<double> values;           // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] is the k-th eigenvector
};

/// Cyclic Jacobi eigendecomposition for symmetric matrices. Converges when
/// the off-diagonal Frobenius mass drops below 1e-14 times the input norm;
/// capped at 100 sweeps.
EigenDecomposition sym_eigen(const SymMatrix& m);

/// Inverse of a symmetric positive definite matrix (rejects
/// lambda_min <= 1e-12 * lambda_max, reporting lambda_min).
SymMatrix sym_inverse(const SymMatrix& m);

/// max |eigenvalue|.
double operator_norm(const SymMatrix& m);

/// v^T m v without materializing any matrix square root.
double quad_form(const SymMatrix& m, const Vector& v);

/// Symmetric part (ab + ba) / 2 of the product of two symmetric matrices.
/// When a and b commute this equals ab up to rounding.
SymMatrix symmetrized_product(const SymMatrix& a, const SymMatrix& b);

/// Random SPD matrix with eigenvalues in [eig_lo, eig_hi]; the extreme
/// eigenvalues are pinned to the interval endpoints.
SymMatrix random_spd(std::size_t dim, double eig_lo, double eig_hi, Stream& rng);

}  // namespace luq
