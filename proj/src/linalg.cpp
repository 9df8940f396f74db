#include "luq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace luq {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    std::ostringstream os;
    os << where << ": dimension mismatch (" << a << " vs " << b << ")";
    fail(ErrorCode::dimension_mismatch, os.str());
  }
}

}  // namespace

Vector& Vector::operator+=(const Vector& o) {
  require_same_dim(dim(), o.dim(), "Vector::operator+=");
  for (std::size_t i = 0; i < e_.size(); ++i) e_[i] += o.e_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& o) {
  require_same_dim(dim(), o.dim(), "Vector::operator-=");
  for (std::size_t i = 0; i < e_.size(); ++i) e_[i] -= o.e_[i];
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& x : e_) x *= s;
  return *this;
}

double Vector::dot(const Vector& o) const {
  require_same_dim(dim(), o.dim(), "Vector::dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < e_.size(); ++i) acc += e_[i] * o.e_[i];
  return acc;
}

double Vector::norm() const { return std::sqrt(norm_sq()); }

bool Vector::all_finite() const {
  for (double x : e_)
    if (!std::isfinite(x)) return false;
  return true;
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_upper(std::size_t dim, const std::vector<double>& upper) {
  require(upper.size() == dim * (dim + 1) / 2, ErrorCode::invalid_argument,
          "SymMatrix::from_upper: wrong packed length");
  SymMatrix m(dim);
  m.u_ = upper;
  return m;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  require_same_dim(d_, o.d_, "SymMatrix::operator+=");
  for (std::size_t i = 0; i < u_.size(); ++i) u_[i] += o.u_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  require_same_dim(d_, o.d_, "SymMatrix::operator-=");
  for (std::size_t i = 0; i < u_.size(); ++i) u_[i] -= o.u_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& x : u_) x *= s;
  return *this;
}

Vector SymMatrix::apply(const Vector& v) const {
  require_same_dim(d_, v.dim(), "SymMatrix::apply");
  Vector out(d_);
  for (std::size_t i = 0; i < d_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d_; ++j) acc += (*this)(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

double SymMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j) {
      const double x = (*this)(i, j);
      acc += x * x;
    }
  return std::sqrt(acc);
}

bool SymMatrix::all_finite() const {
  for (double x : u_)
    if (!std::isfinite(x)) return false;
  return true;
}

EigenDecomposition sym_eigen(const SymMatrix& m) {
  const std::size_t d = m.dim();
  require(d >= 1, ErrorCode::invalid_argument, "sym_eigen: empty matrix");

  // Dense working copy a and accumulated rotations v.
  std::vector<std::vector<double>> a(d, std::vector<double>(d));
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    v[i][i] = 1.0;
    for (std::size_t j = 0; j < d; ++j) a[i][j] = m(i, j);
  }

  const double scale = m.frobenius_norm();
  const double stop = 1e-14 * scale;
  const int max_sweeps = 100;

  auto off_mass = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) acc += 2.0 * a[i][j] * a[i][j];
    return std::sqrt(acc);
  };

  bool converged = (d == 1) || off_mass() <= stop;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p][q];
        if (apq == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
    converged = off_mass() <= stop;
  }
  if (!converged) {
    std::ostringstream os;
    os << "sym_eigen: Jacobi sweeps did not converge for " << d << "x" << d
       << " matrix (off-diagonal mass " << off_mass() << ", threshold " << stop << ")";
    fail(ErrorCode::no_convergence, os.str());
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a[i][i] < a[j][j]; });

  EigenDecomposition out;
  out.values.resize(d);
  out.vectors.resize(d, std::vector<double>(d));
  for (std::size_t k = 0; k < d; ++k) {
    out.values[k] = a[order[k]][order[k]];
    for (std::size_t i = 0; i < d; ++i) out.vectors[k][i] = v[i][order[k]];
  }
  return out;
}

SymMatrix sym_inverse(const SymMatrix& m) {
  const auto eig = sym_eigen(m);
  const double lo = eig.values.front();
  const double hi = eig.values.back();
  if (!(lo > 1e-12 * std::max(hi, 0.0))) {
    std::ostringstream os;
    os << "sym_inverse: matrix is singular or indefinite (lambda_min = " << lo
       << ", lambda_max = " << hi << ")";
    fail(ErrorCode::singular_matrix, os.str());
  }
  const std::size_t d = m.dim();
  SymMatrix out(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        acc += eig.vectors[k][i] * eig.vectors[k][j] / eig.values[k];
      out.set(i, j, acc);
    }
  return out;
}

double operator_norm(const SymMatrix& m) {
  const auto eig = sym_eigen(m);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

double quad_form(const SymMatrix& m, const Vector& v) {
  require_same_dim(m.dim(), v.dim(), "quad_form");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    acc += m(i, i) * v[i] * v[i];
    for (std::size_t j = i + 1; j < m.dim(); ++j) acc += 2.0 * m(i, j) * v[i] * v[j];
  }
  return acc;
}

SymMatrix symmetrized_product(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "symmetrized_product");
  const std::size_t d = a.dim();
  SymMatrix out(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double ab = 0.0;
      double ba = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        ab += a(i, k) * b(k, j);
        ba += b(i, k) * a(k, j);
      }
      out.set(i, j, 0.5 * (ab + ba));
    }
  return out;
}

SymMatrix random_spd(std::size_t dim, double eig_lo, double eig_hi, Stream& rng) {
  require(eig_lo > 0.0, ErrorCode::invalid_argument, "random_spd: eig_lo must be positive");
  require(eig_lo <= eig_hi, ErrorCode::invalid_argument, "random_spd: eig_lo > eig_hi");
  require(dim >= 1, ErrorCode::invalid_argument, "random_spd: dim must be >= 1");

  std::vector<double> lambda(dim);
  lambda[0] = eig_lo;
  if (dim > 1) lambda[dim - 1] = eig_hi;
  for (std::size_t i = 1; i + 1 < dim; ++i)
    lambda[i] = eig_lo + (eig_hi - eig_lo) * rng.next_unit();

  // Random orthogonal basis: Gram-Schmidt on a Gaussian matrix (columns).
  std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
  for (std::size_t col = 0; col < dim; ++col) {
    for (std::size_t i = 0; i < dim; ++i) q[col][i] = rng.next_gaussian();
    for (int attempt = 0;; ++attempt) {
      for (std::size_t prev = 0; prev < col; ++prev) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += q[col][i] * q[prev][i];
        for (std::size_t i = 0; i < dim; ++i) q[col][i] -= proj * q[prev][i];
      }
      double nrm = 0.0;
      for (double x : q[col]) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (double& x : q[col]) x /= nrm;
        break;
      }
      require(attempt < 32, ErrorCode::no_convergence,
              "random_spd: failed to orthonormalize random basis");
      for (std::size_t i = 0; i < dim; ++i) q[col][i] = rng.next_gaussian();
    }
  }

  SymMatrix out(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += q[k][i] * lambda[k] * q[k][j];
      out.set(i, j, acc);
    }
  return out;
}

}  // namespace luq
