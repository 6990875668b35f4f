#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <utility>
#include <vector>

#include "lra/errors.hpp"
#include "lra/tolerances.hpp"

namespace lra {

using Vec = std::vector<double>;

namespace matkit {

/// Dense real matrix, row-major. Small-to-medium problems only (~1000x1000).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(const Vec& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("from_rows: ragged initializer");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

  Vec col(std::size_t j) const {
    Vec out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_col(std::size_t j, const Vec& v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

// ---------------------------------------------------------------------------
// Elementwise and BLAS-ish helpers.

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("matrix add: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] += b.data()[i];
  return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("matrix sub: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] *= s;
  return out;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix mul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += aik * bk[j];
    }
  }
  return out;
}

inline Vec operator*(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size()) throw DimensionError("matvec: dimension mismatch");
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    out[i] = acc;
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

/// y = A^T x without forming the transpose.
inline Vec transpose_times(const Matrix& a, const Vec& x) {
  if (a.rows() != x.size()) throw DimensionError("transpose_times: dimension mismatch");
  Vec out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += ai[j] * xi;
  }
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vec operator+(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("vec add: length mismatch");
  Vec out = a;
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("vec sub: length mismatch");
  Vec out = a;
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

inline Vec operator*(double s, const Vec& a) {
  Vec out = a;
  for (double& v : out) v *= s;
  return out;
}

/// a += s * b
inline void axpy(double s, const Vec& b, Vec& a) {
  if (a.size() != b.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += s * b[i];
}

inline Matrix outer(const Vec& a, const Vec& b) {
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  return out;
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

inline bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * std::max(1.0, scale)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Factorization results.

/// Full symmetric eigendecomposition, eigenvalues descending, eigenvectors in
/// matching columns. Each eigenvector has its first non-negligible entry >= 0
/// so repeated runs produce identical output.
struct SymEig {
  Vec values;
  Matrix vectors;
};

/// X = U * S * V^T with U n-by-n, V m-by-m orthonormal and S the n-by-m
/// rectangular diagonal of singular_values (descending).
struct SvdFactors {
  Matrix u;
  Vec singular_values;
  Matrix v;
};

namespace detail {

inline void require_square_symmetric(const Matrix& s, const Tolerances& tol, const char* who) {
  if (s.rows() != s.cols()) throw DimensionError(std::string(who) + ": matrix must be square");
  if (!s.all_finite()) throw DimensionError(std::string(who) + ": non-finite entries");
  if (!is_symmetric(s, tol.symmetry_rel)) throw SymmetryError(std::string(who) + ": matrix not symmetric");
}

inline void fix_column_signs(Matrix& q) {
  const std::size_t n = q.rows();
  for (std::size_t j = 0; j < q.cols(); ++j) {
    double lead = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(q(i, j)));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(q(i, j)) > 1e-12 * std::max(1.0, scale)) {
        lead = q(i, j);
        break;
      }
    }
    if (lead < 0.0)
      for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
  }
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Deterministic: fixed sweep order, descending
/// sort with stable tie-break, sign convention on eigenvectors.
inline SymEig sym_eig(const Matrix& s, const Tolerances& tol = default_tolerances()) {
  detail::require_square_symmetric(s, tol, "sym_eig");
  const std::size_t n = s.rows();
  Matrix a = s;
  // Work on the symmetrized copy so tiny declared-symmetric noise cancels.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = v;
    }
  Matrix q = Matrix::identity(n);

  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(a(i, i)));
  diag_scale = std::max(diag_scale, max_abs(a));

  for (int sweep = 0; sweep < tol.jacobi_max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
    if (off <= tol.jacobi_rel * std::max(1.0, diag_scale)) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q_idx = p + 1; q_idx < n; ++q_idx) {
        const double apq = a(p, q_idx);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(q_idx, q_idx);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q_idx);
          a(k, p) = c * akp - sn * akq;
          a(k, q_idx) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q_idx, k);
          a(p, k) = c * apk - sn * aqk;
          a(q_idx, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkq = q(k, q_idx);
          q(k, p) = c * qkp - sn * qkq;
          q(k, q_idx) = sn * qkp + c * qkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = q(i, order[j]);
  }
  detail::fix_column_signs(out.vectors);
  return out;
}

namespace detail {

/// Modified Gram-Schmidt, run twice for orthogonality at working precision.
inline void orthonormalize_columns(Matrix& u) {
  const std::size_t m = u.cols();
  for (std::size_t j = 0; j < m; ++j) {
    Vec v = u.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        const Vec uk = u.col(k);
        axpy(-dot(uk, v), uk, v);
      }
    const double nv = norm2(v);
    if (nv <= 0.0) throw NumericalError("orthonormalize_columns: dependent column");
    for (double& x : v) x /= nv;
    u.set_col(j, v);
  }
}

/// Completes r orthonormal columns to a full n-by-n orthonormal basis using
/// the Householder Q of the input block; the input columns are kept verbatim.
inline Matrix complete_orthonormal_basis(const Matrix& u1) {
  const std::size_t n = u1.rows();
  const std::size_t r = u1.cols();
  Matrix a = u1;
  std::vector<Vec> reflectors;
  std::vector<double> taus;
  reflectors.reserve(r);
  taus.reserve(r);
  for (std::size_t k = 0; k < r; ++k) {
    Vec v(n - k, 0.0);
    double xnorm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i - k] = a(i, k);
      xnorm2 += a(i, k) * a(i, k);
    }
    const double xnorm = std::sqrt(xnorm2);
    double tau = 0.0;
    if (xnorm > 0.0) {
      const double alpha = v[0] >= 0.0 ? -xnorm : xnorm;
      v[0] -= alpha;
      const double vnorm2 = dot(v, v);
      if (vnorm2 > 0.0) {
        tau = 2.0 / vnorm2;
        for (std::size_t j = k; j < r; ++j) {
          double proj = 0.0;
          for (std::size_t i = k; i < n; ++i) proj += v[i - k] * a(i, j);
          proj *= tau;
          for (std::size_t i = k; i < n; ++i) a(i, j) -= proj * v[i - k];
        }
      }
    }
    reflectors.push_back(std::move(v));
    taus.push_back(tau);
  }
  Matrix q = Matrix::identity(n);
  for (std::size_t kk = r; kk-- > 0;) {
    if (taus[kk] == 0.0) continue;
    const Vec& v = reflectors[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = kk; i < n; ++i) proj += v[i - kk] * q(i, j);
      proj *= taus[kk];
      for (std::size_t i = kk; i < n; ++i) q(i, j) -= proj * v[i - kk];
    }
  }
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < n; ++i) q(i, j) = u1(i, j);
  return q;
}

}  // namespace detail

/// SVD of a tall (or square) matrix via the Gram-matrix eigendecomposition:
/// eigenvectors of X^T X give V and sigma^2; left vectors come from X V / sigma
/// and are completed to a full orthonormal basis of R^n.
inline SvdFactors svd(const Matrix& x, const Tolerances& tol = default_tolerances()) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (n < m) throw DimensionError("svd: expected rows >= cols (full column rank model)");
  if (!x.all_finite()) throw DimensionError("svd: non-finite entries");

  Matrix gram(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += x(k, i) * x(k, j);
      gram(i, j) = gram(j, i) = acc;
    }

  const SymEig eig = sym_eig(gram, tol);
  SvdFactors out;
  out.v = eig.vectors;
  out.singular_values.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.singular_values[i] = std::sqrt(std::max(eig.values[i], 0.0));

  const double sigma_max = m > 0 ? out.singular_values[0] : 0.0;
  std::size_t rank = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (out.singular_values[j] <= tol.rank_rel * std::max(1.0, sigma_max)) break;
    ++rank;
  }
  Matrix u1(n, rank);
  for (std::size_t j = 0; j < rank; ++j) {
    Vec uj = x * out.v.col(j);
    for (double& v : uj) v /= out.singular_values[j];
    u1.set_col(j, uj);
  }
  // The computed columns are orthonormal up to Gram-eig noise; clean them,
  // then extend to a full basis of R^n.
  detail::orthonormalize_columns(u1);
  out.u = detail::complete_orthonormal_basis(u1);
  return out;
}

/// Moore-Penrose inverse of a full-column-rank tall matrix, X+ = V S+ U^T.
inline Matrix pinv(const Matrix& x, const Tolerances& tol = default_tolerances()) {
  const SvdFactors f = svd(x, tol);
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  const double sigma_max = m > 0 ? f.singular_values[0] : 0.0;
  const double sigma_min = m > 0 ? f.singular_values[m - 1] : 0.0;
  if (m > 0 && sigma_min <= tol.rank_rel * std::max(1.0, sigma_max))
    throw SingularityError("pinv: matrix is rank deficient", sigma_min, sigma_max);
  Matrix out(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    const double inv_s = 1.0 / f.singular_values[k];
    for (std::size_t i = 0; i < m; ++i) {
      const double vik = f.v(i, k) * inv_s;
      if (vik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * f.u(j, k);
    }
  }
  return out;
}

/// Upper-triangular Cholesky factor: S = U^T U.
inline Matrix chol(const Matrix& s, const Tolerances& tol = default_tolerances()) {
  detail::require_square_symmetric(s, tol, "chol");
  const std::size_t n = s.rows();
  Matrix u(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < i; ++k) acc -= u(k, i) * u(k, j);
      u(i, j) = acc / u(i, i);
    }
    double diag = s(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= u(k, j) * u(k, j);
    if (diag <= 0.0) throw NotPositiveDefiniteError("chol: non-positive pivot");
    u(j, j) = std::sqrt(diag);
  }
  return u;
}

/// Symmetric inverse square root: R with R * S * R = I.
inline Matrix inv_sqrt(const Matrix& s, const Tolerances& tol = default_tolerances()) {
  const SymEig eig = sym_eig(s, tol);
  const std::size_t n = s.rows();
  if (n > 0 && eig.values[n - 1] <= 0.0)
    throw NotPositiveDefiniteError("inv_sqrt: matrix is not positive definite");
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double qik = eig.vectors(i, k) * w;
      if (qik == 0.0) continue;
      for (std::size_t j = i; j < n; ++j) out(i, j) += qik * eig.vectors(j, k);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

// ---------------------------------------------------------------------------
// Triangular solves (used by the Cholesky-based reductions).

/// Solve U x = b with U upper triangular.
inline Vec solve_upper(const Matrix& u, const Vec& b) {
  const std::size_t n = u.rows();
  if (u.cols() != n || b.size() != n) throw DimensionError("solve_upper: shape mismatch");
  Vec x = b;
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= u(ii, j) * x[j];
    x[ii] = acc / u(ii, ii);
  }
  return x;
}

/// Solve U^T x = b with U upper triangular (forward substitution).
inline Vec solve_upper_transposed(const Matrix& u, const Vec& b) {
  const std::size_t n = u.rows();
  if (u.cols() != n || b.size() != n) throw DimensionError("solve_upper_transposed: shape mismatch");
  Vec x = b;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = x[i];
    for (std::size_t k = 0; k < i; ++k) acc -= u(k, i) * x[k];
    x[i] = acc / u(i, i);
  }
  return x;
}

/// Rectangular diagonal of an SVD, n-by-m.
inline Matrix svd_sigma(const SvdFactors& f, std::size_t n, std::size_t m) {
  Matrix s(n, m);
  for (std::size_t i = 0; i < m; ++i) s(i, i) = f.singular_values[i];
  return s;
}

}  // namespace matkit
}  // namespace lra
