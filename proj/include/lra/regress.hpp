#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lra/matkit.hpp"

namespace lra::regress {

using matkit::Matrix;
using matkit::SvdFactors;

/// Feature matrix plus response vector; the substrate every attack perturbs.
struct Dataset {
  Matrix x;  // n-by-m, n > m, full column rank
  Vec y;     // length n
  std::vector<std::string> feature_names;  // optional, may be empty

  std::size_t n() const { return x.rows(); }
  std::size_t m() const { return x.cols(); }
};

/// Everything the attack algorithms consume about a fitted model. `gram_inv`
/// absorbs the ridge term when one is used; `pinv`/`svd`/`proj_residual`
/// always describe the plain feature matrix.
struct RegressionFit {
  Vec beta0;            // coefficients on the clean data
  Matrix gram_inv;      // (X^T X + reg I)^{-1}
  Matrix pinv;          // X+ (m-by-n)
  SvdFactors svd;       // of X
  Matrix proj_residual; // I - X X+ (n-by-n)
  double ridge = 0.0;

  std::size_t n() const { return pinv.cols(); }
  std::size_t m() const { return pinv.rows(); }
  double sigma_min() const { return svd.singular_values.empty() ? 0.0 : svd.singular_values.back(); }
};

/// One adversarial sample and what it does to the fit.
struct PoisonPoint {
  Vec x0;
  double y0 = 0.0;
  Vec predicted_beta;       // refit coefficients with this point added
  double predicted_value = 0.0;  // attack objective at this point
};

namespace detail {

inline void validate(const Dataset& data) {
  // Square invertible designs are admitted so the identity case works.
  if (data.x.rows() < data.x.cols()) throw DimensionError("dataset: need at least as many samples as features");
  if (data.y.size() != data.x.rows()) throw DimensionError("dataset: response length != sample count");
  if (!data.x.all_finite()) throw DimensionError("dataset: non-finite feature entries");
}

}  // namespace detail

/// Ridge fit; reg = 0 reduces to ordinary least squares. Throws
/// SingularityError when the features are rank deficient.
inline RegressionFit fit_ridge(const Dataset& data, double reg,
                               const Tolerances& tol = default_tolerances()) {
  detail::validate(data);
  if (reg < 0.0) throw DimensionError("fit_ridge: regularizer must be nonnegative");
  const std::size_t n = data.n();
  const std::size_t m = data.m();

  RegressionFit fit;
  fit.ridge = reg;
  fit.svd = matkit::svd(data.x, tol);
  const double sigma_max = fit.svd.singular_values[0];
  const double sigma_min = fit.svd.singular_values[m - 1];
  if (sigma_min <= tol.rank_rel * std::max(1.0, sigma_max))
    throw SingularityError("fit: feature matrix is rank deficient", sigma_min, sigma_max);

  // gram_inv = V diag(1/(sigma^2 + reg)) V^T ; pinv = V diag(1/sigma) U^T.
  fit.gram_inv = Matrix(m, m);
  fit.pinv = Matrix(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = fit.svd.singular_values[k];
    const double gw = 1.0 / (s * s + reg);
    for (std::size_t i = 0; i < m; ++i) {
      const double vik = fit.svd.v(i, k);
      for (std::size_t j = i; j < m; ++j) fit.gram_inv(i, j) += gw * vik * fit.svd.v(j, k);
      const double pw = vik / s;
      for (std::size_t j = 0; j < n; ++j) fit.pinv(i, j) += pw * fit.svd.u(j, k);
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j) fit.gram_inv(i, j) = fit.gram_inv(j, i);

  fit.beta0 = fit.gram_inv * matkit::transpose_times(data.x, data.y);

  fit.proj_residual = Matrix(n, n);
  const Matrix hat = data.x * fit.pinv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      fit.proj_residual(i, j) = (i == j ? 1.0 : 0.0) - hat(i, j);
  return fit;
}

inline RegressionFit fit_ols(const Dataset& data, const Tolerances& tol = default_tolerances()) {
  return fit_ridge(data, 0.0, tol);
}

/// Rank-one refit: coefficients after appending (x0, y0), using the closed
/// form beta0 + A x0 (y0 - x0^T beta0) / (1 + x0^T A x0).
inline Vec refit_add_point(const RegressionFit& fit, const Vec& x0, double y0) {
  if (x0.size() != fit.m()) throw DimensionError("refit_add_point: feature length mismatch");
  const Vec ax = fit.gram_inv * x0;
  const double denom = 1.0 + matkit::dot(x0, ax);
  const double resid = y0 - matkit::dot(x0, fit.beta0);
  Vec beta = fit.beta0;
  matkit::axpy(resid / denom, ax, beta);
  return beta;
}

inline Vec refit_add_point(const RegressionFit& fit, const PoisonPoint& p) {
  return refit_add_point(fit, p.x0, p.y0);
}

/// Brute-force refit: ordinary least squares on the augmented (n+1)-row
/// dataset. The oracle counterpart of refit_add_point.
inline Vec refit_direct(const Dataset& data, const PoisonPoint& p,
                        const Tolerances& tol = default_tolerances()) {
  if (p.x0.size() != data.m()) throw DimensionError("refit_direct: feature length mismatch");
  const std::size_t n = data.n();
  const std::size_t m = data.m();
  Matrix xa(n + 1, m);
  Vec ya(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) xa(i, j) = data.x(i, j);
    ya[i] = data.y[i];
  }
  for (std::size_t j = 0; j < m; ++j) xa(n, j) = p.x0[j];
  ya[n] = p.y0;
  const Matrix xp = matkit::pinv(xa, tol);
  return xp * ya;
}

/// Builds a PoisonPoint with its predicted refit attached. `target_index`
/// selects which coefficient the predicted_value reports.
inline PoisonPoint make_poison_point(const RegressionFit& fit, Vec x0, double y0,
                                     std::size_t target_index) {
  PoisonPoint p;
  p.x0 = std::move(x0);
  p.y0 = y0;
  p.predicted_beta = refit_add_point(fit, p.x0, y0);
  p.predicted_value = p.predicted_beta.at(target_index);
  return p;
}

}  // namespace lra::regress
