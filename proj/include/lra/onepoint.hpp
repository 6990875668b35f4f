#pragma once

#include <cmath>
#include <cstddef>

#include "lra/regress.hpp"

namespace lra::onepoint {

using matkit::Matrix;
using regress::PoisonPoint;
using regress::RegressionFit;

/// Whitened form of the single-coefficient attack. The objective becomes
/// (1/2) u^T objective_form u over the ellipsoid (1/2) u^T constraint_form u
/// <= budget^2, and the whitener diagonalizes the constraint exactly.
struct WhitenedProblem {
  Matrix feature_whitener;    // (1/sqrt(2)) (I + eta^2 A)^{-1/2}
  double response_whitener = 0.0;  // 1/sqrt(2)
  Vec whitened_target;        // feature_whitener * (target column of A)
  Vec whitened_coef;          // feature_whitener * beta0
  Matrix objective_form;      // (m+1) x (m+1), symmetric, zero corner block
  Matrix constraint_form;     // 2 (I + eta^2 blockdiag(A, 0)), positive definite
  double budget = 0.0;
  std::size_t target_index = 0;
};

/// The only nonzero eigenvalues of the whitened objective, with unit
/// eigenvectors. Everything between them is an (m-1)-fold zero.
struct ExtremePair {
  double eig_pos = 0.0;
  double eig_neg = 0.0;
  Vec vec_pos;
  Vec vec_neg;
};

enum class Sense { minimize, maximize };
enum class AbsSense { shrink, grow };

inline WhitenedProblem build_whitened(const RegressionFit& fit, std::size_t target_index, double eta,
                                      const Tolerances& tol = default_tolerances()) {
  const std::size_t m = fit.m();
  if (target_index >= m) throw DimensionError("build_whitened: coefficient index out of range");
  if (!(eta > 0.0)) throw DimensionError("build_whitened: energy budget must be positive");

  const Matrix& a = fit.gram_inv;
  WhitenedProblem wp;
  wp.budget = eta;
  wp.target_index = target_index;
  wp.response_whitener = 1.0 / std::sqrt(2.0);

  Matrix shifted = a;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      shifted(i, j) *= eta * eta;
      if (i == j) shifted(i, j) += 1.0;
    }
  wp.feature_whitener = wp.response_whitener * matkit::inv_sqrt(shifted, tol);

  const Vec target_col = a.col(target_index);
  wp.whitened_target = wp.feature_whitener * target_col;
  wp.whitened_coef = wp.feature_whitener * fit.beta0;

  wp.objective_form = Matrix(m + 1, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      wp.objective_form(i, j) = -target_col[i] * fit.beta0[j] - fit.beta0[i] * target_col[j];
    wp.objective_form(i, m) = target_col[i];
    wp.objective_form(m, i) = target_col[i];
  }

  wp.constraint_form = Matrix(m + 1, m + 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) wp.constraint_form(i, j) = 2.0 * eta * eta * a(i, j);
  for (std::size_t i = 0; i <= m; ++i) wp.constraint_form(i, i) += 2.0;
  return wp;
}

/// Closed-form extreme eigenpairs of the whitened objective: the values are
/// -c.h +- |c| sqrt(g^2 + h.h) and the eigenvectors follow from the
/// rank-structure of the matrix, normalized to unit length.
inline ExtremePair extreme_eigs(const WhitenedProblem& wp) {
  const Vec& c = wp.whitened_target;
  const Vec& h = wp.whitened_coef;
  const double g = wp.response_whitener;
  const std::size_t m = c.size();

  const double cc = matkit::dot(c, c);
  if (cc == 0.0) throw DegenerateTargetError("extreme_eigs: target column of the Gram inverse is zero");
  const double ch = matkit::dot(c, h);
  const double hh = matkit::dot(h, h);
  const double root = std::sqrt(cc) * std::sqrt(g * g + hh);

  ExtremePair out;
  out.eig_pos = -ch + root;
  out.eig_neg = -ch - root;

  const auto eigenvector = [&](double xi) {
    const double t = -(ch + xi) / cc;
    Vec v(m + 1);
    double cp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = t * c[i] + h[i];
      cp += c[i] * v[i];
    }
    v[m] = g * cp / xi;
    const double nv = matkit::norm2(v);
    for (double& x : v) x /= nv;
    return v;
  };
  out.vec_pos = eigenvector(out.eig_pos);
  out.vec_neg = eigenvector(out.eig_neg);
  return out;
}

/// One optimal poisoning point for pushing a single coefficient down
/// (minimize) or up (maximize). The returned predicted_value is the closed
/// form budget^2 * xi + beta0_i.
inline PoisonPoint attack_coefficient(const RegressionFit& fit, std::size_t target_index, double eta,
                                      Sense sense, const Tolerances& tol = default_tolerances()) {
  const WhitenedProblem wp = build_whitened(fit, target_index, eta, tol);
  const ExtremePair pair = extreme_eigs(wp);
  const double xi = sense == Sense::minimize ? pair.eig_neg : pair.eig_pos;
  const Vec& nu = sense == Sense::minimize ? pair.vec_neg : pair.vec_pos;
  const std::size_t m = fit.m();

  // z = sqrt(2) eta D^{-1/2} nu, with D^{-1/2} = diag(feature_whitener, g).
  Vec nu_head(nu.begin(), nu.begin() + m);
  Vec z = wp.feature_whitener * nu_head;
  const double k = std::sqrt(2.0) * eta;
  for (double& v : z) v *= k;
  const double z_last = k * wp.response_whitener * nu[m];

  const Vec az = fit.gram_inv * z;
  const double s_sq = 1.0 - matkit::dot(z, az);
  if (!(s_sq > 0.0)) throw RecoveryError("attack_coefficient: scale recovery failed (s^2 <= 0)");
  const double s = std::sqrt(s_sq);

  Vec x0 = z;
  for (double& v : x0) v /= s;
  PoisonPoint p = regress::make_poison_point(fit, std::move(x0), z_last / s, target_index);
  p.predicted_value = eta * eta * xi + fit.beta0[target_index];
  return p;
}

/// Result of the absolute-value objectives: shrink |beta_i| or grow |beta_i|.
struct AbsAttackResult {
  PoisonPoint point;
  double target_abs_value = 0.0;  // |coefficient| the attack achieves
  Sense sense_used = Sense::minimize;
  bool zero_attainable = false;   // budget suffices to drive the coefficient to 0
  bool zeroed_exactly = false;    // point below was rescaled to land on exactly 0
  double budget_used = 0.0;
};

/// Combination rule on top of the signed solutions: for shrink, the optimum is
/// 0 whenever the attainable interval straddles 0; for grow, the wider side
/// wins. When exact zeroing is requested, the budget is bisected so the
/// closed-form value lands on zero (the attainable value is continuous and
/// monotone in the budget).
inline AbsAttackResult solve_abs_objective(const RegressionFit& fit, std::size_t target_index, double eta,
                                           AbsSense sense, bool exact_zero = false,
                                           const Tolerances& tol = default_tolerances()) {
  const WhitenedProblem wp = build_whitened(fit, target_index, eta, tol);
  const ExtremePair pair = extreme_eigs(wp);
  const double beta_i = fit.beta0[target_index];
  const double v_min = eta * eta * pair.eig_neg + beta_i;
  const double v_max = eta * eta * pair.eig_pos + beta_i;

  AbsAttackResult out;
  out.budget_used = eta;

  if (sense == AbsSense::grow) {
    out.sense_used = std::abs(v_max) >= std::abs(v_min) ? Sense::maximize : Sense::minimize;
    out.point = attack_coefficient(fit, target_index, eta, out.sense_used, tol);
    out.target_abs_value = std::abs(out.point.predicted_value);
    return out;
  }

  // Shrink. The attainable coefficient values form the interval [v_min, v_max]
  // (0 in the ball gives beta_i itself, extremes are the closed forms).
  if (v_min <= 0.0 && 0.0 <= v_max) {
    out.zero_attainable = true;
    out.target_abs_value = 0.0;
    // The side that crosses zero as the budget grows from 0.
    out.sense_used = beta_i >= 0.0 ? Sense::minimize : Sense::maximize;
    if (!exact_zero) {
      out.point = attack_coefficient(fit, target_index, eta, out.sense_used, tol);
      return out;
    }
    // Bisection over the budget: value(eta') moves monotonically from beta_i
    // at 0+ to v_min (or v_max) at eta, crossing zero exactly once.
    double lo = 0.0;
    double hi = eta;
    double mid = eta;
    PoisonPoint best;
    for (int iter = 0; iter < 200; ++iter) {
      mid = 0.5 * (lo + hi);
      if (mid <= 0.0) break;
      const PoisonPoint p = attack_coefficient(fit, target_index, mid, out.sense_used, tol);
      const double val = p.predicted_value;
      best = p;
      if (std::abs(val) <= 1e-12 * (1.0 + std::abs(beta_i))) break;
      const bool same_side_as_start = beta_i >= 0.0 ? val > 0.0 : val < 0.0;
      if (same_side_as_start)
        lo = mid;
      else
        hi = mid;
    }
    out.point = best;
    out.budget_used = mid;
    out.zeroed_exactly = true;
    return out;
  }

  // Entire attainable interval on one side of zero: pick the endpoint closer
  // to zero. For beta_i > 0 with v_min > 0 this is the minimize solution.
  out.sense_used = std::abs(v_min) <= std::abs(v_max) ? Sense::minimize : Sense::maximize;
  out.point = attack_coefficient(fit, target_index, eta, out.sense_used, tol);
  out.target_abs_value = std::abs(out.point.predicted_value);
  return out;
}

}  // namespace lra::onepoint
