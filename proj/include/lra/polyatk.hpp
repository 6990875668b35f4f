#pragma once

#include <cmath>
#include <cstddef>

#include "lra/poly.hpp"
#include "lra/regress.hpp"

namespace lra::polyatk {

using matkit::Matrix;
using regress::PoisonPoint;
using regress::RegressionFit;

/// Quartic-over-ball program: attack one coefficient while pinning the rest.
/// After the change of variables x = U w the bi-level objective becomes
///   q(x) = (1/2) (L x (r^T x) - b)^T diag(weights) (L x (r^T x) - b),
/// with the single constraint x^T x <= budget^2.
struct QuarticProgram {
  Matrix form_left;     // L, m-by-(m+1): [A, 0] U^{-1}
  Vec form_right;       // r, length m+1: U^{-T} [-beta0; 1]
  Vec target_shift;     // b = d - beta0; only the target entry is nonzero
  Vec weights;          // diag of the weight matrix: 1 everywhere, tradeoff at the target
  Matrix chol_factor;   // U, upper triangular, U^T U = I + budget^2 gram_ext
  Matrix gram_ext;      // blockdiag(gram_inv, 0), (m+1)-square
  double budget = 0.0;
  double tradeoff = 0.0;
  std::size_t target_index = 0;

  std::size_t num_vars() const { return form_right.size(); }
};

inline QuarticProgram build_quartic(const RegressionFit& fit, std::size_t target_index, double eta,
                                    double lambda, const Tolerances& tol = default_tolerances()) {
  const std::size_t m = fit.m();
  if (target_index >= m) throw DimensionError("build_quartic: coefficient index out of range");
  if (!(eta > 0.0)) throw DimensionError("build_quartic: energy budget must be positive");

  QuarticProgram qp;
  qp.budget = eta;
  qp.tradeoff = lambda;
  qp.target_index = target_index;

  qp.gram_ext = Matrix(m + 1, m + 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) qp.gram_ext(i, j) = fit.gram_inv(i, j);

  Matrix shifted = qp.gram_ext;
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= m; ++j) shifted(i, j) *= eta * eta;
    shifted(i, i) += 1.0;
  }
  qp.chol_factor = matkit::chol(shifted, tol);

  // L = [A, 0] U^{-1}: row k of L solves U^T l = row k of [A, 0].
  qp.form_left = Matrix(m, m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    Vec row(m + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) row[j] = fit.gram_inv(k, j);
    // [A,0] U^{-1} row-wise: solve U^T z = row^T  =>  z^T = row U^{-1}.
    const Vec z = matkit::solve_upper_transposed(qp.chol_factor, row);
    for (std::size_t j = 0; j <= m; ++j) qp.form_left(k, j) = z[j];
  }

  Vec pin(m + 1);
  for (std::size_t j = 0; j < m; ++j) pin[j] = -fit.beta0[j];
  pin[m] = 1.0;
  qp.form_right = matkit::solve_upper_transposed(qp.chol_factor, pin);

  qp.target_shift = Vec(m, 0.0);
  qp.target_shift[target_index] = -fit.beta0[target_index];

  qp.weights = Vec(m, 1.0);
  qp.weights[target_index] = lambda;
  return qp;
}

/// q(x) evaluated directly from the factored form.
inline double objective_value(const QuarticProgram& qp, const Vec& x) {
  if (x.size() != qp.num_vars()) throw DimensionError("objective_value: wrong variable count");
  const double rx = matkit::dot(qp.form_right, x);
  const Vec lx = qp.form_left * x;
  double acc = 0.0;
  for (std::size_t j = 0; j < lx.size(); ++j) {
    const double rj = lx[j] * rx - qp.target_shift[j];
    acc += qp.weights[j] * rj * rj;
  }
  return 0.5 * acc;
}

/// Forward map from a poison point to the program's variable: w = s z with
/// s = 1/sqrt(1 + z^T gram_ext z), then x = U w. Used to cross-check the
/// reduction chain against the bi-level objective.
inline Vec embed_point(const QuarticProgram& qp, const Vec& x0, double y0) {
  const std::size_t m = qp.form_left.rows();
  if (x0.size() != m) throw DimensionError("embed_point: feature length mismatch");
  Vec z(m + 1);
  for (std::size_t j = 0; j < m; ++j) z[j] = x0[j];
  z[m] = y0;
  const double s = 1.0 / std::sqrt(1.0 + matkit::dot(z, qp.gram_ext * z));
  Vec w = z;
  for (double& v : w) v *= s;
  // x = U w.
  Vec x(m + 1, 0.0);
  for (std::size_t i = 0; i <= m; ++i) {
    double acc = 0.0;
    for (std::size_t j = i; j <= m; ++j) acc += qp.chol_factor(i, j) * w[j];
    x[i] = acc;
  }
  return x;
}

/// Expands q into its monomial map together with the ball constraint
/// budget^2 - x^T x >= 0.
inline lasserre::PolynomialProgram as_polynomial(const QuarticProgram& qp) {
  using lasserre::Exponents;
  using lasserre::Polynomial;

  const std::size_t n = qp.num_vars();
  lasserre::PolynomialProgram prog;
  prog.num_vars = n;

  for (std::size_t j = 0; j < qp.form_left.rows(); ++j) {
    // r_j(x) = sum_{k,l} L[j,k] r_l x_k x_l - b_j, a quadratic.
    Polynomial rj;
    for (std::size_t k = 0; k < n; ++k) {
      const double ljk = qp.form_left(j, k);
      if (ljk == 0.0) continue;
      for (std::size_t l = 0; l < n; ++l) {
        Exponents e(n, 0);
        e[k] += 1;
        e[l] += 1;
        lasserre::add_term(rj, e, ljk * qp.form_right[l]);
      }
    }
    lasserre::add_term(rj, Exponents(n, 0), -qp.target_shift[j]);

    const Polynomial sq = lasserre::multiply(rj, rj);
    for (const auto& [e, c] : sq) lasserre::add_term(prog.objective, e, 0.5 * qp.weights[j] * c);
  }
  if (prog.objective.empty()) prog.objective[Exponents(n, 0)] = 0.0;

  Polynomial ball;
  lasserre::add_term(ball, Exponents(n, 0), qp.budget * qp.budget);
  for (std::size_t k = 0; k < n; ++k) {
    Exponents e(n, 0);
    e[k] = 2;
    lasserre::add_term(ball, e, -1.0);
  }
  prog.constraints.push_back(std::move(ball));
  return prog;
}

/// Back-maps a minimizer of the quartic program to a poison point:
/// w = U^{-1} x*, s = +sqrt(1 - w^T gram_ext w), point = w / s.
inline PoisonPoint recover_attack(const QuarticProgram& qp, const Vec& x_star,
                                  const RegressionFit& fit) {
  if (x_star.size() != qp.num_vars()) throw DimensionError("recover_attack: wrong variable count");
  if (matkit::norm2(x_star) > qp.budget * (1.0 + 1e-8))
    throw RecoveryError("recover_attack: solution lies outside the feasible ball");
  const std::size_t m = qp.form_left.rows();
  const Vec w = matkit::solve_upper(qp.chol_factor, x_star);
  const double s_sq = 1.0 - matkit::dot(w, qp.gram_ext * w);
  if (!(s_sq > 0.0)) throw RecoveryError("recover_attack: recovery scale s^2 <= 0");
  const double s = std::sqrt(s_sq);
  Vec x0(m);
  for (std::size_t j = 0; j < m; ++j) x0[j] = w[j] / s;
  return regress::make_poison_point(fit, std::move(x0), w[m] / s, qp.target_index);
}

/// The bi-level objective the quartic compresses: refit with the point added,
/// then (1/2) || beta_hat - d ||^2 in the diagonal weight metric.
inline double bilevel_objective(const QuarticProgram& qp, const Vec& beta_hat, const Vec& beta0) {
  double acc = 0.0;
  for (std::size_t j = 0; j < beta_hat.size(); ++j) {
    const double dj = j == qp.target_index ? 0.0 : beta0[j];
    const double r = beta_hat[j] - dj;
    acc += qp.weights[j] * r * r;
  }
  return 0.5 * acc;
}

}  // namespace lra::polyatk
