#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

#include "lra/regress.hpp"
#include "lra/rng.hpp"
#include "lra/sdpcore.hpp"

namespace lra::rankone {

using matkit::Matrix;
using regress::Dataset;
using regress::RegressionFit;

/// Budget at or above the smallest singular value makes the objective
/// unbounded below; carries the certificate pair.
struct UnboundedError : std::runtime_error {
  UnboundedError(std::string what, Vec c_cert, Vec d_cert)
      : std::runtime_error(std::move(what)), c(std::move(c_cert)), d(std::move(d_cert)) {}
  Vec c;
  Vec d;
};

/// Everything fixed across one rank-one attack: the data, its fit, the
/// coefficient selector (+-e_i) and the energy budget. Also caches the
/// vectors every objective evaluation needs.
struct RankOneContext {
  Dataset data;
  RegressionFit fit;
  Vec selector;     // length m, +-e_i
  double budget = 0.0;

  // Cached: q_e = (X+)^T e, py = (I - X X+) y, ae = A e, and scalars.
  Vec q_e;
  Vec py;
  Vec ae;
  double e_beta0 = 0.0;
};

enum class TargetSense { decrease, increase };

inline RankOneContext make_context(Dataset data, RegressionFit fit, std::size_t target_index,
                                   TargetSense sense, double eta) {
  if (target_index >= fit.m()) throw DimensionError("make_context: coefficient index out of range");
  if (!(eta > 0.0)) throw DimensionError("make_context: energy budget must be positive");
  RankOneContext ctx;
  ctx.selector = Vec(fit.m(), 0.0);
  ctx.selector[target_index] = sense == TargetSense::decrease ? 1.0 : -1.0;
  ctx.budget = eta;
  ctx.q_e = matkit::transpose_times(fit.pinv, ctx.selector);
  const Vec xb = data.x * fit.beta0;
  ctx.py = data.y;
  for (std::size_t i = 0; i < ctx.py.size(); ++i) ctx.py[i] -= xb[i];
  ctx.ae = fit.gram_inv * ctx.selector;
  ctx.e_beta0 = matkit::dot(ctx.selector, fit.beta0);
  ctx.data = std::move(data);
  ctx.fit = std::move(fit);
  return ctx;
}

/// Derived quantities of one (c, d) pair.
struct Parts {
  double gamma = 0.0;  // 1 + d^T X+ c
  Vec v;               // X+ c
  Vec n;               // (X+)^T d
  Vec w;               // (I - X X+) c
};

inline Parts parts(const RankOneContext& ctx, const Vec& c, const Vec& d) {
  Parts p;
  p.v = ctx.fit.pinv * c;
  p.n = matkit::transpose_times(ctx.fit.pinv, d);
  p.gamma = 1.0 + matkit::dot(d, p.v);
  const Vec xv = ctx.data.x * p.v;
  p.w = c;
  for (std::size_t i = 0; i < p.w.size(); ++i) p.w[i] -= xv[i];
  return p;
}

/// Pseudo-inverse update: (X + c d^T)+ = X+ + G with the four-case dispatch
/// on |w| and gamma. Case thresholds are relative at 1e-10.
inline Matrix pinv_update(const RankOneContext& ctx, const Vec& c, const Vec& d) {
  const Parts p = parts(ctx, c, d);
  const std::size_t m = ctx.fit.m();
  const std::size_t n = ctx.fit.n();
  if (c.size() != n || d.size() != m) throw DimensionError("pinv_update: shape mismatch");

  const double wnorm2 = matkit::dot(p.w, p.w);
  const double nnorm2 = matkit::dot(p.n, p.n);
  const double vnorm2 = matkit::dot(p.v, p.v);
  const bool w_zero = std::sqrt(wnorm2) <= 1e-10 * std::max(1.0, matkit::norm2(c));
  const bool g_zero = std::abs(p.gamma) <= 1e-10;

  Matrix g(m, n);
  const auto add_outer = [&](double scale, const Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < m; ++i) {
      const double s = scale * a[i];
      if (s == 0.0) continue;
      double* row = g.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) row[j] += s * b[j];
    }
  };

  if (w_zero && !g_zero) {
    add_outer(-1.0 / p.gamma, p.v, p.n);
    return g;
  }
  const Vec pn = ctx.fit.pinv * p.n;  // X+ n
  if (!w_zero && g_zero) {
    add_outer(-1.0 / nnorm2, pn, p.n);
    add_outer(-1.0 / wnorm2, p.v, p.w);
    return g;
  }
  if (!w_zero && !g_zero) {
    add_outer(1.0 / p.gamma, pn, p.w);
    const double denom = nnorm2 * wnorm2 + p.gamma * p.gamma;
    Vec left = p.v;
    matkit::axpy(wnorm2 / p.gamma, pn, left);
    Vec right = p.n;
    matkit::axpy(nnorm2 / p.gamma, p.w, right);
    add_outer(-p.gamma / denom, left, right);
    return g;
  }
  // w = 0, gamma = 0: the update drops rank.
  if (vnorm2 == 0.0 || nnorm2 == 0.0) return g;  // c = 0 or d = 0: no change
  const Vec vtx = matkit::transpose_times(ctx.fit.pinv, p.v);  // (X+)^T v
  add_outer(-1.0 / vnorm2, p.v, vtx);
  add_outer(-1.0 / nnorm2, pn, p.n);
  add_outer(matkit::dot(p.v, pn) / (vnorm2 * nnorm2), p.v, p.n);
  return g;
}

/// Objective h(c, d) = e^T G y = e^T beta_hat - e^T beta0, evaluated through
/// the quadratic-ratio form (O(nm) per call).
inline double objective_h(const RankOneContext& ctx, const Vec& c, const Vec& d) {
  const Parts p = parts(ctx, c, d);
  const double s1 = matkit::dot(ctx.q_e, p.n);       // e^T X+ n
  const double s2 = matkit::dot(p.w, ctx.data.y);    // w^T y
  const double s3 = matkit::dot(ctx.selector, p.v);  // e^T v
  const double s4 = matkit::dot(p.n, ctx.data.y);    // n^T y
  const double w2 = matkit::dot(p.w, p.w);
  const double n2 = matkit::dot(p.n, p.n);
  const double denom = n2 * w2 + p.gamma * p.gamma;
  if (denom > 1e-300)
    return (p.gamma * s1 * s2 - p.gamma * s3 * s4 - w2 * s1 * s4 - n2 * s3 * s2) / denom;
  // Degenerate corner (w = 0 and gamma = 0): fall back to the explicit update.
  const Matrix g = pinv_update(ctx, c, d);
  return matkit::dot(ctx.selector, g * ctx.data.y);
}

// ---------------------------------------------------------------------------
// Quadratic-ratio subproblems.

/// h(x) = (x^T a1 x + 2 b1.x + l1) / (x^T a2 x + 2 b2.x + l2) with the
/// denominator positive on the feasible ball.
struct RatioCoeffs {
  Matrix a1;
  Matrix a2;
  Vec b1;
  Vec b2;
  double l1 = 0.0;
  double l2 = 1.0;
};

inline double ratio_value(const RatioCoeffs& rc, const Vec& x) {
  const double num = matkit::dot(x, rc.a1 * x) + 2.0 * matkit::dot(rc.b1, x) + rc.l1;
  const double den = matkit::dot(x, rc.a2 * x) + 2.0 * matkit::dot(rc.b2, x) + rc.l2;
  return num / den;
}

enum class FixedSide { d_fixed, c_fixed };

/// Dense coefficients of the one-sided ratio. For d fixed the variable is c
/// (dimension n); for c fixed it is d (dimension m).
inline RatioCoeffs ratio_coeffs(const RankOneContext& ctx, FixedSide side, const Vec& fixed) {
  RatioCoeffs rc;
  const std::size_t n = ctx.fit.n();
  const std::size_t m = ctx.fit.m();
  if (side == FixedSide::d_fixed) {
    const Vec nn = matkit::transpose_times(ctx.fit.pinv, fixed);  // (X+)^T d
    const double s1 = matkit::dot(ctx.q_e, nn);
    const double s4 = matkit::dot(nn, ctx.data.y);
    const double n2 = matkit::dot(nn, nn);
    // a1 = sym(s1 n py^T - s4 n q_e^T - n2 q_e py^T) - s1 s4 P.
    rc.a1 = Matrix(n, n);
    const auto add_sym_outer = [&](double s, const Vec& a, const Vec& b) {
      if (s == 0.0) return;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rc.a1(i, j) += 0.5 * s * (a[i] * b[j] + b[i] * a[j]);
    };
    add_sym_outer(s1, nn, ctx.py);
    add_sym_outer(-s4, nn, ctx.q_e);
    add_sym_outer(-n2, ctx.q_e, ctx.py);
    // -s1 s4 (I - X X+): form the projector once, dense.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) rc.a1(i, j) += -s1 * s4 * ctx.fit.proj_residual(i, j);
    rc.a2 = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        rc.a2(i, j) = n2 * ctx.fit.proj_residual(i, j) + nn[i] * nn[j];
    rc.b1 = Vec(n, 0.0);
    matkit::axpy(0.5 * s1, ctx.py, rc.b1);
    matkit::axpy(-0.5 * s4, ctx.q_e, rc.b1);
    rc.b2 = nn;
  } else {
    const Vec v = ctx.fit.pinv * fixed;  // X+ c
    Vec w = fixed;
    {
      const Vec xv = ctx.data.x * v;
      for (std::size_t i = 0; i < n; ++i) w[i] -= xv[i];
    }
    const double s2 = matkit::dot(w, ctx.data.y);
    const double s3 = matkit::dot(ctx.selector, v);
    const double w2 = matkit::dot(w, w);
    rc.a1 = Matrix(m, m);
    const auto add_sym_outer_m = [&](double s, const Vec& a, const Vec& b) {
      if (s == 0.0) return;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) rc.a1(i, j) += 0.5 * s * (a[i] * b[j] + b[i] * a[j]);
    };
    add_sym_outer_m(s2, v, ctx.ae);
    add_sym_outer_m(-s3, v, ctx.fit.beta0);
    add_sym_outer_m(-w2, ctx.ae, ctx.fit.beta0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) rc.a1(i, j) += -s2 * s3 * ctx.fit.gram_inv(i, j);
    rc.a2 = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) rc.a2(i, j) = w2 * ctx.fit.gram_inv(i, j) + v[i] * v[j];
    rc.b1 = Vec(m, 0.0);
    matkit::axpy(0.5 * s2, ctx.ae, rc.b1);
    matkit::axpy(-0.5 * s3, ctx.fit.beta0, rc.b1);
    rc.b2 = v;
  }
  rc.l1 = 0.0;
  rc.l2 = 1.0;
  return rc;
}

struct RatioSolution {
  Vec x;
  double value = 0.0;       // ratio at x
  double dual_bound = 0.0;  // certified lower bound from the LMI bisection
};

/// Globally minimizes the quadratic ratio over |x| <= radius: bisection on
/// the level alpha, feasibility of [a1 b1; b1 l1] - alpha [a2 b2; b2 l2]
/// + nu diag(I, -1) >= 0 checked by a concave 1-D search over nu, and the
/// minimizer recovered from a trust-region solve on the level function.
inline RatioSolution solve_ratio_subproblem(const RatioCoeffs& rc, double radius,
                                            double tol = 1e-11) {
  const std::size_t n = rc.b1.size();
  Matrix m1(n + 1, n + 1);
  Matrix m2(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m1(i, j) = 0.5 * (rc.a1(i, j) + rc.a1(j, i));
      m2(i, j) = 0.5 * (rc.a2(i, j) + rc.a2(j, i));
    }
    m1(i, n) = m1(n, i) = rc.b1[i];
    m2(i, n) = m2(n, i) = rc.b2[i];
  }
  m1(n, n) = rc.l1;
  m2(n, n) = rc.l2;

  // The ball indicator in homogenized coordinates; radius folded in so the
  // search stays the unit-ball form.
  Matrix jball(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) jball(i, i) = 1.0;
  jball(n, n) = -radius * radius;

  double scale = std::max({1.0, matkit::max_abs(m1), matkit::max_abs(m2)});
  const double feas_tol = -1e-11 * scale;

  Matrix pencil(n + 1, n + 1);
  const auto lam_min = [&](double alpha, double nu) {
    for (std::size_t i = 0; i < (n + 1) * (n + 1); ++i)
      pencil.data()[i] = m1.data()[i] - alpha * m2.data()[i] + nu * jball.data()[i];
    return matkit::sym_eig(pencil).values.back();
  };

  double warm_nu = 1.0;
  const auto feasible = [&](double alpha) {
    // max over nu >= 0 of lam_min(alpha, nu), concave in nu. Early-out on any
    // nonnegative probe; otherwise golden-section to establish the maximum.
    double best = lam_min(alpha, 0.0);
    if (best >= feas_tol) {
      warm_nu = 0.0;
      return true;
    }
    double hi = std::max(1e-8, warm_nu);
    double f_hi = lam_min(alpha, hi);
    if (f_hi >= feas_tol) {
      warm_nu = hi;
      return true;
    }
    // Grow until the right end decreases (then the maximum is bracketed).
    double grow = hi;
    double f_grow = f_hi;
    for (int it = 0; it < 200; ++it) {
      grow *= 2.0;
      const double f_next = lam_min(alpha, grow);
      if (f_next >= feas_tol) {
        warm_nu = grow;
        return true;
      }
      if (f_next < f_grow) break;  // started to decrease
      f_grow = f_next;
    }
    double lo = 0.0;
    double hi2 = grow;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi2 - gr * (hi2 - lo);
    double x2 = lo + gr * (hi2 - lo);
    double f1 = lam_min(alpha, x1);
    double f2 = lam_min(alpha, x2);
    for (int it = 0; it < 90 && hi2 - lo > 1e-12 * (1.0 + hi2); ++it) {
      if (std::max(f1, f2) >= feas_tol) {
        warm_nu = f1 > f2 ? x1 : x2;
        return true;
      }
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi2 - lo);
        f2 = lam_min(alpha, x2);
      } else {
        hi2 = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi2 - gr * (hi2 - lo);
        f1 = lam_min(alpha, x1);
      }
    }
    return false;
  };

  // Bisection bracket: any feasible-point value upper-bounds the optimum; the
  // lower end widens geometrically until the LMI accepts it.
  double alpha_hi = std::min(rc.l1 / rc.l2, ratio_value(rc, Vec(n, 0.0)));
  double width = 10.0;
  double alpha_lo = alpha_hi - width;
  for (int tries = 0; !feasible(alpha_lo); ++tries) {
    if (tries > 60)
      throw NumericalError("solve_ratio_subproblem: cannot bracket the level bisection");
    width *= 4.0;
    alpha_lo = alpha_hi - width;
  }
  for (int it = 0; it < 200; ++it) {
    if (alpha_hi - alpha_lo <= tol * (1.0 + std::abs(alpha_hi))) break;
    const double mid = 0.5 * (alpha_lo + alpha_hi);
    if (feasible(mid))
      alpha_lo = mid;
    else
      alpha_hi = mid;
  }
  const double alpha_star = alpha_lo;

  // Recover the minimizer: the level function h1 - alpha* h2 attains ~0 at
  // the ratio minimizer inside the ball.
  Matrix a_level(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a_level(i, j) = 0.5 * (rc.a1(i, j) + rc.a1(j, i)) - alpha_star * 0.5 * (rc.a2(i, j) + rc.a2(j, i));
  Vec b_level = rc.b1;
  matkit::axpy(-alpha_star, rc.b2, b_level);
  const auto tr = sdpcore::trust_region(a_level, b_level, radius);

  RatioSolution out;
  out.x = tr.x_star;
  out.dual_bound = alpha_star;
  const double den = matkit::dot(out.x, rc.a2 * out.x) + 2.0 * matkit::dot(rc.b2, out.x) + rc.l2;
  if (!(den > 0.0))
    throw NumericalError("solve_ratio_subproblem: denominator not positive at the recovered point");
  out.value = ratio_value(rc, out.x);
  return out;
}

// ---------------------------------------------------------------------------
// Unboundedness detection.

struct UnboundedCertificate {
  Vec c;
  Vec d;
};

/// Returns the certificate pair (u_m, -sigma_m v_m) when the budget reaches
/// the smallest singular value; nothing otherwise.
inline std::optional<UnboundedCertificate> check_unbounded(const RegressionFit& fit, double eta) {
  const double sigma_m = fit.sigma_min();
  if (eta < sigma_m) return std::nullopt;
  const std::size_t m = fit.m();
  UnboundedCertificate cert;
  cert.c = fit.svd.u.col(m - 1);
  cert.d = fit.svd.v.col(m - 1);
  for (double& x : cert.d) x *= -sigma_m;
  return cert;
}

/// Evaluates h along the divergence path (u_m, -t v_m). Emits the baseline at
/// t = sigma_m/2 and the most negative probed value; when the budget allows
/// t > sigma_m the probe also looks at the sign-flipped side of the pole.
struct DivergenceProbe {
  double baseline = 0.0;  // |h| at t = sigma_m / 2
  double min_h = 0.0;
  double max_abs_h = 0.0;
};

inline DivergenceProbe divergence_probe(const RankOneContext& ctx) {
  const double sigma_m = ctx.fit.sigma_min();
  const std::size_t m = ctx.fit.m();
  const Vec um = ctx.fit.svd.u.col(m - 1);
  const Vec vm = ctx.fit.svd.v.col(m - 1);
  const auto h_at = [&](double t) {
    Vec d = vm;
    for (double& x : d) x *= -t;
    return objective_h(ctx, um, d);
  };
  DivergenceProbe probe;
  probe.baseline = std::abs(h_at(0.5 * sigma_m));
  probe.min_h = std::numeric_limits<double>::infinity();
  for (const double f : {0.9, 0.99, 0.999, 0.9999, 0.99999}) {
    const double t = f * sigma_m;
    if (t > ctx.budget) break;
    const double h = h_at(t);
    probe.min_h = std::min(probe.min_h, h);
    probe.max_abs_h = std::max(probe.max_abs_h, std::abs(h));
  }
  if (ctx.budget > sigma_m) {
    const double t = sigma_m * (1.0 + std::min(0.005, 0.5 * (ctx.budget / sigma_m - 1.0)));
    const double h = h_at(t);
    probe.min_h = std::min(probe.min_h, h);
    probe.max_abs_h = std::max(probe.max_abs_h, std::abs(h));
  }
  return probe;
}

// ---------------------------------------------------------------------------
// Alternating optimization (the attack driver).

struct RankOnePerturbation {
  Vec c;             // |c| <= 1
  Vec d;             // |d| <= eta
  double objective = 0.0;  // h(c, d) = e^T beta_hat - e^T beta0
  Vec trace;         // objective after every full iteration, leading value first
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

/// The c-subproblem lives in R^n but the ratio only sees the span of the
/// left singular vectors plus the residual direction of y; everything
/// orthogonal enters through |c_perp|^2 alone. This builds the exact
/// (m+2)-dimensional reduction and the basis to map back.
struct ReducedC {
  RatioCoeffs rc;       // dimension m+2
  Matrix basis;         // n x (m+1): U1 columns then unit residual direction
  Vec perp_dir;         // unit vector orthogonal to the basis
  bool has_py = false;  // residual direction present (|P y| > 0)
};

inline ReducedC reduce_c_subproblem(const RankOneContext& ctx, const Vec& d_fixed) {
  const std::size_t n = ctx.fit.n();
  const std::size_t m = ctx.fit.m();
  const Vec nn = matkit::transpose_times(ctx.fit.pinv, d_fixed);
  const double s1 = matkit::dot(ctx.q_e, nn);
  const double s4 = matkit::dot(nn, ctx.data.y);
  const double n2 = matkit::dot(nn, nn);
  const double py_norm = matkit::norm2(ctx.py);

  ReducedC red;
  red.has_py = py_norm > 1e-14 * (1.0 + matkit::norm2(ctx.data.y));
  const std::size_t r = m + (red.has_py ? 1 : 0);
  red.basis = Matrix(n, r);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) red.basis(i, j) = ctx.fit.svd.u(i, j);
  if (red.has_py)
    for (std::size_t i = 0; i < n; ++i) red.basis(i, m) = ctx.py[i] / py_norm;

  // Coordinates of the defining vectors in the basis: n and q_e live in the
  // U1 block, py in its own direction.
  const auto coords = [&](const Vec& x) {
    Vec out(r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += red.basis(i, j) * x[i];
      out[j] = acc;
    }
    return out;
  };
  const Vec nb = coords(nn);
  const Vec qb = coords(ctx.q_e);
  Vec pyb(r, 0.0);
  if (red.has_py) pyb[m] = py_norm;

  // P restricted to the basis: zero on the U1 block, identity on the py
  // direction; kappa terms cover the orthogonal complement.
  const std::size_t dim = r + 1;
  RatioCoeffs& rc = red.rc;
  rc.a1 = Matrix(dim, dim);
  rc.a2 = Matrix(dim, dim);
  rc.b1 = Vec(dim, 0.0);
  rc.b2 = Vec(dim, 0.0);
  const auto add_sym_outer = [&](Matrix& a, double s, const Vec& x, const Vec& y) {
    if (s == 0.0) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) a(i, j) += 0.5 * s * (x[i] * y[j] + y[i] * x[j]);
  };
  add_sym_outer(rc.a1, s1, nb, pyb);
  add_sym_outer(rc.a1, -s4, nb, qb);
  add_sym_outer(rc.a1, -n2, qb, pyb);
  if (red.has_py) rc.a1(m, m) += -s1 * s4;   // P on the py direction
  rc.a1(r, r) = -s1 * s4;                    // P = identity on the complement
  add_sym_outer(rc.a2, 1.0, nb, nb);
  rc.a2(r, r) = n2;
  if (red.has_py) rc.a2(m, m) += n2;
  for (std::size_t i = 0; i < r; ++i) {
    rc.b1[i] = 0.5 * (s1 * pyb[i] - s4 * qb[i]);
    rc.b2[i] = nb[i];
  }
  rc.l1 = 0.0;
  rc.l2 = 1.0;

  // A deterministic unit vector orthogonal to the basis for the mapped-back
  // complement coordinate.
  for (std::size_t j = 0; j < n; ++j) {
    Vec cand(n, 0.0);
    cand[j] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < r; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += red.basis(i, k) * cand[i];
        for (std::size_t i = 0; i < n; ++i) cand[i] -= acc * red.basis(i, k);
      }
    const double nv = matkit::norm2(cand);
    if (nv > 0.5) {
      for (double& x : cand) x /= nv;
      red.perp_dir = std::move(cand);
      break;
    }
  }
  if (red.perp_dir.empty()) throw NumericalError("reduce_c_subproblem: no complement direction");
  return red;
}

inline Vec lift_c(const ReducedC& red, const Vec& x_red) {
  const std::size_t n = red.basis.rows();
  const std::size_t r = red.basis.cols();
  Vec c(n, 0.0);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < n; ++i) c[i] += red.basis(i, j) * x_red[j];
  matkit::axpy(x_red[r], red.perp_dir, c);
  return c;
}

}  // namespace detail

struct AlternatingOptions {
  std::uint64_t seed = 1;
  double tol = 1e-9;
  std::size_t max_iterations = 10000;
};

/// Random feasible starting pair, shared with the gradient baseline so paired
/// comparisons start from the same point.
inline std::pair<Vec, Vec> random_start(const RankOneContext& ctx, std::uint64_t seed) {
  CounterRng rng(seed);
  Vec c = rng.uniform_in_ball(ctx.fit.n(), 1.0);
  Vec d = rng.uniform_in_ball(ctx.fit.m(), ctx.budget);
  return {std::move(c), std::move(d)};
}

/// Algorithm: alternate exact global solves of the two quadratic-ratio
/// subproblems until the objective stalls. The trace is non-increasing by
/// construction (a step is only accepted when it does not increase h).
inline RankOnePerturbation alternating_attack(const RankOneContext& ctx,
                                              const AlternatingOptions& opts = {}) {
  if (const auto cert = check_unbounded(ctx.fit, ctx.budget))
    throw UnboundedError("alternating_attack: budget >= smallest singular value", cert->c, cert->d);

  auto [c, d] = random_start(ctx, opts.seed);
  RankOnePerturbation out;
  double h = objective_h(ctx, c, d);
  out.trace.push_back(h);

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    // c-update on the exact reduced problem.
    {
      const auto red = detail::reduce_c_subproblem(ctx, d);
      const auto sol = solve_ratio_subproblem(red.rc, 1.0);
      const Vec c_new = detail::lift_c(red, sol.x);
      const double h_new = objective_h(ctx, c_new, d);
      if (h_new <= h) {
        c = c_new;
        h = h_new;
      }
    }
    // d-update in its native dimension.
    {
      const auto rc = ratio_coeffs(ctx, FixedSide::c_fixed, c);
      const auto sol = solve_ratio_subproblem(rc, ctx.budget);
      const double h_cand = objective_h(ctx, c, sol.x);
      if (h_cand <= h) {
        d = sol.x;
        h = h_cand;
      }
    }
    out.trace.push_back(h);
    out.iterations = iter + 1;
    const double prev = out.trace[out.trace.size() - 2];
    if (std::abs(h - prev) <= opts.tol * (1.0 + std::abs(h))) {
      out.converged = true;
      break;
    }
  }
  out.c = std::move(c);
  out.d = std::move(d);
  out.objective = h;
  return out;
}

/// Empirical first-order criticality: the smallest directional derivative
/// value grad_h . [(c - c0); (d - d0)] over random feasible pairs. A critical
/// point never goes (much) below zero. The gradient comes from the caller so
/// this header stays independent of the gradient module.
template <typename GradFn>
double criticality_residual(const RankOneContext& ctx, const Vec& c0, const Vec& d0, GradFn&& grad,
                            std::size_t samples, std::uint64_t seed) {
  const auto [gc, gd] = grad(ctx, c0, d0);
  CounterRng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec c = rng.uniform_in_ball(c0.size(), 1.0);
    const Vec d = rng.uniform_in_ball(d0.size(), ctx.budget);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += gc[i] * (c[i] - c0[i]);
    for (std::size_t i = 0; i < d.size(); ++i) acc += gd[i] * (d[i] - d0[i]);
    worst = std::min(worst, acc);
  }
  return worst;
}

}  // namespace lra::rankone
