#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <utility>

#include "lra/polyatk.hpp"
#include "lra/rankone.hpp"

namespace lra::pgd {

/// Diminishing-stepsize schedule a/(1+t) with the usual presets
/// a in {1, 10, 100}.
struct PgdConfig {
  double stepsize_base = 1.0;
  std::size_t max_iterations = 10000;
  double tol = 1e-9;  // relative change of consecutive objective values
  std::uint64_t seed = 1;
};

/// Euclidean projection onto the radius-r ball.
inline Vec project_ball(Vec v, double r) {
  if (r < 0.0) throw DimensionError("project_ball: negative radius");
  const double nv = matkit::norm2(v);
  if (nv > r) {
    const double s = r / nv;
    for (double& x : v) x *= s;
  }
  return v;
}

/// One ball constraint over a contiguous slice of the variable vector.
struct BallDomain {
  std::size_t offset = 0;
  std::size_t length = 0;
  double radius = 0.0;
};

struct PgdResult {
  Vec x;
  Vec trace;  // objective value per iteration, starting value included
  std::size_t iterations = 0;
  bool converged = false;
};

template <typename F, typename G>
PgdResult pgd_minimize(F&& f, G&& grad, const std::vector<BallDomain>& domains, Vec x0,
                       const PgdConfig& cfg) {
  const auto project = [&](Vec x) {
    for (const auto& dom : domains) {
      Vec slice(x.begin() + dom.offset, x.begin() + dom.offset + dom.length);
      slice = project_ball(std::move(slice), dom.radius);
      std::copy(slice.begin(), slice.end(), x.begin() + dom.offset);
    }
    return x;
  };

  PgdResult out;
  Vec x = project(std::move(x0));
  double fx = f(x);
  out.trace.push_back(fx);
  for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
    const Vec g = grad(x);
    for (double v : g)
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "pgd_minimize: non-finite gradient at iteration " << t << "; iterate:";
        for (std::size_t i = 0; i < x.size() && i < 16; ++i) msg << ' ' << x[i];
        throw NumericalError(msg.str());
      }
    const double step = cfg.stepsize_base / static_cast<double>(t + 1);
    Vec next = x;
    matkit::axpy(-step, g, next);
    next = project(std::move(next));
    const double fn = f(next);
    x = std::move(next);
    out.trace.push_back(fn);
    out.iterations = t + 1;
    const bool small_change = std::abs(fn - fx) < cfg.tol * (1.0 + std::abs(fn));
    fx = fn;
    if (small_change) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

// ---------------------------------------------------------------------------
// Analytic gradients for the two attack objectives.

/// Gradient of the quartic pinned-coefficient objective.
inline Vec grad_quartic(const polyatk::QuarticProgram& qp, const Vec& x) {
  const double rx = matkit::dot(qp.form_right, x);
  const Vec lx = qp.form_left * x;
  Vec wr(lx.size());
  for (std::size_t j = 0; j < lx.size(); ++j) wr[j] = qp.weights[j] * (lx[j] * rx - qp.target_shift[j]);
  Vec g = matkit::transpose_times(qp.form_left, wr);
  for (double& v : g) v *= rx;
  matkit::axpy(matkit::dot(wr, lx), qp.form_right, g);
  return g;
}

/// Gradient of the rank-one objective h(c, d) in both blocks.
inline std::pair<Vec, Vec> grad_h(const rankone::RankOneContext& ctx, const Vec& c, const Vec& d) {
  const auto p = rankone::parts(ctx, c, d);
  const double s1 = matkit::dot(ctx.q_e, p.n);
  const double s2 = matkit::dot(p.w, ctx.data.y);
  const double s3 = matkit::dot(ctx.selector, p.v);
  const double s4 = matkit::dot(p.n, ctx.data.y);
  const double w2 = matkit::dot(p.w, p.w);
  const double n2 = matkit::dot(p.n, p.n);
  const double den = n2 * w2 + p.gamma * p.gamma;
  const double num = p.gamma * s1 * s2 - p.gamma * s3 * s4 - w2 * s1 * s4 - n2 * s3 * s2;

  // c-block: gamma, s2, s3 and w2 depend on c.
  Vec dn_c(c.size(), 0.0);
  {
    const double k1 = s1 * s2 - s3 * s4;
    matkit::axpy(k1, p.n, dn_c);
    matkit::axpy(p.gamma * s1, ctx.py, dn_c);
    matkit::axpy(-p.gamma * s4, ctx.q_e, dn_c);
    matkit::axpy(-2.0 * s1 * s4, p.w, dn_c);
    matkit::axpy(-n2 * s2, ctx.q_e, dn_c);
    matkit::axpy(-n2 * s3, ctx.py, dn_c);
  }
  Vec dd_c(c.size(), 0.0);
  matkit::axpy(2.0 * n2, p.w, dd_c);
  matkit::axpy(2.0 * p.gamma, p.n, dd_c);
  Vec gc(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) gc[i] = (dn_c[i] * den - num * dd_c[i]) / (den * den);

  // d-block: gamma, s1, s4 and n2 depend on d.
  const Vec ad = ctx.fit.gram_inv * d;
  Vec dn_d(d.size(), 0.0);
  {
    const double k1 = s1 * s2 - s3 * s4;
    matkit::axpy(k1, p.v, dn_d);
    matkit::axpy(p.gamma * s2, ctx.ae, dn_d);
    matkit::axpy(-p.gamma * s3, ctx.fit.beta0, dn_d);
    matkit::axpy(-w2 * s4, ctx.ae, dn_d);
    matkit::axpy(-w2 * s1, ctx.fit.beta0, dn_d);
    matkit::axpy(-2.0 * s3 * s2, ad, dn_d);
  }
  Vec dd_d(d.size(), 0.0);
  matkit::axpy(2.0 * w2, ad, dd_d);
  matkit::axpy(2.0 * p.gamma, p.v, dd_d);
  Vec gd(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) gd[i] = (dn_d[i] * den - num * dd_d[i]) / (den * den);
  return {std::move(gc), std::move(gd)};
}

// ---------------------------------------------------------------------------
// Gradient validation (run before benchmarks; also used by the test suites).

/// Max relative disagreement between an analytic gradient and central
/// differences with step 1e-5 (1 + |x_i|) over `points` random inputs.
inline double validate_gradient(const std::function<double(const Vec&)>& f,
                                const std::function<Vec(const Vec&)>& grad, std::size_t dim,
                                std::size_t points, double radius, std::uint64_t seed) {
  CounterRng rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < points; ++t) {
    const Vec x = rng.uniform_in_ball(dim, radius);
    const Vec g = grad(x);
    double gnorm = matkit::norm2(g);
    for (std::size_t i = 0; i < dim; ++i) {
      const double h = 1e-5 * (1.0 + std::abs(x[i]));
      Vec xp = x;
      Vec xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (f(xp) - f(xm)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / (1.0 + gnorm));
    }
  }
  return worst;
}

/// Validates both attack gradients on random feasible points; returns the
/// worst relative error seen (pass threshold is 1e-5).
inline double validate_attack_gradients(const rankone::RankOneContext& ctx,
                                        const polyatk::QuarticProgram& qp, std::size_t points,
                                        std::uint64_t seed) {
  const std::size_t n = ctx.fit.n();
  const std::size_t m = ctx.fit.m();
  const auto fq = [&](const Vec& x) { return polyatk::objective_value(qp, x); };
  const auto gq = [&](const Vec& x) { return grad_quartic(qp, x); };
  double worst = validate_gradient(fq, gq, qp.num_vars(), points, qp.budget, seed);

  const auto fh = [&](const Vec& cd) {
    const Vec c(cd.begin(), cd.begin() + n);
    const Vec d(cd.begin() + n, cd.end());
    return rankone::objective_h(ctx, c, d);
  };
  const auto gh = [&](const Vec& cd) {
    const Vec c(cd.begin(), cd.begin() + n);
    const Vec d(cd.begin() + n, cd.end());
    auto [gc, gd] = grad_h(ctx, c, d);
    Vec g(n + m);
    std::copy(gc.begin(), gc.end(), g.begin());
    std::copy(gd.begin(), gd.end(), g.begin() + n);
    return g;
  };
  // Sample (c, d) jointly from a ball that keeps both blocks feasible.
  const double radius = std::min(1.0, ctx.budget) * 0.9;
  worst = std::max(worst, validate_gradient(fh, gh, n + m, points, radius, seed + 1));
  return worst;
}

/// PGD on the rank-one objective from a given start, with the two ball
/// domains. Mirrors the alternating driver's interface for paired runs.
inline PgdResult pgd_attack_rankone(const rankone::RankOneContext& ctx, const Vec& c0, const Vec& d0,
                                    const PgdConfig& cfg) {
  const std::size_t n = ctx.fit.n();
  const std::size_t m = ctx.fit.m();
  Vec x0(n + m);
  std::copy(c0.begin(), c0.end(), x0.begin());
  std::copy(d0.begin(), d0.end(), x0.begin() + n);
  const std::vector<BallDomain> domains = {{0, n, 1.0}, {n, m, ctx.budget}};
  const auto f = [&](const Vec& x) {
    const Vec c(x.begin(), x.begin() + n);
    const Vec d(x.begin() + n, x.end());
    return rankone::objective_h(ctx, c, d);
  };
  const auto g = [&](const Vec& x) {
    const Vec c(x.begin(), x.begin() + n);
    const Vec d(x.begin() + n, x.end());
    auto [gc, gd] = grad_h(ctx, c, d);
    Vec out(n + m);
    std::copy(gc.begin(), gc.end(), out.begin());
    std::copy(gd.begin(), gd.end(), out.begin() + n);
    return out;
  };
  return pgd_minimize(f, g, domains, std::move(x0), cfg);
}

/// PGD on the quartic pinned-coefficient objective over its ball.
inline PgdResult pgd_attack_pinned(const polyatk::QuarticProgram& qp, const PgdConfig& cfg) {
  CounterRng rng(cfg.seed);
  Vec x0 = rng.uniform_in_ball(qp.num_vars(), qp.budget);
  const std::vector<BallDomain> domains = {{0, qp.num_vars(), qp.budget}};
  const auto f = [&](const Vec& x) { return polyatk::objective_value(qp, x); };
  const auto g = [&](const Vec& x) { return grad_quartic(qp, x); };
  return pgd_minimize(f, g, domains, std::move(x0), cfg);
}

}  // namespace lra::pgd
