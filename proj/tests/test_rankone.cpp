#include <catch2/catch_amalgamated.hpp>

#include "lra/dataset_io.hpp"
#include "lra/pgd.hpp"
#include "lra/rankone.hpp"
#include "lra/rng.hpp"
#include "support/oracles.hpp"

using namespace lra;
using namespace lra::rankone;
using matkit::Matrix;
using regress::Dataset;

namespace {

Dataset istanbul() { return bench::load_csv(std::string(LRA_DATA_DIR) + "/istanbul_synthetic.csv"); }

Dataset synthetic(std::uint64_t seed, std::size_t n, std::size_t m) {
  CounterRng rng(seed);
  Dataset d;
  d.x = testing::random_matrix(rng, n, m);
  d.y = d.x * rng.normal_vec(m);
  for (double& v : d.y) v += 0.4 * rng.next_normal();
  return d;
}

RankOneContext small_ctx(std::uint64_t seed, double eta_frac = 0.5) {
  Dataset d = synthetic(seed, 12, 3);
  auto fit = regress::fit_ols(d);
  const double eta = eta_frac * fit.sigma_min();
  return make_context(std::move(d), std::move(fit), 1, TargetSense::decrease, eta);
}

/// e^T beta_hat - e^T beta0 with beta_hat refit on the modified matrix.
double refit_objective(const RankOneContext& ctx, const Vec& c, const Vec& d) {
  Matrix xmod = ctx.data.x;
  for (std::size_t i = 0; i < xmod.rows(); ++i)
    for (std::size_t j = 0; j < xmod.cols(); ++j) xmod(i, j) += c[i] * d[j];
  const Matrix xp = testing::pinv_general(xmod);
  const Vec beta_hat = xp * ctx.data.y;
  return matkit::dot(ctx.selector, beta_hat) - ctx.e_beta0;
}

}  // namespace

TEST_CASE("pinv update: no perturbation and the four case formulas") {
  const RankOneContext ctx = small_ctx(1);
  const std::size_t n = 12;
  CounterRng rng(9);

  // d = 0: G = 0 exactly.
  const Matrix g0 = pinv_update(ctx, rng.normal_vec(n), Vec(3, 0.0));
  REQUIRE(matkit::max_abs(g0) == 0.0);

  const auto check_against_direct = [&](const Vec& c, const Vec& d, double tol) {
    const Matrix g = pinv_update(ctx, c, d);
    Matrix xmod = ctx.data.x;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 3; ++j) xmod(i, j) += c[i] * d[j];
    const Matrix expect = testing::pinv_general(xmod);
    Matrix got = ctx.fit.pinv;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < n; ++j) got(i, j) += g(i, j);
    REQUIRE(matkit::max_abs(got - expect) <= tol * std::max(1.0, matkit::max_abs(expect)));
  };

  // Case 1: c in the column space, gamma != 0.
  const Vec z = rng.normal_vec(3);
  const Vec c_col = ctx.data.x * z;
  const Vec d_small = {0.05, -0.02, 0.04};
  {
    const Parts p = parts(ctx, c_col, d_small);
    REQUIRE(matkit::norm2(p.w) <= 1e-10 * matkit::norm2(c_col));
    REQUIRE(std::abs(p.gamma) > 1e-6);
  }
  check_against_direct(c_col, d_small, 1e-8);

  // Case 3 (generic) across 1000 random pairs within the bounded-budget regime.
  for (int trial = 0; trial < 1000; ++trial) {
    Vec c = rng.uniform_in_ball(n, 1.0);
    Vec d = rng.uniform_in_ball(3, 0.9 * ctx.fit.sigma_min());
    check_against_direct(c, d, 1e-7);
  }

  // Case 2: gamma = 0 with w != 0 (still full rank).
  Vec c_gen = rng.normal_vec(n);
  Vec u = ctx.fit.pinv * c_gen;
  Vec d_gamma0 = u;
  for (double& x : d_gamma0) x *= -1.0 / matkit::dot(u, u);
  {
    const Parts p = parts(ctx, c_gen, d_gamma0);
    REQUIRE(std::abs(p.gamma) <= 1e-10);
    REQUIRE(matkit::norm2(p.w) > 1e-6);
  }
  check_against_direct(c_gen, d_gamma0, 1e-6);

  // Case 4: c in the column space and gamma = 0 (the update drops rank).
  Vec u4 = ctx.fit.pinv * c_col;
  Vec d4 = u4;
  for (double& x : d4) x *= -1.0 / matkit::dot(u4, u4);
  {
    const Parts p = parts(ctx, c_col, d4);
    REQUIRE(std::abs(p.gamma) <= 1e-10);
    REQUIRE(matkit::norm2(p.w) <= 1e-10 * matkit::norm2(c_col));
  }
  check_against_direct(c_col, d4, 1e-6);
}

TEST_CASE("objective: zeros, scale invariance, refit oracle") {
  const RankOneContext ctx = small_ctx(2);
  CounterRng rng(5);
  REQUIRE(objective_h(ctx, Vec(12, 0.0), rng.normal_vec(3)) == 0.0);
  REQUIRE(objective_h(ctx, rng.normal_vec(12), Vec(3, 0.0)) == 0.0);

  for (int trial = 0; trial < 50; ++trial) {
    const Vec c = rng.uniform_in_ball(12, 1.0);
    const Vec d = rng.uniform_in_ball(3, 0.8 * ctx.fit.sigma_min());
    const double h = objective_h(ctx, c, d);

    const double k = 0.25 + rng.next_uniform();
    Vec ck = c;
    for (double& x : ck) x *= k;
    Vec dk = d;
    for (double& x : dk) x /= k;
    REQUIRE(objective_h(ctx, ck, dk) == Catch::Approx(h).margin(1e-12 * (1.0 + std::abs(h))));

    REQUIRE(h == Catch::Approx(refit_objective(ctx, c, d)).margin(1e-8 * (1.0 + std::abs(h))));
  }
}

TEST_CASE("ratio coefficients reproduce the objective on both sides") {
  const RankOneContext ctx = small_ctx(3);
  CounterRng rng(6);

  // d = 0 makes the numerator identically zero.
  const RatioCoeffs rc0 = ratio_coeffs(ctx, FixedSide::d_fixed, Vec(3, 0.0));
  REQUIRE(matkit::max_abs(rc0.a1) == 0.0);
  REQUIRE(matkit::norm2(rc0.b1) == 0.0);
  REQUIRE(rc0.l2 == 1.0);

  const Vec d_fix = rng.uniform_in_ball(3, 0.7 * ctx.fit.sigma_min());
  const RatioCoeffs rc_c = ratio_coeffs(ctx, FixedSide::d_fixed, d_fix);
  REQUIRE(rc_c.l2 == 1.0);
  for (int t = 0; t < 100; ++t) {
    const Vec c = rng.uniform_in_ball(12, 1.0);
    const double h = objective_h(ctx, c, d_fix);
    REQUIRE(ratio_value(rc_c, c) == Catch::Approx(h).margin(1e-9 * (1.0 + std::abs(h))));
  }

  const Vec c_fix = rng.uniform_in_ball(12, 1.0);
  const RatioCoeffs rc_d = ratio_coeffs(ctx, FixedSide::c_fixed, c_fix);
  for (int t = 0; t < 100; ++t) {
    const Vec d = rng.uniform_in_ball(3, 0.7 * ctx.fit.sigma_min());
    const double h = objective_h(ctx, c_fix, d);
    REQUIRE(ratio_value(rc_d, d) == Catch::Approx(h).margin(1e-9 * (1.0 + std::abs(h))));
  }
}

TEST_CASE("ratio subproblem: constant ratio, grid oracle, dominance") {
  // h1 = h2 (SPD) gives a constant ratio of one.
  CounterRng rng(77);
  RatioCoeffs unit;
  unit.a1 = unit.a2 = testing::random_spd(rng, 3, 1.0);
  unit.b1 = unit.b2 = Vec{0.1, -0.2, 0.05};
  unit.l1 = unit.l2 = 1.0;
  const auto sol1 = solve_ratio_subproblem(unit, 0.8);
  REQUIRE(sol1.value == Catch::Approx(1.0).margin(1e-8));

  for (int inst = 0; inst < 6; ++inst) {
    CounterRng r = rng.stream(inst);
    RatioCoeffs rc;
    rc.a1 = testing::random_symmetric(r, 2, 1.0);
    rc.b1 = r.normal_vec(2);
    rc.l1 = r.next_normal();
    rc.a2 = testing::random_spd(r, 2, 0.5);
    rc.b2 = r.normal_vec(2);
    for (double& v : rc.b2) v *= 0.1;
    rc.l2 = 1.0;
    const double radius = 0.9;
    // Shift l2 so the denominator is safely positive on the ball.
    const auto tr = sdpcore::trust_region(rc.a2, rc.b2, radius);
    const double den_min = tr.value + rc.l2;
    if (den_min < 0.3) rc.l2 += 0.3 - den_min;

    const auto sol = solve_ratio_subproblem(rc, radius);

    // 2-D polar grid oracle.
    double oracle = std::numeric_limits<double>::infinity();
    for (int ri = 0; ri <= 400; ++ri)
      for (int ti = 0; ti < 1200; ++ti) {
        const double rr = radius * ri / 400.0;
        const double th = 2.0 * 3.14159265358979323846 * ti / 1200.0;
        oracle = std::min(oracle, ratio_value(rc, {rr * std::cos(th), rr * std::sin(th)}));
      }
    REQUIRE(sol.value <= oracle + 1e-8);
    REQUIRE(oracle - sol.value <= 1e-4 * (1.0 + std::abs(sol.value)));
    REQUIRE(std::abs(sol.value - sol.dual_bound) <= 1e-6 * (1.0 + std::abs(sol.value)));

    for (int t = 0; t < 10000; ++t) {
      const Vec x = r.uniform_in_ball(2, radius);
      REQUIRE(ratio_value(rc, x) >= sol.value - 1e-8);
    }
  }
}

TEST_CASE("reduced c-subproblem equals the dense construction") {
  const RankOneContext ctx = small_ctx(8);
  CounterRng rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec d = rng.uniform_in_ball(3, 0.8 * ctx.fit.sigma_min());
    const auto red = rankone::detail::reduce_c_subproblem(ctx, d);
    const auto sol_red = solve_ratio_subproblem(red.rc, 1.0);
    const Vec c_lift = rankone::detail::lift_c(red, sol_red.x);
    REQUIRE(matkit::norm2(c_lift) <= 1.0 + 1e-9);

    const auto rc_dense = ratio_coeffs(ctx, FixedSide::d_fixed, d);
    const auto sol_dense = solve_ratio_subproblem(rc_dense, 1.0);

    REQUIRE(sol_red.value == Catch::Approx(sol_dense.value).margin(1e-8 * (1.0 + std::abs(sol_dense.value))));
    const double h_lift = objective_h(ctx, c_lift, d);
    REQUIRE(h_lift == Catch::Approx(sol_red.value).margin(1e-9 * (1.0 + std::abs(sol_red.value))));
  }
}

TEST_CASE("subproblem denominator stays above the singular-value bound") {
  Dataset d = istanbul();
  auto fit = regress::fit_ols(d);
  const double sigma_m = fit.sigma_min();
  for (const double frac : {0.9, 0.95}) {
    const double eta = frac * sigma_m;
    auto ctx = make_context(d, fit, 3, TargetSense::decrease, eta);
    const double bound = 1.0 - frac * frac - 1e-9;
    CounterRng rng(4096);
    for (int t = 0; t < 10000; ++t) {
      const Vec dd = rng.uniform_in_ball(7, eta);
      const Vec cc = rng.uniform_in_ball(536, 1.0);
      const Parts p = parts(ctx, cc, dd);
      const double den =
          matkit::dot(p.n, p.n) * matkit::dot(p.w, p.w) + p.gamma * p.gamma;
      REQUIRE(den >= bound);
    }
  }
}

TEST_CASE("unboundedness certificate and divergence probe") {
  Dataset d = istanbul();
  auto fit = regress::fit_ols(d);
  const double sigma_m = fit.sigma_min();

  REQUIRE_FALSE(check_unbounded(fit, 0.5 * sigma_m).has_value());

  const auto cert = check_unbounded(fit, sigma_m);
  REQUIRE(cert.has_value());
  {
    auto ctx = make_context(d, fit, 3, TargetSense::decrease, sigma_m);
    const Parts p = parts(ctx, cert->c, cert->d);
    REQUIRE(std::abs(p.gamma) <= 1e-10);
  }

  auto ctx = make_context(d, fit, 3, TargetSense::decrease, 1.01 * sigma_m);
  const auto probe = divergence_probe(ctx);
  REQUIRE(probe.max_abs_h > 1e3 * probe.baseline);
  REQUIRE(probe.min_h < -1e3 * probe.baseline);
}

TEST_CASE("alternating attack: vanishing budget, monotone trace, convergence") {
  Dataset d = synthetic(21, 30, 3);
  auto fit = regress::fit_ols(d);
  const double sigma_m = fit.sigma_min();

  {
    auto ctx = make_context(d, fit, 0, TargetSense::decrease, 1e-6 * sigma_m);
    AlternatingOptions opts;
    opts.seed = 3;
    const auto res = alternating_attack(ctx, opts);
    REQUIRE(std::abs(res.objective) <= 1e-5);
    const Vec beta_hat = testing::pinv_general([&] {
      Matrix xm = ctx.data.x;
      for (std::size_t i = 0; i < xm.rows(); ++i)
        for (std::size_t j = 0; j < xm.cols(); ++j) xm(i, j) += res.c[i] * res.d[j];
      return xm;
    }()) * ctx.data.y;
    for (std::size_t j = 0; j < 3; ++j)
      REQUIRE(beta_hat[j] == Catch::Approx(fit.beta0[j]).margin(1e-4));
  }

  for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
    auto ctx = make_context(d, fit, 0, TargetSense::decrease, 0.8 * sigma_m);
    AlternatingOptions opts;
    opts.seed = seed;
    const auto res = alternating_attack(ctx, opts);
    REQUIRE(res.converged);
    REQUIRE(res.objective < 0.0);
    for (std::size_t k = 1; k < res.trace.size(); ++k)
      REQUIRE(res.trace[k] <= res.trace[k - 1] + 1e-10);
    REQUIRE(matkit::norm2(res.c) <= 1.0 + 1e-9);
    REQUIRE(matkit::norm2(res.d) <= ctx.budget * (1.0 + 1e-9));
    // Limit objective equals h at the returned pair exactly.
    REQUIRE(res.objective == objective_h(ctx, res.c, res.d));
  }

  auto ctx_bad = make_context(d, fit, 0, TargetSense::decrease, 1.5 * sigma_m);
  REQUIRE_THROWS_AS(alternating_attack(ctx_bad), UnboundedError);
}

TEST_CASE("alternating attack on istanbul: quality and criticality") {
  Dataset d = istanbul();
  auto fit = regress::fit_ols(d);
  const double sigma_m = fit.sigma_min();
  auto ctx = make_context(std::move(d), std::move(fit), 3, TargetSense::decrease, 0.5 * sigma_m);

  AlternatingOptions opts;
  opts.seed = 42;
  const auto res = alternating_attack(ctx, opts);
  REQUIRE(res.converged);
  REQUIRE(res.objective < 0.0);
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    REQUIRE(res.trace[k] <= res.trace[k - 1] + 1e-10);

  const double crit = criticality_residual(
      ctx, res.c, res.d, [](const RankOneContext& cc, const Vec& c, const Vec& dd) {
        return pgd::grad_h(cc, c, dd);
      },
      10000, 777);
  REQUIRE(crit >= -1e-5);

  // A clearly non-critical point has feasible descent directions.
  auto [c0, d0] = random_start(ctx, 5);
  const double crit0 = criticality_residual(
      ctx, c0, d0, [](const RankOneContext& cc, const Vec& c, const Vec& dd) {
        return pgd::grad_h(cc, c, dd);
      },
      2000, 778);
  REQUIRE(crit0 < 0.0);
}
