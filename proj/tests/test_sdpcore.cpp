#include <catch2/catch_amalgamated.hpp>

#include "lra/sdpcore.hpp"
#include "lra/rng.hpp"
#include "support/oracles.hpp"

using namespace lra;
using namespace lra::sdpcore;
using matkit::Matrix;

namespace {

void set_entry(SdpProblem& p, std::size_t block, std::size_t var, std::uint32_t r, std::uint32_t c,
               double v) {
  p.blocks[block].coeff[var].push_back({r, c, v});
}

/// Projected subgradient oracle for min cost.y s.t. F(y) PSD and |y_k| <= box.
/// Penalty rho * max(0, -lambda_min(F(y))); slow but entirely independent of
/// the interior-point path.
double subgradient_oracle(const SdpProblem& p, double box, double rho, std::size_t iters,
                          double step_scale) {
  const std::size_t nv = p.dim_y;
  Vec y(nv, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < iters; ++t) {
    // Objective and subgradient at y.
    Vec grad = p.cost;
    double value = matkit::dot(p.cost, y);
    double worst = 0.0;
    for (const auto& blk : p.blocks) {
      Matrix f = blk.constant;
      for (std::size_t k = 0; k < nv; ++k)
        sdpcore::detail::add_sparse(blk.coeff[k], y[k], f);
      const auto eig = matkit::sym_eig(f);
      const double lmin = eig.values.back();
      if (lmin < 0.0) {
        worst += -lmin;
        Vec q(blk.dim);
        for (std::size_t i = 0; i < blk.dim; ++i) q[i] = eig.vectors(i, blk.dim - 1);
        for (std::size_t k = 0; k < nv; ++k) {
          double qfq = 0.0;
          for (const auto& e : blk.coeff[k]) {
            qfq += e.value * q[e.row] * q[e.col];
            if (e.row != e.col) qfq += e.value * q[e.col] * q[e.row];
          }
          grad[k] -= rho * qfq;
        }
      }
    }
    value += rho * worst;
    if (worst == 0.0) best = std::min(best, matkit::dot(p.cost, y));
    const double step = step_scale / std::sqrt(static_cast<double>(t + 1));
    for (std::size_t k = 0; k < nv; ++k) {
      y[k] -= step * grad[k];
      y[k] = std::clamp(y[k], -box, box);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("sdp: smallest off-diagonal completion") {
  // minimize y s.t. [[1, y], [y, 1]] PSD  ->  y* = -1.
  SdpProblem p;
  p.dim_y = 1;
  p.cost = {1.0};
  LmiBlock blk;
  blk.dim = 2;
  blk.constant = Matrix::identity(2);
  blk.coeff.resize(1);
  p.blocks.push_back(blk);
  set_entry(p, 0, 0, 0, 1, 1.0);

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(sol.value == Catch::Approx(-1.0).margin(1e-7));
  REQUIRE(sol.duality_gap <= 1e-8 * (1.0 + std::abs(sol.value)));
}

TEST_CASE("sdp: trace minimization with a pinned corner") {
  // minimize tr(Y) s.t. Y PSD, Y(0,0) = 1. Encoded by folding the pinned
  // entry into the constant: Y = E00 + y0 (E01+E10) + y1 E11.
  SdpProblem p;
  p.dim_y = 2;
  p.cost = {0.0, 1.0};
  p.cost_offset = 1.0;  // tr(Y) = 1 + y1
  LmiBlock blk;
  blk.dim = 2;
  blk.constant = Matrix(2, 2);
  blk.constant(0, 0) = 1.0;
  blk.coeff.resize(2);
  p.blocks.push_back(blk);
  set_entry(p, 0, 0, 0, 1, 1.0);
  set_entry(p, 0, 1, 1, 1, 1.0);

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(sol.value == Catch::Approx(1.0).margin(1e-7));
  REQUIRE(std::abs(sol.y_star[0]) <= 1e-6);
}

TEST_CASE("sdp: random bounded instances match the subgradient oracle") {
  CounterRng rng(60601);
  for (int inst = 0; inst < 3; ++inst) {
    CounterRng r = rng.stream(inst);
    const std::size_t nv = 4;
    const std::size_t dim = 4;
    SdpProblem p;
    p.dim_y = nv;
    p.cost = r.normal_vec(nv);

    LmiBlock blk;
    blk.dim = dim;
    blk.constant = testing::random_spd(r, dim, 2.0);
    blk.coeff.resize(nv);
    p.blocks.push_back(blk);
    for (std::size_t k = 0; k < nv; ++k) {
      Matrix fk = testing::random_symmetric(r, dim, 0.6);
      for (std::uint32_t i = 0; i < dim; ++i)
        for (std::uint32_t j = i; j < dim; ++j)
          if (fk(i, j) != 0.0) set_entry(p, 0, k, i, j, fk(i, j));
    }
    // Box |y_k| <= 1 as 1x1 blocks keeps the problem bounded and gives the
    // oracle a trivial projection.
    const double box = 1.0;
    for (std::size_t k = 0; k < nv; ++k) {
      LmiBlock lo;
      lo.dim = 1;
      lo.constant = Matrix(1, 1, box);
      lo.coeff.resize(nv);
      p.blocks.push_back(lo);
      set_entry(p, p.blocks.size() - 1, k, 0, 0, 1.0);
      LmiBlock hi;
      hi.dim = 1;
      hi.constant = Matrix(1, 1, box);
      hi.coeff.resize(nv);
      p.blocks.push_back(hi);
      set_entry(p, p.blocks.size() - 1, k, 0, 0, -1.0);
    }

    const SdpSolution sol = solve_sdp(p);
    REQUIRE(sol.status == SdpStatus::optimal);
    const double oracle = subgradient_oracle(p, box, 50.0, 200000, 0.05);
    REQUIRE(sol.value <= oracle + 1e-5);          // solver at least as good
    REQUIRE(oracle - sol.value <= 1e-4 * (1.0 + std::abs(sol.value) + std::abs(oracle)) + 1e-4);
  }
}

TEST_CASE("sdp: weak duality holds at every dual-feasible iterate") {
  SdpProblem p;
  p.dim_y = 1;
  p.cost = {1.0};
  LmiBlock blk;
  blk.dim = 2;
  blk.constant = Matrix::identity(2);
  blk.coeff.resize(1);
  p.blocks.push_back(blk);
  set_entry(p, 0, 0, 0, 1, 1.0);
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.history.size() >= 3);
  for (const auto& [primal, dual, dinf] : sol.history)
    if (dinf <= 1e-6) REQUIRE(primal >= dual - 1e-7 * (1.0 + std::abs(primal)));
}

TEST_CASE("sdp: weak duality along the path and PSD blocks at the solution") {
  SdpProblem p;
  p.dim_y = 2;
  p.cost = {1.0, 0.5};
  LmiBlock blk;
  blk.dim = 3;
  blk.constant = Matrix::identity(3);
  blk.constant(0, 1) = blk.constant(1, 0) = 0.3;
  blk.coeff.resize(2);
  p.blocks.push_back(blk);
  set_entry(p, 0, 0, 0, 0, 1.0);
  set_entry(p, 0, 0, 1, 2, 0.5);
  set_entry(p, 0, 1, 1, 1, 1.0);
  set_entry(p, 0, 1, 0, 2, -0.25);

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  Matrix f = blk.constant;
  sdpcore::detail::add_sparse(p.blocks[0].coeff[0], sol.y_star[0], f);
  sdpcore::detail::add_sparse(p.blocks[0].coeff[1], sol.y_star[1], f);
  const auto eig = matkit::sym_eig(f);
  REQUIRE(eig.values.back() >= -1e-8);
}

TEST_CASE("trust region: trivial and hard-case instances") {
  const TrustRegionResult zero = trust_region(Matrix::identity(3), Vec(3, 0.0), 1.0);
  REQUIRE(matkit::norm2(zero.x_star) <= 1e-12);
  REQUIRE(zero.value == Catch::Approx(0.0).margin(1e-14));
  REQUIRE_FALSE(zero.boundary);

  // Indefinite, b = 0: global minimum on the boundary along the negative axis.
  const Matrix a = Matrix::from_rows({{-1.0, 0.0}, {0.0, 1.0}});
  const TrustRegionResult hard = trust_region(a, Vec(2, 0.0), 1.0);
  REQUIRE(hard.value == Catch::Approx(-1.0).margin(1e-10));
  REQUIRE(std::abs(hard.x_star[0]) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(std::abs(hard.x_star[1]) <= 1e-10);
  REQUIRE(hard.boundary);
  REQUIRE(hard.multiplier == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("trust region: random instances satisfy KKT and beat ball sampling") {
  CounterRng rng(424242);
  for (int inst = 0; inst < 40; ++inst) {
    CounterRng r = rng.stream(inst);
    const std::size_t n = 8;
    const Matrix a = testing::random_symmetric(r, n);
    const Vec b = r.normal_vec(n);
    const double radius = 0.5 + r.next_uniform();

    const TrustRegionResult res = trust_region(a, b, radius);

    // Feasibility and stationarity.
    REQUIRE(matkit::norm2(res.x_star) <= radius * (1.0 + 1e-10));
    REQUIRE(res.multiplier >= 0.0);
    Vec kkt = a * res.x_star;
    matkit::axpy(res.multiplier, res.x_star, kkt);
    matkit::axpy(1.0, b, kkt);
    REQUIRE(matkit::norm_inf(kkt) <= 1e-8 * (1.0 + matkit::norm2(b)));
    // Complementarity.
    REQUIRE(res.multiplier * (radius - matkit::norm2(res.x_star)) <= 1e-8 * radius);
    // A + mu I PSD.
    Matrix shifted = a;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += res.multiplier;
    REQUIRE(matkit::sym_eig(shifted).values.back() >= -1e-8);
  }

  // Sampling dominance on a handful of instances (1e6 points each is slow, so
  // use two instances at full resolution).
  for (int inst = 0; inst < 2; ++inst) {
    CounterRng r = rng.stream(1000 + inst);
    const Matrix a = testing::random_symmetric(r, 8);
    const Vec b = r.normal_vec(8);
    const double radius = 1.0;
    const TrustRegionResult res = trust_region(a, b, radius);
    const auto f = [&](const Vec& x) { return matkit::dot(x, a * x) + 2.0 * matkit::dot(b, x); };
    const double oracle = testing::ball_scan_min(f, 8, radius, 1000000);
    REQUIRE(res.value <= oracle + 1e-6);
  }
}

TEST_CASE("trust region: interior strictly convex case") {
  CounterRng rng(11);
  const Matrix a = testing::random_spd(rng, 5, 1.0);
  const Vec b = rng.normal_vec(5);
  const TrustRegionResult res = trust_region(a, b, 1e3);
  REQUIRE_FALSE(res.boundary);
  REQUIRE(res.multiplier == 0.0);
  Vec grad = a * res.x_star;
  matkit::axpy(1.0, b, grad);
  REQUIRE(matkit::norm_inf(grad) <= 1e-8 * (1.0 + matkit::norm2(b)));
}

TEST_CASE("min_eig_affine basics and concavity along segments") {
  REQUIRE(min_eig_affine(Matrix::identity(3), {}, {}) == Catch::Approx(1.0));
  REQUIRE(min_eig_affine(Matrix(2, 2), {Matrix::identity(2)}, {-2.0}) == Catch::Approx(-2.0));

  CounterRng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m0 = testing::random_symmetric(rng, 6);
    const std::vector<Matrix> dirs = {testing::random_symmetric(rng, 6),
                                      testing::random_symmetric(rng, 6)};
    const Vec t0 = rng.normal_vec(2);
    const Vec t1 = rng.normal_vec(2);
    Vec tm(2);
    for (int i = 0; i < 2; ++i) tm[i] = 0.5 * (t0[i] + t1[i]);
    const double e0 = min_eig_affine(m0, dirs, t0);
    const double e1 = min_eig_affine(m0, dirs, t1);
    const double em = min_eig_affine(m0, dirs, tm);
    REQUIRE(em >= std::min(e0, e1) - 1e-10);
    REQUIRE(em >= 0.5 * (e0 + e1) - 1e-10);  // concavity
  }
}
