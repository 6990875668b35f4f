#include <catch2/catch_amalgamated.hpp>

#include "lra/matkit.hpp"
#include "lra/rng.hpp"
#include "support/oracles.hpp"

using lra::CounterRng;
using lra::Vec;
using namespace lra::matkit;

namespace {

double reconstruction_error_eig(const Matrix& s, const SymEig& e) {
  const Matrix recon = e.vectors * Matrix::diagonal(e.values) * transpose(e.vectors);
  return max_abs(s - recon);
}

double orthogonality_error(const Matrix& q) {
  return max_abs(transpose(q) * q - Matrix::identity(q.cols()));
}

}  // namespace

TEST_CASE("sym_eig on identity") {
  const Matrix s = Matrix::identity(3);
  const SymEig e = sym_eig(s);
  for (double v : e.values) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(orthogonality_error(e.vectors) < 1e-10);
}

TEST_CASE("sym_eig on diagonal matrix") {
  const Matrix s = Matrix::from_rows({{4.0, 0.0}, {0.0, 1.0}});
  const SymEig e = sym_eig(s);
  REQUIRE(e.values[0] == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(e.values[1] == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(std::abs(e.vectors(0, 0)) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(std::abs(e.vectors(1, 1)) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("sym_eig spectrum matches QR-iteration oracle on random symmetric matrices") {
  CounterRng rng(20240511);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = lra::testing::random_symmetric(rng, 5);
    const SymEig e = sym_eig(s);
    const Vec oracle = lra::testing::qr_eigenvalues(s);
    for (std::size_t i = 0; i < 5; ++i) REQUIRE(e.values[i] == Catch::Approx(oracle[i]).margin(1e-8));
    REQUIRE(reconstruction_error_eig(s, e) <= 1e-8 * std::max(1.0, max_abs(s)));
    REQUIRE(orthogonality_error(e.vectors) <= 1e-10);
  }
}

TEST_CASE("sym_eig rejects bad input") {
  REQUIRE_THROWS_AS(sym_eig(Matrix(2, 3)), lra::DimensionError);
  REQUIRE_THROWS_AS(sym_eig(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})), lra::SymmetryError);
}

TEST_CASE("sym_eig is deterministic including eigenvector signs") {
  CounterRng rng(7);
  const Matrix s = lra::testing::random_symmetric(rng, 6);
  const SymEig a = sym_eig(s);
  const SymEig b = sym_eig(s);
  REQUIRE(max_abs(a.vectors - b.vectors) == 0.0);
  for (std::size_t j = 0; j < 6; ++j) {
    double lead = 0.0;
    for (std::size_t i = 0; i < 6; ++i)
      if (std::abs(a.vectors(i, j)) > 1e-9) {
        lead = a.vectors(i, j);
        break;
      }
    REQUIRE(lead > 0.0);
  }
}

TEST_CASE("svd identity and rectangular diagonal") {
  const SvdFactors f = svd(Matrix::identity(4));
  for (double s : f.singular_values) REQUIRE(s == Catch::Approx(1.0).margin(1e-12));

  const Matrix x = Matrix::from_rows({{3.0, 0.0}, {0.0, 2.0}, {0.0, 0.0}});
  const SvdFactors g = svd(x);
  REQUIRE(g.singular_values[0] == Catch::Approx(3.0).margin(1e-10));
  REQUIRE(g.singular_values[1] == Catch::Approx(2.0).margin(1e-10));
  const Matrix recon = g.u * svd_sigma(g, 3, 2) * transpose(g.v);
  REQUIRE(max_abs(x - recon) <= 1e-8 * max_abs(x));
  REQUIRE(orthogonality_error(g.u) <= 1e-10);
  REQUIRE(orthogonality_error(g.v) <= 1e-10);
}

TEST_CASE("svd reconstructs random tall matrices and cross-checks the Gram spectrum") {
  CounterRng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = lra::testing::random_matrix(rng, 20, 4);
    const SvdFactors f = svd(x);
    const Matrix recon = f.u * svd_sigma(f, 20, 4) * transpose(f.v);
    REQUIRE(max_abs(x - recon) <= 1e-8 * std::max(1.0, max_abs(x)));
    REQUIRE(orthogonality_error(f.u) <= 1e-9);

    const Matrix gram = transpose(x) * x;
    const SymEig ge = sym_eig(gram);
    for (std::size_t i = 0; i < 4; ++i)
      REQUIRE(f.singular_values[i] == Catch::Approx(std::sqrt(std::max(0.0, ge.values[i]))).margin(1e-8));
  }
}

TEST_CASE("svd requires tall input") { REQUIRE_THROWS_AS(svd(Matrix(2, 3)), lra::DimensionError); }

TEST_CASE("pinv of identity and of orthonormal columns") {
  REQUIRE(max_abs(pinv(Matrix::identity(3)) - Matrix::identity(3)) < 1e-10);

  // Tall matrix with orthonormal columns: pinv equals the transpose.
  Matrix q(4, 2);
  q(0, 0) = 0.5;
  q(1, 0) = 0.5;
  q(2, 0) = 0.5;
  q(3, 0) = 0.5;
  q(0, 1) = 0.5;
  q(1, 1) = -0.5;
  q(2, 1) = 0.5;
  q(3, 1) = -0.5;
  REQUIRE(max_abs(pinv(q) - transpose(q)) < 1e-9);
}

TEST_CASE("pinv satisfies the Moore-Penrose identities on random full-rank input") {
  CounterRng rng(123);
  for (int trial = 0; trial < 8; ++trial) {
    const Matrix x = lra::testing::random_matrix(rng, 20, 4);
    const Matrix xp = pinv(x);
    REQUIRE(max_abs(xp * x - Matrix::identity(4)) < 1e-8);
    REQUIRE(max_abs(x * xp * x - x) < 1e-8);
    REQUIRE(max_abs(xp * x * xp - xp) < 1e-8);
    const Matrix proj = x * xp;
    REQUIRE(max_abs(proj - transpose(proj)) < 1e-8);
  }
}

TEST_CASE("pinv reports rank deficiency with the singular value estimate") {
  Matrix x(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = 2.0;  // second column is a multiple of the first
  }
  try {
    pinv(x);
    FAIL("expected SingularityError");
  } catch (const lra::SingularityError& err) {
    REQUIRE(err.sigma_max > 0.0);
    REQUIRE(err.sigma_min <= 1e-10 * err.sigma_max);
  }
}

TEST_CASE("chol on identity and diagonal") {
  REQUIRE(max_abs(chol(Matrix::identity(3)) - Matrix::identity(3)) < 1e-14);
  const Matrix u = chol(Matrix::from_rows({{4.0, 0.0}, {0.0, 9.0}}));
  REQUIRE(u(0, 0) == Catch::Approx(2.0));
  REQUIRE(u(1, 1) == Catch::Approx(3.0));
}

TEST_CASE("chol reconstructs random SPD matrices") {
  CounterRng rng(5150);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix s = lra::testing::random_spd(rng, 6);
    const Matrix u = chol(s);
    for (std::size_t i = 1; i < 6; ++i)
      for (std::size_t j = 0; j < i; ++j) REQUIRE(u(i, j) == 0.0);
    REQUIRE(max_abs(transpose(u) * u - s) <= 1e-10 * std::max(1.0, max_abs(s)));
  }
}

TEST_CASE("chol rejects indefinite input") {
  REQUIRE_THROWS_AS(chol(Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}})), lra::NotPositiveDefiniteError);
}

TEST_CASE("inv_sqrt basics and identity check") {
  REQUIRE(max_abs(inv_sqrt(Matrix::identity(3)) - Matrix::identity(3)) < 1e-12);
  const Matrix r = inv_sqrt(Matrix::from_rows({{4.0}}));
  REQUIRE(r(0, 0) == Catch::Approx(0.5).margin(1e-12));

  CounterRng rng(31337);
  for (int trial = 0; trial < 6; ++trial) {
    const Matrix s = lra::testing::random_spd(rng, 6);
    const Matrix rr = inv_sqrt(s);
    REQUIRE(max_abs(rr - transpose(rr)) < 1e-10);
    REQUIRE(max_abs(rr * s * rr - Matrix::identity(6)) < 1e-8);
  }
  REQUIRE_THROWS_AS(inv_sqrt(Matrix::from_rows({{-1.0}})), lra::NotPositiveDefiniteError);
}

TEST_CASE("triangular solves invert chol factors") {
  CounterRng rng(41);
  const Matrix s = lra::testing::random_spd(rng, 5);
  const Matrix u = chol(s);
  const Vec b = rng.normal_vec(5);
  const Vec x = solve_upper(u, solve_upper_transposed(u, b));
  const Vec sx = s * x;
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(sx[i] == Catch::Approx(b[i]).margin(1e-9));
}
