#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <array>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "lra/matkit.hpp"

namespace lra::sdpcore {

using matkit::Matrix;

// ---------------------------------------------------------------------------
// Problem form: minimize cost.y (+ cost_offset) subject to, for every block,
//   constant + sum_k y_k * coeff[k]  being positive semidefinite.

/// One entry of a sparse symmetric coefficient matrix; row <= col, the
/// mirrored entry is implied.
struct SparseSymEntry {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

struct LmiBlock {
  std::size_t dim = 0;
  Matrix constant;                                  // dense symmetric, dim x dim
  std::vector<std::vector<SparseSymEntry>> coeff;   // indexed by variable
};

struct SdpProblem {
  std::size_t dim_y = 0;
  std::vector<LmiBlock> blocks;
  Vec cost;
  double cost_offset = 0.0;
};

enum class SdpStatus { optimal, max_iter, infeasible };

struct SdpSolution {
  Vec y_star;
  double value = 0.0;        // includes cost_offset
  SdpStatus status = SdpStatus::max_iter;
  double duality_gap = 0.0;  // |primal - dual| at exit
  std::size_t iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  /// (primal objective, dual objective, dual infeasibility) per iteration;
  /// weak duality holds wherever the dual residual is small.
  std::vector<std::array<double, 3>> history;
};

struct SdpOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  std::size_t max_iterations = 200;
  bool trace = false;  // per-iteration line on stderr
};

namespace detail {

// Dense lower Cholesky, blocked right-looking; returns false on a
// non-positive pivot. Only the lower triangle of `a` is referenced/written.
inline bool chol_lower_inplace(Matrix& a) {
  const std::size_t n = a.rows();
  constexpr std::size_t nb = 128;
  for (std::size_t k0 = 0; k0 < n; k0 += nb) {
    const std::size_t kend = std::min(n, k0 + nb);
    // Factor the diagonal block.
    for (std::size_t j = k0; j < kend; ++j) {
      double djj = a(j, j);
      const double* rowj = a.row_ptr(j);
      for (std::size_t k = k0; k < j; ++k) djj -= rowj[k] * rowj[k];
      if (!(djj > 0.0)) return false;
      const double ljj = std::sqrt(djj);
      a(j, j) = ljj;
      for (std::size_t i = j + 1; i < kend; ++i) {
        double v = a(i, j);
        const double* rowi = a.row_ptr(i);
        for (std::size_t k = k0; k < j; ++k) v -= rowi[k] * rowj[k];
        a(i, j) = v / ljj;
      }
    }
    if (kend == n) break;
    // Panel solve: rows below the block against the transposed diagonal block.
    for (std::size_t i = kend; i < n; ++i) {
      double* rowi = a.row_ptr(i);
      for (std::size_t j = k0; j < kend; ++j) {
        double v = rowi[j];
        const double* rowj = a.row_ptr(j);
        for (std::size_t k = k0; k < j; ++k) v -= rowi[k] * rowj[k];
        rowi[j] = v / a(j, j);
      }
    }
    // Trailing update A22 -= L21 L21^T as panel dot products. Rows are
    // processed four at a time so each streamed right-hand row is reused
    // against four resident left rows.
    const std::size_t kw = kend - k0;
    std::size_t i0 = kend;
    for (; i0 + 4 <= n; i0 += 4) {
      const double* ri0 = a.row_ptr(i0) + k0;
      const double* ri1 = a.row_ptr(i0 + 1) + k0;
      const double* ri2 = a.row_ptr(i0 + 2) + k0;
      const double* ri3 = a.row_ptr(i0 + 3) + k0;
      for (std::size_t j = kend; j <= i0; ++j) {
        const double* rowj = a.row_ptr(j) + k0;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        for (std::size_t k = 0; k < kw; ++k) {
          const double r = rowj[k];
          a0 += r * ri0[k];
          a1 += r * ri1[k];
          a2 += r * ri2[k];
          a3 += r * ri3[k];
        }
        a(i0, j) -= a0;
        a(i0 + 1, j) -= a1;
        a(i0 + 2, j) -= a2;
        a(i0 + 3, j) -= a3;
      }
      // Intra-tile triangle.
      for (std::size_t i = i0 + 1; i < i0 + 4; ++i) {
        const double* rowi = a.row_ptr(i) + k0;
        for (std::size_t j = i0 + 1; j <= i; ++j) {
          const double* rowj = a.row_ptr(j) + k0;
          double acc = 0.0;
          for (std::size_t k = 0; k < kw; ++k) acc += rowi[k] * rowj[k];
          a(i, j) -= acc;
        }
      }
    }
    for (std::size_t i = i0; i < n; ++i) {
      const double* rowi = a.row_ptr(i) + k0;
      for (std::size_t j = kend; j <= i; ++j) {
        const double* rowj = a.row_ptr(j) + k0;
        double acc = 0.0;
        for (std::size_t k = 0; k < kw; ++k) acc += rowi[k] * rowj[k];
        a(i, j) -= acc;
      }
    }
  }
  return true;
}

inline void chol_solve_lower(const Matrix& l, Vec& x) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = x[i];
    const double* rowi = l.row_ptr(i);
    for (std::size_t k = 0; k < i; ++k) acc -= rowi[k] * x[k];
    x[i] = acc / rowi[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= l(k, ii) * x[k];
    x[ii] = acc / l(ii, ii);
  }
}

/// Symmetric inverse from a lower Cholesky factor (L L^T)^{-1}.
inline Matrix chol_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    chol_solve_lower(l, e);
    inv.set_col(j, e);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = inv(j, i) = v;
    }
  return inv;
}

/// Largest step in (0, 1] keeping x + alpha dx positive definite, found by
/// Cholesky probes and bisection. Returns 0 if even tiny steps fail.
inline double max_psd_step(const Matrix& x, const Matrix& dx) {
  const std::size_t n = x.rows();
  const auto feasible = [&](double alpha) {
    Matrix trial = x;
    for (std::size_t i = 0; i < n * n; ++i) trial.data()[i] += alpha * dx.data()[i];
    return chol_lower_inplace(trial);
  };
  if (feasible(1.0)) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 24; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

/// Flattened per-block entry list, sorted by (row, col) for cache-friendly
/// Schur assembly.
struct FlatEntries {
  std::vector<std::uint32_t> var;
  std::vector<std::uint32_t> row;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
};

inline FlatEntries flatten_block(const LmiBlock& block) {
  FlatEntries f;
  std::size_t count = 0;
  for (const auto& list : block.coeff)
    for (const auto& e : list) count += e.row == e.col ? 1 : 2;
  f.var.reserve(count);
  f.row.reserve(count);
  f.col.reserve(count);
  f.val.reserve(count);
  std::vector<std::size_t> order;
  struct Tmp {
    std::uint32_t var, row, col;
    double val;
  };
  std::vector<Tmp> tmp;
  tmp.reserve(count);
  for (std::uint32_t k = 0; k < block.coeff.size(); ++k)
    for (const auto& e : block.coeff[k]) {
      tmp.push_back({k, e.row, e.col, e.value});
      if (e.row != e.col) tmp.push_back({k, e.col, e.row, e.value});
    }
  std::sort(tmp.begin(), tmp.end(), [](const Tmp& a, const Tmp& b) {
    return a.row != b.row ? a.row < b.row : (a.col != b.col ? a.col < b.col : a.var < b.var);
  });
  for (const Tmp& t : tmp) {
    f.var.push_back(t.var);
    f.row.push_back(t.row);
    f.col.push_back(t.col);
    f.val.push_back(t.val);
  }
  return f;
}

}  // namespace detail

/// lambda_min of constant + sum_k t_k * directions_k (dense symmetric eig).
inline double min_eig_affine(const Matrix& m0, const std::vector<Matrix>& directions, const Vec& t,
                             const Tolerances& tol = default_tolerances()) {
  if (directions.size() != t.size()) throw DimensionError("min_eig_affine: weight count mismatch");
  Matrix m = m0;
  for (std::size_t k = 0; k < directions.size(); ++k) {
    if (directions[k].rows() != m.rows() || directions[k].cols() != m.cols())
      throw DimensionError("min_eig_affine: direction shape mismatch");
    if (t[k] == 0.0) continue;
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) m.data()[i] += t[k] * directions[k].data()[i];
  }
  const auto eig = matkit::sym_eig(m, tol);
  return eig.values.back();
}

// ---------------------------------------------------------------------------
// Trust-region subproblem: minimize x^T A x + 2 b^T x subject to |x| <= radius.

struct TrustRegionResult {
  Vec x_star;
  double value = 0.0;
  double multiplier = 0.0;  // KKT: (A + multiplier I) x = -b, multiplier >= 0
  bool boundary = false;
};

/// Global solve via full eigendecomposition and the secular equation, hard
/// case included. Exact at the dimensions used here.
inline TrustRegionResult trust_region(const Matrix& a, const Vec& b, double radius,
                                      const Tolerances& tol = default_tolerances()) {
  if (!(radius > 0.0)) throw DimensionError("trust_region: radius must be positive");
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw DimensionError("trust_region: shape mismatch");

  const auto eig = matkit::sym_eig(a, tol);  // descending
  Vec lam(n);
  for (std::size_t i = 0; i < n; ++i) lam[i] = eig.values[n - 1 - i];  // ascending
  Vec bt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) acc += eig.vectors(r, n - 1 - i) * b[r];
    bt[i] = acc;
  }
  const double lam_min = lam[0];
  const double scale = std::max({1.0, std::abs(lam[0]), std::abs(lam[n - 1]), matkit::norm2(b)});
  const double cluster_tol = 1e-12 * scale;

  const auto coords_norm = [&](double mu, bool skip_cluster) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (skip_cluster && lam[i] <= lam_min + cluster_tol) continue;
      const double d = lam[i] + mu;
      acc += (bt[i] / d) * (bt[i] / d);
    }
    return std::sqrt(acc);
  };
  const auto assemble = [&](double mu, bool skip_cluster, double tau) {
    Vec x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double coord;
      if (skip_cluster && lam[i] <= lam_min + cluster_tol)
        coord = i == 0 ? tau : 0.0;  // extra mass along one minimal eigenvector
      else
        coord = -bt[i] / (lam[i] + mu);
      if (coord == 0.0) continue;
      for (std::size_t r = 0; r < n; ++r) x[r] += eig.vectors(r, n - 1 - i) * coord;
    }
    return x;
  };
  const auto finish = [&](Vec x, double mu, bool on_boundary) {
    TrustRegionResult out;
    const Vec ax = a * x;
    out.value = matkit::dot(x, ax) + 2.0 * matkit::dot(b, x);
    out.x_star = std::move(x);
    out.multiplier = mu;
    out.boundary = on_boundary;
    return out;
  };

  // Interior candidate when A is positive definite.
  if (lam_min > 0.0) {
    const double norm0 = coords_norm(0.0, false);
    if (norm0 <= radius) return finish(assemble(0.0, false, 0.0), 0.0, norm0 >= radius * (1.0 - 1e-12));
  }

  // Boundary solution. Check the hard case first: components on the minimal
  // eigenspace negligible and the pseudo solution already inside the ball.
  const double mu0 = std::max(0.0, -lam_min);
  double cluster_b = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (lam[i] <= lam_min + cluster_tol) cluster_b = std::max(cluster_b, std::abs(bt[i]));
  if (cluster_b <= 1e-11 * scale) {
    const double base = coords_norm(mu0, true);
    if (base <= radius) {
      if (lam_min >= 0.0 && mu0 == 0.0) return finish(assemble(0.0, true, 0.0), 0.0, false);
      const double tau = std::sqrt(std::max(0.0, radius * radius - base * base));
      return finish(assemble(mu0, true, tau), mu0, true);
    }
  }

  // Secular equation: find mu > mu0 with |x(mu)| = radius. The map is
  // strictly decreasing; Newton on 1/|x| - 1/radius with a bisection guard.
  double lo = mu0;
  double hi = std::max(mu0 * 2.0, mu0 + 1.0);
  while (coords_norm(hi, false) > radius) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e18 * scale) throw NumericalError("trust_region: secular bracket failure");
  }
  double mu = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double nrm = coords_norm(mu, false);
    if (std::abs(nrm - radius) <= 1e-13 * radius) break;
    if (nrm > radius)
      lo = mu;
    else
      hi = mu;
    // Newton step on f(mu) = 1/nrm - 1/radius.
    double d_norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = lam[i] + mu;
      d_norm2 += bt[i] * bt[i] / (d * d * d);
    }
    const double fval = 1.0 / nrm - 1.0 / radius;
    const double fder = d_norm2 / (nrm * nrm * nrm);
    double next = fder > 0.0 ? mu - fval / fder : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
  }
  return finish(assemble(mu, false, 0.0), mu, true);
}

// ---------------------------------------------------------------------------
// Interior-point SDP solver: Mehrotra predictor-corrector with the
// KSH/HRVW/M direction and a dense Schur complement.

namespace detail {

struct BlockState {
  std::size_t dim = 0;
  Matrix x;        // primal slack, PD
  Matrix z;        // dual, PD
  Matrix x_chol;   // lower factor of x
  Matrix x_inv;
  FlatEntries entries;
};

inline void schur_accumulate(const LmiBlock& blk, const BlockState& s, Matrix& b_out,
                             Matrix& scratch) {
  // B[l,k] += tr(F_k X^{-1} F_l Z). For each variable l with entries in the
  // block, build M = X^{-1} F_l Z densely from outer products, then read it
  // back through every entry of every F_k into row l of B. Both passes touch
  // memory contiguously.
  const std::size_t dim = s.dim;
  if (scratch.rows() != dim) scratch = Matrix(dim, dim);
  const std::size_t ecount = s.entries.val.size();
  const auto& var = s.entries.var;
  const auto& row = s.entries.row;
  const auto& col = s.entries.col;
  const auto& val = s.entries.val;
  for (std::uint32_t l = 0; l < blk.coeff.size(); ++l) {
    const auto& list = blk.coeff[l];
    if (list.empty()) continue;
    std::fill(scratch.data(), scratch.data() + dim * dim, 0.0);
    const auto rank_one = [&](std::uint32_t c, std::uint32_t d, double v) {
      const double* xc = s.x_inv.row_ptr(c);  // X^{-1} column c (symmetric)
      const double* zd = s.z.row_ptr(d);
      for (std::size_t i = 0; i < dim; ++i) {
        const double w = v * xc[i];
        if (w == 0.0) continue;
        double* mi = scratch.row_ptr(i);
        for (std::size_t j = 0; j < dim; ++j) mi[j] += w * zd[j];
      }
    };
    for (const auto& e : list) {
      rank_one(e.row, e.col, e.value);
      if (e.row != e.col) rank_one(e.col, e.row, e.value);
    }
    double* out = b_out.row_ptr(l);
    for (std::size_t e = 0; e < ecount; ++e) out[var[e]] += val[e] * scratch(col[e], row[e]);
  }
}

inline void add_sparse(const std::vector<SparseSymEntry>& list, double w, Matrix& into) {
  for (const auto& e : list) {
    into(e.row, e.col) += w * e.value;
    if (e.row != e.col) into(e.col, e.row) += w * e.value;
  }
}

inline double dot_sparse(const std::vector<SparseSymEntry>& list, const Matrix& m) {
  // tr(F M) with F the implied symmetric matrix.
  double acc = 0.0;
  for (const auto& e : list) {
    acc += e.value * m(e.col, e.row);
    if (e.row != e.col) acc += e.value * m(e.row, e.col);
  }
  return acc;
}

inline double frob_inner(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

}  // namespace detail

inline SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opts = {}) {
  const std::size_t nv = p.dim_y;
  if (p.cost.size() != nv) throw DimensionError("solve_sdp: cost length mismatch");
  for (const auto& blk : p.blocks) {
    if (blk.constant.rows() != blk.dim || blk.constant.cols() != blk.dim)
      throw DimensionError("solve_sdp: block constant shape mismatch");
    if (blk.coeff.size() != nv) throw DimensionError("solve_sdp: block coefficient count mismatch");
  }

  const std::size_t nb = p.blocks.size();
  std::size_t total_dim = 0;
  double f0_scale = 1.0;
  for (const auto& blk : p.blocks) {
    total_dim += blk.dim;
    f0_scale = std::max(f0_scale, matkit::max_abs(blk.constant));
  }
  const double c_scale = std::max(1.0, matkit::norm_inf(p.cost));

  std::vector<detail::BlockState> st(nb);
  const double lam_p = std::max(10.0, 2.0 * f0_scale);
  const double lam_d = std::max(10.0, 2.0 * c_scale);
  for (std::size_t b = 0; b < nb; ++b) {
    st[b].dim = p.blocks[b].dim;
    st[b].x = Matrix(st[b].dim, st[b].dim);
    st[b].z = Matrix(st[b].dim, st[b].dim);
    for (std::size_t i = 0; i < st[b].dim; ++i) {
      st[b].x(i, i) = lam_p;
      st[b].z(i, i) = lam_d;
    }
    st[b].entries = detail::flatten_block(p.blocks[b]);
  }
  Vec y(nv, 0.0);

  SdpSolution sol;
  sol.y_star = y;
  double best_merit = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;

  std::vector<Matrix> presid(nb);  // P_b = F(y) - X
  Vec dresid(nv);                  // c - A(Z)
  std::vector<Matrix> rc(nb);      // complementarity rhs
  std::vector<Matrix> dxa(nb), dza(nb), dxc(nb), dzc(nb);
  Matrix schur;

  const auto assemble_fy = [&](std::size_t b) {
    Matrix fy = p.blocks[b].constant;
    for (std::size_t k = 0; k < nv; ++k)
      if (y[k] != 0.0) detail::add_sparse(p.blocks[b].coeff[k], y[k], fy);
    return fy;
  };

  double mu = 0.0;
  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    // Residuals and convergence measures.
    double primal_infeas = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      presid[b] = assemble_fy(b);
      for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) presid[b].data()[i] -= st[b].x.data()[i];
      primal_infeas = std::max(primal_infeas, matkit::max_abs(presid[b]));
    }
    double dual_obj = 0.0;
    for (std::size_t k = 0; k < nv; ++k) dresid[k] = p.cost[k];
    for (std::size_t b = 0; b < nb; ++b) {
      dual_obj -= detail::frob_inner(p.blocks[b].constant, st[b].z);
      for (std::size_t k = 0; k < nv; ++k)
        dresid[k] -= detail::dot_sparse(p.blocks[b].coeff[k], st[b].z);
    }
    const double dual_infeas = matkit::norm_inf(dresid);
    const double primal_obj = matkit::dot(p.cost, y);

    double comp = 0.0;
    for (std::size_t b = 0; b < nb; ++b) comp += detail::frob_inner(st[b].x, st[b].z);
    mu = comp / static_cast<double>(total_dim);

    const double gap_rel =
        std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj) + std::abs(dual_obj));
    const double pinf_rel = primal_infeas / (1.0 + f0_scale);
    const double dinf_rel = dual_infeas / (1.0 + c_scale);
    const double merit = std::max({gap_rel, pinf_rel, dinf_rel});
    sol.history.push_back({primal_obj, dual_obj, dual_infeas});
    if (opts.trace)
      std::fprintf(stderr, "sdp it %3zu  p % .9e  d % .9e  gap %.2e  pinf %.2e  dinf %.2e  mu %.2e\n",
                   iter, primal_obj, dual_obj, gap_rel, primal_infeas, dual_infeas, mu);

    // Keep the best iterate seen; late iterations can degrade numerically.
    if (merit < best_merit) {
      best_merit = merit;
      stall = 0;
      sol.y_star = y;
      sol.value = primal_obj + p.cost_offset;
      sol.duality_gap = std::abs(primal_obj - dual_obj);
      sol.iterations = iter;
      sol.primal_infeasibility = primal_infeas;
      sol.dual_infeasibility = dual_infeas;
    } else if (++stall >= 8) {
      break;
    }
    if (gap_rel <= opts.gap_tol && pinf_rel <= opts.feas_tol && dinf_rel <= opts.feas_tol) {
      sol.status = SdpStatus::optimal;
      return sol;
    }
    if (matkit::norm2(y) > 1e12) {
      sol.status = SdpStatus::infeasible;
      return sol;
    }

    // Factor X blocks and build the Schur complement.
    bool factor_ok = true;
    for (std::size_t b = 0; b < nb; ++b) {
      st[b].x_chol = st[b].x;
      if (!detail::chol_lower_inplace(st[b].x_chol)) {
        factor_ok = false;
        break;
      }
      st[b].x_inv = detail::chol_inverse(st[b].x_chol);
    }
    if (!factor_ok) break;

    schur = Matrix(nv, nv);
    Matrix scratch;
    for (std::size_t b = 0; b < nb; ++b)
      detail::schur_accumulate(p.blocks[b], st[b], schur, scratch);
    // Symmetrize (exact in theory, noisy in floating point) and factor.
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = i + 1; j < nv; ++j) {
        const double v = 0.5 * (schur(i, j) + schur(j, i));
        schur(i, j) = schur(j, i) = v;
      }
    Matrix schur_chol = schur;
    {
      bool ok = detail::chol_lower_inplace(schur_chol);
      double jitter = 1e-12;
      while (!ok && jitter <= 1e-4) {
        schur_chol = schur;
        double tr = 0.0;
        for (std::size_t i = 0; i < nv; ++i) tr += schur(i, i);
        const double add = jitter * std::max(1.0, tr / static_cast<double>(nv));
        for (std::size_t i = 0; i < nv; ++i) schur_chol(i, i) += add;
        ok = detail::chol_lower_inplace(schur_chol);
        jitter *= 100.0;
      }
      if (!ok) break;
    }

    const auto schur_solve = [&](const Vec& rhs) {
      Vec dy = rhs;
      detail::chol_solve_lower(schur_chol, dy);
      // Two rounds of iterative refinement against the unjittered matrix keep
      // the dual residual from drifting once the system turns ill-conditioned.
      for (int round = 0; round < 2; ++round) {
        Vec resid = rhs;
        for (std::size_t i = 0; i < nv; ++i) {
          const double* row = schur.row_ptr(i);
          double acc = 0.0;
          for (std::size_t j = 0; j < nv; ++j) acc += row[j] * dy[j];
          resid[i] -= acc;
        }
        if (matkit::norm_inf(resid) <= 1e-16 * (1.0 + matkit::norm_inf(rhs))) break;
        detail::chol_solve_lower(schur_chol, resid);
        for (std::size_t i = 0; i < nv; ++i) dy[i] += resid[i];
      }
      return dy;
    };

    const auto solve_direction = [&](const std::vector<Matrix>& rc_in, Vec& dy,
                                     std::vector<Matrix>& dx, std::vector<Matrix>& dz) {
      Vec rhs(nv);
      for (std::size_t k = 0; k < nv; ++k) rhs[k] = -dresid[k];
      for (std::size_t b = 0; b < nb; ++b) {
        // M = X^{-1} (Rc - P Z); rhs_k += tr(F_k M).
        const Matrix pz = presid[b] * st[b].z;
        Matrix m = rc_in[b];
        for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) m.data()[i] -= pz.data()[i];
        m = st[b].x_inv * m;
        for (std::size_t k = 0; k < nv; ++k)
          if (!p.blocks[b].coeff[k].empty()) rhs[k] += detail::dot_sparse(p.blocks[b].coeff[k], m);
      }
      dy = schur_solve(rhs);
      dx.resize(nb);
      dz.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dx[b] = presid[b];
        for (std::size_t k = 0; k < nv; ++k)
          if (dy[k] != 0.0) detail::add_sparse(p.blocks[b].coeff[k], dy[k], dx[b]);
        // dZ = X^{-1} (Rc - dX Z), then symmetrize.
        const Matrix dxz = dx[b] * st[b].z;
        Matrix m = rc_in[b];
        for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) m.data()[i] -= dxz.data()[i];
        m = st[b].x_inv * m;
        dz[b] = Matrix(st[b].dim, st[b].dim);
        for (std::size_t i = 0; i < st[b].dim; ++i)
          for (std::size_t j = 0; j < st[b].dim; ++j) dz[b](i, j) = 0.5 * (m(i, j) + m(j, i));
      }
    };

    // Predictor: pure Newton toward complementarity zero.
    for (std::size_t b = 0; b < nb; ++b) {
      rc[b] = st[b].x * st[b].z;
      for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) rc[b].data()[i] = -rc[b].data()[i];
    }
    Vec dy_a;
    solve_direction(rc, dy_a, dxa, dza);

    double ap = 1.0;
    double ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, detail::max_psd_step(st[b].x, dxa[b]));
      ad = std::min(ad, detail::max_psd_step(st[b].z, dza[b]));
    }
    double comp_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      Matrix xt = st[b].x;
      Matrix zt = st[b].z;
      for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) {
        xt.data()[i] += 0.99 * ap * dxa[b].data()[i];
        zt.data()[i] += 0.99 * ad * dza[b].data()[i];
      }
      comp_aff += detail::frob_inner(xt, zt);
    }
    const double mu_aff = comp_aff / static_cast<double>(total_dim);
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;
    sigma = std::min(1.0, std::max(1e-6, sigma));

    // Corrector: recentered with the Mehrotra second-order term.
    for (std::size_t b = 0; b < nb; ++b) {
      const Matrix xz = st[b].x * st[b].z;
      const Matrix dd = dxa[b] * dza[b];
      rc[b] = Matrix(st[b].dim, st[b].dim);
      for (std::size_t i = 0; i < st[b].dim; ++i) rc[b](i, i) = sigma * mu;
      for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i)
        rc[b].data()[i] -= xz.data()[i] + dd.data()[i];
    }
    Vec dy;
    solve_direction(rc, dy, dxc, dzc);

    ap = 1.0;
    ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, detail::max_psd_step(st[b].x, dxc[b]));
      ad = std::min(ad, detail::max_psd_step(st[b].z, dzc[b]));
    }
    const double tau = iter < 2 ? 0.95 : 0.98;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    if (ap < 1e-10 && ad < 1e-10) break;  // stalled

    matkit::axpy(ap, dy, y);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t i = 0; i < st[b].dim * st[b].dim; ++i) {
        st[b].x.data()[i] += ap * dxc[b].data()[i];
        st[b].z.data()[i] += ad * dzc[b].data()[i];
      }
    }
  }

  sol.status = SdpStatus::max_iter;
  return sol;
}

}  // namespace lra::sdpcore
