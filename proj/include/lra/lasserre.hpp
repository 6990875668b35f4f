#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "lra/poly.hpp"
#include "lra/sdpcore.hpp"

namespace lra::lasserre {

using matkit::Matrix;

/// Graded-lex monomial basis of all exponent tuples with total degree <= deg:
/// {1, x1, ..., xn, x1^2, x1 x2, ...}. Length C(n + deg, deg).
inline std::vector<Exponents> monomial_basis(std::size_t n, int deg) {
  if (n == 0) throw DimensionError("monomial_basis: need at least one variable");
  if (deg < 0) throw DimensionError("monomial_basis: degree must be nonnegative");
  std::vector<Exponents> out;
  Exponents cur(n, 0);
  const auto fill = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos + 1 == n) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      cur[pos] = k;
      self(self, pos + 1, remaining - k);
    }
    cur[pos] = 0;
  };
  for (int d = 0; d <= deg; ++d) fill(fill, 0, d);
  return out;
}

inline std::size_t basis_size(std::size_t n, int deg) {
  // C(n + deg, deg) computed incrementally.
  std::size_t out = 1;
  for (int k = 1; k <= deg; ++k) out = out * (n + k) / k;
  return out;
}

/// Pseudo-moment sequence y_alpha for |alpha| <= 2*order, with y_0 = 1.
struct MomentVector {
  std::size_t num_vars = 0;
  int order = 0;
  std::map<Exponents, double, GradedLexLess> entries;

  double at(const Exponents& e) const {
    const auto it = entries.find(e);
    if (it == entries.end())
      throw IncompleteMomentError("moment vector is missing an entry of degree " +
                                  std::to_string(total_degree(e)));
    return it->second;
  }
};

/// Moments of a finite mixture sum_i w_i * dirac(points_i); the test-side
/// constructor for genuine measures.
inline MomentVector moments_of_mixture(const std::vector<Vec>& points, const Vec& weights, int order) {
  if (points.empty() || points.size() != weights.size())
    throw DimensionError("moments_of_mixture: bad atom list");
  MomentVector y;
  y.num_vars = points[0].size();
  y.order = order;
  for (const auto& e : monomial_basis(y.num_vars, 2 * order)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double m = weights[i];
      for (std::size_t j = 0; j < y.num_vars; ++j)
        for (int k = 0; k < e[j]; ++k) m *= points[i][j];
      acc += m;
    }
    y.entries[e] = acc;
  }
  return y;
}

/// Moment matrix M_order(y), indexed by the graded-lex basis of degree <= order.
inline Matrix moment_matrix(const MomentVector& y, int order) {
  const auto basis = monomial_basis(y.num_vars, order);
  const std::size_t s = basis.size();
  Matrix m(s, s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i; j < s; ++j) {
      Exponents e = basis[i];
      for (std::size_t v = 0; v < y.num_vars; ++v) e[v] += basis[j][v];
      m(i, j) = m(j, i) = y.at(e);
    }
  return m;
}

/// Localizing matrix M_{order - ceil(deg g / 2)}(g y).
inline Matrix localizing_matrix(const MomentVector& y, const Polynomial& g, int order) {
  const int w = (degree(g) + 1) / 2;
  if (order < w) throw OrderTooLowError("localizing_matrix: order below ceil(deg g / 2)");
  const auto basis = monomial_basis(y.num_vars, order - w);
  const std::size_t s = basis.size();
  Matrix m(s, s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i; j < s; ++j) {
      double acc = 0.0;
      for (const auto& [beta, coeff] : g) {
        Exponents e = beta;
        for (std::size_t v = 0; v < y.num_vars; ++v) e[v] += basis[i][v] + basis[j][v];
        acc += coeff * y.at(e);
      }
      m(i, j) = m(j, i) = acc;
    }
  return m;
}

/// Moment relaxation of order N, assembled as an LMI problem over the
/// pseudo-moments with y_0 pinned to 1 (folded into the constant parts).
struct Relaxation {
  sdpcore::SdpProblem sdp;
  std::vector<Exponents> variables;  // SDP variable k <-> this exponent
  std::size_t num_vars = 0;          // polynomial variables n
  int order = 0;
  /// True when the constraint set certifies compactness by the simple
  /// sufficient condition (a single inequality whose quadratic part is
  /// negative definite, i.e. a ball-like constraint).
  bool archimedean_verified = false;
};

namespace detail {

inline bool single_compact_constraint(const PolynomialProgram& p) {
  if (p.constraints.size() != 1) return false;
  const Polynomial& g = p.constraints[0];
  if (degree(g) != 2) return false;
  // Quadratic part must be negative definite.
  Matrix q(p.num_vars, p.num_vars);
  for (const auto& [e, c] : g) {
    if (total_degree(e) != 2) continue;
    int a = -1, b = -1;
    for (std::size_t v = 0; v < p.num_vars; ++v) {
      if (e[v] == 2) {
        a = b = static_cast<int>(v);
      } else if (e[v] == 1) {
        if (a < 0)
          a = static_cast<int>(v);
        else
          b = static_cast<int>(v);
      }
    }
    if (a == b)
      q(a, a) += c;
    else {
      q(a, b) += 0.5 * c;
      q(b, a) += 0.5 * c;
    }
  }
  return matkit::sym_eig(q).values.front() < 0.0;
}

}  // namespace detail

inline Relaxation relax(const PolynomialProgram& p, int order) {
  if (p.objective.empty()) throw DimensionError("relax: empty objective");
  const std::size_t n = p.num_vars;
  const int need_obj = (degree(p.objective) + 1) / 2;
  int need_con = 0;
  for (const auto& g : p.constraints) need_con = std::max(need_con, (degree(g) + 1) / 2);
  if (order < need_obj || order < need_con)
    throw OrderTooLowError("relax: order below the degrees of the data");

  Relaxation rel;
  rel.num_vars = n;
  rel.order = order;
  rel.archimedean_verified = detail::single_compact_constraint(p);

  const auto all = monomial_basis(n, 2 * order);
  std::map<Exponents, std::size_t, GradedLexLess> index;
  for (const auto& e : all) {
    if (total_degree(e) == 0) continue;
    index.emplace(e, rel.variables.size());
    rel.variables.push_back(e);
  }
  const std::size_t nv = rel.variables.size();

  sdpcore::SdpProblem& sdp = rel.sdp;
  sdp.dim_y = nv;
  sdp.cost = Vec(nv, 0.0);
  for (const auto& [e, c] : p.objective) {
    if (total_degree(e) == 0)
      sdp.cost_offset += c;
    else
      sdp.cost[index.at(e)] += c;
  }

  const auto add_block = [&](const Polynomial* g, int block_order) {
    const auto basis = monomial_basis(n, block_order);
    const std::size_t s = basis.size();
    sdpcore::LmiBlock blk;
    blk.dim = s;
    blk.constant = Matrix(s, s);
    blk.coeff.resize(nv);
    std::map<std::pair<std::size_t, std::pair<std::uint32_t, std::uint32_t>>, double> acc;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i; j < s; ++j) {
        Exponents base = basis[i];
        for (std::size_t v = 0; v < n; ++v) base[v] += basis[j][v];
        if (g == nullptr) {
          if (total_degree(base) == 0)
            blk.constant(i, j) += 1.0;
          else
            acc[{index.at(base), {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}}] += 1.0;
        } else {
          for (const auto& [beta, c] : *g) {
            Exponents e = base;
            for (std::size_t v = 0; v < n; ++v) e[v] += beta[v];
            if (total_degree(e) == 0)
              blk.constant(i, j) += c;
            else
              acc[{index.at(e), {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}}] += c;
          }
        }
      }
    // Mirror the constant's upper triangle.
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) blk.constant(j, i) = blk.constant(i, j);
    for (const auto& [key, v] : acc)
      if (v != 0.0) blk.coeff[key.first].push_back({key.second.first, key.second.second, v});
    sdp.blocks.push_back(std::move(blk));
  };

  add_block(nullptr, order);
  for (const auto& g : p.constraints) add_block(&g, order - (degree(g) + 1) / 2);
  return rel;
}

/// Rebuilds the moment sequence from an SDP solution vector.
inline MomentVector moments_from_solution(const Relaxation& rel, const Vec& y_star) {
  if (y_star.size() != rel.variables.size())
    throw DimensionError("moments_from_solution: length mismatch");
  MomentVector y;
  y.num_vars = rel.num_vars;
  y.order = rel.order;
  y.entries[Exponents(rel.num_vars, 0)] = 1.0;
  for (std::size_t k = 0; k < rel.variables.size(); ++k) y.entries[rel.variables[k]] = y_star[k];
  return y;
}

/// Optimality certificate: rank M_N(y) == rank M_{N - w_max}(y) with ranks
/// measured by a relative eigenvalue threshold. Extraction covers the rank-1
/// (point mass) case and the rank-2 centrally symmetric pair; anything else
/// is reported as certified-but-unextracted.
struct Certificate {
  bool rank_ok = false;
  std::size_t rank_high = 0;
  std::size_t rank_low = 0;
  std::vector<Vec> minimizers;
  bool symmetric_pair = false;
};

inline Certificate certify_and_extract(const MomentVector& y, int order, int w_max,
                                       double rank_rel_tol = 1e-6) {
  if (w_max < 0 || w_max > order) throw DimensionError("certify_and_extract: bad w_max");
  Certificate cert;
  const Matrix m_high = moment_matrix(y, order);
  const Matrix m_low = moment_matrix(y, order - w_max);

  const auto numeric_rank = [&](const Matrix& m) -> std::size_t {
    const auto eig = matkit::sym_eig(m);
    const double top = eig.values.empty() ? 0.0 : std::max(0.0, eig.values.front());
    if (top <= 0.0) return 0;
    std::size_t r = 0;
    for (double v : eig.values)
      if (v > rank_rel_tol * top) ++r;
    return r;
  };
  cert.rank_high = numeric_rank(m_high);
  cert.rank_low = numeric_rank(m_low);
  cert.rank_ok = cert.rank_high == cert.rank_low;

  const std::size_t n = y.num_vars;
  if (cert.rank_high == 1) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) {
      Exponents e(n, 0);
      e[j] = 1;
      x[j] = y.at(e);
    }
    cert.minimizers.push_back(std::move(x));
    return cert;
  }
  if (cert.rank_high == 2) {
    // Centrally symmetric pair: first-order moments vanish and the second
    // moment matrix is rank one, giving the atom up to sign.
    Matrix second(n, n);
    double odd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Exponents e1(n, 0);
      e1[i] = 1;
      odd = std::max(odd, std::abs(y.at(e1)));
      for (std::size_t j = i; j < n; ++j) {
        Exponents e(n, 0);
        e[i] += 1;
        e[j] += 1;
        second(i, j) = second(j, i) = y.at(e);
      }
    }
    const auto eig = matkit::sym_eig(second);
    const double top = eig.values.front();
    bool rank_one = top > 0.0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(eig.values[i]) > rank_rel_tol * top) rank_one = false;
    if (rank_one && odd <= 1e-6 * (1.0 + std::sqrt(top))) {
      Vec x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = std::sqrt(top) * eig.vectors(j, 0);
      Vec neg = x;
      for (double& v : neg) v = -v;
      cert.minimizers.push_back(std::move(x));
      cert.minimizers.push_back(std::move(neg));
      cert.symmetric_pair = true;
    }
  }
  return cert;
}

}  // namespace lra::lasserre
