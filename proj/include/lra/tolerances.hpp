#pragma once

namespace lra {

/// Central numeric tolerance record. Every factorization routine takes one of
/// these (defaulted) so callers can tighten or relax per call.
struct Tolerances {
  /// Relative asymmetry allowed in inputs declared symmetric.
  double symmetry_rel = 1e-10;
  /// Relative reconstruction error allowed when factors are multiplied back.
  double reconstruct_rel = 1e-8;
  /// sigma_min > rank_rel * sigma_max is treated as full rank.
  double rank_rel = 1e-10;
  /// Jacobi sweep stops once max |offdiag| <= jacobi_rel * max |diag|.
  double jacobi_rel = 1e-14;
  /// Hard cap on Jacobi sweeps; convergence is quadratic, so this is ample.
  int jacobi_max_sweeps = 64;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace lra
