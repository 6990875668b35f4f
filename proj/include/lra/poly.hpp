#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lra/errors.hpp"
#include "lra/matkit.hpp"

namespace lra::lasserre {

/// Exponent tuple of one monomial; length = number of variables.
using Exponents = std::vector<int>;

/// Graded lexicographic order: lower total degree first, then lexicographic
/// with larger leading exponents first, so x1^2 precedes x1 x2 precedes x2^2.
struct GradedLexLess {
  bool operator()(const Exponents& a, const Exponents& b) const {
    int da = 0;
    int db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
      if (a[i] != b[i]) return a[i] > b[i];
    return false;
  }
};

/// Sparse multivariate polynomial: exponent tuple -> coefficient. The ordered
/// map keeps iteration deterministic.
using Polynomial = std::map<Exponents, double, GradedLexLess>;

inline int total_degree(const Exponents& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

inline int degree(const Polynomial& p) {
  int d = 0;
  for (const auto& [e, c] : p)
    if (c != 0.0) d = std::max(d, total_degree(e));
  return d;
}

inline void add_term(Polynomial& p, const Exponents& e, double coeff) {
  if (coeff == 0.0) return;
  auto [it, inserted] = p.emplace(e, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) p.erase(it);
  }
}

inline Polynomial multiply(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      Exponents e = ea;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      add_term(out, e, ca * cb);
    }
  return out;
}

inline double evaluate(const Polynomial& p, const Vec& x) {
  double out = 0.0;
  for (const auto& [e, c] : p) {
    double term = c;
    for (std::size_t i = 0; i < e.size(); ++i)
      for (int k = 0; k < e[i]; ++k) term *= x[i];
    out += term;
  }
  return out;
}

/// Polynomial program: minimize `objective` subject to g_i(x) >= 0.
struct PolynomialProgram {
  std::size_t num_vars = 0;
  Polynomial objective;
  std::vector<Polynomial> constraints;

  int objective_degree() const { return degree(objective); }
  int constraint_degree(std::size_t i) const { return degree(constraints[i]); }
};

// ---------------------------------------------------------------------------
// Plain-text fixture format: one monomial per line, "coeff e1 e2 ... en".
// Blank lines and lines starting with '#' are ignored.

inline Polynomial parse_polynomial(std::istream& in, std::size_t num_vars) {
  Polynomial p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::istringstream cells(line);
    double coeff = 0.0;
    if (!(cells >> coeff)) throw ParseError("polynomial: expected coefficient", line_no);
    Exponents e(num_vars, 0);
    for (std::size_t i = 0; i < num_vars; ++i)
      if (!(cells >> e[i])) throw ParseError("polynomial: expected " + std::to_string(num_vars) + " exponents", line_no);
    std::string extra;
    if (cells >> extra) throw ParseError("polynomial: trailing tokens '" + extra + "'", line_no);
    add_term(p, e, coeff);
  }
  return p;
}

inline Polynomial parse_polynomial(const std::string& text, std::size_t num_vars) {
  std::istringstream in(text);
  return parse_polynomial(in, num_vars);
}

inline void write_polynomial(std::ostream& out, const Polynomial& p) {
  out.precision(17);
  for (const auto& [e, c] : p) {
    out << c;
    for (int v : e) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace lra::lasserre
