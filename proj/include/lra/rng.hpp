#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lra/matkit.hpp"

namespace lra {

/// Counter-based SplitMix64 stream. Output i is a pure function of
/// (seed, counter), so draws are reproducible across runs and platforms and
/// independent streams are cheap: derive one per trial with `stream()`.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; draws two uniforms per call pair.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec normal_vec(std::size_t n) {
    Vec out(n);
    for (double& v : out) v = next_normal();
    return out;
  }

  /// Uniform direction scaled to land uniformly inside the radius-r ball.
  Vec uniform_in_ball(std::size_t n, double radius) {
    Vec v = normal_vec(n);
    const double nv = matkit::norm2(v);
    const double r = radius * std::pow(next_uniform(), 1.0 / static_cast<double>(n));
    if (nv == 0.0) return Vec(n, 0.0);
    for (double& x : v) x *= r / nv;
    return v;
  }

  /// Independent child stream; stable under reordering of sibling draws.
  CounterRng stream(std::uint64_t index) const {
    return CounterRng(mix(seed_ ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Halton low-discrepancy sequence mapped into a Euclidean ball: the first n
/// coordinates go through the normal inverse CDF to make a direction, the
/// last drives the radius. Used by the quasi-random search oracles.
class HaltonBall {
 public:
  HaltonBall(std::size_t dim, double radius) : dim_(dim), radius_(radius) {}

  Vec next() {
    ++index_;
    Vec z(dim_);
    for (std::size_t j = 0; j < dim_; ++j) z[j] = normal_icdf(halton(index_, kPrimes[j % kNumPrimes]));
    const double u = halton(index_, kPrimes[dim_ % kNumPrimes]);
    const double nz = matkit::norm2(z);
    Vec out(dim_, 0.0);
    if (nz == 0.0) return out;
    const double r = radius_ * std::pow(u, 1.0 / static_cast<double>(dim_));
    for (std::size_t j = 0; j < dim_; ++j) out[j] = z[j] * (r / nz);
    return out;
  }

  static double halton(std::uint64_t i, unsigned base) {
    double f = 1.0;
    double r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    return r;
  }

  /// Acklam's rational approximation of the standard normal quantile,
  /// |relative error| < 1.15e-9 which is ample for sampling.
  static double normal_icdf(double p) {
    if (p <= 0.0) p = 1e-300;
    if (p >= 1.0) p = 1.0 - 1e-16;
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
      const double q = std::sqrt(-2.0 * std::log(p));
      return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
      const double q = std::sqrt(-2.0 * std::log(1.0 - p));
      return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

 private:
  static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  static constexpr std::size_t kNumPrimes = sizeof(kPrimes) / sizeof(kPrimes[0]);

  std::size_t dim_;
  double radius_;
  std::uint64_t index_ = 0;
};

}  // namespace lra
