#pragma once

// Shared numeric helpers: SPD projection, 2D Gaussian log-densities, Poisson
// log-pmf, and an order-insensitive log-sum-exp.

#include "trajseg/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace trajseg {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Symmetrizes m and clamps its eigenvalues from below, returning the nearest
// matrix (in Frobenius norm) whose minimum eigenvalue is >= floor.
inline Mat2 spd_floor(const Mat2& m, double floor) {
  Mat2 s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> es(s);
  Eigen::Vector2d ev = es.eigenvalues();
  if (ev(0) >= floor && ev(1) >= floor) return s;
  ev(0) = std::max(ev(0), floor);
  ev(1) = std::max(ev(1), floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// 2D Gaussian with precomputed inverse covariance and normalizer, for use in
// likelihood loops. Construction fails on non-SPD covariance.
struct Gaussian2 {
  Vec2 mean;
  Mat2 inv;
  double log_norm;  // -log(2*pi) - 0.5*log(det)

  static Gaussian2 from_cov(const Vec2& mean, const Mat2& cov) {
    double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    if (!(det > 0.0) || !(cov(0, 0) > 0.0) || !std::isfinite(det))
      throw Error(ErrorCategory::numeric,
                  "covariance is not positive definite (det=" +
                      std::to_string(det) + ")");
    Gaussian2 g;
    g.mean = mean;
    g.inv << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det,
        cov(0, 0) / det;
    g.log_norm = -kLog2Pi - 0.5 * std::log(det);
    return g;
  }

  double log_density(const Vec2& x) const {
    Vec2 d = x - mean;
    return log_norm - 0.5 * d.dot(inv * d);
  }
};

inline double log_gaussian2(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  return Gaussian2::from_cov(mean, cov).log_density(x);
}

// log P(k) for a Poisson(lambda) count. lambda must be positive.
inline double log_poisson_pmf(int k, double lambda) {
  if (!(lambda > 0.0))
    throw Error(ErrorCategory::numeric, "Poisson rate must be positive");
  if (k < 0) return -std::numeric_limits<double>::infinity();
  return k * std::log(lambda) - lambda - std::lgamma(double(k) + 1.0);
}

// log(sum_i exp(v_i)), accumulated over value-sorted summands so the result
// does not depend on the order of the inputs (exact, not just approximate:
// equal inputs are interchangeable under IEEE addition).
inline double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v))
      throw Error(ErrorCategory::numeric, "log_sum_exp received NaN");
    m = std::max(m, v);
  }
  if (m == -std::numeric_limits<double>::infinity()) return m;
  std::vector<double> shifted;
  shifted.reserve(values.size());
  for (double v : values)
    if (v != -std::numeric_limits<double>::infinity())
      shifted.push_back(v - m);
  std::sort(shifted.begin(), shifted.end());
  double sum = 0.0;
  for (double s : shifted) sum += std::exp(s);
  return m + std::log(sum);
}

inline double log_sum_exp(const std::vector<double>& values) {
  return log_sum_exp(std::span<const double>(values));
}

}  // namespace trajseg
