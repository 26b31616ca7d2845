#pragma once

// Ramer-Douglas-Peucker baseline segmenter. Simplification marks the
// preserved interior points of a polyline as change points; the two
// endpoints are always preserved by the algorithm but never marked. The
// tolerance can be chosen from a grid by minimizing segmentation error
// against ground truth.

#include "trajseg/core.hpp"
#include "trajseg/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace trajseg::rdp {

// Perpendicular distance from p to the segment [a, b]; collapses to
// point-to-point distance when the segment is degenerate.
inline double point_segment_distance(const Vec2& p, const Vec2& a,
                                     const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace detail {

inline void simplify_range(const std::vector<Vec2>& pts, int lo, int hi,
                           double epsilon, std::vector<char>* keep) {
  if (hi - lo < 2) return;
  int split = -1;
  double max_d = 0.0;
  for (int i = lo + 1; i < hi; ++i) {
    double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > max_d) {
      max_d = d;
      split = i;
    }
  }
  if (split < 0 || max_d <= epsilon) return;
  (*keep)[split] = 1;
  simplify_range(pts, lo, split, epsilon, keep);
  simplify_range(pts, split, hi, epsilon, keep);
}

}  // namespace detail

// Change-point mask for one trajectory: true at interior points the
// simplification preserves. Larger epsilon always yields a subset of the
// points preserved at a smaller epsilon.
inline std::vector<char> simplify(const std::vector<Vec2>& points,
                                  double epsilon) {
  if (points.size() < 2)
    throw Error(ErrorCategory::usage,
                "cannot simplify a polyline with fewer than 2 points");
  if (!(epsilon >= 0.0))
    throw Error(ErrorCategory::usage, "epsilon must be non-negative");
  std::vector<char> keep(points.size(), 0);
  detail::simplify_range(points, 0, static_cast<int>(points.size()) - 1,
                         epsilon, &keep);
  return keep;
}

inline std::vector<char> simplify(const Trajectory& traj, double epsilon) {
  return simplify(traj.points, epsilon);
}

// 30 logarithmically spaced tolerances between 10 and 300 pixels.
inline std::vector<double> default_epsilon_grid(double lo = 10.0,
                                                double hi = 300.0,
                                                int count = 30) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo))
    throw Error(ErrorCategory::usage, "invalid epsilon grid specification");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(std::log(lo) + i * step);
  return grid;
}

enum class Criterion { positional, step };

inline Criterion parse_criterion(const std::string& s) {
  if (s == "positional") return Criterion::positional;
  if (s == "step") return Criterion::step;
  throw Error(ErrorCategory::usage, "unknown criterion: " + s);
}

// Tolerance from the grid minimizing the mean chosen error over the corpus.
// Trajectories where one mask side is empty are excluded per calc_errors;
// tolerances evaluating no trajectory at all rank last. Ties pick the
// smaller tolerance.
inline double select_epsilon(const std::vector<Trajectory>& trajs,
                             const std::vector<metrics::Mask>& ground_truth,
                             const std::vector<double>& grid,
                             Criterion criterion) {
  if (grid.empty())
    throw Error(ErrorCategory::usage, "epsilon grid is empty");
  if (ground_truth.size() != trajs.size())
    throw Error(ErrorCategory::usage, "ground truth count does not match");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  double best_eps = sorted.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double eps : sorted) {
    double total = 0.0;
    int evaluated = 0;
    for (std::size_t k = 0; k < trajs.size(); ++k) {
      auto e = metrics::calc_errors(trajs[k], simplify(trajs[k], eps),
                                    ground_truth[k]);
      if (!e) continue;
      total += criterion == Criterion::positional ? e->positional : e->step;
      ++evaluated;
    }
    double score = evaluated > 0 ? total / evaluated
                                 : std::numeric_limits<double>::infinity();
    if (score < best_score) {  // strict: ties keep the smaller epsilon
      best_score = score;
      best_eps = eps;
    }
  }
  return best_eps;
}

}  // namespace trajseg::rdp
