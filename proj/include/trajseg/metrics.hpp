#pragma once

// Segmentation error metrics and cross-validation.
//
// The error between an estimated change-point mask and a ground-truth mask
// is symmetrized nearest-match distance: every marked point on one side is
// matched to the nearest marked point on the other (ties to the smaller
// index), positional error accumulates the Euclidean distance between the
// matched points and step error the index offset, both directions are
// summed, and the total is divided by the combined number of marked points.

#include "trajseg/core.hpp"
#include "trajseg/rng.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace trajseg::metrics {

using Mask = std::vector<char>;

struct PairErrors {
  double positional = 0.0;
  double step = 0.0;
};

namespace detail {

inline void one_sided(const std::vector<Vec2>& points, const Mask& from,
                      const Mask& to, double* positional, double* step) {
  const int n = static_cast<int>(points.size());
  for (int i = 0; i < n; ++i) {
    if (!from[i]) continue;
    int best = -1;
    int best_dist = std::numeric_limits<int>::max();
    for (int j = 0; j < n; ++j) {
      if (!to[j]) continue;
      int d = std::abs(j - i);
      if (d < best_dist) {  // ties keep the smaller j
        best_dist = d;
        best = j;
      }
    }
    *positional += (points[best] - points[i]).norm();
    *step += best_dist;
  }
}

}  // namespace detail

// Symmetrized per-trajectory errors. Both masks empty means a perfect (0, 0)
// score; exactly one empty mask is unmatchable and yields nullopt so callers
// can report the trajectory as skipped.
inline std::optional<PairErrors> calc_errors(const Trajectory& traj,
                                             const Mask& estimated,
                                             const Mask& ground_truth) {
  if (estimated.size() != traj.points.size() ||
      ground_truth.size() != traj.points.size())
    throw Error(ErrorCategory::usage,
                "mask length does not match trajectory " + traj.id);
  int n_est = 0, n_gt = 0;
  for (char c : estimated) n_est += c != 0;
  for (char c : ground_truth) n_gt += c != 0;
  if (n_est == 0 && n_gt == 0) return PairErrors{0.0, 0.0};
  if (n_est == 0 || n_gt == 0) return std::nullopt;
  PairErrors e;
  detail::one_sided(traj.points, estimated, ground_truth, &e.positional,
                    &e.step);
  detail::one_sided(traj.points, ground_truth, estimated, &e.positional,
                    &e.step);
  e.positional /= (n_est + n_gt);
  e.step /= (n_est + n_gt);
  return e;
}

struct TrajectoryErrors {
  std::string id;
  PairErrors errors;
};

struct ErrorReport {
  std::vector<TrajectoryErrors> per_trajectory;
  std::vector<std::string> skipped;  // one side empty; excluded from means
  double mean_positional = 0.0;
  double mean_step = 0.0;
  int evaluated = 0;
};

inline ErrorReport evaluate_masks(const std::vector<Trajectory>& trajs,
                                  const std::vector<Mask>& estimated,
                                  const std::vector<Mask>& ground_truth) {
  if (estimated.size() != trajs.size() || ground_truth.size() != trajs.size())
    throw Error(ErrorCategory::usage, "mask count does not match corpus size");
  ErrorReport report;
  double pos = 0.0, step = 0.0;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    auto e = calc_errors(trajs[k], estimated[k], ground_truth[k]);
    if (!e) {
      report.skipped.push_back(trajs[k].id);
      continue;
    }
    report.per_trajectory.push_back({trajs[k].id, *e});
    pos += e->positional;
    step += e->step;
    ++report.evaluated;
  }
  if (report.evaluated > 0) {
    report.mean_positional = pos / report.evaluated;
    report.mean_step = step / report.evaluated;
  }
  return report;
}

// A trained segmenter maps a trajectory to a change-point mask.
using Segmenter = std::function<Mask(const Trajectory&)>;

// A method is anything that can train a segmenter from trajectories with
// ground truth (index-aligned with the trajectories).
struct Method {
  std::string label;
  std::function<Segmenter(const std::vector<Trajectory>&,
                          const std::vector<Mask>&)>
      train;
};

struct FoldSummary {
  int fold = 0;
  bool failed = false;
  std::string error;
  int evaluated = 0;
  double mean_positional = 0.0;
  double mean_step = 0.0;
  std::vector<std::string> skipped;
};

struct CvReport {
  std::string method_label;
  int folds = 0;
  std::vector<FoldSummary> fold_summaries;
  double positional_mean = 0.0;
  double positional_stddev = 0.0;
  double step_mean = 0.0;
  double step_stddev = 0.0;
  int successful_folds = 0;
};

namespace detail {

inline void mean_stddev(const std::vector<double>& v, double* mean,
                        double* stddev) {
  *mean = 0.0;
  *stddev = 0.0;
  if (v.empty()) return;
  for (double x : v) *mean += x;
  *mean /= v.size();
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - *mean) * (x - *mean);
  *stddev = std::sqrt(ss / (v.size() - 1));
}

}  // namespace detail

// K-fold cross-validation with a seeded shuffle dealt round-robin, so fold
// sizes differ by at most one. Each fold trains the method on the remaining
// trajectories and scores the held-out ones; folds where training throws are
// reported as failed and excluded from the aggregate.
inline CvReport cross_validate(const std::vector<Trajectory>& trajs,
                               const std::vector<Mask>& ground_truth,
                               int folds, const Method& method,
                               std::uint64_t seed) {
  const int n = static_cast<int>(trajs.size());
  if (ground_truth.size() != trajs.size())
    throw Error(ErrorCategory::usage, "ground truth count does not match");
  if (folds < 2 || folds > n)
    throw Error(ErrorCategory::usage,
                "fold count must be between 2 and the corpus size");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[order[i]] = i % folds;

  CvReport report;
  report.method_label = method.label;
  report.folds = folds;
  std::vector<double> fold_pos, fold_step;
  for (int f = 0; f < folds; ++f) {
    FoldSummary fs;
    fs.fold = f;
    std::vector<Trajectory> train;
    std::vector<Mask> train_gt;
    std::vector<Trajectory> test;
    std::vector<Mask> test_gt;
    for (int i = 0; i < n; ++i) {
      if (fold_of[i] == f) {
        test.push_back(trajs[i]);
        test_gt.push_back(ground_truth[i]);
      } else {
        train.push_back(trajs[i]);
        train_gt.push_back(ground_truth[i]);
      }
    }
    try {
      Segmenter segmenter = method.train(train, train_gt);
      std::vector<Mask> est;
      est.reserve(test.size());
      for (const Trajectory& t : test) est.push_back(segmenter(t));
      ErrorReport er = evaluate_masks(test, est, test_gt);
      fs.evaluated = er.evaluated;
      fs.mean_positional = er.mean_positional;
      fs.mean_step = er.mean_step;
      fs.skipped = er.skipped;
      if (er.evaluated > 0) {
        fold_pos.push_back(er.mean_positional);
        fold_step.push_back(er.mean_step);
        ++report.successful_folds;
      }
    } catch (const std::exception& e) {
      fs.failed = true;
      fs.error = e.what();
    }
    report.fold_summaries.push_back(std::move(fs));
  }
  detail::mean_stddev(fold_pos, &report.positional_mean,
                      &report.positional_stddev);
  detail::mean_stddev(fold_step, &report.step_mean, &report.step_stddev);
  return report;
}

}  // namespace trajseg::metrics
