#pragma once

// Behavior analytics over learned models and segmentations: normalized
// agent-transition tables, threshold graphs, occurrence grids, and kernel
// density maps, all on a configurable scene grid.

#include "trajseg/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace trajseg::analytics {

struct NormalizedTransitions {
  Eigen::MatrixXd matrix;
  // Rows whose off-diagonal mass was zero; left as all-zero rows.
  std::vector<int> zero_rows;
};

// Removes self-transitions and renormalizes each row to sum to one,
// highlighting where behavior flows when it does change.
inline NormalizedTransitions normalize_transitions(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(ErrorCategory::usage, "transition matrix must be square");
  NormalizedTransitions out;
  out.matrix = a;
  for (int i = 0; i < a.rows(); ++i) {
    out.matrix(i, i) = 0.0;
    double row = out.matrix.row(i).sum();
    if (row > 0.0) {
      out.matrix.row(i) /= row;
    } else {
      out.matrix.row(i).setZero();
      out.zero_rows.push_back(i);
    }
  }
  return out;
}

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

// Directed edges where the normalized transition weight strictly exceeds the
// threshold, in row-major order.
inline std::vector<Edge> transition_graph(const Eigen::MatrixXd& normalized,
                                          double threshold) {
  std::vector<Edge> edges;
  for (int i = 0; i < normalized.rows(); ++i)
    for (int j = 0; j < normalized.cols(); ++j)
      if (i != j && normalized(i, j) > threshold)
        edges.push_back({i, j, normalized(i, j)});
  return edges;
}

struct GridSpec {
  int rows = 10;
  int cols = 10;
  double width = 1920.0;
  double height = 1080.0;

  double cell_width() const { return width / cols; }
  double cell_height() const { return height / rows; }
};

namespace detail {

// Cell index along one axis. Cells are half-open on the low side except the
// first: a point exactly on a shared boundary belongs to the lower-index
// cell, and points outside the scene clip to the border cells.
inline int bin(double v, double cell, int count) {
  int idx = static_cast<int>(std::ceil(v / cell)) - 1;
  return std::clamp(idx, 0, count - 1);
}

}  // namespace detail

struct OccurrenceGrid {
  GridSpec spec;
  std::vector<int> counts;  // row-major, rows * cols entries

  int at(int r, int c) const { return counts[r * spec.cols + c]; }
};

// Number of distinct agent labels whose points touch each cell.
inline OccurrenceGrid occurrence_map(const std::vector<Vec2>& points,
                                     const std::vector<int>& labels,
                                     const GridSpec& spec) {
  if (points.size() != labels.size())
    throw Error(ErrorCategory::usage, "labels do not match points");
  std::vector<std::set<int>> seen(spec.rows * spec.cols);
  for (std::size_t i = 0; i < points.size(); ++i) {
    int c = detail::bin(points[i](0), spec.cell_width(), spec.cols);
    int r = detail::bin(points[i](1), spec.cell_height(), spec.rows);
    seen[r * spec.cols + c].insert(labels[i]);
  }
  OccurrenceGrid grid;
  grid.spec = spec;
  grid.counts.resize(seen.size());
  for (std::size_t i = 0; i < seen.size(); ++i)
    grid.counts[i] = static_cast<int>(seen[i].size());
  return grid;
}

struct DensityGrid {
  GridSpec spec;
  double bandwidth = 0.0;
  std::vector<double> values;  // row-major, integrates to 1 over the grid

  double at(int r, int c) const { return values[r * spec.cols + c]; }
};

// Isotropic Gaussian kernel density evaluated at cell centers and normalized
// so that sum(values) * cell_area = 1. bandwidth <= 0 selects the Scott-style
// default n^(-1/6) * pooled per-axis standard deviation. Input order does not
// matter: points are accumulated in a canonical order.
inline DensityGrid density_map(const std::vector<Vec2>& points,
                               const GridSpec& spec, double bandwidth = 0.0) {
  if (points.empty())
    throw Error(ErrorCategory::usage, "cannot estimate density of no points");
  std::vector<Vec2> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](const Vec2& a, const Vec2& b) {
    return a(0) != b(0) ? a(0) < b(0) : a(1) < b(1);
  });
  const double n = static_cast<double>(sorted.size());
  double h = bandwidth;
  if (!(h > 0.0)) {
    Vec2 mean = Vec2::Zero();
    for (const Vec2& p : sorted) mean += p;
    mean /= n;
    double var = 0.0;
    for (const Vec2& p : sorted) var += (p - mean).squaredNorm();
    var /= 2.0 * n;  // pooled per-axis variance
    h = std::pow(n, -1.0 / 6.0) * std::sqrt(var);
    if (!(h > 0.0))
      h = 0.5 * std::min(spec.cell_width(), spec.cell_height());
  }

  DensityGrid grid;
  grid.spec = spec;
  grid.bandwidth = h;
  grid.values.assign(spec.rows * spec.cols, 0.0);
  const double inv2h2 = 1.0 / (2.0 * h * h);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      Vec2 center((c + 0.5) * spec.cell_width(),
                  (r + 0.5) * spec.cell_height());
      double f = 0.0;
      for (const Vec2& p : sorted)
        f += std::exp(-(center - p).squaredNorm() * inv2h2);
      grid.values[r * spec.cols + c] = f;
    }
  }
  const double area = spec.cell_width() * spec.cell_height();
  double total = 0.0;
  for (double v : grid.values) total += v;
  if (total > 0.0)
    for (double& v : grid.values) v /= total * area;
  return grid;
}

}  // namespace trajseg::analytics
