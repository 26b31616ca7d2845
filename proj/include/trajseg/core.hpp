#pragma once

// Core vocabulary types for pedestrian trajectory modeling: trajectories in
// scene pixel coordinates, per-agent linear-Gaussian motion models with
// start/end beliefs, hidden hypothesis tuples, and segmentations.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajseg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Minimum eigenvalue enforced on estimated covariances (pixel^2).
inline constexpr double kCovarianceFloor = 1e-6;
// Tighter floor used inside filtering/smoothing recursions.
inline constexpr double kFilterCovarianceFloor = 1e-9;
// Mixture weights must sum to one within this tolerance.
inline constexpr double kPiSumTolerance = 1e-9;

enum class ErrorCategory { usage, io, format, numeric, internal };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }
  // Process exit code for the CLI; 0 is reserved for success.
  int exit_code() const { return 2 + static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

struct Trajectory {
  std::string id;
  std::vector<Vec2> points;  // scene pixels, one per frame, time-ordered

  // Number of transitions between observed points (length - 1).
  int tau() const { return static_cast<int>(points.size()) - 1; }
};

struct DynamicsParams {
  Mat2 A;  // state transition
  Vec2 b;  // drift
  Mat2 Q;  // process noise covariance
  Mat2 R;  // observation noise covariance
};

struct BeliefParams {
  Vec2 mu_s;   // start belief mean
  Mat2 phi_s;  // start belief covariance
  Vec2 mu_e;   // end belief mean
  Mat2 phi_e;  // end belief covariance
};

struct AgentModel {
  DynamicsParams dynamics;
  BeliefParams belief;
  double pi = 1.0;        // mixture weight
  double lambda_s = 1.0;  // Poisson rate of steps before the first observation
  double lambda_e = 1.0;  // Poisson rate of steps after the last observation
};

struct MixtureModel {
  std::vector<AgentModel> agents;

  int num_agents() const { return static_cast<int>(agents.size()); }
};

// One hypothesis about a trajectory: generating agent index z (0-based) and
// the number of unobserved steps before (t_s) and after (t_e) the
// observations.
struct HiddenTuple {
  int z = 0;
  int t_s = 0;
  int t_e = 0;

  bool operator==(const HiddenTuple&) const = default;
};

// Per-point agent labels plus the induced change-point mask: split_mask[i] is
// true iff labels[i] != labels[i-1]; split_mask[0] is always false.
struct Segmentation {
  std::string trajectory_id;
  std::vector<int> labels;
  std::vector<char> split_mask;

  static Segmentation from_labels(std::string trajectory_id,
                                  std::vector<int> labels) {
    Segmentation s;
    s.trajectory_id = std::move(trajectory_id);
    s.split_mask.assign(labels.size(), 0);
    for (size_t i = 1; i < labels.size(); ++i)
      s.split_mask[i] = labels[i] != labels[i - 1];
    s.labels = std::move(labels);
    return s;
  }
};

namespace detail {

inline bool finite(const Vec2& v) {
  return std::isfinite(v(0)) && std::isfinite(v(1));
}

inline bool finite(const Mat2& m) {
  return std::isfinite(m(0, 0)) && std::isfinite(m(0, 1)) &&
         std::isfinite(m(1, 0)) && std::isfinite(m(1, 1));
}

inline double min_symmetric_eigenvalue(const Mat2& m) {
  Mat2 s = 0.5 * (m + m.transpose());
  double tr = s.trace();
  double det = s.determinant();
  double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
  return 0.5 * tr - disc;
}

inline void check_covariance(const Mat2& m, const std::string& name,
                             std::vector<std::string>* violations) {
  if (!finite(m)) {
    violations->push_back(name + " has non-finite entries");
    return;
  }
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-9 * (1.0 + std::abs(m(0, 1)))) {
    violations->push_back(name + " is not symmetric");
  }
  // Small slack so matrices floored exactly at the limit still pass.
  if (min_symmetric_eigenvalue(m) < kCovarianceFloor * (1.0 - 1e-9) - 1e-15) {
    violations->push_back(name + " violates the SPD floor (min eigenvalue " +
                          std::to_string(min_symmetric_eigenvalue(m)) + " < " +
                          std::to_string(kCovarianceFloor) + ")");
  }
}

}  // namespace detail

// Checks every model invariant and reports violations instead of throwing,
// so callers can surface all problems at once.
inline std::vector<std::string> validate_model(const MixtureModel& model) {
  std::vector<std::string> violations;
  if (model.agents.empty()) {
    violations.push_back("model has no agents");
    return violations;
  }
  double pi_sum = 0.0;
  for (int m = 0; m < model.num_agents(); ++m) {
    const AgentModel& a = model.agents[m];
    const std::string p = "agent " + std::to_string(m) + ": ";
    if (!detail::finite(a.dynamics.A)) violations.push_back(p + "A has non-finite entries");
    if (!detail::finite(a.dynamics.b)) violations.push_back(p + "b has non-finite entries");
    detail::check_covariance(a.dynamics.Q, p + "Q", &violations);
    detail::check_covariance(a.dynamics.R, p + "R", &violations);
    detail::check_covariance(a.belief.phi_s, p + "phi_s", &violations);
    detail::check_covariance(a.belief.phi_e, p + "phi_e", &violations);
    if (!detail::finite(a.belief.mu_s)) violations.push_back(p + "mu_s has non-finite entries");
    if (!detail::finite(a.belief.mu_e)) violations.push_back(p + "mu_e has non-finite entries");
    if (!(a.pi > 0.0 && a.pi <= 1.0))
      violations.push_back(p + "pi must lie in (0, 1]");
    if (!(a.lambda_s > 0.0))
      violations.push_back(p + "lambda_s must be positive");
    if (!(a.lambda_e > 0.0))
      violations.push_back(p + "lambda_e must be positive");
    pi_sum += a.pi;
  }
  if (std::abs(pi_sum - 1.0) > kPiSumTolerance)
    violations.push_back("mixture weights sum to " + std::to_string(pi_sum) +
                         ", expected 1");
  return violations;
}

inline std::vector<std::string> validate_trajectory(const Trajectory& t) {
  std::vector<std::string> violations;
  if (t.points.size() < 2)
    violations.push_back("trajectory " + t.id + " has fewer than 2 points");
  for (size_t i = 0; i < t.points.size(); ++i) {
    if (!detail::finite(t.points[i])) {
      violations.push_back("trajectory " + t.id + " point " +
                           std::to_string(i) + " is not finite");
      break;
    }
  }
  return violations;
}

}  // namespace trajseg
