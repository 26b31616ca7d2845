#pragma once

// Exact filtering and smoothing for the per-agent linear dynamical system.
//
// A trajectory hypothesis h = (z, t_s, t_e) pads the observed points
// y_0..y_tau with t_s latent steps before and t_e after, giving the state
// sequence x_{-t_s}, ..., x_0, ..., x_tau, ..., x_{tau+t_e}. The agent's
// start belief N(mu_s, phi_s) is the prior on the first padded state, and
// the end belief enters as a pseudo-observation of the last padded state
// with value mu_e and covariance phi_e. With that arrangement the model is
// linear-Gaussian end to end, so a standard two-pass forward filter and
// backward (RTS) smoother is exact; no sampling or iteration is involved.
//
// The reported log-likelihood is the prediction-error decomposition over the
// real observations plus the end pseudo-observation.

#include "trajseg/core.hpp"
#include "trajseg/mathutil.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trajseg::lds {

struct SmoothedStates {
  int t_s = 0;
  int t_e = 0;
  int tau = 0;
  // Posterior means/covariances over the padded sequence; index j holds the
  // state at time j - t_s. Length is t_s + tau + 1 + t_e.
  std::vector<Vec2> means;
  std::vector<Mat2> covs;
  double log_likelihood = 0.0;

  int size() const { return static_cast<int>(means.size()); }

  const Vec2& start() const { return means.front(); }
  const Vec2& end() const { return means.back(); }

  // States aligned with the observations y_0..y_tau.
  std::span<const Vec2> observed_span() const {
    return std::span<const Vec2>(means).subspan(t_s, tau + 1);
  }

  // States with the first and last padded entries removed, for callers that
  // treat the two endpoint states separately.
  std::span<const Vec2> interior_span() const {
    return std::span<const Vec2>(means).subspan(1, means.size() - 2);
  }
};

// Per-step filter quantities, exposed for diagnostics and tests.
struct FilterTrace {
  std::vector<Vec2> predicted_means;
  std::vector<Mat2> predicted_covs;
  std::vector<Vec2> filtered_means;
  std::vector<Mat2> filtered_covs;
};

// Applies the motion model n times to a point (mean propagation, no noise).
inline Vec2 propagate(const DynamicsParams& dynamics, Vec2 x, int n) {
  for (int i = 0; i < n; ++i) x = dynamics.A * x + dynamics.b;
  return x;
}

namespace detail {

inline Mat2 sym(const Mat2& m) { return 0.5 * (m + m.transpose()); }

inline Mat2 inverse_spd(const Mat2& m, int step, const char* what) {
  double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(det > 0.0) || !(m(0, 0) > 0.0) || !std::isfinite(det))
    throw Error(ErrorCategory::numeric,
                std::string(what) + " is not positive definite at step " +
                    std::to_string(step));
  Mat2 inv;
  inv << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
  return inv;
}

struct Observation {
  Vec2 value;
  Mat2 cov;
};

// Measurement update with the Joseph-stabilized covariance form, which stays
// symmetric positive semidefinite under roundoff.
inline double update(Vec2& m, Mat2& P, const Observation& obs, int step) {
  Mat2 S = sym(P + obs.cov);
  double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (!(det > 0.0) || !(S(0, 0) > 0.0) || !std::isfinite(det))
    throw Error(ErrorCategory::numeric,
                "innovation covariance is not positive definite at step " +
                    std::to_string(step));
  Mat2 Sinv = inverse_spd(S, step, "innovation covariance");
  Vec2 e = obs.value - m;
  Mat2 K = P * Sinv;
  m += K * e;
  Mat2 IK = Mat2::Identity() - K;
  P = sym(IK * P * IK.transpose() + K * obs.cov * K.transpose());
  P = spd_floor(P, kFilterCovarianceFloor);
  return -kLog2Pi - 0.5 * std::log(det) - 0.5 * e.dot(Sinv * e);
}

inline SmoothedStates run(const Trajectory& traj, const DynamicsParams& dyn,
                          const Vec2& prior_mean, const Mat2& prior_cov,
                          const std::optional<detail::Observation>& end_obs,
                          int t_s, int t_e, FilterTrace* trace) {
  const int tau = traj.tau();
  const int length = t_s + tau + 1 + t_e;

  std::vector<Vec2> pred_m(length), filt_m(length);
  std::vector<Mat2> pred_P(length), filt_P(length);

  double loglik = 0.0;
  for (int j = 0; j < length; ++j) {
    if (j == 0) {
      pred_m[j] = prior_mean;
      pred_P[j] = prior_cov;
    } else {
      pred_m[j] = dyn.A * filt_m[j - 1] + dyn.b;
      pred_P[j] = sym(dyn.A * filt_P[j - 1] * dyn.A.transpose() + dyn.Q);
    }
    Vec2 m = pred_m[j];
    Mat2 P = pred_P[j];
    int t = j - t_s;
    if (t >= 0 && t <= tau)
      loglik += update(m, P, {traj.points[t], dyn.R}, j);
    if (j == length - 1 && end_obs)
      loglik += update(m, P, *end_obs, j);
    filt_m[j] = m;
    filt_P[j] = P;
  }

  SmoothedStates out;
  out.t_s = t_s;
  out.t_e = t_e;
  out.tau = tau;
  out.log_likelihood = loglik;
  out.means.resize(length);
  out.covs.resize(length);
  out.means[length - 1] = filt_m[length - 1];
  out.covs[length - 1] = filt_P[length - 1];
  for (int j = length - 2; j >= 0; --j) {
    Mat2 Pinv = inverse_spd(pred_P[j + 1], j + 1, "predicted covariance");
    Mat2 G = filt_P[j] * dyn.A.transpose() * Pinv;
    out.means[j] = filt_m[j] + G * (out.means[j + 1] - pred_m[j + 1]);
    out.covs[j] =
        sym(filt_P[j] + G * (out.covs[j + 1] - pred_P[j + 1]) * G.transpose());
  }
  if (trace) {
    trace->predicted_means = std::move(pred_m);
    trace->predicted_covs = std::move(pred_P);
    trace->filtered_means = std::move(filt_m);
    trace->filtered_covs = std::move(filt_P);
  }
  return out;
}

}  // namespace detail

// Smooths a trajectory under hypothesis h with both beliefs applied: the
// start belief as prior and the end belief as pseudo-observation.
inline SmoothedStates smooth(const Trajectory& traj, const AgentModel& agent,
                             const HiddenTuple& h,
                             FilterTrace* trace = nullptr) {
  if (traj.points.size() < 2)
    throw Error(ErrorCategory::usage,
                "trajectory " + traj.id + " has fewer than 2 points");
  if (h.t_s < 0 || h.t_e < 0)
    throw Error(ErrorCategory::usage, "padding counts must be non-negative");
  detail::Observation end{agent.belief.mu_e, agent.belief.phi_e};
  return detail::run(traj, agent.dynamics, agent.belief.mu_s,
                     agent.belief.phi_s, end, h.t_s, h.t_e, trace);
}

// Belief-free variant: diffuse prior on the first padded state and no end
// pseudo-observation. The log-likelihood then covers the real observations
// only and is not comparable with smooth(); this pass exists to extract
// endpoint state estimates uninfluenced by the beliefs.
inline SmoothedStates smooth_without_beliefs(const Trajectory& traj,
                                             const AgentModel& agent,
                                             const HiddenTuple& h,
                                             FilterTrace* trace = nullptr) {
  if (traj.points.size() < 2)
    throw Error(ErrorCategory::usage,
                "trajectory " + traj.id + " has fewer than 2 points");
  if (h.t_s < 0 || h.t_e < 0)
    throw Error(ErrorCategory::usage, "padding counts must be non-negative");
  const double diffuse = 1e12;
  return detail::run(traj, agent.dynamics, traj.points.front(),
                     Mat2::Identity() * diffuse, std::nullopt, h.t_s, h.t_e,
                     trace);
}

}  // namespace trajseg::lds
