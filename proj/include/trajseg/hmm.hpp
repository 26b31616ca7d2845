#pragma once

// Hidden Markov model over windows of smoothed states.
//
// A trajectory's smoothed states (aligned with its observations) are grouped
// into windows of N consecutive states. Each agent is an HMM state; the
// emission log-likelihood of a window under agent m scores the N-1
// transitions inside the window against that agent's dynamics (beliefs play
// no role here). Baum-Welch re-estimates only the agent-to-agent transition
// matrix - the initial distribution stays fixed at the mixture weights - and
// Viterbi decodes the window labels, which are then expanded back to points.

#include "trajseg/core.hpp"
#include "trajseg/em.hpp"
#include "trajseg/lds.hpp"
#include "trajseg/mathutil.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace trajseg::hmm {

struct WindowedStates {
  std::vector<std::vector<Vec2>> windows;  // each holds window_size states
  int window_size = 3;
  bool overlapping = false;
  int num_points = 0;  // length of the span the windows were built from
};

// Groups a state span into windows of N states. Non-overlapping windows
// stride by N and drop a trailing remainder; overlapping windows stride by 1.
// A span shorter than one window is an error.
inline WindowedStates build_windows(std::span<const Vec2> states, int n,
                                    bool overlap) {
  if (n < 2)
    throw Error(ErrorCategory::usage, "window size must be at least 2");
  const int len = static_cast<int>(states.size());
  if (len < n)
    throw Error(ErrorCategory::usage,
                "state sequence (length " + std::to_string(len) +
                    ") is shorter than one window of " + std::to_string(n));
  WindowedStates out;
  out.window_size = n;
  out.overlapping = overlap;
  out.num_points = len;
  const int stride = overlap ? 1 : n;
  for (int start = 0; start + n <= len; start += stride) {
    std::vector<Vec2> w(states.begin() + start, states.begin() + start + n);
    out.windows.push_back(std::move(w));
  }
  return out;
}

// Sum over within-window transitions of log N(x_i | A x_{i-1} + b, Q).
inline double emission_log_likelihood(const std::vector<Vec2>& window,
                                      const DynamicsParams& dynamics) {
  Gaussian2 g = Gaussian2::from_cov(Vec2::Zero(), dynamics.Q);
  double total = 0.0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    Vec2 res = window[i] - dynamics.A * window[i - 1] - dynamics.b;
    total += g.log_norm - 0.5 * res.dot(g.inv * res);
  }
  return total;
}

// Rows = windows, cols = agents.
inline Eigen::MatrixXd emission_matrix(const WindowedStates& seq,
                                       const MixtureModel& mixture) {
  Eigen::MatrixXd e(seq.windows.size(), mixture.num_agents());
  for (std::size_t w = 0; w < seq.windows.size(); ++w)
    for (int m = 0; m < mixture.num_agents(); ++m)
      e(w, m) =
          emission_log_likelihood(seq.windows[w], mixture.agents[m].dynamics);
  return e;
}

struct HmmModel {
  Eigen::MatrixXd transition;  // row-stochastic, one row per agent
};

struct BaumWelchResult {
  HmmModel model;
  // Observed log-likelihood sum over sequences, one entry per iteration.
  std::vector<double> loglik_trace;
};

namespace detail {

struct ForwardBackward {
  Eigen::MatrixXd log_alpha;
  Eigen::MatrixXd log_beta;
  double log_prob = 0.0;
};

inline ForwardBackward forward_backward(const Eigen::MatrixXd& log_emis,
                                        const Eigen::MatrixXd& log_trans,
                                        const Eigen::VectorXd& log_init) {
  const int T = static_cast<int>(log_emis.rows());
  const int M = static_cast<int>(log_emis.cols());
  ForwardBackward fb;
  fb.log_alpha.resize(T, M);
  fb.log_beta.resize(T, M);
  std::vector<double> terms(M);
  for (int j = 0; j < M; ++j)
    fb.log_alpha(0, j) = log_init(j) + log_emis(0, j);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < M; ++j) {
      for (int i = 0; i < M; ++i)
        terms[i] = fb.log_alpha(t - 1, i) + log_trans(i, j);
      fb.log_alpha(t, j) = log_sum_exp(terms) + log_emis(t, j);
    }
  }
  for (int j = 0; j < M; ++j) fb.log_beta(T - 1, j) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < M; ++j)
        terms[j] =
            log_trans(i, j) + log_emis(t + 1, j) + fb.log_beta(t + 1, j);
      fb.log_beta(t, i) = log_sum_exp(terms);
    }
  }
  for (int j = 0; j < M; ++j) terms[j] = fb.log_alpha(T - 1, j);
  fb.log_prob = log_sum_exp(terms);
  return fb;
}

}  // namespace detail

// Estimates the transition matrix by expectation-maximization with the
// initial distribution pinned to the mixture weights and emissions fixed by
// the agent dynamics. Starts from a uniform transition matrix.
inline BaumWelchResult baum_welch(const std::vector<WindowedStates>& corpora,
                                  const MixtureModel& mixture,
                                  int max_iters = 50, double tol = 1e-6) {
  const int M = mixture.num_agents();
  if (corpora.empty())
    throw Error(ErrorCategory::usage, "no windowed sequences to train on");
  bool any_transition = false;
  for (const WindowedStates& seq : corpora)
    if (seq.windows.size() >= 2) any_transition = true;
  if (!any_transition)
    throw Error(ErrorCategory::usage,
                "no sequence has two or more windows; cannot estimate "
                "transitions");

  std::vector<Eigen::MatrixXd> emissions;
  emissions.reserve(corpora.size());
  for (const WindowedStates& seq : corpora)
    emissions.push_back(emission_matrix(seq, mixture));

  Eigen::VectorXd log_init(M);
  for (int m = 0; m < M; ++m) log_init(m) = std::log(mixture.agents[m].pi);

  BaumWelchResult out;
  out.model.transition =
      Eigen::MatrixXd::Constant(M, M, 1.0 / static_cast<double>(M));
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd log_trans = out.model.transition.array().log().matrix();
    Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(M, M);
    Eigen::VectorXd gamma_sum = Eigen::VectorXd::Zero(M);
    double total_logp = 0.0;
    for (const Eigen::MatrixXd& log_emis : emissions) {
      detail::ForwardBackward fb =
          detail::forward_backward(log_emis, log_trans, log_init);
      total_logp += fb.log_prob;
      const int T = static_cast<int>(log_emis.rows());
      for (int t = 0; t + 1 < T; ++t) {
        for (int i = 0; i < M; ++i) {
          double lg = fb.log_alpha(t, i) + fb.log_beta(t, i) - fb.log_prob;
          gamma_sum(i) += std::exp(lg);
          for (int j = 0; j < M; ++j) {
            double lx = fb.log_alpha(t, i) + log_trans(i, j) +
                        log_emis(t + 1, j) + fb.log_beta(t + 1, j) -
                        fb.log_prob;
            xi_sum(i, j) += std::exp(lx);
          }
        }
      }
    }
    out.loglik_trace.push_back(total_logp);
    bool converged = iter > 0 && total_logp - prev < tol;
    prev = total_logp;
    if (converged) break;
    Eigen::MatrixXd next = out.model.transition;
    for (int i = 0; i < M; ++i) {
      if (gamma_sum(i) > 1e-12) {
        for (int j = 0; j < M; ++j) next(i, j) = xi_sum(i, j) / gamma_sum(i);
        double row = next.row(i).sum();
        next.row(i) /= row;
      }
      // Rows with no expected visits keep their previous values.
    }
    out.model.transition = next;
  }
  return out;
}

// Most likely window label sequence. Score ties are broken toward the lower
// agent index, resolved from the final window backward (the standard
// first-wins backpointer rule).
inline std::vector<int> viterbi(const WindowedStates& seq,
                                const MixtureModel& mixture,
                                const HmmModel& hmm) {
  const int M = mixture.num_agents();
  const int T = static_cast<int>(seq.windows.size());
  if (T == 0) return {};
  if (hmm.transition.rows() != M || hmm.transition.cols() != M)
    throw Error(ErrorCategory::usage,
                "transition matrix size does not match the agent count");
  Eigen::MatrixXd log_emis = emission_matrix(seq, mixture);
  Eigen::MatrixXd log_trans = hmm.transition.array().log().matrix();

  Eigen::MatrixXd delta(T, M);
  Eigen::MatrixXi back(T, M);
  for (int j = 0; j < M; ++j)
    delta(0, j) = std::log(mixture.agents[j].pi) + log_emis(0, j);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < M; ++j) {
      int arg = 0;
      double best = delta(t - 1, 0) + log_trans(0, j);
      for (int i = 1; i < M; ++i) {
        double v = delta(t - 1, i) + log_trans(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(t, j) = best + log_emis(t, j);
      back(t, j) = arg;
    }
  }
  std::vector<int> labels(T);
  int arg = 0;
  for (int j = 1; j < M; ++j)
    if (delta(T - 1, j) > delta(T - 1, arg)) arg = j;
  labels[T - 1] = arg;
  for (int t = T - 1; t > 0; --t) labels[t - 1] = back(t, labels[t]);
  return labels;
}

// Expands window labels back to per-point labels.
//
// Non-overlapping: point i takes the label of window i / N; points past the
// last full window inherit the last window's label. Overlapping (stride 1):
// point i takes the label of the window whose center is nearest, ties going
// to the earlier window.
inline std::vector<int> expand_labels(const std::vector<int>& window_labels,
                                      int n, bool overlap, int num_points) {
  if (window_labels.empty())
    throw Error(ErrorCategory::usage, "no window labels to expand");
  const int W = static_cast<int>(window_labels.size());
  std::vector<int> labels(num_points);
  if (!overlap) {
    for (int i = 0; i < num_points; ++i)
      labels[i] = window_labels[std::min(i / n, W - 1)];
    return labels;
  }
  const double half = (n - 1) / 2.0;
  for (int i = 0; i < num_points; ++i) {
    double ideal = i - half;  // window index whose center sits exactly at i
    int lo = static_cast<int>(std::floor(ideal));
    int best = std::clamp(lo, 0, W - 1);
    int alt = std::clamp(lo + 1, 0, W - 1);
    double dbest = std::abs(ideal - best);
    double dalt = std::abs(ideal - alt);
    if (dalt < dbest) best = alt;  // ties keep the earlier window
    labels[i] = window_labels[best];
  }
  return labels;
}

struct SegmentOptions {
  int window_size = 3;
  bool overlap = false;
  int t_cap = 20;
  em::EstepVariant variant = em::EstepVariant::imda;
  bool belief_free_endpoints = false;

  static SegmentOptions from_config(const em::EmConfig& cfg, int window_size,
                                    bool overlap) {
    SegmentOptions o;
    o.window_size = window_size;
    o.overlap = overlap;
    o.t_cap = cfg.t_cap;
    o.variant = cfg.variant;
    o.belief_free_endpoints = cfg.belief_free_endpoints;
    return o;
  }
};

// Smoothed states for the highest-weight hypothesis tuple, aligned with the
// observations. This is the state sequence the HMM stages consume.
inline std::vector<Vec2> best_tuple_states(const Trajectory& traj,
                                           const MixtureModel& mixture,
                                           const SegmentOptions& opts) {
  em::EmConfig cfg;
  cfg.num_agents = mixture.num_agents();
  cfg.t_cap = opts.t_cap;
  cfg.variant = opts.variant;
  cfg.belief_free_endpoints = opts.belief_free_endpoints;
  em::Responsibility resp;
  em::TrajectoryCache cache;
  em::trajectory_e_step(traj, mixture, cfg, &resp, &cache);
  const em::TupleGrid grid{mixture.num_agents(), cfg.t_cap};
  int idx = em::best_tuple(resp);
  HiddenTuple h = grid.decode(idx);
  const std::vector<Vec2>& means = cache.tuples[idx].means;
  return std::vector<Vec2>(means.begin() + h.t_s,
                           means.begin() + h.t_s + traj.tau() + 1);
}

// Full segmentation of one trajectory: smooth under the best hypothesis,
// window, decode with Viterbi, and expand labels back to points.
inline Segmentation segment(const Trajectory& traj, const MixtureModel& mixture,
                            const HmmModel& hmm, const SegmentOptions& opts) {
  std::vector<Vec2> states = best_tuple_states(traj, mixture, opts);
  WindowedStates seq = build_windows(states, opts.window_size, opts.overlap);
  std::vector<int> window_labels = viterbi(seq, mixture, hmm);
  std::vector<int> labels = expand_labels(window_labels, opts.window_size,
                                          opts.overlap, seq.num_points);
  return Segmentation::from_labels(traj.id, std::move(labels));
}

}  // namespace trajseg::hmm
