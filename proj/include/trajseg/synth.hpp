#pragma once

// Generative samplers for the agent model, used for verification and for
// producing synthetic corpora. All randomness flows through trajseg::Rng;
// batch generation derives one substream per trajectory from a counter, so
// element i of a batch equals element i generated on its own.

#include "trajseg/core.hpp"
#include "trajseg/lds.hpp"
#include "trajseg/mathutil.hpp"
#include "trajseg/rng.hpp"

#include <string>
#include <vector>

namespace trajseg::synth {

struct SampleOptions {
  int num_points = 30;  // observed points (tau + 1)
  // When set, redraw until the final padded state lies within k_sigma
  // Mahalanobis units of the end belief (up to max_attempts; the draw with
  // the smallest deviation wins if none qualifies).
  bool reject_endpoints = false;
  double k_sigma = 3.0;
  int max_attempts = 200;
};

struct TrajectorySample {
  Trajectory trajectory;
  HiddenTuple hidden;            // drawn (t_s, t_e); z is the caller's agent
  std::vector<Vec2> states;      // full padded latent states
  double endpoint_deviation = 0.0;  // Mahalanobis distance from the end belief
  int attempts = 1;
};

namespace detail {

inline double mahalanobis(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  Gaussian2 g = Gaussian2::from_cov(mean, cov);
  Vec2 d = x - mean;
  return std::sqrt(d.dot(g.inv * d));
}

inline TrajectorySample draw_once(const AgentModel& agent,
                                  const SampleOptions& opt, Rng& rng) {
  if (opt.num_points < 2)
    throw Error(ErrorCategory::usage, "need at least 2 observed points");
  TrajectorySample s;
  s.hidden.t_s = rng.poisson(agent.lambda_s);
  s.hidden.t_e = rng.poisson(agent.lambda_e);
  const int tau = opt.num_points - 1;
  const int length = s.hidden.t_s + tau + 1 + s.hidden.t_e;

  s.states.reserve(length);
  s.states.push_back(rng.gaussian2(agent.belief.mu_s, agent.belief.phi_s));
  for (int j = 1; j < length; ++j) {
    Vec2 mean = agent.dynamics.A * s.states.back() + agent.dynamics.b;
    s.states.push_back(rng.gaussian2(mean, agent.dynamics.Q));
  }
  s.trajectory.points.reserve(opt.num_points);
  for (int t = 0; t <= tau; ++t) {
    const Vec2& x = s.states[s.hidden.t_s + t];
    s.trajectory.points.push_back(rng.gaussian2(x, agent.dynamics.R));
  }
  s.endpoint_deviation =
      mahalanobis(s.states.back(), agent.belief.mu_e, agent.belief.phi_e);
  return s;
}

}  // namespace detail

inline TrajectorySample sample_trajectory(const AgentModel& agent,
                                          const SampleOptions& opt,
                                          std::uint64_t seed) {
  Rng rng(seed);
  TrajectorySample best = detail::draw_once(agent, opt, rng);
  if (!opt.reject_endpoints) return best;
  int attempts = 1;
  while (best.endpoint_deviation > opt.k_sigma &&
         attempts < opt.max_attempts) {
    TrajectorySample next = detail::draw_once(agent, opt, rng);
    ++attempts;
    if (next.endpoint_deviation < best.endpoint_deviation) best = next;
  }
  best.attempts = attempts;
  return best;
}

// One regime change specification: agents per phase and the point indices at
// which the active agent switches. switch_indices must be strictly
// increasing, interior (0 < i < num_points), and one shorter than
// agent_sequence.
struct SwitchingSpec {
  std::vector<int> agent_sequence;
  std::vector<int> switch_indices;
  int num_points = 30;
};

struct SwitchingSample {
  Trajectory trajectory;
  std::vector<int> labels;       // generating agent per point
  std::vector<char> switch_mask;  // true exactly at switch indices
  std::vector<Vec2> states;
};

// Samples a trajectory whose dynamics switch between agents at the given
// indices. The state is continuous across switches: the first state comes
// from the first agent's start belief and every transition uses the dynamics
// of the agent that labels the destination point.
inline SwitchingSample sample_switching(const std::vector<AgentModel>& agents,
                                        const SwitchingSpec& spec,
                                        std::uint64_t seed) {
  if (spec.agent_sequence.empty())
    throw Error(ErrorCategory::usage, "switching schedule has no phases");
  if (spec.agent_sequence.size() != spec.switch_indices.size() + 1)
    throw Error(ErrorCategory::usage,
                "need exactly one more phase than switch index");
  if (spec.num_points < 2)
    throw Error(ErrorCategory::usage, "need at least 2 observed points");
  int prev = 0;
  for (int idx : spec.switch_indices) {
    if (idx <= prev || idx >= spec.num_points)
      throw Error(ErrorCategory::usage,
                  "switch indices must be strictly increasing interior "
                  "point indices");
    prev = idx;
  }
  for (int a : spec.agent_sequence)
    if (a < 0 || a >= static_cast<int>(agents.size()))
      throw Error(ErrorCategory::usage, "agent index out of range");

  SwitchingSample s;
  s.labels.resize(spec.num_points);
  s.switch_mask.assign(spec.num_points, 0);
  std::size_t phase = 0;
  for (int t = 0; t < spec.num_points; ++t) {
    if (phase < spec.switch_indices.size() &&
        t == spec.switch_indices[phase]) {
      ++phase;
      s.switch_mask[t] = 1;
    }
    s.labels[t] = spec.agent_sequence[phase];
  }

  Rng rng(seed);
  const AgentModel& first = agents[spec.agent_sequence.front()];
  s.states.reserve(spec.num_points);
  s.states.push_back(rng.gaussian2(first.belief.mu_s, first.belief.phi_s));
  for (int t = 1; t < spec.num_points; ++t) {
    const AgentModel& a = agents[s.labels[t]];
    Vec2 mean = a.dynamics.A * s.states.back() + a.dynamics.b;
    s.states.push_back(rng.gaussian2(mean, a.dynamics.Q));
  }
  s.trajectory.points.reserve(spec.num_points);
  for (int t = 0; t < spec.num_points; ++t) {
    const AgentModel& a = agents[s.labels[t]];
    s.trajectory.points.push_back(rng.gaussian2(s.states[t], a.dynamics.R));
  }
  return s;
}

}  // namespace trajseg::synth
