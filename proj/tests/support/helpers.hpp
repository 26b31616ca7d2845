#pragma once

// Shared builders for test fixtures: random-but-valid agent models, random
// trajectories, and synthetic corpora with known structure.

#include <trajseg/core.hpp>
#include <trajseg/rng.hpp>
#include <trajseg/synth.hpp>

#include <string>
#include <vector>

namespace helpers {

using trajseg::AgentModel;
using trajseg::Mat2;
using trajseg::Rng;
using trajseg::Trajectory;
using trajseg::Vec2;

// Random SPD 2x2 with eigenvalues in [lo, hi].
inline Mat2 random_spd(Rng& rng, double lo, double hi) {
  double ang = rng.uniform() * 6.283185307179586;
  Mat2 rot;
  rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  Mat2 diag = Mat2::Zero();
  diag(0, 0) = lo + rng.uniform() * (hi - lo);
  diag(1, 1) = lo + rng.uniform() * (hi - lo);
  return rot * diag * rot.transpose();
}

// Random stable-ish dynamics with well-conditioned covariances.
inline AgentModel random_agent(Rng& rng) {
  AgentModel a;
  a.dynamics.A = Mat2::Identity() + 0.1 * Mat2::NullaryExpr([&](int, int) {
                   return rng.normal();
                 });
  a.dynamics.b = Vec2(rng.normal() * 5.0, rng.normal() * 5.0);
  a.dynamics.Q = random_spd(rng, 0.5, 3.0);
  a.dynamics.R = random_spd(rng, 0.5, 3.0);
  a.belief.mu_s = Vec2(rng.uniform() * 100.0, rng.uniform() * 100.0);
  a.belief.phi_s = random_spd(rng, 5.0, 20.0);
  a.belief.mu_e = Vec2(rng.uniform() * 100.0, rng.uniform() * 100.0);
  a.belief.phi_e = random_spd(rng, 5.0, 20.0);
  a.pi = 1.0;
  a.lambda_s = 0.5 + rng.uniform() * 3.0;
  a.lambda_e = 0.5 + rng.uniform() * 3.0;
  return a;
}

inline Trajectory random_trajectory(Rng& rng, int num_points,
                                    const std::string& id) {
  Trajectory t;
  t.id = id;
  t.points.reserve(num_points);
  Vec2 p(rng.uniform() * 50.0, rng.uniform() * 50.0);
  for (int i = 0; i < num_points; ++i) {
    t.points.push_back(p);
    p += Vec2(rng.normal() * 3.0 + 2.0, rng.normal() * 3.0);
  }
  return t;
}

// Straight-walk agent between two endpoints with given noise scale.
inline AgentModel corridor_agent(Vec2 from, Vec2 to, int steps, double noise,
                                 double belief_var) {
  AgentModel a;
  a.dynamics.A = Mat2::Identity();
  a.dynamics.b = (to - from) / steps;
  a.dynamics.Q = Mat2::Identity() * noise;
  a.dynamics.R = Mat2::Identity() * noise;
  a.belief.mu_s = from;
  a.belief.phi_s = Mat2::Identity() * belief_var;
  a.belief.mu_e = to;
  a.belief.phi_e = Mat2::Identity() * belief_var;
  a.pi = 1.0;
  a.lambda_s = 1.0;
  a.lambda_e = 1.0;
  return a;
}

}  // namespace helpers
