#include <trajseg/lds.hpp>

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace trajseg;

static std::vector<Vec2> random_obs(Rng& rng, int n) {
  std::vector<Vec2> obs(n);
  Vec2 p(rng.uniform() * 20.0, rng.uniform() * 20.0);
  for (int i = 0; i < n; ++i) {
    obs[i] = p;
    p += Vec2(rng.normal() * 2.0 + 1.0, rng.normal() * 2.0);
  }
  return obs;
}

TEST_CASE("filter likelihood and smoother match the dense joint Gaussian") {
  Rng rng(2024);
  for (int inst = 0; inst < 60; ++inst) {
    AgentModel agent = helpers::random_agent(rng);
    int tau = 1 + rng.uniform_int(0, 5);  // 2..7 observations
    int t_s = rng.uniform_int(0, 2);
    int t_e = rng.uniform_int(0, 2);
    Trajectory traj{"t", random_obs(rng, tau + 1)};

    lds::SmoothedStates sm =
        lds::smooth(traj, agent, HiddenTuple{0, t_s, t_e});
    oracles::DenseLdsResult dense =
        oracles::dense_lds(agent, traj.points, t_s, t_e, true);

    INFO("instance " << inst << " tau=" << tau << " ts=" << t_s
                     << " te=" << t_e);
    REQUIRE(std::isfinite(sm.log_likelihood));
    CHECK(std::abs(sm.log_likelihood - dense.log_likelihood) <=
          1e-8 * std::abs(dense.log_likelihood));
    REQUIRE(sm.size() == dense.posterior_means.size());
    for (std::size_t j = 0; j < sm.size(); ++j) {
      CHECK(sm.means[j](0) ==
            Catch::Approx(dense.posterior_means[j](0)).margin(1e-7));
      CHECK(sm.means[j](1) ==
            Catch::Approx(dense.posterior_means[j](1)).margin(1e-7));
    }
  }
}

TEST_CASE("no padding and two points still agree with the oracle") {
  Rng rng(55);
  for (int inst = 0; inst < 20; ++inst) {
    AgentModel agent = helpers::random_agent(rng);
    Trajectory traj{"t", random_obs(rng, 2)};
    lds::SmoothedStates sm = lds::smooth(traj, agent, HiddenTuple{0, 0, 0});
    auto dense = oracles::dense_lds(agent, traj.points, 0, 0, true);
    CHECK(std::abs(sm.log_likelihood - dense.log_likelihood) <=
          1e-8 * std::abs(dense.log_likelihood));
  }
}

TEST_CASE("belief-free smoothing uses a diffuse prior and no end condition") {
  Rng rng(99);
  for (int inst = 0; inst < 20; ++inst) {
    AgentModel agent = helpers::random_agent(rng);
    Trajectory traj{"t", random_obs(rng, 5)};
    lds::SmoothedStates sm =
        lds::smooth_without_beliefs(traj, agent, HiddenTuple{0, 1, 1});
    // The smoother's 1e12 diffuse prior differs from a truly flat prior by
    // O(1e-12) relative, so the information-form oracle pins it tightly.
    auto flat = oracles::dense_lds_flat_prior(agent, traj.points, 1, 1);
    for (std::size_t j = 0; j < sm.size(); ++j) {
      CHECK(sm.means[j](0) == Catch::Approx(flat[j](0)).margin(1e-6));
      CHECK(sm.means[j](1) == Catch::Approx(flat[j](1)).margin(1e-6));
    }
  }
}

TEST_CASE("smoothed spans line up with the padding") {
  Rng rng(3);
  AgentModel agent = helpers::random_agent(rng);
  Trajectory traj{"t", random_obs(rng, 4)};
  lds::SmoothedStates sm = lds::smooth(traj, agent, HiddenTuple{0, 2, 3});
  CHECK(sm.size() == 2 + 4 + 3);
  CHECK(sm.t_s == 2);
  CHECK(sm.t_e == 3);
  CHECK(sm.tau == 3);
  CHECK(sm.observed_span().size() == 4);
  // With tight observation noise the observed-span states hug the data.
  agent.dynamics.R = Mat2::Identity() * 1e-4;
  lds::SmoothedStates tight = lds::smooth(traj, agent, HiddenTuple{0, 2, 3});
  auto span = tight.observed_span();
  for (int t = 0; t < 4; ++t)
    CHECK((span[t] - traj.points[t]).norm() < 0.05);
}

TEST_CASE("propagate applies the affine map repeatedly") {
  DynamicsParams d;
  d.A << 1.0, 0.1, 0.0, 1.0;
  d.b = Vec2(1.0, -1.0);
  d.Q = Mat2::Identity();
  d.R = Mat2::Identity();
  Vec2 x(2.0, 3.0);
  Vec2 e1 = d.A * x + d.b;
  Vec2 e2 = d.A * e1 + d.b;
  Vec2 e3 = d.A * e2 + d.b;
  CHECK(lds::propagate(d, x, 0) == x);
  CHECK(lds::propagate(d, x, 1).isApprox(e1));
  CHECK(lds::propagate(d, x, 2).isApprox(e2));
  CHECK(lds::propagate(d, x, 3).isApprox(e3));
}

TEST_CASE("smoothing validates its inputs") {
  Rng rng(4);
  AgentModel agent = helpers::random_agent(rng);
  Trajectory one{"t", {Vec2(0, 0)}};
  CHECK_THROWS_AS(lds::smooth(one, agent, HiddenTuple{0, 0, 0}), Error);
  Trajectory ok{"t", random_obs(rng, 3)};
  CHECK_THROWS_AS(lds::smooth(ok, agent, HiddenTuple{0, -1, 0}), Error);
  CHECK_THROWS_AS(lds::smooth(ok, agent, HiddenTuple{0, 0, -2}), Error);
}

TEST_CASE("filter trace exposes predicted and filtered moments") {
  Rng rng(8);
  AgentModel agent = helpers::random_agent(rng);
  Trajectory traj{"t", random_obs(rng, 4)};
  lds::FilterTrace trace;
  lds::SmoothedStates sm =
      lds::smooth(traj, agent, HiddenTuple{0, 1, 1}, &trace);
  REQUIRE(trace.filtered_means.size() == sm.size());
  REQUIRE(trace.predicted_means.size() == sm.size());
  // Final smoothed state equals final filtered state (smoother identity).
  CHECK(sm.means.back().isApprox(trace.filtered_means.back(), 1e-12));
}
