// Minimal end-to-end exercise used while bringing the build up; the real
// coverage lives in the module test files.

#include <trajseg/trajseg.hpp>

#include <cstdio>

int main() {
  using namespace trajseg;
  AgentModel a;
  a.dynamics.A = Mat2::Identity();
  a.dynamics.b = Vec2(10.0, 0.0);
  a.dynamics.Q = Mat2::Identity();
  a.dynamics.R = Mat2::Identity();
  a.belief.mu_s = Vec2(0.0, 0.0);
  a.belief.phi_s = Mat2::Identity() * 25.0;
  a.belief.mu_e = Vec2(200.0, 0.0);
  a.belief.phi_e = Mat2::Identity() * 25.0;

  auto s = synth::sample_trajectory(a, synth::SampleOptions{.num_points = 21},
                                    7);
  s.trajectory.id = "smoke";
  lds::SmoothedStates sm = lds::smooth(s.trajectory, a, HiddenTuple{0, 1, 1});
  std::printf("loglik=%f points=%zu\n", sm.log_likelihood,
              s.trajectory.points.size());
  return std::isfinite(sm.log_likelihood) ? 0 : 1;
}
