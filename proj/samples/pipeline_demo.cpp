// End-to-end walkthrough: sample trajectories from two hand-built agents,
// fit a mixture + transition model on them, segment a regime-switching
// trajectory, and print the errors against the known switch point.

#include <trajseg/trajseg.hpp>

#include <iostream>

using namespace trajseg;

static AgentModel make_agent(Vec2 from, Vec2 to, int steps) {
  AgentModel a;
  a.dynamics.A = Mat2::Identity();
  a.dynamics.b = (to - from) / steps;
  a.dynamics.Q = Mat2::Identity() * 4.0;
  a.dynamics.R = Mat2::Identity() * 4.0;
  a.belief.mu_s = from;
  a.belief.phi_s = Mat2::Identity() * 100.0;
  a.belief.mu_e = to;
  a.belief.phi_e = Mat2::Identity() * 100.0;
  a.pi = 0.5;
  a.lambda_s = 1.0;
  a.lambda_e = 1.0;
  return a;
}

int main() {
  const int kSteps = 24;
  std::vector<AgentModel> agents = {
      make_agent(Vec2(100, 500), Vec2(1800, 500), kSteps),   // west -> east
      make_agent(Vec2(900, 1000), Vec2(900, 100), kSteps)};  // south -> north

  // Sample a training corpus: mostly single-agent walks plus a few
  // mid-trajectory turns, so the transition model sees actual switches
  // (with none, its maximum-likelihood switch probability is zero and
  // segmentation can never change labels).
  std::vector<Trajectory> corpus;
  synth::SampleOptions opt;
  opt.num_points = kSteps + 1;
  for (int i = 0; i < 48; ++i) {
    auto s = synth::sample_trajectory(agents[i % 2], opt,
                                      substream_seed(42, i));
    s.trajectory.id = "train_" + std::to_string(i);
    corpus.push_back(std::move(s.trajectory));
  }
  for (int i = 0; i < 12; ++i) {
    synth::SwitchingSpec mix;
    mix.agent_sequence = {i % 2, 1 - i % 2};
    mix.switch_indices = {kSteps / 2 + (i % 5) - 2};
    mix.num_points = kSteps + 1;
    auto s = synth::sample_switching(agents, mix, substream_seed(43, i));
    s.trajectory.id = "turn_" + std::to_string(i);
    corpus.push_back(std::move(s.trajectory));
  }

  em::EmConfig cfg;
  cfg.num_agents = 2;
  cfg.t_cap = 3;
  cfg.max_iters = 25;
  cfg.rng_seed = 7;
  pipeline::TrainedPipeline tp = pipeline::train(corpus, cfg, {});

  std::cout << "em iterations: " << tp.em_trace.size()
            << ", final log-likelihood: " << tp.em_trace.back() << '\n';
  for (int z = 0; z < tp.mixture.num_agents(); ++z) {
    const AgentModel& a = tp.mixture.agents[z];
    std::cout << "agent " << z << ": pi=" << a.pi << " start=("
              << a.belief.mu_s(0) << ',' << a.belief.mu_s(1) << ") end=("
              << a.belief.mu_e(0) << ',' << a.belief.mu_e(1) << ")\n";
  }

  // A trajectory that walks east, then turns north halfway.
  synth::SwitchingSpec spec;
  spec.agent_sequence = {0, 1};
  spec.switch_indices = {kSteps / 2};
  spec.num_points = kSteps + 1;
  synth::SwitchingSample sw = synth::sample_switching(agents, spec, 99);
  sw.trajectory.id = "switcher";

  hmm::SegmentOptions sopts = hmm::SegmentOptions::from_config(cfg, 3, false);
  Segmentation seg = hmm::segment(sw.trajectory, tp.mixture, tp.hmm, sopts);

  std::cout << "labels:";
  for (int l : seg.labels) std::cout << ' ' << l;
  std::cout << '\n';

  metrics::Mask gt(sw.switch_mask.begin(), sw.switch_mask.end());
  auto errs = metrics::calc_errors(sw.trajectory, seg.split_mask, gt);
  if (errs)
    std::cout << "positional error: " << errs->positional
              << ", step error: " << errs->step << '\n';
  else
    std::cout << "no split points on either side\n";
  return 0;
}
