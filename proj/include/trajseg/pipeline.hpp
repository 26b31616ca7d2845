#pragma once

// End-to-end training helpers tying the modules together: agent estimation
// followed by HMM transition training, and method adapters for
// cross-validation.

#include "trajseg/core.hpp"
#include "trajseg/em.hpp"
#include "trajseg/hmm.hpp"
#include "trajseg/metrics.hpp"
#include "trajseg/rdp.hpp"

#include <memory>
#include <string>
#include <vector>

namespace trajseg::pipeline {

struct HmmTrainOptions {
  int window_size = 3;
  bool overlap = false;
  int max_iters = 50;
  double tol = 1e-6;
};

struct TrainedPipeline {
  MixtureModel mixture;
  hmm::HmmModel hmm;
  std::vector<double> em_trace;
  std::vector<double> hmm_trace;
};

// Windowed best-hypothesis state sequences for every trajectory long enough
// to hold at least one window; shorter trajectories are left out.
inline std::vector<hmm::WindowedStates> windows_from_fit(
    const std::vector<Trajectory>& trajs, const em::FitResult& fit,
    int t_cap, const HmmTrainOptions& opts) {
  const em::TupleGrid grid{fit.model.num_agents(), t_cap};
  std::vector<hmm::WindowedStates> out;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    if (trajs[k].tau() + 1 < opts.window_size) continue;
    int idx = em::best_tuple(fit.responsibilities[k]);
    HiddenTuple h = grid.decode(idx);
    const std::vector<Vec2>& means = fit.cache[k].tuples[idx].means;
    std::span<const Vec2> span(means.data() + h.t_s,
                               static_cast<std::size_t>(trajs[k].tau() + 1));
    out.push_back(hmm::build_windows(span, opts.window_size, opts.overlap));
  }
  return out;
}

inline TrainedPipeline train(const std::vector<Trajectory>& trajs,
                             const em::EmConfig& cfg,
                             const HmmTrainOptions& hmm_opts) {
  em::FitResult fit = em::fit(trajs, cfg);
  std::vector<hmm::WindowedStates> windows =
      windows_from_fit(trajs, fit, cfg.t_cap, hmm_opts);
  hmm::BaumWelchResult bw =
      hmm::baum_welch(windows, fit.model, hmm_opts.max_iters, hmm_opts.tol);
  TrainedPipeline out;
  out.mixture = std::move(fit.model);
  out.hmm = std::move(bw.model);
  out.em_trace = std::move(fit.loglik_trace);
  out.hmm_trace = std::move(bw.loglik_trace);
  return out;
}

// Cross-validation adapter for the agent-mixture + HMM segmenter. Ground
// truth is unused during training (the pipeline is unsupervised).
inline metrics::Method make_em_hmm_method(const em::EmConfig& cfg,
                                          const HmmTrainOptions& hmm_opts) {
  metrics::Method m;
  m.label = std::string(em::to_string(cfg.variant)) + "+hmm";
  m.train = [cfg, hmm_opts](const std::vector<Trajectory>& train_trajs,
                            const std::vector<metrics::Mask>&) {
    auto trained = std::make_shared<TrainedPipeline>(
        train(train_trajs, cfg, hmm_opts));
    hmm::SegmentOptions seg_opts = hmm::SegmentOptions::from_config(
        cfg, hmm_opts.window_size, hmm_opts.overlap);
    return metrics::Segmenter(
        [trained, seg_opts](const Trajectory& t) -> metrics::Mask {
          Segmentation s =
              hmm::segment(t, trained->mixture, trained->hmm, seg_opts);
          return s.split_mask;
        });
  };
  return m;
}

// Cross-validation adapter for the RDP baseline: training selects the
// tolerance on the training fold, segmentation applies it.
inline metrics::Method make_rdp_method(const std::vector<double>& grid,
                                       rdp::Criterion criterion) {
  metrics::Method m;
  m.label = criterion == rdp::Criterion::positional ? "rdp(positional)"
                                                    : "rdp(step)";
  m.train = [grid, criterion](const std::vector<Trajectory>& train_trajs,
                              const std::vector<metrics::Mask>& train_gt) {
    double eps = rdp::select_epsilon(train_trajs, train_gt, grid, criterion);
    return metrics::Segmenter([eps](const Trajectory& t) -> metrics::Mask {
      return rdp::simplify(t, eps);
    });
  };
  return m;
}

}  // namespace trajseg::pipeline
