#include "cli.hpp"

#include <trajseg/trajseg.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace trajseg::cli {
namespace {

namespace fs = std::filesystem;

struct FitArgs {
  std::string trajectories;
  std::string out;
  std::string trace;
  int agents = 3;
  std::string variant = "imda";
  int t_cap = 20;
  int max_iters = 50;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  int window = 3;
  bool overlap = false;
  bool belief_free = false;
  bool skip_hmm = false;
  int hmm_max_iters = 50;
  double hmm_tol = 1e-6;
};

em::EmConfig make_config(const FitArgs& a) {
  em::EmConfig cfg;
  cfg.num_agents = a.agents;
  cfg.t_cap = a.t_cap;
  cfg.max_iters = a.max_iters;
  cfg.loglik_tol = a.tol;
  cfg.variant = em::parse_variant(a.variant);
  cfg.rng_seed = a.seed;
  cfg.belief_free_endpoints = a.belief_free;
  return cfg;
}

int cmd_fit(const FitArgs& a) {
  std::vector<Trajectory> trajs = io::load_trajectories(a.trajectories);
  em::EmConfig cfg = make_config(a);
  io::ModelDocument doc;
  doc.config = cfg;
  if (a.skip_hmm) {
    em::FitResult fit = em::fit(trajs, cfg);
    doc.mixture = std::move(fit.model);
    if (!a.trace.empty())
      io::save_trace(a.trace, em::to_string(cfg.variant), fit.loglik_trace);
    std::cout << "fitted " << doc.mixture.num_agents() << " agents on "
              << trajs.size() << " trajectories ("
              << fit.loglik_trace.size() << " iterations)\n";
  } else {
    pipeline::HmmTrainOptions hopts;
    hopts.window_size = a.window;
    hopts.overlap = a.overlap;
    hopts.max_iters = a.hmm_max_iters;
    hopts.tol = a.hmm_tol;
    pipeline::TrainedPipeline tp = pipeline::train(trajs, cfg, hopts);
    doc.mixture = std::move(tp.mixture);
    doc.hmm = io::HmmPart{std::move(tp.hmm), a.window, a.overlap};
    if (!a.trace.empty())
      io::save_trace(a.trace, em::to_string(cfg.variant), tp.em_trace);
    std::cout << "fitted " << doc.mixture.num_agents() << " agents on "
              << trajs.size() << " trajectories (" << tp.em_trace.size()
              << " em iterations, " << tp.hmm_trace.size()
              << " transition iterations)\n";
  }
  io::save_model(a.out, doc);
  return 0;
}

struct SegmentArgs {
  std::string model;
  std::string trajectories;
  std::string out;
};

int cmd_segment(const SegmentArgs& a) {
  io::ModelDocument doc = io::load_model(a.model);
  if (!doc.hmm)
    throw Error(ErrorCategory::usage,
                a.model + " has no transition component; refit without "
                          "--skip-hmm before segmenting");
  std::vector<Trajectory> trajs = io::load_trajectories(a.trajectories);
  hmm::SegmentOptions opts = doc.segment_options();
  std::vector<io::SegmentedTrajectory> segs;
  segs.reserve(trajs.size());
  for (const Trajectory& t : trajs) {
    Segmentation s = hmm::segment(t, doc.mixture, doc.hmm->model, opts);
    segs.push_back(io::SegmentedTrajectory{
        t, std::move(s.labels),
        metrics::Mask(s.split_mask.begin(), s.split_mask.end())});
  }
  io::save_segmentations(a.out, segs);
  std::cout << "segmented " << segs.size() << " trajectories\n";
  return 0;
}

struct EvaluateArgs {
  std::string segmentation;
  std::string ground_truth;
  std::string label = "segmentation";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<io::SegmentedTrajectory> segs =
      io::load_segmentations(a.segmentation);
  std::vector<Trajectory> trajs;
  std::vector<metrics::Mask> est;
  trajs.reserve(segs.size());
  for (io::SegmentedTrajectory& s : segs) {
    trajs.push_back(std::move(s.trajectory));
    est.push_back(std::move(s.split_mask));
  }
  std::vector<metrics::Mask> gt = io::load_ground_truth(a.ground_truth, trajs);
  metrics::ErrorReport report = metrics::evaluate_masks(trajs, est, gt);
  std::string text = io::format_error_report(report, a.label);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    io::detail::open_output(a.out) << text;
    std::cout << "wrote " << a.out << '\n';
  }
  return 0;
}

struct CvArgs {
  std::string trajectories;
  std::string ground_truth;
  std::string method = "imda+hmm";
  int folds = 10;
  std::uint64_t seed = 1;
  std::string out;
  // em method options
  int agents = 3;
  int t_cap = 20;
  int max_iters = 50;
  double tol = 1e-6;
  int window = 3;
  bool overlap = false;
  bool belief_free = false;
  // rdp method options
  std::string criterion = "positional";
  double eps_lo = 10.0;
  double eps_hi = 300.0;
  int eps_count = 30;
};

metrics::Method make_method(const CvArgs& a) {
  if (a.method == "rdp") {
    return pipeline::make_rdp_method(
        rdp::default_epsilon_grid(a.eps_lo, a.eps_hi, a.eps_count),
        rdp::parse_criterion(a.criterion));
  }
  const std::string suffix = "+hmm";
  if (a.method.size() > suffix.size() &&
      a.method.compare(a.method.size() - suffix.size(), suffix.size(),
                       suffix) == 0) {
    em::EmConfig cfg;
    cfg.num_agents = a.agents;
    cfg.t_cap = a.t_cap;
    cfg.max_iters = a.max_iters;
    cfg.loglik_tol = a.tol;
    cfg.variant = em::parse_variant(
        a.method.substr(0, a.method.size() - suffix.size()));
    cfg.rng_seed = a.seed;
    cfg.belief_free_endpoints = a.belief_free;
    pipeline::HmmTrainOptions hopts;
    hopts.window_size = a.window;
    hopts.overlap = a.overlap;
    return pipeline::make_em_hmm_method(cfg, hopts);
  }
  throw Error(ErrorCategory::usage,
              "unknown method '" + a.method +
                  "' (expected <variant>+hmm or rdp)");
}

int cmd_cv(const CvArgs& a) {
  std::vector<Trajectory> trajs = io::load_trajectories(a.trajectories);
  std::vector<metrics::Mask> gt =
      io::load_ground_truth(a.ground_truth, trajs);
  metrics::Method method = make_method(a);
  metrics::CvReport report =
      metrics::cross_validate(trajs, gt, a.folds, method, a.seed);
  std::cout << io::format_cv_table({report});
  for (const metrics::FoldSummary& f : report.fold_summaries)
    if (f.failed)
      std::cerr << "fold " << f.fold << " failed: " << f.error << '\n';
  if (!a.out.empty()) {
    io::detail::open_output(a.out) << io::format_cv_csv(report);
    std::cout << "wrote " << a.out << '\n';
  }
  return 0;
}

struct RdpArgs {
  std::string trajectories;
  std::string ground_truth;
  std::string out;
  double epsilon = -1.0;
  bool select = false;
  std::string criterion = "both";
  double eps_lo = 10.0;
  double eps_hi = 300.0;
  int eps_count = 30;
};

int cmd_rdp(const RdpArgs& a) {
  std::vector<Trajectory> trajs = io::load_trajectories(a.trajectories);
  if (a.select) {
    if (a.ground_truth.empty())
      throw Error(ErrorCategory::usage,
                  "--select needs --ground-truth to score candidates");
    std::vector<metrics::Mask> gt =
        io::load_ground_truth(a.ground_truth, trajs);
    std::vector<double> grid =
        rdp::default_epsilon_grid(a.eps_lo, a.eps_hi, a.eps_count);
    std::cout << "criterion,epsilon\n";
    auto report_one = [&](rdp::Criterion c, const char* name) {
      double eps = rdp::select_epsilon(trajs, gt, grid, c);
      std::cout << name << ',' << io::format_double(eps) << '\n';
    };
    if (a.criterion == "both" || a.criterion == "positional")
      report_one(rdp::Criterion::positional, "positional");
    if (a.criterion == "both" || a.criterion == "step")
      report_one(rdp::Criterion::step, "step");
    if (a.criterion != "both" && a.criterion != "positional" &&
        a.criterion != "step")
      throw Error(ErrorCategory::usage,
                  "unknown criterion '" + a.criterion + "'");
    return 0;
  }
  if (a.epsilon < 0.0)
    throw Error(ErrorCategory::usage,
                "pass --epsilon to simplify or --select to pick one");
  if (a.out.empty())
    throw Error(ErrorCategory::usage, "--out is required with --epsilon");
  std::vector<io::SegmentedTrajectory> segs;
  segs.reserve(trajs.size());
  for (const Trajectory& t : trajs) {
    metrics::Mask mask = rdp::simplify(t, a.epsilon);
    std::vector<int> labels(mask.size());
    int run = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) ++run;
      labels[i] = run;
    }
    segs.push_back(io::SegmentedTrajectory{t, std::move(labels), mask});
  }
  io::save_segmentations(a.out, segs);
  std::cout << "simplified " << segs.size() << " trajectories at epsilon "
            << io::format_double(a.epsilon) << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string model;
  std::string segmentation;
  std::string out_dir;
  double threshold = 0.2;
  int rows = 10;
  int cols = 10;
  double width = 1920.0;
  double height = 1080.0;
  double bandwidth = 0.0;
  int cell_pixels = 32;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.model.empty() && a.segmentation.empty())
    throw Error(ErrorCategory::usage,
                "pass --model and/or --segmentation to analyze");
  fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCategory::io,
                "cannot create " + a.out_dir + ": " + ec.message());

  if (!a.model.empty()) {
    io::ModelDocument doc = io::load_model(a.model);
    if (!doc.hmm)
      throw Error(ErrorCategory::usage,
                  a.model + " has no transition component to analyze");
    analytics::NormalizedTransitions nt =
        analytics::normalize_transitions(doc.hmm->model.transition);
    {
      std::ofstream out = io::detail::open_output((dir / "transitions.csv").string());
      for (int i = 0; i < nt.matrix.rows(); ++i) {
        for (int k = 0; k < nt.matrix.cols(); ++k)
          out << (k ? "," : "") << io::format_double(nt.matrix(i, k));
        out << '\n';
      }
    }
    {
      std::ofstream out = io::detail::open_output((dir / "graph.csv").string());
      out << "from,to,weight\n";
      for (const analytics::Edge& e :
           analytics::transition_graph(nt.matrix, a.threshold))
        out << e.from << ',' << e.to << ',' << io::format_double(e.weight)
            << '\n';
    }
    std::cout << "wrote transitions.csv, graph.csv\n";
  }

  if (!a.segmentation.empty()) {
    std::vector<io::SegmentedTrajectory> segs =
        io::load_segmentations(a.segmentation);
    std::vector<Vec2> points;
    std::vector<int> labels;
    for (const io::SegmentedTrajectory& s : segs) {
      points.insert(points.end(), s.trajectory.points.begin(),
                    s.trajectory.points.end());
      labels.insert(labels.end(), s.labels.begin(), s.labels.end());
    }
    analytics::GridSpec spec;
    spec.rows = a.rows;
    spec.cols = a.cols;
    spec.width = a.width;
    spec.height = a.height;
    analytics::OccurrenceGrid occ =
        analytics::occurrence_map(points, labels, spec);
    {
      std::ofstream out = io::detail::open_output((dir / "occurrence.csv").string());
      for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c)
          out << (c ? "," : "") << occ.at(r, c);
        out << '\n';
      }
    }
    std::vector<double> occ_values(occ.counts.begin(), occ.counts.end());
    io::write_pgm((dir / "occurrence.pgm").string(), occ_values, spec.rows,
                  spec.cols, a.cell_pixels);
    analytics::DensityGrid den =
        analytics::density_map(points, spec, a.bandwidth);
    {
      std::ofstream out = io::detail::open_output((dir / "density.csv").string());
      for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c)
          out << (c ? "," : "") << io::format_double(den.at(r, c));
        out << '\n';
      }
    }
    io::write_ppm((dir / "density.ppm").string(), den.values, spec.rows,
                  spec.cols, a.cell_pixels);
    std::cout << "wrote occurrence.csv, occurrence.pgm, density.csv, "
                 "density.ppm\n";
  }
  return 0;
}

struct SynthArgs {
  std::string model;
  std::string out;
  std::string gt_out;
  std::string labels_out;
  int num = 100;
  int points = 30;
  std::uint64_t seed = 1;
  int agent = -1;
  bool reject = false;
  double k_sigma = 3.0;
  int max_attempts = 200;
  std::vector<int> switch_agents;
  std::vector<int> switch_at;
};

int cmd_synth(const SynthArgs& a) {
  io::ModelDocument doc = io::load_model(a.model);
  const std::vector<AgentModel>& agents = doc.mixture.agents;
  if (agents.empty())
    throw Error(ErrorCategory::format, a.model + " has no agents");
  if (a.num < 1)
    throw Error(ErrorCategory::usage, "--num must be at least 1");

  std::vector<Trajectory> trajs;
  std::vector<io::SegmentedTrajectory> segs;
  std::vector<metrics::Mask> gts;
  trajs.reserve(a.num);

  auto name = [](int i) { return "synth_" + std::to_string(i); };

  if (!a.switch_agents.empty()) {
    synth::SwitchingSpec spec;
    spec.agent_sequence = a.switch_agents;
    spec.switch_indices = a.switch_at;
    spec.num_points = a.points;
    for (int i = 0; i < a.num; ++i) {
      synth::SwitchingSample s =
          synth::sample_switching(agents, spec, substream_seed(a.seed, i));
      s.trajectory.id = name(i);
      gts.push_back(s.switch_mask);
      segs.push_back(io::SegmentedTrajectory{s.trajectory, s.labels,
                                             s.switch_mask});
      trajs.push_back(std::move(s.trajectory));
    }
  } else {
    if (!a.switch_at.empty())
      throw Error(ErrorCategory::usage,
                  "--switch-at needs --switch to name the agent sequence");
    synth::SampleOptions opt;
    opt.num_points = a.points;
    opt.reject_endpoints = a.reject;
    opt.k_sigma = a.k_sigma;
    opt.max_attempts = a.max_attempts;
    // Cycle through agents by mixture order unless one was pinned.
    for (int i = 0; i < a.num; ++i) {
      int z = a.agent >= 0 ? a.agent : i % static_cast<int>(agents.size());
      if (z >= static_cast<int>(agents.size()))
        throw Error(ErrorCategory::usage, "--agent index out of range");
      synth::TrajectorySample s = synth::sample_trajectory(
          agents[z], opt, substream_seed(a.seed, i));
      s.trajectory.id = name(i);
      gts.push_back(metrics::Mask(s.trajectory.points.size(), 0));
      segs.push_back(io::SegmentedTrajectory{
          s.trajectory, std::vector<int>(s.trajectory.points.size(), z),
          metrics::Mask(s.trajectory.points.size(), 0)});
      trajs.push_back(std::move(s.trajectory));
    }
  }

  io::save_trajectories(a.out, trajs);
  std::cout << "sampled " << trajs.size() << " trajectories\n";
  if (!a.gt_out.empty()) {
    io::save_ground_truth(a.gt_out, trajs, gts);
    std::cout << "wrote " << a.gt_out << '\n';
  }
  if (!a.labels_out.empty()) {
    io::save_segmentations(a.labels_out, segs);
    std::cout << "wrote " << a.labels_out << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "trajseg: learn agent behavior models from 2D trajectories, "
      "segment them, and analyze the result"};
  app.require_subcommand(1);

  FitArgs fit;
  CLI::App* cfit = app.add_subcommand(
      "fit", "Fit a mixture of agent models and a transition model");
  cfit->add_option("--trajectories", fit.trajectories, "input trajectory CSV")
      ->required();
  cfit->add_option("--out", fit.out, "output model JSON")->required();
  cfit->add_option("--trace", fit.trace, "write log-likelihood trace CSV");
  cfit->add_option("--agents", fit.agents, "number of agents");
  cfit->add_option("--variant", fit.variant,
                   "imda | imda_no_poisson | imda_no_gauss | original_mda");
  cfit->add_option("--t-cap", fit.t_cap, "max padding steps per side");
  cfit->add_option("--max-iters", fit.max_iters, "max EM iterations");
  cfit->add_option("--tol", fit.tol, "EM log-likelihood tolerance");
  cfit->add_option("--seed", fit.seed, "RNG seed");
  cfit->add_option("--window", fit.window, "transition window size");
  cfit->add_flag("--overlap", fit.overlap, "overlapping windows (stride 1)");
  cfit->add_flag("--belief-free-endpoints", fit.belief_free,
                 "weigh endpoints with belief-free state estimates");
  cfit->add_flag("--skip-hmm", fit.skip_hmm,
                 "store the mixture only, no transition model");
  cfit->add_option("--hmm-max-iters", fit.hmm_max_iters,
                   "max transition estimation iterations");
  cfit->add_option("--hmm-tol", fit.hmm_tol,
                   "transition estimation tolerance");

  SegmentArgs seg;
  CLI::App* cseg = app.add_subcommand(
      "segment", "Segment trajectories with a fitted model");
  cseg->add_option("--model", seg.model, "model JSON from fit")->required();
  cseg->add_option("--trajectories", seg.trajectories,
                   "input trajectory CSV")
      ->required();
  cseg->add_option("--out", seg.out, "output segmentation CSV")->required();

  EvaluateArgs ev;
  CLI::App* cev = app.add_subcommand(
      "evaluate", "Score a segmentation against ground-truth split points");
  cev->add_option("--segmentation", ev.segmentation, "segmentation CSV")
      ->required();
  cev->add_option("--ground-truth", ev.ground_truth, "ground-truth CSV")
      ->required();
  cev->add_option("--label", ev.label, "method label for the report");
  cev->add_option("--out", ev.out, "write report CSV here (default stdout)");

  CvArgs cv;
  CLI::App* ccv = app.add_subcommand(
      "cv", "Cross-validate a segmentation method with retraining per fold");
  ccv->add_option("--trajectories", cv.trajectories, "input trajectory CSV")
      ->required();
  ccv->add_option("--ground-truth", cv.ground_truth, "ground-truth CSV")
      ->required();
  ccv->add_option("--method", cv.method,
                  "<variant>+hmm (e.g. imda+hmm, original_mda+hmm) or rdp");
  ccv->add_option("--folds", cv.folds, "number of folds");
  ccv->add_option("--seed", cv.seed, "RNG seed (shuffle and training)");
  ccv->add_option("--out", cv.out, "write per-fold CSV here");
  ccv->add_option("--agents", cv.agents, "number of agents (em methods)");
  ccv->add_option("--t-cap", cv.t_cap, "max padding steps (em methods)");
  ccv->add_option("--max-iters", cv.max_iters, "max EM iterations");
  ccv->add_option("--tol", cv.tol, "EM tolerance");
  ccv->add_option("--window", cv.window, "transition window size");
  ccv->add_flag("--overlap", cv.overlap, "overlapping windows");
  ccv->add_flag("--belief-free-endpoints", cv.belief_free,
                "weigh endpoints with belief-free state estimates");
  ccv->add_option("--criterion", cv.criterion,
                  "positional | step (rdp method)");
  ccv->add_option("--eps-lo", cv.eps_lo, "epsilon grid low end (rdp)");
  ccv->add_option("--eps-hi", cv.eps_hi, "epsilon grid high end (rdp)");
  ccv->add_option("--eps-count", cv.eps_count, "epsilon grid size (rdp)");

  RdpArgs rd;
  CLI::App* crd = app.add_subcommand(
      "rdp", "Simplify trajectories or select a simplification tolerance");
  crd->add_option("--trajectories", rd.trajectories, "input trajectory CSV")
      ->required();
  crd->add_option("--epsilon", rd.epsilon, "simplify at this tolerance");
  crd->add_option("--out", rd.out, "output segmentation CSV");
  crd->add_flag("--select", rd.select,
                "pick the best tolerance against ground truth");
  crd->add_option("--ground-truth", rd.ground_truth,
                  "ground-truth CSV (for --select)");
  crd->add_option("--criterion", rd.criterion,
                  "positional | step | both (for --select)");
  crd->add_option("--eps-lo", rd.eps_lo, "epsilon grid low end");
  crd->add_option("--eps-hi", rd.eps_hi, "epsilon grid high end");
  crd->add_option("--eps-count", rd.eps_count, "epsilon grid size");

  AnalyzeArgs an;
  CLI::App* can = app.add_subcommand(
      "analyze",
      "Derive transition tables, graphs, occurrence and density maps");
  can->add_option("--model", an.model, "model JSON (transition outputs)");
  can->add_option("--segmentation", an.segmentation,
                  "segmentation CSV (map outputs)");
  can->add_option("--out-dir", an.out_dir, "output directory")->required();
  can->add_option("--threshold", an.threshold, "graph edge threshold");
  can->add_option("--rows", an.rows, "grid rows");
  can->add_option("--cols", an.cols, "grid columns");
  can->add_option("--width", an.width, "scene width");
  can->add_option("--height", an.height, "scene height");
  can->add_option("--bandwidth", an.bandwidth,
                  "density bandwidth (0 = automatic)");
  can->add_option("--cell-pixels", an.cell_pixels, "image pixels per cell");

  SynthArgs sy;
  CLI::App* csy = app.add_subcommand(
      "synth", "Sample synthetic trajectories from a fitted model");
  csy->add_option("--model", sy.model, "model JSON")->required();
  csy->add_option("--out", sy.out, "output trajectory CSV")->required();
  csy->add_option("--gt-out", sy.gt_out,
                  "write switch points as ground-truth CSV");
  csy->add_option("--labels-out", sy.labels_out,
                  "write generating labels as segmentation CSV");
  csy->add_option("--num", sy.num, "number of trajectories");
  csy->add_option("--points", sy.points, "observed points per trajectory");
  csy->add_option("--seed", sy.seed, "RNG seed");
  csy->add_option("--agent", sy.agent,
                  "sample only this agent (default: cycle)");
  csy->add_flag("--reject", sy.reject,
                "resample trajectories with unlikely endpoints");
  csy->add_option("--k-sigma", sy.k_sigma, "endpoint deviation bound");
  csy->add_option("--max-attempts", sy.max_attempts,
                  "resampling attempt cap");
  csy->add_option("--switch", sy.switch_agents,
                  "agent sequence for regime-switching samples")
      ->delimiter(',');
  csy->add_option("--switch-at", sy.switch_at,
                  "point indices where the agent switches")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << '\n';
    return Error(ErrorCategory::usage, "").exit_code();
  }

  try {
    if (cfit->parsed()) return cmd_fit(fit);
    if (cseg->parsed()) return cmd_segment(seg);
    if (cev->parsed()) return cmd_evaluate(ev);
    if (ccv->parsed()) return cmd_cv(cv);
    if (crd->parsed()) return cmd_rdp(rd);
    if (can->parsed()) return cmd_analyze(an);
    if (csy->parsed()) return cmd_synth(sy);
    std::cerr << "error[usage]: no subcommand\n";
    return Error(ErrorCategory::usage, "").exit_code();
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what()
              << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return Error(ErrorCategory::internal, "").exit_code();
  }
}

}  // namespace trajseg::cli
