#include <trajseg/io.hpp>
#include <trajseg/synth.hpp>

#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef TRAJSEG_CLI
#define TRAJSEG_CLI "trajseg"
#endif

using namespace trajseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("trajseg_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  std::string cmd = std::string(TRAJSEG_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<Trajectory> tiny_corpus() {
  std::vector<Trajectory> out;
  out.push_back(Trajectory{
      "walk", {Vec2(0.1, 0.2), Vec2(1.5, 2.25), Vec2(3.0, 4.125)}});
  out.push_back(Trajectory{
      "run", {Vec2(-1.0, 1e-17), Vec2(1e17, -0.333333333333333314829616256247),
              Vec2(5.0, 6.0), Vec2(7.0, 8.0)}});
  return out;
}

MixtureModel demo_mixture() {
  MixtureModel m;
  m.agents.push_back(
      helpers::corridor_agent(Vec2(100, 500), Vec2(1700, 500), 20, 4.0, 200.0));
  m.agents.push_back(
      helpers::corridor_agent(Vec2(900, 1000), Vec2(900, 100), 20, 4.0, 200.0));
  m.agents[0].pi = 0.625;
  m.agents[1].pi = 0.375;
  m.agents[0].lambda_s = 1.25;
  m.agents[1].lambda_e = 0.75;
  return m;
}

}  // namespace

TEST_CASE("number formatting round-trips exactly and stays short") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(-2.5) == "-2.5");
  CHECK(io::format_double(1e17) == "1e+17");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -1.2345678901234567e8,
                   6.02214076e23}) {
    std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("trajectory files round-trip bit-exactly") {
  TempDir dir;
  std::vector<Trajectory> orig = tiny_corpus();
  io::save_trajectories(dir.file("t.csv"), orig);
  std::vector<Trajectory> back = io::load_trajectories(dir.file("t.csv"));
  REQUIRE(back.size() == orig.size());
  for (std::size_t k = 0; k < orig.size(); ++k) {
    CHECK(back[k].id == orig[k].id);
    REQUIRE(back[k].points.size() == orig[k].points.size());
    for (std::size_t i = 0; i < orig[k].points.size(); ++i)
      CHECK(back[k].points[i] == orig[k].points[i]);  // exact doubles
  }
  // Saving again produces identical bytes.
  io::save_trajectories(dir.file("t2.csv"), back);
  CHECK(slurp(dir.file("t.csv")) == slurp(dir.file("t2.csv")));
}

TEST_CASE("trajectory loader rejects malformed input") {
  TempDir dir;
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir.file(name), std::ios::binary) << content;
    return dir.file(name);
  };
  CHECK_THROWS_MATCHES(
      io::load_trajectories(dir.file("missing.csv")), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.category() == ErrorCategory::io; }));
  CHECK_THROWS_MATCHES(
      io::load_trajectories(write("h.csv", "id,frame,x,y\n")), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.category() == ErrorCategory::format;
      }));
  CHECK_THROWS_AS(io::load_trajectories(
                      write("n.csv", "trajectory_id,frame_index,x,y\n"
                                     "a,0,1.0,nope\n")),
                  Error);
  CHECK_THROWS_AS(io::load_trajectories(
                      write("f.csv", "trajectory_id,frame_index,x,y\n"
                                     "a,5,1.0,1.0\n"
                                     "a,5,2.0,2.0\n")),
                  Error);  // frame must increase
  CHECK_THROWS_AS(io::load_trajectories(
                      write("s.csv", "trajectory_id,frame_index,x,y\n"
                                     "a,0,1.0,1.0\n")),
                  Error);  // single-point trajectory
  CHECK_THROWS_AS(
      io::load_trajectories(write("e.csv",
                                  "trajectory_id,frame_index,x,y\n")),
      Error);  // headers only
}

TEST_CASE("interleaved trajectory rows group by id") {
  TempDir dir;
  std::ofstream(dir.file("i.csv"), std::ios::binary)
      << "trajectory_id,frame_index,x,y\n"
         "a,0,0,0\n"
         "b,0,9,9\n"
         "a,1,1,1\n"
         "b,2,10,10\n";
  auto trajs = io::load_trajectories(dir.file("i.csv"));
  REQUIRE(trajs.size() == 2);
  CHECK(trajs[0].id == "a");  // first-appearance order
  CHECK(trajs[0].points.size() == 2);
  CHECK(trajs[1].points[1] == Vec2(10, 10));
}

TEST_CASE("ground truth files round-trip and validate indices") {
  TempDir dir;
  std::vector<Trajectory> trajs = tiny_corpus();
  std::vector<metrics::Mask> masks = {{0, 1, 0}, {0, 1, 1, 0}};
  io::save_ground_truth(dir.file("gt.csv"), trajs, masks);
  auto back = io::load_ground_truth(dir.file("gt.csv"), trajs);
  CHECK(back == masks);

  std::ofstream(dir.file("bad_id.csv"), std::ios::binary)
      << "trajectory_id,point_index\nghost,1\n";
  CHECK_THROWS_AS(io::load_ground_truth(dir.file("bad_id.csv"), trajs),
                  Error);
  std::ofstream(dir.file("edge.csv"), std::ios::binary)
      << "trajectory_id,point_index\nwalk,0\n";
  CHECK_THROWS_AS(io::load_ground_truth(dir.file("edge.csv"), trajs), Error);
  std::ofstream(dir.file("last.csv"), std::ios::binary)
      << "trajectory_id,point_index\nwalk,2\n";
  CHECK_THROWS_AS(io::load_ground_truth(dir.file("last.csv"), trajs), Error);
}

TEST_CASE("segmentation files round-trip") {
  TempDir dir;
  std::vector<io::SegmentedTrajectory> segs;
  std::vector<Trajectory> trajs = tiny_corpus();
  segs.push_back(io::SegmentedTrajectory{trajs[0], {0, 0, 1}, {0, 0, 1}});
  segs.push_back(
      io::SegmentedTrajectory{trajs[1], {1, 1, 0, 0}, {0, 0, 1, 0}});
  io::save_segmentations(dir.file("s.csv"), segs);
  auto back = io::load_segmentations(dir.file("s.csv"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].labels == segs[0].labels);
  CHECK(back[1].split_mask == segs[1].split_mask);
  CHECK(back[1].trajectory.points[1] == trajs[1].points[1]);
}

TEST_CASE("model documents round-trip every parameter exactly") {
  TempDir dir;
  io::ModelDocument doc;
  doc.config.num_agents = 2;
  doc.config.t_cap = 7;
  doc.config.max_iters = 13;
  doc.config.loglik_tol = 2.5e-7;
  doc.config.variant = em::EstepVariant::imda_no_gauss;
  doc.config.rng_seed = 987654321;
  doc.config.belief_free_endpoints = true;
  doc.mixture = demo_mixture();
  doc.mixture.agents[0].dynamics.A << 1.0000001, -0.25, 1.0 / 3.0, 0.999;
  io::HmmPart hp;
  hp.model.transition.resize(2, 2);
  hp.model.transition << 0.875, 0.125, 1.0 / 3.0, 2.0 / 3.0;
  hp.window_size = 4;
  hp.overlap = true;
  doc.hmm = hp;

  io::save_model(dir.file("m.json"), doc);
  io::ModelDocument back = io::load_model(dir.file("m.json"));

  CHECK(back.config.num_agents == 2);
  CHECK(back.config.t_cap == 7);
  CHECK(back.config.max_iters == 13);
  CHECK(back.config.loglik_tol == 2.5e-7);
  CHECK(back.config.variant == em::EstepVariant::imda_no_gauss);
  CHECK(back.config.rng_seed == 987654321);
  CHECK(back.config.belief_free_endpoints == true);
  REQUIRE(back.mixture.num_agents() == 2);
  for (int m = 0; m < 2; ++m) {
    const AgentModel& a = back.mixture.agents[m];
    const AgentModel& e = doc.mixture.agents[m];
    CHECK(a.dynamics.A == e.dynamics.A);
    CHECK(a.dynamics.b == e.dynamics.b);
    CHECK(a.dynamics.Q == e.dynamics.Q);
    CHECK(a.dynamics.R == e.dynamics.R);
    CHECK(a.belief.mu_s == e.belief.mu_s);
    CHECK(a.belief.phi_s == e.belief.phi_s);
    CHECK(a.belief.mu_e == e.belief.mu_e);
    CHECK(a.belief.phi_e == e.belief.phi_e);
    CHECK(a.pi == e.pi);
    CHECK(a.lambda_s == e.lambda_s);
    CHECK(a.lambda_e == e.lambda_e);
  }
  REQUIRE(back.hmm.has_value());
  CHECK(back.hmm->model.transition == hp.model.transition);
  CHECK(back.hmm->window_size == 4);
  CHECK(back.hmm->overlap == true);

  // Without the transition part.
  doc.hmm.reset();
  io::save_model(dir.file("m2.json"), doc);
  CHECK_FALSE(io::load_model(dir.file("m2.json")).hmm.has_value());
}

TEST_CASE("model loader flags broken documents") {
  TempDir dir;
  std::ofstream(dir.file("bad.json"), std::ios::binary) << "{not json";
  CHECK_THROWS_AS(io::load_model(dir.file("bad.json")), Error);
  std::ofstream(dir.file("ver.json"), std::ios::binary)
      << "{\"format_version\": 99}";
  CHECK_THROWS_AS(io::load_model(dir.file("ver.json")), Error);
  std::ofstream(dir.file("empty.json"), std::ios::binary) << "{}";
  CHECK_THROWS_AS(io::load_model(dir.file("empty.json")), Error);
}

TEST_CASE("trace files carry the variant and the curve") {
  TempDir dir;
  io::save_trace(dir.file("trace.csv"), "imda", {-100.5, -90.25, -90.0});
  CHECK(slurp(dir.file("trace.csv")) ==
        "# variant=imda\n"
        "iteration,log_likelihood\n"
        "0,-100.5\n"
        "1,-90.25\n"
        "2,-90\n");
}

TEST_CASE("image writers produce well-formed binary maps") {
  TempDir dir;
  std::vector<double> v = {0.0, 1.0, 2.0, 4.0};
  io::write_pgm(dir.file("g.pgm"), v, 2, 2, 2);
  std::string pgm = slurp(dir.file("g.pgm"));
  CHECK(pgm.substr(0, 11) == "P5\n4 4\n255\n");
  REQUIRE(pgm.size() == 11 + 16);
  // Max cell is full white, zero cell black, quarter cell in between.
  CHECK(static_cast<unsigned char>(pgm[11]) == 0);
  CHECK(static_cast<unsigned char>(pgm[12]) == 0);
  CHECK(static_cast<unsigned char>(pgm[13]) == 64);
  CHECK(static_cast<unsigned char>(pgm[19]) == 128);
  CHECK(static_cast<unsigned char>(pgm.back()) == 255);

  io::write_ppm(dir.file("h.ppm"), v, 2, 2, 1);
  std::string ppm = slurp(dir.file("h.ppm"));
  CHECK(ppm.substr(0, 11) == "P6\n2 2\n255\n");
  CHECK(ppm.size() == 11 + 12);
}

// ---------------------------------------------------------------- CLI

TEST_CASE("cli spans the whole workflow") {
  TempDir dir;
  // A hand-built model to sample from.
  io::ModelDocument seed_doc;
  seed_doc.config.num_agents = 2;
  seed_doc.config.t_cap = 1;
  seed_doc.mixture = demo_mixture();
  io::HmmPart hp;
  hp.model.transition.resize(2, 2);
  hp.model.transition << 0.9, 0.1, 0.1, 0.9;
  seed_doc.hmm = hp;
  io::save_model(dir.file("seed.json"), seed_doc);

  // Sample a corpus: 16 single-agent plus 8 switching trajectories.
  REQUIRE(run_cli("synth --model " + dir.file("seed.json") + " --out " +
                  dir.file("plain.csv") + " --num 16 --points 15 --seed 3") ==
          0);
  REQUIRE(run_cli("synth --model " + dir.file("seed.json") + " --out " +
                  dir.file("mixed.csv") +
                  " --num 8 --points 15 --seed 4 --switch 0,1 --switch-at 7"
                  " --gt-out " +
                  dir.file("mixed_gt.csv") + " --labels-out " +
                  dir.file("mixed_labels.csv")) == 0);
  auto plain = io::load_trajectories(dir.file("plain.csv"));
  auto mixed = io::load_trajectories(dir.file("mixed.csv"));
  CHECK(plain.size() == 16);
  CHECK(mixed.size() == 8);
  auto mixed_gt = io::load_ground_truth(dir.file("mixed_gt.csv"), mixed);
  for (const auto& m : mixed_gt)
    CHECK(std::count(m.begin(), m.end(), 1) == 1);

  // Merge into one training file.
  std::vector<Trajectory> all = plain;
  for (auto& t : mixed) {
    t.id = "m_" + t.id;
    all.push_back(t);
  }
  io::save_trajectories(dir.file("train.csv"), all);

  // Fit.
  REQUIRE(run_cli("fit --trajectories " + dir.file("train.csv") + " --out " +
                  dir.file("model.json") +
                  " --agents 2 --t-cap 1 --max-iters 4 --seed 5 --trace " +
                  dir.file("trace.csv")) == 0);
  io::ModelDocument fitted = io::load_model(dir.file("model.json"));
  CHECK(fitted.mixture.num_agents() == 2);
  REQUIRE(fitted.hmm.has_value());
  CHECK(slurp(dir.file("trace.csv")).substr(0, 15) == "# variant=imda\n");

  // Segment the mixed trajectories and evaluate against the switch truth.
  REQUIRE(run_cli("segment --model " + dir.file("model.json") +
                  " --trajectories " + dir.file("mixed.csv") + " --out " +
                  dir.file("seg.csv")) == 0);
  auto segs = io::load_segmentations(dir.file("seg.csv"));
  CHECK(segs.size() == 8);
  REQUIRE(run_cli("evaluate --segmentation " + dir.file("seg.csv") +
                  " --ground-truth " + dir.file("mixed_gt.csv") + " --out " +
                  dir.file("report.csv")) == 0);
  std::string report = slurp(dir.file("report.csv"));
  CHECK(report.find("method,evaluated,skipped") == 0);

  // Analytics from the fitted model plus the segmentation.
  REQUIRE(run_cli("analyze --model " + dir.file("model.json") +
                  " --segmentation " + dir.file("seg.csv") + " --out-dir " +
                  dir.file("maps")) == 0);
  CHECK(fs::exists(dir.path / "maps" / "transitions.csv"));
  CHECK(fs::exists(dir.path / "maps" / "graph.csv"));
  CHECK(fs::exists(dir.path / "maps" / "occurrence.csv"));
  CHECK(fs::exists(dir.path / "maps" / "occurrence.pgm"));
  CHECK(fs::exists(dir.path / "maps" / "density.csv"));
  CHECK(fs::exists(dir.path / "maps" / "density.ppm"));

  // Baseline simplification plus tolerance selection.
  REQUIRE(run_cli("rdp --trajectories " + dir.file("mixed.csv") +
                  " --epsilon 25 --out " + dir.file("rdp_seg.csv")) == 0);
  CHECK(io::load_segmentations(dir.file("rdp_seg.csv")).size() == 8);
  REQUIRE(run_cli("rdp --trajectories " + dir.file("mixed.csv") +
                  " --select --ground-truth " + dir.file("mixed_gt.csv") +
                  " --eps-lo 5 --eps-hi 100 --eps-count 8") == 0);

  // Cross-validation of the baseline on the mixed set.
  REQUIRE(run_cli("cv --trajectories " + dir.file("mixed.csv") +
                  " --ground-truth " + dir.file("mixed_gt.csv") +
                  " --method rdp --folds 2 --eps-lo 5 --eps-hi 100"
                  " --eps-count 6 --out " +
                  dir.file("cv.csv")) == 0);
  CHECK(slurp(dir.file("cv.csv"))
            .find("method,fold,evaluated,failed") == 0);
}

TEST_CASE("cli reports categorized errors with matching exit codes") {
  TempDir dir;
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("fit --out x.json") == 2);  // missing required option
  CHECK(run_cli("fit --trajectories " + dir.file("nope.csv") + " --out " +
                dir.file("m.json")) == 3);
  std::ofstream(dir.file("garbled.csv"), std::ios::binary)
      << "trajectory_id,frame_index,x,y\nbroken\n";
  CHECK(run_cli("fit --trajectories " + dir.file("garbled.csv") + " --out " +
                dir.file("m.json")) == 4);
  std::ofstream(dir.file("tiny.csv"), std::ios::binary)
      << "trajectory_id,frame_index,x,y\na,0,0,0\na,1,1,0\n";
  // One trajectory cannot seat two agents: usage error.
  CHECK(run_cli("fit --trajectories " + dir.file("tiny.csv") + " --out " +
                dir.file("m.json") + " --agents 2") == 2);
  // Unknown variant.
  CHECK(run_cli("fit --trajectories " + dir.file("tiny.csv") + " --out " +
                dir.file("m.json") + " --agents 1 --variant quantum") == 2);
}

TEST_CASE("cli output is byte-identical across runs and thread counts") {
  TempDir dir;
  io::ModelDocument seed_doc;
  seed_doc.config.num_agents = 2;
  seed_doc.mixture = demo_mixture();
  io::save_model(dir.file("seed.json"), seed_doc);
  REQUIRE(run_cli("synth --model " + dir.file("seed.json") + " --out " +
                  dir.file("c.csv") + " --num 12 --points 12 --seed 8") == 0);

  auto fit_with = [&](const std::string& env, const std::string& out) {
    std::string cmd = env + " " + std::string(TRAJSEG_CLI) +
                      " fit --trajectories " + dir.file("c.csv") +
                      " --agents 2 --t-cap 1 --max-iters 3 --seed 6 --out " +
                      dir.file(out) + " >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  };
  fit_with("TRAJSEG_THREADS=1", "m1.json");
  fit_with("TRAJSEG_THREADS=1", "m1b.json");
  fit_with("TRAJSEG_THREADS=4", "m4.json");
  fit_with("TRAJSEG_THREADS=13", "m13.json");
  std::string base = slurp(dir.file("m1.json"));
  CHECK(base == slurp(dir.file("m1b.json")));
  CHECK(base == slurp(dir.file("m4.json")));
  CHECK(base == slurp(dir.file("m13.json")));
}
