#pragma once

// File formats. All text outputs are written in binary mode with '\n'
// newlines and shortest round-trip number formatting, so identical inputs
// produce byte-identical files.
//
//   trajectories  CSV  header trajectory_id,frame_index,x,y
//   ground truth  CSV  header trajectory_id,point_index (interior indices)
//   segmentation  CSV  header trajectory_id,point_index,x,y,label,split
//   model         JSON document with estimation config, agents, transitions
//   trace         CSV  header iteration,log_likelihood (variant comment line)
//   images        binary PGM (grayscale) / PPM (heatmap)

#include "trajseg/analytics.hpp"
#include "trajseg/core.hpp"
#include "trajseg/em.hpp"
#include "trajseg/hmm.hpp"
#include "trajseg/metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace trajseg::io {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() ||
      !std::isfinite(v))
    throw Error(ErrorCategory::format,
                context + ": expected a finite number, got '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const std::string& context) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCategory::format,
                context + ": expected an integer, got '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCategory::io, "cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCategory::io, "cannot open " + path + " for writing");
  return out;
}

inline void expect_header(const std::string& got, const std::string& want,
                          const std::string& path) {
  std::string g = got;
  if (!g.empty() && g.back() == '\r') g.pop_back();
  if (g != want)
    throw Error(ErrorCategory::format,
                path + ": expected header '" + want + "', got '" + g + "'");
}

}  // namespace detail

// ---------------------------------------------------------------- trajectories

inline std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::format, path + ": empty file");
  detail::expect_header(line, "trajectory_id,frame_index,x,y", path);
  std::vector<Trajectory> trajs;
  std::map<std::string, std::size_t> index_of;
  std::map<std::string, long> last_frame;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 4)
      throw Error(ErrorCategory::format, ctx + ": expected 4 fields");
    long frame = detail::parse_long(f[1], ctx);
    double x = detail::parse_double(f[2], ctx);
    double y = detail::parse_double(f[3], ctx);
    auto it = index_of.find(f[0]);
    if (it == index_of.end()) {
      index_of.emplace(f[0], trajs.size());
      last_frame[f[0]] = frame;
      trajs.push_back(Trajectory{f[0], {Vec2(x, y)}});
    } else {
      if (frame <= last_frame[f[0]])
        throw Error(ErrorCategory::format,
                    ctx + ": frame_index must increase within trajectory " +
                        f[0]);
      last_frame[f[0]] = frame;
      trajs[it->second].points.push_back(Vec2(x, y));
    }
  }
  for (const Trajectory& t : trajs) {
    auto v = validate_trajectory(t);
    if (!v.empty()) throw Error(ErrorCategory::format, path + ": " + v.front());
  }
  if (trajs.empty())
    throw Error(ErrorCategory::format, path + ": no trajectories");
  return trajs;
}

inline void save_trajectories(const std::string& path,
                              const std::vector<Trajectory>& trajs) {
  std::ofstream out = detail::open_output(path);
  out << "trajectory_id,frame_index,x,y\n";
  for (const Trajectory& t : trajs)
    for (std::size_t i = 0; i < t.points.size(); ++i)
      out << t.id << ',' << i << ',' << format_double(t.points[i](0)) << ','
          << format_double(t.points[i](1)) << '\n';
}

// ---------------------------------------------------------------- ground truth

// Masks aligned with trajs. Indices must be strictly interior.
inline std::vector<metrics::Mask> load_ground_truth(
    const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::format, path + ": empty file");
  detail::expect_header(line, "trajectory_id,point_index", path);
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < trajs.size(); ++i) index_of[trajs[i].id] = i;
  std::vector<metrics::Mask> masks(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i)
    masks[i].assign(trajs[i].points.size(), 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 2)
      throw Error(ErrorCategory::format, ctx + ": expected 2 fields");
    auto it = index_of.find(f[0]);
    if (it == index_of.end())
      throw Error(ErrorCategory::format,
                  ctx + ": unknown trajectory '" + f[0] + "'");
    long idx = detail::parse_long(f[1], ctx);
    long len = static_cast<long>(trajs[it->second].points.size());
    if (idx <= 0 || idx >= len - 1)
      throw Error(ErrorCategory::format,
                  ctx + ": point_index " + std::to_string(idx) +
                      " is not interior to trajectory '" + f[0] + "' (length " +
                      std::to_string(len) + ")");
    masks[it->second][idx] = 1;
  }
  return masks;
}

inline void save_ground_truth(const std::string& path,
                              const std::vector<Trajectory>& trajs,
                              const std::vector<metrics::Mask>& masks) {
  if (masks.size() != trajs.size())
    throw Error(ErrorCategory::usage, "mask count does not match corpus");
  std::ofstream out = detail::open_output(path);
  out << "trajectory_id,point_index\n";
  for (std::size_t k = 0; k < trajs.size(); ++k)
    for (std::size_t i = 0; i < masks[k].size(); ++i)
      if (masks[k][i]) out << trajs[k].id << ',' << i << '\n';
}

// --------------------------------------------------------------- segmentations

struct SegmentedTrajectory {
  Trajectory trajectory;
  std::vector<int> labels;
  metrics::Mask split_mask;
};

inline void save_segmentations(const std::string& path,
                               const std::vector<SegmentedTrajectory>& segs) {
  std::ofstream out = detail::open_output(path);
  out << "trajectory_id,point_index,x,y,label,split\n";
  for (const SegmentedTrajectory& s : segs) {
    for (std::size_t i = 0; i < s.trajectory.points.size(); ++i) {
      out << s.trajectory.id << ',' << i << ','
          << format_double(s.trajectory.points[i](0)) << ','
          << format_double(s.trajectory.points[i](1)) << ',' << s.labels[i]
          << ',' << int(s.split_mask[i] != 0) << '\n';
    }
  }
}

inline std::vector<SegmentedTrajectory> load_segmentations(
    const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::format, path + ": empty file");
  detail::expect_header(line, "trajectory_id,point_index,x,y,label,split",
                        path);
  std::vector<SegmentedTrajectory> segs;
  std::map<std::string, std::size_t> index_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 6)
      throw Error(ErrorCategory::format, ctx + ": expected 6 fields");
    long idx = detail::parse_long(f[1], ctx);
    double x = detail::parse_double(f[2], ctx);
    double y = detail::parse_double(f[3], ctx);
    long label = detail::parse_long(f[4], ctx);
    long split = detail::parse_long(f[5], ctx);
    auto it = index_of.find(f[0]);
    if (it == index_of.end()) {
      index_of.emplace(f[0], segs.size());
      segs.push_back(SegmentedTrajectory{Trajectory{f[0], {}}, {}, {}});
      it = index_of.find(f[0]);
    }
    SegmentedTrajectory& s = segs[it->second];
    if (idx != static_cast<long>(s.trajectory.points.size()))
      throw Error(ErrorCategory::format,
                  ctx + ": point_index out of order for '" + f[0] + "'");
    s.trajectory.points.push_back(Vec2(x, y));
    s.labels.push_back(static_cast<int>(label));
    s.split_mask.push_back(split != 0);
  }
  if (segs.empty())
    throw Error(ErrorCategory::format, path + ": no segmentations");
  return segs;
}

// ----------------------------------------------------------------------- model

inline constexpr int kModelFormatVersion = 1;

// Transition model plus the windowing it was trained with.
struct HmmPart {
  hmm::HmmModel model;
  int window_size = 3;
  bool overlap = false;
};

struct ModelDocument {
  em::EmConfig config;
  MixtureModel mixture;
  std::optional<HmmPart> hmm;

  hmm::SegmentOptions segment_options() const {
    hmm::SegmentOptions opts = hmm::SegmentOptions::from_config(
        config, hmm ? hmm->window_size : 3, hmm ? hmm->overlap : false);
    return opts;
  }
};

namespace detail {

using nlohmann::json;

inline json to_json(const Mat2& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}),
                      json::array({m(1, 0), m(1, 1)})});
}

inline json to_json(const Vec2& v) { return json::array({v(0), v(1)}); }

inline Mat2 mat2_from(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
      !j[1].is_array() || j[1].size() != 2)
    throw Error(ErrorCategory::format, name + " must be a 2x2 array");
  Mat2 m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
      j[1][1].get<double>();
  return m;
}

inline Vec2 vec2_from(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2)
    throw Error(ErrorCategory::format, name + " must be a 2-vector");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail

inline void save_model(const std::string& path, const ModelDocument& doc) {
  using nlohmann::json;
  json j;
  j["format_version"] = kModelFormatVersion;
  j["em_config"] = {
      {"num_agents", doc.config.num_agents},
      {"t_cap", doc.config.t_cap},
      {"max_iters", doc.config.max_iters},
      {"loglik_tol", doc.config.loglik_tol},
      {"variant", em::to_string(doc.config.variant)},
      {"rng_seed", doc.config.rng_seed},
      {"belief_free_endpoints", doc.config.belief_free_endpoints},
  };
  json agents = json::array();
  for (const AgentModel& a : doc.mixture.agents) {
    agents.push_back({
        {"A", detail::to_json(a.dynamics.A)},
        {"b", detail::to_json(a.dynamics.b)},
        {"Q", detail::to_json(a.dynamics.Q)},
        {"R", detail::to_json(a.dynamics.R)},
        {"mu_s", detail::to_json(a.belief.mu_s)},
        {"phi_s", detail::to_json(a.belief.phi_s)},
        {"mu_e", detail::to_json(a.belief.mu_e)},
        {"phi_e", detail::to_json(a.belief.phi_e)},
        {"pi", a.pi},
        {"lambda_s", a.lambda_s},
        {"lambda_e", a.lambda_e},
    });
  }
  j["mixture"] = {{"agents", agents}};
  if (doc.hmm) {
    const Eigen::MatrixXd& tr = doc.hmm->model.transition;
    json rows = json::array();
    for (int i = 0; i < tr.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < tr.cols(); ++k) row.push_back(tr(i, k));
      rows.push_back(row);
    }
    j["hmm"] = {{"transition", rows},
                {"window_size", doc.hmm->window_size},
                {"overlap", doc.hmm->overlap}};
  }
  std::ofstream out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

inline ModelDocument load_model(const std::string& path) {
  using nlohmann::json;
  std::ifstream in = detail::open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::format, path + ": invalid JSON: " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw Error(ErrorCategory::format,
                  path + ": unsupported format_version");
    ModelDocument doc;
    const json& c = j.at("em_config");
    doc.config.num_agents = c.at("num_agents").get<int>();
    doc.config.t_cap = c.at("t_cap").get<int>();
    doc.config.max_iters = c.at("max_iters").get<int>();
    doc.config.loglik_tol = c.at("loglik_tol").get<double>();
    doc.config.variant = em::parse_variant(c.at("variant").get<std::string>());
    doc.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    doc.config.belief_free_endpoints =
        c.at("belief_free_endpoints").get<bool>();
    for (const json& a : j.at("mixture").at("agents")) {
      AgentModel agent;
      agent.dynamics.A = detail::mat2_from(a.at("A"), "A");
      agent.dynamics.b = detail::vec2_from(a.at("b"), "b");
      agent.dynamics.Q = detail::mat2_from(a.at("Q"), "Q");
      agent.dynamics.R = detail::mat2_from(a.at("R"), "R");
      agent.belief.mu_s = detail::vec2_from(a.at("mu_s"), "mu_s");
      agent.belief.phi_s = detail::mat2_from(a.at("phi_s"), "phi_s");
      agent.belief.mu_e = detail::vec2_from(a.at("mu_e"), "mu_e");
      agent.belief.phi_e = detail::mat2_from(a.at("phi_e"), "phi_e");
      agent.pi = a.at("pi").get<double>();
      agent.lambda_s = a.at("lambda_s").get<double>();
      agent.lambda_e = a.at("lambda_e").get<double>();
      doc.mixture.agents.push_back(agent);
    }
    if (j.contains("hmm")) {
      const json& rows = j.at("hmm").at("transition");
      HmmPart h;
      int m = static_cast<int>(rows.size());
      h.model.transition.resize(m, m);
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != m)
          throw Error(ErrorCategory::format,
                      path + ": transition matrix is not square");
        for (int k = 0; k < m; ++k)
          h.model.transition(i, k) = rows[i][k].get<double>();
      }
      h.window_size = j.at("hmm").at("window_size").get<int>();
      h.overlap = j.at("hmm").at("overlap").get<bool>();
      doc.hmm = std::move(h);
    }
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::format,
                path + ": malformed model document: " + e.what());
  }
}

// ----------------------------------------------------------------------- trace

inline void save_trace(const std::string& path, const std::string& variant,
                       const std::vector<double>& trace) {
  std::ofstream out = detail::open_output(path);
  out << "# variant=" << variant << '\n';
  out << "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << format_double(trace[i]) << '\n';
}

// --------------------------------------------------------------------- reports

inline std::string format_error_report(const metrics::ErrorReport& r,
                                       const std::string& label) {
  std::ostringstream out;
  out << "method,evaluated,skipped,positional_error,step_error\n";
  out << label << ',' << r.evaluated << ',' << r.skipped.size() << ','
      << format_double(r.mean_positional) << ',' << format_double(r.mean_step)
      << '\n';
  return out.str();
}

// Mean +/- standard deviation across folds, one row per method.
inline std::string format_cv_table(const std::vector<metrics::CvReport>& rs) {
  std::ostringstream out;
  out << "method | positional error | step error\n";
  for (const metrics::CvReport& r : rs) {
    out << r.method_label << " | " << format_double(r.positional_mean)
        << " +/- " << format_double(r.positional_stddev) << " | "
        << format_double(r.step_mean) << " +/- "
        << format_double(r.step_stddev) << '\n';
  }
  return out.str();
}

inline std::string format_cv_csv(const metrics::CvReport& r) {
  std::ostringstream out;
  out << "method,fold,evaluated,failed,positional_error,step_error\n";
  for (const metrics::FoldSummary& f : r.fold_summaries)
    out << r.method_label << ',' << f.fold << ',' << f.evaluated << ','
        << int(f.failed) << ',' << format_double(f.mean_positional) << ','
        << format_double(f.mean_step) << '\n';
  out << r.method_label << ",mean," << r.successful_folds << ",0,"
      << format_double(r.positional_mean) << ','
      << format_double(r.step_mean) << '\n';
  out << r.method_label << ",stddev," << r.successful_folds << ",0,"
      << format_double(r.positional_stddev) << ','
      << format_double(r.step_stddev) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------- images

// Binary PGM, one pixel block per grid cell, values scaled to [0, 255].
inline void write_pgm(const std::string& path,
                      const std::vector<double>& values, int rows, int cols,
                      int cell_pixels = 32) {
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  std::ofstream out = detail::open_output(path);
  out << "P5\n" << cols * cell_pixels << ' ' << rows * cell_pixels << "\n255\n";
  for (int r = 0; r < rows; ++r) {
    for (int py = 0; py < cell_pixels; ++py) {
      for (int c = 0; c < cols; ++c) {
        double v = vmax > 0.0 ? values[r * cols + c] / vmax : 0.0;
        unsigned char byte = static_cast<unsigned char>(v * 255.0 + 0.5);
        for (int px = 0; px < cell_pixels; ++px) out.put(char(byte));
      }
    }
  }
}

namespace detail {

// Blue -> cyan -> yellow -> red ramp.
inline void heat_color(double v, unsigned char* rgb) {
  v = std::clamp(v, 0.0, 1.0);
  auto lerp = [](double a, double b, double t) {
    return static_cast<unsigned char>(a + (b - a) * t + 0.5);
  };
  if (v < 1.0 / 3.0) {
    double t = v * 3.0;
    rgb[0] = lerp(20, 30, t);
    rgb[1] = lerp(30, 200, t);
    rgb[2] = lerp(120, 220, t);
  } else if (v < 2.0 / 3.0) {
    double t = (v - 1.0 / 3.0) * 3.0;
    rgb[0] = lerp(30, 235, t);
    rgb[1] = lerp(200, 220, t);
    rgb[2] = lerp(220, 60, t);
  } else {
    double t = (v - 2.0 / 3.0) * 3.0;
    rgb[0] = lerp(235, 210, t);
    rgb[1] = lerp(220, 40, t);
    rgb[2] = lerp(60, 35, t);
  }
}

}  // namespace detail

// Binary PPM heatmap, one pixel block per grid cell.
inline void write_ppm(const std::string& path,
                      const std::vector<double>& values, int rows, int cols,
                      int cell_pixels = 32) {
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  std::ofstream out = detail::open_output(path);
  out << "P6\n" << cols * cell_pixels << ' ' << rows * cell_pixels << "\n255\n";
  for (int r = 0; r < rows; ++r) {
    for (int py = 0; py < cell_pixels; ++py) {
      for (int c = 0; c < cols; ++c) {
        unsigned char rgb[3];
        detail::heat_color(vmax > 0.0 ? values[r * cols + c] / vmax : 0.0,
                           rgb);
        for (int px = 0; px < cell_pixels; ++px)
          out.write(reinterpret_cast<const char*>(rgb), 3);
      }
    }
  }
}

}  // namespace trajseg::io
