#pragma once

// Expectation-maximization for the agent mixture.
//
// Hidden per trajectory: the generating agent z and the padding counts
// (t_s, t_e), enumerated jointly up to a cap. The E-step weights every tuple
// h = (z, t_s, t_e) in log space by
//
//   pi_z * P(t_s) * P(t_e) * N(x^_first | mu_s, phi_s)
//        * N(x^_last | mu_e, phi_e) * p(y | h)
//
// where x^ are smoothed endpoint states and p(y | h) is the filter
// likelihood. Ablation variants drop the Poisson factors, the Gaussian
// belief factors, or both (the classic weighting pi_z * p(y | h)).
//
// The M-step maximizes the responsibility-weighted complete-data objective in
// closed form, treating the smoothed means as state estimates: (A, b) solve a
// six-unknown linear system assembled with Kronecker/vectorization identities,
// and the covariances, beliefs, weights, and Poisson rates are weighted
// moments.

#include "trajseg/core.hpp"
#include "trajseg/lds.hpp"
#include "trajseg/mathutil.hpp"
#include "trajseg/parallel.hpp"
#include "trajseg/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace trajseg::em {

enum class EstepVariant { imda, imda_no_poisson, imda_no_gauss, original_mda };

inline const char* to_string(EstepVariant v) {
  switch (v) {
    case EstepVariant::imda: return "imda";
    case EstepVariant::imda_no_poisson: return "imda_no_poisson";
    case EstepVariant::imda_no_gauss: return "imda_no_gauss";
    case EstepVariant::original_mda: return "original_mda";
  }
  return "imda";
}

inline EstepVariant parse_variant(const std::string& s) {
  if (s == "imda") return EstepVariant::imda;
  if (s == "imda_no_poisson") return EstepVariant::imda_no_poisson;
  if (s == "imda_no_gauss") return EstepVariant::imda_no_gauss;
  if (s == "original_mda") return EstepVariant::original_mda;
  throw Error(ErrorCategory::usage, "unknown E-step variant: " + s);
}

struct EmConfig {
  int num_agents = 1;
  int t_cap = 20;  // inclusive upper bound for t_s and t_e enumeration
  int max_iters = 50;
  double loglik_tol = 1e-6;  // stop when the trace improves by less
  EstepVariant variant = EstepVariant::imda;
  std::uint64_t rng_seed = 1;
  // Evaluate the Gaussian belief factors at endpoint states from a
  // diffuse-prior smoother instead of the belief-conditioned one.
  bool belief_free_endpoints = false;
};

// Flat indexing over (z, t_s, t_e) hypothesis tuples.
struct TupleGrid {
  int num_agents = 1;
  int t_cap = 0;

  int count() const { return num_agents * (t_cap + 1) * (t_cap + 1); }
  int index(const HiddenTuple& h) const {
    return (h.z * (t_cap + 1) + h.t_s) * (t_cap + 1) + h.t_e;
  }
  HiddenTuple decode(int idx) const {
    HiddenTuple h;
    h.t_e = idx % (t_cap + 1);
    idx /= (t_cap + 1);
    h.t_s = idx % (t_cap + 1);
    h.z = idx / (t_cap + 1);
    return h;
  }
};

// Normalized tuple weights for one trajectory, indexed per TupleGrid.
struct Responsibility {
  std::vector<double> gamma;
};

struct TupleStates {
  std::vector<Vec2> means;  // smoothed padded means for this tuple
  double log_likelihood = 0.0;
};

struct TrajectoryCache {
  std::vector<TupleStates> tuples;  // indexed per TupleGrid
};

struct EStepResult {
  std::vector<Responsibility> responsibilities;
  std::vector<TrajectoryCache> cache;
  // Sum over trajectories of log sum_h (unnormalized tuple weight).
  double observed_log_likelihood = 0.0;
};

// Index of the highest-responsibility tuple; ties toward the lower index.
inline int best_tuple(const Responsibility& r) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(r.gamma.size()); ++i)
    if (r.gamma[i] > r.gamma[best]) best = i;
  return best;
}

namespace detail {

struct AgentFactors {
  double log_pi;
  std::vector<double> log_pois_s;  // by t_s
  std::vector<double> log_pois_e;  // by t_e
  Gaussian2 start;
  Gaussian2 end;
};

inline AgentFactors make_factors(const AgentModel& a, int t_cap) {
  AgentFactors f{std::log(a.pi),
                 {},
                 {},
                 Gaussian2::from_cov(a.belief.mu_s, a.belief.phi_s),
                 Gaussian2::from_cov(a.belief.mu_e, a.belief.phi_e)};
  f.log_pois_s.reserve(t_cap + 1);
  f.log_pois_e.reserve(t_cap + 1);
  for (int t = 0; t <= t_cap; ++t) {
    f.log_pois_s.push_back(log_poisson_pmf(t, a.lambda_s));
    f.log_pois_e.push_back(log_poisson_pmf(t, a.lambda_e));
  }
  return f;
}

}  // namespace detail

// Tuple weights and smoothed-state cache for a single trajectory under the
// current model. Returns the trajectory's log-evidence log sum_h w(h).
// Exposed because segmentation of fresh trajectories needs the same
// computation as the E-step.
inline double trajectory_e_step(const Trajectory& traj,
                                const MixtureModel& model, const EmConfig& cfg,
                                Responsibility* resp, TrajectoryCache* cache) {
  const TupleGrid grid{model.num_agents(), cfg.t_cap};
  const bool use_poisson = cfg.variant == EstepVariant::imda ||
                           cfg.variant == EstepVariant::imda_no_gauss;
  const bool use_gauss = cfg.variant == EstepVariant::imda ||
                         cfg.variant == EstepVariant::imda_no_poisson;
  std::vector<double> logw(grid.count());
  cache->tuples.resize(grid.count());
  for (int z = 0; z < grid.num_agents; ++z) {
    const AgentModel& agent = model.agents[z];
    const detail::AgentFactors f = detail::make_factors(agent, cfg.t_cap);
    for (int ts = 0; ts <= grid.t_cap; ++ts) {
      for (int te = 0; te <= grid.t_cap; ++te) {
        HiddenTuple h{z, ts, te};
        int idx = grid.index(h);
        lds::SmoothedStates sm = lds::smooth(traj, agent, h);
        double w = f.log_pi + sm.log_likelihood;
        if (use_poisson) w += f.log_pois_s[ts] + f.log_pois_e[te];
        if (use_gauss) {
          Vec2 xs = sm.start();
          Vec2 xe = sm.end();
          if (cfg.belief_free_endpoints) {
            lds::SmoothedStates free =
                lds::smooth_without_beliefs(traj, agent, h);
            xs = free.start();
            xe = free.end();
          }
          w += f.start.log_density(xs) + f.end.log_density(xe);
        }
        logw[idx] = w;
        cache->tuples[idx] =
            TupleStates{std::move(sm.means), sm.log_likelihood};
      }
    }
  }
  double lse = log_sum_exp(logw);
  if (lse == -std::numeric_limits<double>::infinity())
    throw Error(ErrorCategory::numeric,
                "all hypothesis weights vanished for trajectory " + traj.id);
  resp->gamma.resize(grid.count());
  for (int i = 0; i < grid.count(); ++i)
    resp->gamma[i] = std::exp(logw[i] - lse);
  return lse;
}

inline EStepResult e_step(const std::vector<Trajectory>& trajs,
                          const MixtureModel& model, const EmConfig& cfg) {
  if (model.agents.empty())
    throw Error(ErrorCategory::usage, "model has no agents");
  EStepResult out;
  out.responsibilities.resize(trajs.size());
  out.cache.resize(trajs.size());
  std::vector<double> evidences(trajs.size());
  parallel_for(trajs.size(), [&](std::size_t k) {
    evidences[k] = trajectory_e_step(trajs[k], model, cfg,
                                     &out.responsibilities[k], &out.cache[k]);
  });
  double total = 0.0;
  for (double e : evidences) total += e;
  out.observed_log_likelihood = total;
  return out;
}

// Weighted linear system for the dynamics update. Unknowns are
// u = (vec(A^T), b): row-major entries of A followed by b. Every transition
// (x_prev -> x_next) with weight g contributes
//   [ I2 (x) x_prev x_prev^T   I2 (x) x_prev ] [vec(A^T)]   [vec(x_prev x_next^T)]
//   [ I2 (x) x_prev^T          I2           ] [   b    ] = [      x_next        ]
// where (x) is the Kronecker product; summing over weighted transitions and
// solving the 6x6 system gives the maximizer of the expected transition
// log-likelihood.
inline std::pair<Mat2, Vec2> m_step_dynamics(
    const std::vector<Responsibility>& resp,
    const std::vector<TrajectoryCache>& cache, const TupleGrid& grid, int m) {
  Eigen::Matrix<double, 6, 6> S = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> r = Eigen::Matrix<double, 6, 1>::Zero();
  double mass = 0.0;
  for (std::size_t k = 0; k < resp.size(); ++k) {
    for (int ts = 0; ts <= grid.t_cap; ++ts) {
      for (int te = 0; te <= grid.t_cap; ++te) {
        int idx = grid.index({m, ts, te});
        double g = resp[k].gamma[idx];
        if (g <= 0.0) continue;
        mass += g;
        const std::vector<Vec2>& x = cache[k].tuples[idx].means;
        for (std::size_t t = 1; t < x.size(); ++t) {
          const Vec2& xp = x[t - 1];
          const Vec2& xn = x[t];
          Mat2 outer = g * (xp * xp.transpose());
          S.block<2, 2>(0, 0) += outer;
          S.block<2, 2>(2, 2) += outer;
          Vec2 gxp = g * xp;
          S.block<2, 1>(0, 4) += gxp;
          S.block<2, 1>(2, 5) += gxp;
          S(4, 4) += g;
          S(5, 5) += g;
          r.segment<2>(0) += gxp * xn(0);
          r.segment<2>(2) += gxp * xn(1);
          r.segment<2>(4) += g * xn;
        }
      }
    }
  }
  if (mass < 1e-8)
    throw Error(ErrorCategory::numeric,
                "agent " + std::to_string(m) + " has no responsibility mass");
  // Mirror the upper blocks (the system is symmetric by construction).
  S.block<1, 2>(4, 0) = S.block<2, 1>(0, 4).transpose();
  S.block<1, 2>(5, 2) = S.block<2, 1>(2, 5).transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(S);
  double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
  double min_eig = es.eigenvalues().minCoeff();
  if (!(max_eig > 0.0) || min_eig < 1e-12 * max_eig)
    throw Error(ErrorCategory::numeric,
                "dynamics system for agent " + std::to_string(m) +
                    " is singular (insufficient state variation)");
  Eigen::Matrix<double, 6, 1> u = S.ldlt().solve(r);
  Mat2 A;
  A << u(0), u(1), u(2), u(3);
  Vec2 b(u(4), u(5));
  return {A, b};
}

struct RestParams {
  Mat2 Q, R;
  Vec2 mu_s, mu_e;
  Mat2 phi_s, phi_e;
  double pi = 0.0, lambda_s = 1.0, lambda_e = 1.0;
};

// Closed-form updates for everything except (A, b): noise covariances from
// weighted residual moments, beliefs from weighted endpoint moments, Poisson
// rates from weighted mean padding counts, and the mixture weight from the
// total responsibility mass.
inline RestParams m_step_rest(const std::vector<Trajectory>& trajs,
                              const std::vector<Responsibility>& resp,
                              const std::vector<TrajectoryCache>& cache,
                              const TupleGrid& grid, int m, const Mat2& A,
                              const Vec2& b) {
  double mass = 0.0, q_den = 0.0, r_den = 0.0, ts_sum = 0.0, te_sum = 0.0;
  Mat2 q_num = Mat2::Zero(), r_num = Mat2::Zero();
  Vec2 s_sum = Vec2::Zero(), e_sum = Vec2::Zero();
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const int tau = trajs[k].tau();
    for (int ts = 0; ts <= grid.t_cap; ++ts) {
      for (int te = 0; te <= grid.t_cap; ++te) {
        int idx = grid.index({m, ts, te});
        double g = resp[k].gamma[idx];
        if (g <= 0.0) continue;
        const std::vector<Vec2>& x = cache[k].tuples[idx].means;
        mass += g;
        ts_sum += g * ts;
        te_sum += g * te;
        s_sum += g * x.front();
        e_sum += g * x.back();
        q_den += g * (static_cast<double>(x.size()) - 1.0);
        r_den += g * (tau + 1.0);
        for (std::size_t t = 1; t < x.size(); ++t) {
          Vec2 res = x[t] - A * x[t - 1] - b;
          q_num += g * (res * res.transpose());
        }
        for (int t = 0; t <= tau; ++t) {
          Vec2 res = trajs[k].points[t] - x[ts + t];
          r_num += g * (res * res.transpose());
        }
      }
    }
  }
  if (mass < 1e-8)
    throw Error(ErrorCategory::numeric,
                "agent " + std::to_string(m) + " has no responsibility mass");
  RestParams p;
  p.mu_s = s_sum / mass;
  p.mu_e = e_sum / mass;
  Mat2 phi_s = Mat2::Zero(), phi_e = Mat2::Zero();
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    for (int ts = 0; ts <= grid.t_cap; ++ts) {
      for (int te = 0; te <= grid.t_cap; ++te) {
        int idx = grid.index({m, ts, te});
        double g = resp[k].gamma[idx];
        if (g <= 0.0) continue;
        const std::vector<Vec2>& x = cache[k].tuples[idx].means;
        Vec2 ds = x.front() - p.mu_s;
        Vec2 de = x.back() - p.mu_e;
        phi_s += g * (ds * ds.transpose());
        phi_e += g * (de * de.transpose());
      }
    }
  }
  p.Q = spd_floor(q_num / q_den, kCovarianceFloor);
  p.R = spd_floor(r_num / r_den, kCovarianceFloor);
  p.phi_s = spd_floor(phi_s / mass, kCovarianceFloor);
  p.phi_e = spd_floor(phi_e / mass, kCovarianceFloor);
  p.lambda_s = std::max(ts_sum / mass, 1e-6);
  p.lambda_e = std::max(te_sum / mass, 1e-6);
  p.pi = mass / static_cast<double>(trajs.size());
  return p;
}

namespace detail {

struct KmeansResult {
  std::vector<int> assignment;
  std::vector<Eigen::Vector4d> centers;
};

inline KmeansResult kmeans_endpoints(const std::vector<Eigen::Vector4d>& data,
                                     int k, Rng& rng) {
  const int n = static_cast<int>(data.size());
  // k-means++ seeding.
  std::vector<Eigen::Vector4d> centers;
  centers.push_back(data[rng.uniform_int(0, n - 1)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers)
        best = std::min(best, (data[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (!(total > 0.0))
      throw Error(ErrorCategory::numeric,
                  "k-means seeding failed: fewer distinct endpoint vectors "
                  "than clusters");
    double pick = rng.uniform() * total;
    int chosen = n - 1;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += d2[i];
      if (pick < acc) {
        chosen = i;
        break;
      }
    }
    centers.push_back(data[chosen]);
  }
  // Lloyd iterations.
  std::vector<int> assign(n, -1);
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = (data[i] - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (data[i] - centers[c]).squaredNorm();
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Eigen::Vector4d> sums(k, Eigen::Vector4d::Zero());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums[assign[i]] += data[i];
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0)
        throw Error(ErrorCategory::numeric, "k-means produced an empty cluster");
      centers[c] = sums[c] / counts[c];
    }
    if (!changed) break;
  }
  return {std::move(assign), std::move(centers)};
}

}  // namespace detail

// Starting model from k-means over (first point, last point) vectors:
// cluster centroids become belief means, within-cluster spread sets the
// belief covariances, and per-cluster mean steps seed the drift.
inline MixtureModel initialize(const std::vector<Trajectory>& trajs,
                               const EmConfig& cfg) {
  const int n = static_cast<int>(trajs.size());
  if (cfg.num_agents < 1)
    throw Error(ErrorCategory::usage, "num_agents must be at least 1");
  if (n < cfg.num_agents)
    throw Error(ErrorCategory::usage,
                "need at least as many trajectories as agents");
  for (const Trajectory& t : trajs) {
    auto v = validate_trajectory(t);
    if (!v.empty()) throw Error(ErrorCategory::format, v.front());
  }

  std::vector<Eigen::Vector4d> data(n);
  for (int i = 0; i < n; ++i) {
    data[i] << trajs[i].points.front()(0), trajs[i].points.front()(1),
        trajs[i].points.back()(0), trajs[i].points.back()(1);
  }

  Rng rng(cfg.rng_seed);
  detail::KmeansResult km;
  bool ok = false;
  std::string last_error;
  for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
    try {
      km = detail::kmeans_endpoints(data, cfg.num_agents, rng);
      ok = true;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!ok)
    throw Error(ErrorCategory::numeric,
                "initialization failed after 5 seeding attempts: " +
                    last_error);

  MixtureModel model;
  model.agents.resize(cfg.num_agents);
  for (int c = 0; c < cfg.num_agents; ++c) {
    AgentModel& a = model.agents[c];
    a.belief.mu_s = km.centers[c].head<2>();
    a.belief.mu_e = km.centers[c].tail<2>();

    double spread = 0.0;
    int members = 0;
    Vec2 step_sum = Vec2::Zero();
    long step_count = 0;
    for (int i = 0; i < n; ++i) {
      if (km.assignment[i] != c) continue;
      ++members;
      spread += (data[i] - km.centers[c]).squaredNorm();
      for (std::size_t t = 1; t < trajs[i].points.size(); ++t) {
        step_sum += trajs[i].points[t] - trajs[i].points[t - 1];
        ++step_count;
      }
    }
    // Per-coordinate RMS radius of the 4D cluster.
    double sigma2 = members > 0 ? spread / (4.0 * members) : 0.0;
    a.belief.phi_s = spd_floor(Mat2::Identity() * sigma2, kCovarianceFloor);
    a.belief.phi_e = a.belief.phi_s;

    a.dynamics.A = Mat2::Identity();
    a.dynamics.b = step_count > 0 ? Vec2(step_sum / double(step_count))
                                  : Vec2::Zero();
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
      if (km.assignment[i] != c) continue;
      for (std::size_t t = 1; t < trajs[i].points.size(); ++t) {
        Vec2 r = trajs[i].points[t] - trajs[i].points[t - 1] - a.dynamics.b;
        resid += r.squaredNorm();
      }
    }
    double sq = step_count > 0 ? resid / (2.0 * step_count) : 0.0;
    a.dynamics.Q = spd_floor(Mat2::Identity() * sq, kCovarianceFloor);
    a.dynamics.R = a.dynamics.Q;

    a.pi = 1.0 / cfg.num_agents;
    a.lambda_s = 1.0;
    a.lambda_e = 1.0;
  }
  return model;
}

struct FitResult {
  MixtureModel model;
  std::vector<double> loglik_trace;
  std::vector<Responsibility> responsibilities;  // from the final E-step
  std::vector<TrajectoryCache> cache;            // from the final E-step
};

namespace detail {

// Replacement parameters for an agent that lost all responsibility mass,
// seeded from the single worst-explained trajectory.
inline AgentModel reinitialize_from(const Trajectory& traj, int num_trajs) {
  AgentModel a;
  a.belief.mu_s = traj.points.front();
  a.belief.mu_e = traj.points.back();
  double sigma = std::max((a.belief.mu_e - a.belief.mu_s).norm() / 4.0, 1.0);
  a.belief.phi_s = Mat2::Identity() * sigma * sigma;
  a.belief.phi_e = a.belief.phi_s;
  a.dynamics.A = Mat2::Identity();
  Vec2 step_sum = Vec2::Zero();
  for (std::size_t t = 1; t < traj.points.size(); ++t)
    step_sum += traj.points[t] - traj.points[t - 1];
  a.dynamics.b = step_sum / double(traj.points.size() - 1);
  double resid = 0.0;
  for (std::size_t t = 1; t < traj.points.size(); ++t)
    resid += (traj.points[t] - traj.points[t - 1] - a.dynamics.b).squaredNorm();
  double sq = std::max(resid / (2.0 * double(traj.points.size() - 1)),
                       kCovarianceFloor);
  a.dynamics.Q = Mat2::Identity() * sq;
  a.dynamics.R = a.dynamics.Q;
  a.pi = 1.0 / num_trajs;
  a.lambda_s = 1.0;
  a.lambda_e = 1.0;
  return a;
}

}  // namespace detail

// One full M-step with starvation handling: agents whose responsibility mass
// fell below 1e-8 are reseeded from the trajectory the model explains worst
// instead of being updated, and mixture weights are renormalized.
inline MixtureModel m_step(const std::vector<Trajectory>& trajs,
                           const EStepResult& es, const MixtureModel& model,
                           const EmConfig& cfg) {
  const TupleGrid grid{model.num_agents(), cfg.t_cap};
  std::vector<double> mass(model.num_agents(), 0.0);
  for (const Responsibility& r : es.responsibilities)
    for (int i = 0; i < grid.count(); ++i)
      mass[grid.decode(i).z] += r.gamma[i];

  MixtureModel next = model;
  for (int m = 0; m < model.num_agents(); ++m) {
    if (mass[m] < 1e-8) {
      // Worst fit: the trajectory whose best tuple weight is lowest.
      std::size_t worst = 0;
      double worst_peak = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < trajs.size(); ++k) {
        double peak =
            es.responsibilities[k].gamma[best_tuple(es.responsibilities[k])];
        if (peak < worst_peak) {
          worst_peak = peak;
          worst = k;
        }
      }
      next.agents[m] = detail::reinitialize_from(
          trajs[worst], static_cast<int>(trajs.size()));
      continue;
    }
    auto [A, b] = m_step_dynamics(es.responsibilities, es.cache, grid, m);
    RestParams rest =
        m_step_rest(trajs, es.responsibilities, es.cache, grid, m, A, b);
    AgentModel& a = next.agents[m];
    a.dynamics.A = A;
    a.dynamics.b = b;
    a.dynamics.Q = rest.Q;
    a.dynamics.R = rest.R;
    a.belief.mu_s = rest.mu_s;
    a.belief.phi_s = rest.phi_s;
    a.belief.mu_e = rest.mu_e;
    a.belief.phi_e = rest.phi_e;
    a.pi = rest.pi;
    a.lambda_s = rest.lambda_s;
    a.lambda_e = rest.lambda_e;
  }
  // Summing in value order keeps the result identical however the agents
  // are permuted, which the determinism guarantees rely on.
  std::vector<double> weights(next.agents.size());
  for (std::size_t m = 0; m < next.agents.size(); ++m)
    weights[m] = next.agents[m].pi;
  std::sort(weights.begin(), weights.end());
  double pi_sum = 0.0;
  for (double w : weights) pi_sum += w;
  for (AgentModel& a : next.agents) a.pi /= pi_sum;
  return next;
}

// EM loop from an explicit starting model (also used to warm-start).
inline FitResult fit_from(MixtureModel model,
                          const std::vector<Trajectory>& trajs,
                          const EmConfig& cfg) {
  if (trajs.empty())
    throw Error(ErrorCategory::usage, "cannot fit on an empty corpus");
  FitResult out;
  double prev = -std::numeric_limits<double>::infinity();
  int m_steps = 0;
  for (;;) {
    EStepResult es = e_step(trajs, model, cfg);
    out.loglik_trace.push_back(es.observed_log_likelihood);
    bool converged = out.loglik_trace.size() > 1 &&
                     es.observed_log_likelihood - prev < cfg.loglik_tol;
    prev = es.observed_log_likelihood;
    if (converged || m_steps >= cfg.max_iters) {
      out.model = std::move(model);
      out.responsibilities = std::move(es.responsibilities);
      out.cache = std::move(es.cache);
      return out;
    }
    model = m_step(trajs, es, model, cfg);
    ++m_steps;
  }
}

inline FitResult fit(const std::vector<Trajectory>& trajs,
                     const EmConfig& cfg) {
  return fit_from(initialize(trajs, cfg), trajs, cfg);
}

}  // namespace trajseg::em
