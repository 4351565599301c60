#pragma once

// Paired monte-carlo experiment harness. Each trial samples one instance per
// sweep point and hands the same symmetrized view to every requested
// algorithm, so cross-algorithm differences are not confounded by noise
// draws. Trial seeds are hashed from (sweep value, trial index), which keeps
// existing points reproducible when a grid is refined. The asymptotic mmse
// curve for the same sweep is computed alongside. Also hosts the exact
// enumeration posterior oracle used to benchmark estimators on small
// discrete instances.

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blockspike/algorithms.hpp"
#include "blockspike/errors.hpp"
#include "blockspike/limits.hpp"
#include "blockspike/metrics.hpp"
#include "blockspike/model.hpp"
#include "blockspike/rng.hpp"

namespace blockspike {

enum class Algorithm { amp, gradient_descent, joint_pca, weighted_pca };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::amp: return "amp";
    case Algorithm::gradient_descent: return "gradient_descent";
    case Algorithm::joint_pca: return "joint_pca";
    case Algorithm::weighted_pca: return "weighted_pca";
  }
  throw config_error("unknown algorithm id");
}

inline Algorithm algorithm_from_name(const std::string& s) {
  if (s == "amp") return Algorithm::amp;
  if (s == "gradient_descent" || s == "gd") return Algorithm::gradient_descent;
  if (s == "joint_pca" || s == "pca") return Algorithm::joint_pca;
  if (s == "weighted_pca" || s == "wpca") return Algorithm::weighted_pca;
  throw config_error("unknown algorithm name: " + s);
}

// Spectral estimators return eigenvectors with no meaningful norm, and the
// likelihood ascent's stationary amplitude is inflated by the noise part of
// the quadratic form (norm ratio (lambda+1)/lambda at uniform snr), so all
// three are scored with scale calibration. Message passing outputs posterior
// means whose norm is itself the estimate, scored directly.
inline bool is_scale_free(Algorithm a) {
  return a != Algorithm::amp;
}

struct AlgorithmConfig {
  Algorithm kind = Algorithm::amp;
  AmpOptions amp{};
  GdConfig gd{};
  int wpca_resolution = 16;
};

struct SweepPoint {
  double value = 0.0;  // reported coordinate (alpha, lambda scale, ...)
  ProblemSpec spec;    // fully materialized problem at that coordinate
};

struct ExperimentConfig {
  std::string sweep_var = "lambda";  // column label only
  std::vector<SweepPoint> points;
  long N = 1024;
  std::vector<AlgorithmConfig> algorithms;  // empty: limits curve only
  int trials = 64;
  std::uint64_t base_seed = 0x5eedba5eull;
  bool metric_diag_mse = true;
  bool metric_overlap = false;
  int workers = 1;
  bool compute_limits = true;
  SolverOptions limit_opts{};

  void validate() const {
    if (points.empty()) throw config_error("experiment needs a nonempty sweep grid");
    if (trials < 1) throw config_error("experiment needs trials >= 1");
    if (N < 1) throw config_error("experiment needs N >= 1");
    if (!metric_diag_mse && !metric_overlap)
      throw config_error("experiment needs at least one metric");
    if (workers < 1) throw config_error("experiment needs workers >= 1");
    for (const auto& p : points) p.spec.validate();
    for (const auto& a : algorithms) algorithm_name(a.kind);
  }
};

// Seed for one (point, trial) cell. Derived from the sweep value rather than
// the point index so refining a grid never reshuffles existing trials, and
// shared by all algorithms of the cell (paired design).
inline std::uint64_t trial_seed(std::uint64_t base, double sweep_value, int t) {
  return mix_tag(base, {tag::trial, std::bit_cast<std::uint64_t>(sweep_value),
                        static_cast<std::uint64_t>(t)});
}

struct TrialResult {
  long point_index = 0;
  double sweep_value = 0.0;
  Algorithm algorithm = Algorithm::amp;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;         // exception text when !ok
  Eigen::VectorXd diag_mse;    // per group; direct or per-trial optimal scale
  Eigen::VectorXd scaled_a;    // |u|^4/n^2 terms, scale-free algorithms only
  Eigen::VectorXd scaled_b;    // (u.uhat)^2/(n|uhat|^2) terms, ditto
  Eigen::VectorXd overlap;     // squared correlation per group, if requested
  double wall_seconds = 0.0;
};

struct AggregateRow {
  long point_index = 0;
  double sweep_value = 0.0;
  Algorithm algorithm = Algorithm::amp;
  int group = 0;
  std::string metric;  // "diag_mse" or "overlap"
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
  int completed = 0;
};

struct LimitCurveRow {
  double sweep_value = 0.0;
  std::string label;  // "vector_k" or "block_kl"
  double mmse = 0.0;
  bool unique = true;
};

struct ExperimentResult {
  std::string sweep_var;
  std::vector<TrialResult> trials;        // (point, trial, algorithm) order
  std::vector<AggregateRow> aggregates;   // (point, algorithm, metric, group)
  std::vector<LimitCurveRow> limit_curve;
};

// Per-trial terms of the scale-calibrated spectral mse. An identically zero
// estimate has no direction to calibrate, so it is rejected rather than
// scored as an accidental zero.
inline ScaledMseTerms diag_mse_scaled_terms(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& uhat) {
  if (uhat.squaredNorm() == 0.0)
    throw numeric_error("scaled mse undefined for an identically zero estimate");
  return scaled_mse_terms(u, uhat);
}

// Across-trial combiner: mean(a) - mean(b)^2. Squaring the averaged overlap
// term rather than averaging per-trial squares removes the upward finite-m
// bias that a per-trial combination would carry.
inline double combine_scaled_mse(double mean_a, double mean_b) {
  return mean_a - mean_b * mean_b;
}

namespace detail {

// Compensated accumulation; trial sums must not depend on summation order
// when the harness runs threaded.
struct NeumaierSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline double stable_mean(const std::vector<double>& v) {
  NeumaierSum acc;
  for (double x : v) acc.add(x);
  return acc.value() / static_cast<double>(v.size());
}

// sd/sqrt(m) with the m-1 denominator; zero for fewer than two samples.
inline double stable_stderr(const std::vector<double>& v, double mean) {
  const auto m = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  NeumaierSum acc;
  for (double x : v) acc.add((x - mean) * (x - mean));
  return std::sqrt(std::max(0.0, acc.value()) / (m - 1.0) / m);
}

struct CellInputs {
  const SymObservations& sym;
  const std::vector<Eigen::VectorXd>& truth;
  const ProblemSpec& spec;
  long N;
  std::uint64_t seed;
};

inline std::vector<Eigen::VectorXd> estimates_for(const AlgorithmConfig& alg,
                                                  const CellInputs& in) {
  switch (alg.kind) {
    case Algorithm::amp: {
      AmpOptions o = alg.amp;
      // per-trial init stream; the sampling tags use disjoint tag words, so
      // reusing the cell seed keeps streams independent
      o.seed = in.seed;
      o.record_trajectory = false;
      return amp_groupwise(in.sym, in.spec, in.N, o).estimate.xhat;
    }
    case Algorithm::gradient_descent:
      return gradient_descent(in.sym, in.N, alg.gd).xhat;
    case Algorithm::joint_pca:
      return joint_pca(in.sym).xhat;
    case Algorithm::weighted_pca:
      return weight_grid_search(in.sym, in.truth, alg.wpca_resolution).estimate;
  }
  throw config_error("unknown algorithm id");
}

inline double squared_correlation(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double uu = u.squaredNorm(), vv = v.squaredNorm();
  if (uu == 0.0 || vv == 0.0) return 0.0;
  const double uv = u.dot(v);
  return uv * uv / (uu * vv);
}

inline TrialResult run_trial_cell(const ExperimentConfig& cfg, long point_index,
                                  const AlgorithmConfig& alg, const CellInputs& in) {
  TrialResult row;
  row.point_index = point_index;
  row.sweep_value = cfg.points[point_index].value;
  row.algorithm = alg.kind;
  row.seed = in.seed;
  const auto K = static_cast<long>(in.truth.size());
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::vector<Eigen::VectorXd> xhat = estimates_for(alg, in);
    const bool free_scale = is_scale_free(alg.kind);
    if (cfg.metric_diag_mse) {
      row.diag_mse.resize(K);
      if (free_scale) {
        row.scaled_a.resize(K);
        row.scaled_b.resize(K);
      }
      for (long k = 0; k < K; ++k) {
        if (free_scale) {
          const ScaledMseTerms t = diag_mse_scaled_terms(in.truth[k], xhat[k]);
          row.scaled_a(k) = t.a;
          row.scaled_b(k) = t.b;
          row.diag_mse(k) = diag_mse_optimal_scale(in.truth[k], xhat[k]);
        } else {
          row.diag_mse(k) = diag_mse_direct(in.truth[k], xhat[k]);
        }
      }
    }
    if (cfg.metric_overlap) {
      row.overlap.resize(K);
      for (long k = 0; k < K; ++k) row.overlap(k) = squared_correlation(in.truth[k], xhat[k]);
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.failure = e.what();
    row.diag_mse.resize(0);
    row.scaled_a.resize(0);
    row.scaled_b.resize(0);
    row.overlap.resize(0);
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

inline void aggregate_cell(const ExperimentConfig& cfg, const std::vector<TrialResult>& rows,
                           long ip, int ialg, std::vector<AggregateRow>& out) {
  const Algorithm kind = cfg.algorithms[ialg].kind;
  const int K = cfg.points[ip].spec.K();
  std::vector<const TrialResult*> done;
  for (const auto& r : rows)
    if (r.ok) done.push_back(&r);
  const int m = static_cast<int>(done.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto push = [&](int k, const char* metric, double mean, double se) {
    AggregateRow a;
    a.point_index = ip;
    a.sweep_value = cfg.points[ip].value;
    a.algorithm = kind;
    a.group = k;
    a.metric = metric;
    a.mean = mean;
    a.std_error = se;
    a.trials = cfg.trials;
    a.completed = m;
    out.push_back(std::move(a));
  };

  for (int k = 0; k < K; ++k) {
    if (cfg.metric_diag_mse) {
      if (m == 0) {
        push(k, "diag_mse", nan, nan);
      } else if (is_scale_free(kind)) {
        std::vector<double> av(m), bv(m);
        for (int j = 0; j < m; ++j) {
          av[j] = done[j]->scaled_a(k);
          bv[j] = done[j]->scaled_b(k);
        }
        const double abar = stable_mean(av), bbar = stable_mean(bv);
        // first-order (delta method) error of abar - bbar^2: the variance of
        // c_j = a_j - 2 bbar b_j matches it to O(1/m)
        std::vector<double> cv(m);
        for (int j = 0; j < m; ++j) cv[j] = av[j] - 2.0 * bbar * bv[j];
        push(k, "diag_mse", combine_scaled_mse(abar, bbar),
             stable_stderr(cv, stable_mean(cv)));
      } else {
        std::vector<double> v(m);
        for (int j = 0; j < m; ++j) v[j] = done[j]->diag_mse(k);
        const double mean = stable_mean(v);
        push(k, "diag_mse", mean, stable_stderr(v, mean));
      }
    }
    if (cfg.metric_overlap) {
      if (m == 0) {
        push(k, "overlap", nan, nan);
      } else {
        std::vector<double> v(m);
        for (int j = 0; j < m; ++j) v[j] = done[j]->overlap(k);
        const double mean = stable_mean(v);
        push(k, "overlap", mean, stable_stderr(v, mean));
      }
    }
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult out;
  out.sweep_var = cfg.sweep_var;
  const auto P = static_cast<long>(cfg.points.size());
  const int A = static_cast<int>(cfg.algorithms.size());

  if (cfg.compute_limits) {
    for (const auto& pt : cfg.points) {
      const SaddlePoint sp = solve_limit(pt.spec, cfg.limit_opts);
      const MmseResult mm = mmse_from_saddle(pt.spec, sp);
      const int K = pt.spec.K();
      for (int k = 0; k < K; ++k)
        out.limit_curve.push_back(
            {pt.value, "vector_" + std::to_string(k), mm.vector_mmse(k), sp.unique});
      for (int k = 0; k < K; ++k)
        for (int l = k; l < K; ++l)
          out.limit_curve.push_back({pt.value,
                                     "block_" + std::to_string(k) + std::to_string(l),
                                     mm.block_mmse(k, l), sp.unique});
    }
  }

  long cells_total = 0, cells_failed = 0;
  std::string last_failure;
  for (long ip = 0; ip < P && A > 0; ++ip) {
    const SweepPoint& pt = cfg.points[ip];
    std::vector<TrialResult> cells(static_cast<std::size_t>(cfg.trials) * A);

    auto run_one_trial = [&](int t) {
      const std::uint64_t seed = trial_seed(cfg.base_seed, pt.value, t);
      const InstanceSpec is = make_instance(pt.spec, cfg.N, seed);
      const Observations obs = sample_instance(is);
      const SymObservations sym = symmetrize(obs, pt.spec);
      const detail::CellInputs in{sym, obs.truth, pt.spec, cfg.N, seed};
      for (int ia = 0; ia < A; ++ia)
        cells[static_cast<std::size_t>(t) * A + ia] =
            detail::run_trial_cell(cfg, ip, cfg.algorithms[ia], in);
    };

    const int workers = std::min<int>(cfg.workers, cfg.trials);
    if (workers <= 1) {
      for (int t = 0; t < cfg.trials; ++t) run_one_trial(t);
    } else {
      std::atomic<int> next{0};
      std::exception_ptr first_error;
      std::mutex err_mu;
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (;;) {
            const int t = next.fetch_add(1);
            if (t >= cfg.trials) return;
            try {
              run_one_trial(t);
            } catch (...) {
              std::scoped_lock lk(err_mu);
              if (!first_error) first_error = std::current_exception();
              return;
            }
          }
        });
      for (auto& th : pool) th.join();
      if (first_error) std::rethrow_exception(first_error);
    }

    for (auto& c : cells) {
      if (!c.ok) {
        ++cells_failed;
        last_failure = c.failure;
      }
      ++cells_total;
      out.trials.push_back(std::move(c));
    }
    // individual failures become flagged rows; only a majority of failures
    // invalidates the whole run
    if (2 * cells_failed > cells_total)
      throw solver_error("experiment aborted: " + std::to_string(cells_failed) + " of " +
                         std::to_string(cells_total) + " trial runs failed; last failure: " +
                         last_failure);
  }

  for (long ip = 0; ip < P; ++ip)
    for (int ia = 0; ia < A; ++ia) {
      std::vector<TrialResult> rows;
      rows.reserve(cfg.trials);
      for (int t = 0; t < cfg.trials; ++t)
        rows.push_back(out.trials[(static_cast<std::size_t>(ip) * cfg.trials + t) * A + ia]);
      detail::aggregate_cell(cfg, rows, ip, ia, out.aggregates);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Exact posterior by enumeration. Only feasible for small all-discrete
// instances; the configuration count is capped hard. Scores are conditional
// on the observed data: the conditional mean is the mse-optimal estimator of
// the signal given this instance, so any algorithm's realized block mse
// should exceed block_mse on average.

struct PosteriorOracle {
  std::vector<Eigen::VectorXd> cond_mean;  // E[x_k | data]
  Eigen::VectorXd vector_mse;              // E[|x_k - E x_k|^2 | data] / n_k
  Eigen::MatrixXd block_mse;               // conditional mse of x_k x_l^T / (n_k n_l)
  Eigen::MatrixXd second_moment;           // E[x x^T | data], flattened layout
  Eigen::MatrixXd pair_energy;             // E[|x_k|^2 |x_l|^2 | data]
  std::vector<long> sizes, offsets;        // flattened group layout
  double log_partition = 0.0;              // log sum of unnormalized weights
};

// Exact instance-conditional risk E[|x_k x_l^T - uk ul^T|^2 | data]/(n_k n_l)
// of an arbitrary block estimate. Algebraically equals block_mse(k, l) plus
// |uk ul^T - E[x_k x_l^T | data]|^2/(n_k n_l), so the conditional mean
// dominates every algorithm's estimate on every instance, not just on
// average. This is the mse the dominance checks compare.
inline double posterior_block_risk(const PosteriorOracle& o, int k, int l,
                                   const Eigen::VectorXd& uk, const Eigen::VectorXd& ul) {
  if (k < 0 || l < 0 || k >= static_cast<int>(o.sizes.size()) ||
      l >= static_cast<int>(o.sizes.size()))
    throw config_error("posterior risk: group index out of range");
  if (uk.size() != o.sizes[k] || ul.size() != o.sizes[l])
    throw config_error("posterior risk: estimate length does not match the group");
  const auto m = o.second_moment.block(o.offsets[k], o.offsets[l], o.sizes[k], o.sizes[l]);
  const double risk = o.pair_energy(k, l) - 2.0 * uk.dot(m * ul) +
                      uk.squaredNorm() * ul.squaredNorm();
  return risk / static_cast<double>(o.sizes[k] * o.sizes[l]);
}

inline PosteriorOracle exact_posterior_oracle(const Observations& obs, const InstanceSpec& is) {
  is.validate();
  const ProblemSpec& spec = is.spec;
  const int K = spec.K();
  const long n = is.total_n();

  for (int k = 0; k < K; ++k)
    if (spec.priors[k].kind() != Prior::Kind::Discrete)
      throw config_error("exact posterior enumeration needs discrete priors in every group");
  if (static_cast<int>(obs.blocks.size()) != K)
    throw config_error("observation blocks do not match the instance");
  for (int k = 0; k < K; ++k) {
    if (static_cast<int>(obs.blocks[k].size()) != K)
      throw config_error("observation blocks do not match the instance");
    for (int l = 0; l < K; ++l)
      if (obs.blocks[k][l].rows() != is.n[k] || obs.blocks[k][l].cols() != is.n[l])
        throw config_error("observation block shape does not match the instance");
    if (spec.r(k) > 0.0 &&
        (static_cast<int>(obs.side.size()) <= k || obs.side[k].size() != is.n[k]))
      throw config_error("side observation missing for a group with r > 0");
  }

  std::vector<long> off(K, 0);
  for (int k = 1; k < K; ++k) off[k] = off[k - 1] + is.n[k - 1];

  constexpr long kMaxConfigs = 1L << 20;
  long total = 1;
  bool over_cap = false;
  for (int k = 0; k < K && !over_cap; ++k) {
    const long a = spec.priors[k].atoms().size();
    for (long i = 0; i < is.n[k]; ++i) {
      if (total > kMaxConfigs / a) {
        over_cap = true;
        break;
      }
      total *= a;
    }
  }
  if (over_cap || total > kMaxConfigs)
    throw resource_error("posterior enumeration needs more than 2^20 configurations");

  // per-coordinate atom tables and log prior masses
  std::vector<const Eigen::VectorXd*> atom_of(n);
  std::vector<Eigen::VectorXd> logp_group(K);
  std::vector<const Eigen::VectorXd*> logp_of(n);
  for (int k = 0; k < K; ++k) {
    logp_group[k] = spec.priors[k].probs().array().log().matrix();
    for (long i = 0; i < is.n[k]; ++i) {
      atom_of[off[k] + i] = &spec.priors[k].atoms();
      logp_of[off[k] + i] = &logp_group[k];
    }
  }

  // fold the per-block snr into one matrix so the data term is a single
  // quadratic form: sum_kl sqrt(l_kl/N) x_k^T Y_kl x_l = x^T Ytil x
  Eigen::MatrixXd ytil = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd snr(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) {
      snr(k, l) = spec.lambda(k, l) / static_cast<double>(is.N);
      if (snr(k, l) > 0.0)
        ytil.block(off[k], off[l], is.n[k], is.n[l]) = std::sqrt(snr(k, l)) * obs.blocks[k][l];
    }
  Eigen::VectorXd svec = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < K; ++k)
    if (spec.r(k) > 0.0) svec.segment(off[k], is.n[k]) = std::sqrt(spec.r(k)) * obs.side[k];

  std::vector<int> digit(n, 0);
  Eigen::VectorXd x(n);
  for (long i = 0; i < n; ++i) x(i) = (*atom_of[i])(0);

  auto log_weight = [&](const Eigen::VectorXd& xc) {
    Eigen::VectorXd sq(K);
    for (int k = 0; k < K; ++k) sq(k) = xc.segment(off[k], is.n[k]).squaredNorm();
    double lw = xc.dot(ytil * xc) - 0.5 * sq.dot(snr * sq) + svec.dot(xc) -
                0.5 * spec.r.dot(sq);
    for (long i = 0; i < n; ++i) lw += (*logp_of[i])(digit[i]);
    return lw;
  };
  auto advance = [&]() {
    for (long i = 0; i < n; ++i) {
      if (++digit[i] < atom_of[i]->size()) {
        x(i) = (*atom_of[i])(digit[i]);
        return;
      }
      digit[i] = 0;
      x(i) = (*atom_of[i])(0);
    }
  };

  std::vector<double> lw(total);
  double lw_max = -std::numeric_limits<double>::infinity();
  for (long c = 0; c < total; ++c) {
    lw[c] = log_weight(x);
    lw_max = std::max(lw_max, lw[c]);
    advance();
  }

  double z = 0.0;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), e2 = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd mxx = Eigen::MatrixXd::Zero(n, n);  // E[x x^T], unnormalized
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(K, K);   // E[|x_k|^2 |x_l|^2], ditto
  for (long c = 0; c < total; ++c) {
    const double w = std::exp(lw[c] - lw_max);
    z += w;
    m += w * x;
    e2 += w * x.cwiseAbs2();
    mxx.selfadjointView<Eigen::Lower>().rankUpdate(x, w);
    Eigen::VectorXd sq(K);
    for (int k = 0; k < K; ++k) sq(k) = x.segment(off[k], is.n[k]).squaredNorm();
    s2 += w * sq * sq.transpose();
    advance();
  }
  const Eigen::MatrixXd mfull = mxx.selfadjointView<Eigen::Lower>();

  PosteriorOracle out;
  out.log_partition = lw_max + std::log(z);
  out.cond_mean.resize(K);
  out.vector_mse.resize(K);
  out.block_mse.resize(K, K);
  out.second_moment = mfull / z;
  out.pair_energy = s2 / z;
  out.sizes = is.n;
  out.offsets = off;
  for (int k = 0; k < K; ++k) {
    out.cond_mean[k] = m.segment(off[k], is.n[k]) / z;
    const double second = e2.segment(off[k], is.n[k]).sum() / z;
    out.vector_mse(k) =
        std::max(0.0, second - out.cond_mean[k].squaredNorm()) / static_cast<double>(is.n[k]);
    for (int l = 0; l < K; ++l) {
      const double cross = out.second_moment.block(off[k], off[l], is.n[k], is.n[l]).squaredNorm();
      out.block_mse(k, l) = std::max(0.0, out.pair_energy(k, l) - cross) /
                            static_cast<double>(is.n[k] * is.n[l]);
    }
  }
  return out;
}

}  // namespace blockspike
