#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "priors.hpp"
#include "rng.hpp"

namespace blockspike {

struct EigenPair {
  Eigen::VectorXd vec;
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct PowerOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  std::uint64_t seed = 0x705e11aa;
  const Eigen::VectorXd* warm_start = nullptr;
};

// Leading eigenpair (largest algebraic eigenvalue) of a symmetric matrix by
// power iteration on A + sI, s a Gershgorin lower-bound shift that makes the
// target eigenvalue dominant in modulus. Residual criterion |Av - theta v| <= tol.
inline EigenPair power_iteration(const Eigen::MatrixXd& A, const PowerOptions& opts = {}) {
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) throw config_error("power_iteration needs a square nonempty matrix");
  double shift = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double radius = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
    shift = std::max(shift, radius - A(i, i));
  }
  Eigen::VectorXd v;
  if (opts.warm_start && opts.warm_start->size() == n && opts.warm_start->norm() > 0.0) {
    v = opts.warm_start->normalized();
  } else {
    Substream rng(opts.seed, {tag::solver, 0x9e});
    v.resize(n);
    rng.fill_gaussian(v);
    v.normalize();
  }
  double theta = 0.0, res = 0.0;
  for (int t = 1; t <= opts.max_iter; ++t) {
    Eigen::VectorXd w = A * v;
    theta = v.dot(w);
    res = (w - theta * v).norm();
    if (res <= opts.tol) return {v, theta, t, res};
    w += shift * v;
    const double nw = w.norm();
    if (nw > 0.0) v = w / nw;
  }
  throw solver_error("power iteration did not reach tol " + std::to_string(opts.tol) + " in " +
                     std::to_string(opts.max_iter) + " iterations; residual " + std::to_string(res));
}

namespace detail {

// Lanczos with full reorthogonalization; used for the large dense operators
// where plain power iteration is too slow on small spectral gaps. Falls back
// to a full eigendecomposition for small n. Best-effort: returns the top Ritz
// pair with its true residual rather than failing a whole experiment trial.
inline EigenPair top_eigen_sym(const Eigen::MatrixXd& A, double rel_tol = 1e-8,
                               std::uint64_t seed = 0x9a17, const Eigen::VectorXd* warm = nullptr) {
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) throw config_error("eigensolver needs a square nonempty matrix");
  if (n <= 256) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EigenPair out;
    out.vec = es.eigenvectors().col(n - 1);
    out.value = es.eigenvalues()(n - 1);
    out.residual = (A * out.vec - out.value * out.vec).norm();
    out.iterations = 1;
    return out;
  }
  const int mmax = static_cast<int>(std::min<Eigen::Index>(n, 240));
  Eigen::MatrixXd Q(n, mmax + 1);
  Eigen::VectorXd alpha(mmax), beta(mmax);
  if (warm && warm->size() == n && warm->norm() > 0.0) {
    Q.col(0) = warm->normalized();
  } else {
    Substream rng(seed, {tag::solver, 0x1a});
    Eigen::VectorXd q0(n);
    rng.fill_gaussian(q0);
    Q.col(0) = q0.normalized();
  }
  auto ritz = [&](int m, bool finalize) -> std::optional<EigenPair> {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha(i);
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const double theta = es.eigenvalues()(m - 1);
    const Eigen::VectorXd s = es.eigenvectors().col(m - 1);
    const double est = (m <= mmax && !finalize) ? beta(m - 1) * std::abs(s(m - 1)) : 0.0;
    if (!finalize && est > rel_tol * std::max(1.0, std::abs(theta))) return std::nullopt;
    EigenPair out;
    out.vec = (Q.leftCols(m) * s).normalized();
    out.value = theta;
    out.iterations = m;
    out.residual = (A * out.vec - theta * out.vec).norm();
    if (!finalize && out.residual > 10.0 * rel_tol * std::max(1.0, std::abs(theta))) return std::nullopt;
    return out;
  };
  for (int j = 0; j < mmax; ++j) {
    Eigen::VectorXd w = A * Q.col(j);
    alpha(j) = Q.col(j).dot(w);
    w -= alpha(j) * Q.col(j);
    if (j > 0) w -= beta(j - 1) * Q.col(j - 1);
    w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    beta(j) = w.norm();
    if (beta(j) < 1e-13 * std::max(1.0, std::abs(alpha(j)))) {
      auto out = ritz(j + 1, true);
      return *out;
    }
    if ((j + 1) % 5 == 0 || j == mmax - 1) {
      if (auto out = ritz(j + 1, j == mmax - 1)) return *out;
    }
    Q.col(j + 1) = w / beta(j);
  }
  auto out = ritz(mmax, true);
  return *out;
}

struct SymLayout {
  long K = 0;
  std::vector<long> n, off;
  long total = 0;
};

inline SymLayout layout_of(const SymObservations& sym) {
  SymLayout lay;
  lay.K = sym.lambda_sym.rows();
  if (lay.K == 0 || sym.lambda_sym.cols() != lay.K)
    throw config_error("symmetrized observations need a square nonempty snr matrix");
  if (static_cast<long>(sym.sym_blocks.size()) != lay.K)
    throw config_error("sym_blocks size does not match snr matrix");
  lay.n.resize(lay.K);
  lay.off.resize(lay.K);
  for (long k = 0; k < lay.K; ++k) {
    const auto& d = sym.sym_blocks[k][k];
    if (d.rows() == 0 || d.rows() != d.cols()) throw config_error("diagonal block " + std::to_string(k) + " not square");
    lay.n[k] = d.rows();
    lay.off[k] = lay.total;
    lay.total += lay.n[k];
  }
  for (long k = 0; k < lay.K; ++k)
    for (long l = k + 1; l < lay.K; ++l) {
      const auto& b = sym.sym_blocks[k][l];
      if (b.rows() != lay.n[k] || b.cols() != lay.n[l])
        throw config_error("block (" + std::to_string(k) + "," + std::to_string(l) + ") has wrong shape");
    }
  return lay;
}

// Full n x n symmetric assembly; per-block factor f(k,l) applied entrywise.
template <typename Factor>
inline Eigen::MatrixXd assemble_full(const SymObservations& sym, const SymLayout& lay, Factor&& f) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(lay.total, lay.total);
  for (long k = 0; k < lay.K; ++k) {
    const double fkk = f(k, k);
    if (fkk != 0.0) A.block(lay.off[k], lay.off[k], lay.n[k], lay.n[k]) = fkk * sym.sym_blocks[k][k];
    for (long l = k + 1; l < lay.K; ++l) {
      const double fkl = f(k, l);
      if (fkl == 0.0) continue;
      A.block(lay.off[k], lay.off[l], lay.n[k], lay.n[l]) = fkl * sym.sym_blocks[k][l];
      A.block(lay.off[l], lay.off[k], lay.n[l], lay.n[k]) = fkl * sym.sym_blocks[k][l].transpose();
    }
  }
  return A;
}

inline std::vector<Eigen::VectorXd> split_groups(const Eigen::VectorXd& x, const SymLayout& lay) {
  std::vector<Eigen::VectorXd> parts(lay.K);
  for (long k = 0; k < lay.K; ++k) parts[k] = x.segment(lay.off[k], lay.n[k]);
  return parts;
}

}  // namespace detail

struct EstimateSet {
  enum class Scale { posterior_mean, unit_scale_free };
  std::vector<Eigen::VectorXd> xhat;
  Scale scale = Scale::unit_scale_free;
};

// Leading eigenvector of the observed matrix with unobserved (zero-snr)
// blocks zeroed out, split back into per-group estimates. Scale-free.
inline EstimateSet joint_pca(const SymObservations& sym) {
  const auto lay = detail::layout_of(sym);
  bool any = false;
  for (long k = 0; k < lay.K; ++k)
    for (long l = k; l < lay.K; ++l) any = any || sym.lambda_sym(k, l) > 0.0;
  if (!any) throw config_error("joint pca needs at least one observed block with positive snr");
  const Eigen::MatrixXd A = detail::assemble_full(
      sym, lay, [&](long k, long l) { return sym.lambda_sym(k, l) > 0.0 ? 1.0 : 0.0; });
  const EigenPair top = detail::top_eigen_sym(A);
  EstimateSet est;
  est.xhat = detail::split_groups(top.vec, lay);
  est.scale = EstimateSet::Scale::unit_scale_free;
  return est;
}

// Leading eigenvector of  w_k Y_kk + sum_{l != k} w_l Y_kl Y_kl^T  for one
// target group: the diagonal block enters linearly, cross blocks through
// their Gram matrices. Scale-free estimate of group k.
inline Eigen::VectorXd weighted_pca(const SymObservations& sym, const Eigen::VectorXd& w, long k,
                                    const Eigen::VectorXd* warm = nullptr) {
  const auto lay = detail::layout_of(sym);
  if (k < 0 || k >= lay.K) throw config_error("weighted_pca target group out of range");
  if (w.size() != lay.K) throw config_error("weighted_pca needs one weight per group");
  if ((w.array() < 0.0).any()) throw config_error("weighted_pca weights must be nonnegative");
  if (!(w.array() > 0.0).any()) throw config_error("weighted_pca weights are all zero");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(lay.n[k], lay.n[k]);
  if (w(k) > 0.0) M = w(k) * sym.sym_blocks[k][k];
  for (long l = 0; l < lay.K; ++l) {
    if (l == k || w(l) <= 0.0) continue;
    if (l > k) {
      const auto& B = sym.sym_blocks[k][l];
      M.noalias() += w(l) * (B * B.transpose());
    } else {
      const auto& B = sym.sym_blocks[l][k];
      M.noalias() += w(l) * (B.transpose() * B);
    }
  }
  return detail::top_eigen_sym(M, 1e-8, 0x9a17, warm).vec;
}

struct GridSearchResult {
  std::vector<Eigen::VectorXd> weights;   // best simplex point per group
  std::vector<double> loss;               // its optimally-scaled diagonal mse
  std::vector<Eigen::VectorXd> estimate;  // winning eigenvector per group (unit scale)
};

// Exhaustive search over the weight simplex lattice {c/m : sum c = m}. The
// criterion is the per-realization scale-optimized diagonal-block mse against
// the supplied ground truth, so this is explicitly an oracle procedure.
inline GridSearchResult weight_grid_search(const SymObservations& sym,
                                           const std::vector<Eigen::VectorXd>& truth,
                                           int resolution = 16) {
  const auto lay = detail::layout_of(sym);
  if (resolution < 1) throw config_error("weight grid needs resolution >= 1");
  if (static_cast<long>(truth.size()) != lay.K) throw config_error("truth must have one vector per group");
  for (long k = 0; k < lay.K; ++k)
    if (truth[k].size() != lay.n[k]) throw config_error("truth vector " + std::to_string(k) + " has wrong length");

  std::vector<Eigen::VectorXd> grid;
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(lay.K);
  std::function<void(long, int)> enumerate = [&](long pos, int left) {
    if (pos == lay.K - 1) {
      comp(pos) = left;
      grid.push_back(comp / static_cast<double>(resolution));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      comp(pos) = c;
      enumerate(pos + 1, left - c);
    }
  };
  enumerate(0, resolution);

  GridSearchResult out;
  out.weights.resize(lay.K);
  out.loss.assign(lay.K, std::numeric_limits<double>::infinity());
  out.estimate.resize(lay.K);
  for (long k = 0; k < lay.K; ++k) {
    // Gram matrices are weight-independent: build each candidate operator by
    // combination instead of re-multiplying blocks per grid point.
    Eigen::MatrixXd diag_part = sym.sym_blocks[k][k];
    std::vector<Eigen::MatrixXd> gram(lay.K);
    for (long l = 0; l < lay.K; ++l) {
      if (l == k) continue;
      if (l > k) {
        const auto& B = sym.sym_blocks[k][l];
        gram[l].noalias() = B * B.transpose();
      } else {
        const auto& B = sym.sym_blocks[l][k];
        gram[l].noalias() = B.transpose() * B;
      }
    }
    Eigen::VectorXd warm;
    for (const auto& w : grid) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(lay.n[k], lay.n[k]);
      if (w(k) > 0.0) M = w(k) * diag_part;
      for (long l = 0; l < lay.K; ++l)
        if (l != k && w(l) > 0.0) M += w(l) * gram[l];
      const EigenPair top =
          detail::top_eigen_sym(M, 1e-8, 0x9a17, warm.size() > 0 ? &warm : nullptr);
      warm = top.vec;
      const double loss = diag_mse_optimal_scale(truth[k], top.vec);
      if (loss < out.loss[k]) {
        out.loss[k] = loss;
        out.weights[k] = w;
        out.estimate[k] = top.vec;
      }
    }
  }
  return out;
}

struct GdConfig {
  int steps = 300;
  double gamma = 0.05;
  enum class Schedule { constant, inv_t };
  Schedule schedule = Schedule::constant;
  std::vector<Eigen::VectorXd> init;  // empty: joint pca rescaled to |x_k| = sqrt(n_k)
  int max_restarts = 4;
  // when set, receives the per-group iterate after every accepted step of the
  // final (non-diverging) attempt
  std::vector<std::vector<Eigen::VectorXd>>* trace = nullptr;
};

// Projected-power ascent on the matrix-form likelihood: each group moves along
// the data term sum_l sqrt(snr_kl/N) Y_kl x_l minus the norm-coupling term
// (N^-1 sum_l snr_kl |x_l|^2) x_k. All groups update simultaneously.
inline EstimateSet gradient_descent(const SymObservations& sym, long N, const GdConfig& cfg = {}) {
  const auto lay = detail::layout_of(sym);
  if (N <= 0) throw config_error("gradient descent needs N >= 1");
  if (cfg.steps < 0) throw config_error("gradient descent needs steps >= 0");
  const double Nd = static_cast<double>(N);
  const Eigen::MatrixXd S = detail::assemble_full(
      sym, lay, [&](long k, long l) { return std::sqrt(sym.lambda_sym(k, l) / Nd); });

  Eigen::VectorXd x0(lay.total);
  if (!cfg.init.empty()) {
    if (static_cast<long>(cfg.init.size()) != lay.K) throw config_error("init must have one vector per group");
    for (long k = 0; k < lay.K; ++k) {
      if (cfg.init[k].size() != lay.n[k]) throw config_error("init vector " + std::to_string(k) + " has wrong length");
      x0.segment(lay.off[k], lay.n[k]) = cfg.init[k];
    }
  } else {
    const EstimateSet pca = joint_pca(sym);
    for (long k = 0; k < lay.K; ++k) {
      const double nrm = pca.xhat[k].norm();
      x0.segment(lay.off[k], lay.n[k]) =
          nrm > 0.0 ? Eigen::VectorXd(pca.xhat[k] * (std::sqrt(static_cast<double>(lay.n[k])) / nrm))
                    : Eigen::VectorXd::Zero(lay.n[k]);
    }
  }

  double gamma = cfg.gamma;
  for (int attempt = 0;; ++attempt) {
    Eigen::VectorXd x = x0;
    bool diverged = false;
    double worst = 0.0;
    if (cfg.trace) cfg.trace->clear();
    for (int t = 1; t <= cfg.steps && !diverged; ++t) {
      const double gt = cfg.schedule == GdConfig::Schedule::constant ? gamma : gamma / t;
      Eigen::VectorXd sq(lay.K);
      for (long l = 0; l < lay.K; ++l) sq(l) = x.segment(lay.off[l], lay.n[l]).squaredNorm();
      const Eigen::VectorXd y = S * x;
      for (long k = 0; k < lay.K; ++k) {
        const double ck = sym.lambda_sym.row(k).dot(sq) / Nd;
        auto xk = x.segment(lay.off[k], lay.n[k]);
        xk += gt * (y.segment(lay.off[k], lay.n[k]) - ck * xk);
        const double nrm = xk.norm();
        if (!std::isfinite(nrm) || nrm > 1e6 * std::sqrt(static_cast<double>(lay.n[k]))) {
          diverged = true;
          worst = nrm;
        }
      }
      if (cfg.trace && !diverged) cfg.trace->push_back(detail::split_groups(x, lay));
    }
    if (!diverged) {
      EstimateSet est;
      est.xhat = detail::split_groups(x, lay);
      est.scale = EstimateSet::Scale::posterior_mean;
      return est;
    }
    if (attempt >= cfg.max_restarts)
      throw numeric_error("gradient descent diverged (iterate norm " + std::to_string(worst) +
                          ") even after step halving; try a smaller gamma");
    gamma *= 0.5;
  }
}

struct AmpOptions {
  int max_iter = 200;
  double tol = 1e-8;         // early stop on relative change of m
  double damping = 0.0;      // 0 is the textbook update; ~0.3 steadies the
                             // finite-size trajectory near weakly coupled edges
  bool include_self = true;  // keep within-group self-terms exactly as displayed
  bool record_trajectory = false;
  std::uint64_t seed = 0xa111b222;
  double init_std = 1e-3;  // m^0 entries iid N(0, init_std^2)
};

struct AmpState {
  std::vector<Eigen::VectorXd> m, v, a, b;
  int t = 0;
};

struct AmpResult {
  EstimateSet estimate;  // posterior means m^T
  AmpState state;        // final m, v, a, b
  bool converged = false;
  int iterations = 0;
  std::vector<AmpState> trajectory;
};

namespace detail {

// eta / eta' application with the per-coordinate prior; tilt failures surface
// as numeric errors carrying the iteration index.
inline void apply_eta(const Prior& prior, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      Eigen::Index begin, Eigen::Index len, int t, Eigen::VectorXd& m_out,
                      Eigen::VectorXd& v_out) {
  for (Eigen::Index i = begin; i < begin + len; ++i) {
    try {
      m_out(i) = prior.posterior_mean(a(i), b(i));
      v_out(i) = prior.posterior_variance(a(i), b(i));
    } catch (const std::domain_error& e) {
      throw numeric_error("amp update undefined at iteration " + std::to_string(t) + ": " + e.what());
    }
    if (v_out(i) < -1e-12)
      throw numeric_error("amp posterior variance " + std::to_string(v_out(i)) +
                          " negative at iteration " + std::to_string(t));
    if (v_out(i) < 0.0) v_out(i) = 0.0;
  }
}

inline void check_finite(const Eigen::VectorXd& x, const char* what, int t) {
  if (!x.allFinite())
    throw numeric_error(std::string(what) + " contains non-finite entries at iteration " + std::to_string(t));
}

}  // namespace detail

// Groupwise approximate message passing. Per iteration, with s_kl the
// symmetric snr matrix and B the unit-variance symmetrized blocks:
//   a_k = sum_l sqrt(s_kl/N) B_kl m_l - [(1/N) sum_l s_kl B_kl^{.2} v_l] . m_k^{prev}
//   b_k = (1/N) sum_l s_kl (|m_l|^2 + sum(v_l)) - [(1/N) sum_l s_kl B_kl^{.2} v_l']_i
//   m <- eta(a, b), v <- eta'(a, b), all groups simultaneously.
// include_self=false removes the i=i data entries and the j=i terms of b,
// which matches the per-coordinate algorithm's k != i sums exactly.
inline AmpResult amp_groupwise(const SymObservations& sym, const ProblemSpec& spec, long N,
                               const AmpOptions& opts = {},
                               const std::vector<Eigen::VectorXd>* init = nullptr) {
  const auto lay = detail::layout_of(sym);
  if (static_cast<long>(spec.priors.size()) != lay.K) throw config_error("spec priors do not match observation groups");
  if (N <= 0) throw config_error("amp needs N >= 1");
  const double Nd = static_cast<double>(N);

  Eigen::MatrixXd S = detail::assemble_full(
      sym, lay, [&](long k, long l) { return std::sqrt(sym.lambda_sym(k, l) / Nd); });
  if (!opts.include_self) S.diagonal().setZero();
  const Eigen::MatrixXd S2 = S.cwiseProduct(S);

  Eigen::VectorXd m(lay.total);
  if (init) {
    if (static_cast<long>(init->size()) != lay.K) throw config_error("amp init must have one vector per group");
    for (long k = 0; k < lay.K; ++k) {
      if ((*init)[k].size() != lay.n[k]) throw config_error("amp init vector " + std::to_string(k) + " has wrong length");
      m.segment(lay.off[k], lay.n[k]) = (*init)[k];
    }
  } else {
    for (long k = 0; k < lay.K; ++k) {
      Substream rng(opts.seed, {tag::init, static_cast<std::uint64_t>(k)});
      auto seg = m.segment(lay.off[k], lay.n[k]);
      rng.fill_gaussian(seg);
      seg *= opts.init_std;
    }
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.total);
  Eigen::VectorXd m_prev = Eigen::VectorXd::Zero(lay.total);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(lay.total), b = Eigen::VectorXd::Zero(lay.total);
  Eigen::VectorXd m_new(lay.total), v_new(lay.total);

  AmpResult out;
  auto snapshot = [&](int t) {
    AmpState st;
    st.m = detail::split_groups(m, lay);
    st.v = detail::split_groups(v, lay);
    st.a = detail::split_groups(a, lay);
    st.b = detail::split_groups(b, lay);
    st.t = t;
    return st;
  };

  int t = 0;
  for (t = 0; t < opts.max_iter; ++t) {
    Eigen::VectorXd m2(lay.K), v1(lay.K);
    for (long l = 0; l < lay.K; ++l) {
      m2(l) = m.segment(lay.off[l], lay.n[l]).squaredNorm();
      v1(l) = v.segment(lay.off[l], lay.n[l]).sum();
    }
    const Eigen::VectorXd onsager = S2 * v;
    a.noalias() = S * m;
    a -= onsager.cwiseProduct(m_prev);
    for (long k = 0; k < lay.K; ++k) {
      const double base = sym.lambda_sym.row(k).dot(m2 + v1) / Nd;
      auto bk = b.segment(lay.off[k], lay.n[k]);
      bk.setConstant(base);
      bk -= onsager.segment(lay.off[k], lay.n[k]);
      if (!opts.include_self) {
        const double skk = sym.lambda_sym(k, k) / Nd;
        if (skk > 0.0)
          bk -= skk * (m.segment(lay.off[k], lay.n[k]).cwiseAbs2() + v.segment(lay.off[k], lay.n[k]));
      }
    }
    detail::check_finite(a, "amp channel mean", t);
    detail::check_finite(b, "amp channel tilt", t);
    for (long k = 0; k < lay.K; ++k)
      detail::apply_eta(spec.priors[k], a, b, lay.off[k], lay.n[k], t, m_new, v_new);
    if (opts.damping > 0.0) {
      m_new = (1.0 - opts.damping) * m_new + opts.damping * m;
      v_new = (1.0 - opts.damping) * v_new + opts.damping * v;
    }
    const double rel = (m_new - m).norm() / std::max(m.norm(), 1e-12);
    m_prev = m;
    m = m_new;
    v = v_new;
    if (opts.record_trajectory) out.trajectory.push_back(snapshot(t + 1));
    if (rel < opts.tol) {
      out.converged = true;
      ++t;
      break;
    }
  }
  out.iterations = t;
  out.state = snapshot(t);
  out.estimate.xhat = out.state.m;
  out.estimate.scale = EstimateSet::Scale::posterior_mean;
  return out;
}

struct AmpFlatState {
  Eigen::VectorXd m, v, a, b;
  int t = 0;
};

struct AmpGeneralResult {
  Eigen::VectorXd m, v, a, b;
  bool converged = false;
  int iterations = 0;
  std::vector<AmpFlatState> trajectory;
};

namespace detail {

inline void check_amp_inputs(const Eigen::MatrixXd& y_tilde, const Eigen::MatrixXd& lambda_tilde,
                             const std::vector<Prior>& priors, long N) {
  const Eigen::Index n = y_tilde.rows();
  if (n == 0 || y_tilde.cols() != n) throw config_error("y_tilde must be square and nonempty");
  if (lambda_tilde.rows() != n || lambda_tilde.cols() != n) throw config_error("lambda_tilde shape mismatch");
  if (static_cast<Eigen::Index>(priors.size()) != n) throw config_error("need one prior per coordinate");
  if (N <= 0) throw config_error("amp needs N >= 1");
  if (y_tilde.diagonal().cwiseAbs().maxCoeff() > 0.0 || lambda_tilde.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw config_error("y_tilde and lambda_tilde must have zero diagonals");
  if ((lambda_tilde.array() < 0.0).any()) throw config_error("lambda_tilde entries must be nonnegative");
}

}  // namespace detail

// Per-coordinate AMP on the combined matrix ytilde with entrywise snr
// lambda_tilde (both zero-diagonal). Because ytilde = sqrt(lambda_tilde) .*
// (unit-variance data), the tilt term (lambda_tilde - ytilde^{.2}) v / N used
// here equals lambda_tilde .* (1 - data^{.2}) v / N of the groupwise form.
inline AmpGeneralResult amp_general(const Eigen::MatrixXd& y_tilde, const Eigen::MatrixXd& lambda_tilde,
                                    const std::vector<Prior>& priors, long N, const AmpOptions& opts = {},
                                    const Eigen::VectorXd* init = nullptr) {
  detail::check_amp_inputs(y_tilde, lambda_tilde, priors, N);
  const Eigen::Index n = y_tilde.rows();
  const double Nd = static_cast<double>(N);
  const Eigen::MatrixXd S = y_tilde / std::sqrt(Nd);
  const Eigen::MatrixXd S2 = S.cwiseProduct(S);
  const Eigen::MatrixXd Ln = lambda_tilde / Nd;

  Eigen::VectorXd m(n);
  if (init) {
    if (init->size() != n) throw config_error("amp init has wrong length");
    m = *init;
  } else {
    Substream rng(opts.seed, {tag::init, 0});
    rng.fill_gaussian(m);
    m *= opts.init_std;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a(n), b(n), m_new(n), v_new(n);

  AmpGeneralResult out;
  int t = 0;
  for (t = 0; t < opts.max_iter; ++t) {
    a.noalias() = S * m;
    a -= (S2 * v).cwiseProduct(m_prev);
    b.noalias() = Ln * (m.cwiseAbs2() + v);
    b.noalias() -= S2 * v;
    detail::check_finite(a, "amp channel mean", t);
    detail::check_finite(b, "amp channel tilt", t);
    for (Eigen::Index i = 0; i < n; ++i) detail::apply_eta(priors[i], a, b, i, 1, t, m_new, v_new);
    if (opts.damping > 0.0) {
      m_new = (1.0 - opts.damping) * m_new + opts.damping * m;
      v_new = (1.0 - opts.damping) * v_new + opts.damping * v;
    }
    const double rel = (m_new - m).norm() / std::max(m.norm(), 1e-12);
    m_prev = m;
    m = m_new;
    v = v_new;
    if (opts.record_trajectory) out.trajectory.push_back({m, v, a, b, t + 1});
    if (rel < opts.tol) {
      out.converged = true;
      ++t;
      break;
    }
  }
  out.iterations = t;
  out.m = m;
  out.v = v;
  out.a = a;
  out.b = b;
  return out;
}

struct RelaxedBpResult {
  Eigen::MatrixXd m_msg, v_msg;  // (i,j): message i -> j; diagonal unused
  Eigen::VectorXd marginal_mean, marginal_var;
  int iterations = 0;
};

// Edge-message relaxed belief propagation; quadratic state, so restricted to
// small n. Message i->j digests every edge into i except the one from j.
inline RelaxedBpResult relaxed_bp(const Eigen::MatrixXd& y_tilde, const Eigen::MatrixXd& lambda_tilde,
                                  const std::vector<Prior>& priors, long N, int T = 30,
                                  const Eigen::VectorXd* init = nullptr) {
  detail::check_amp_inputs(y_tilde, lambda_tilde, priors, N);
  const Eigen::Index n = y_tilde.rows();
  if (n > 64) throw resource_error("relaxed bp keeps n^2 messages; n = " + std::to_string(n) + " exceeds 64");
  if (T < 0) throw config_error("relaxed bp needs T >= 0");
  const double Nd = static_cast<double>(N);
  const Eigen::MatrixXd S = y_tilde / std::sqrt(Nd);
  const Eigen::MatrixXd S2 = S.cwiseProduct(S);
  const Eigen::MatrixXd Ln = lambda_tilde / Nd;

  Eigen::VectorXd m0(n);
  if (init) {
    if (init->size() != n) throw config_error("bp init has wrong length");
    m0 = *init;
  } else {
    Substream rng(0xb9b9, {tag::init, 0});
    rng.fill_gaussian(m0);
    m0 *= 1e-3;
  }
  Eigen::MatrixXd m = m0.replicate(1, n);  // m(i, j)
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  m.diagonal().setZero();

  Eigen::VectorXd sum_a(n), sum_b(n);
  Eigen::MatrixXd A(n, n), B(n, n);
  for (int t = 0; t < T; ++t) {
    A = S.cwiseProduct(m);
    B = Ln.cwiseProduct(m.cwiseAbs2() + v) - S2.cwiseProduct(v);
    sum_a = A.colwise().sum();  // over senders k for each receiver i
    sum_b = B.colwise().sum();
    Eigen::MatrixXd m_next(n, n), v_next(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) {
          m_next(i, j) = 0.0;
          v_next(i, j) = 0.0;
          continue;
        }
        const double ai = sum_a(i) - A(j, i);
        const double bi = sum_b(i) - B(j, i);
        if (!std::isfinite(ai) || !std::isfinite(bi))
          throw numeric_error("bp message non-finite at iteration " + std::to_string(t));
        try {
          m_next(i, j) = priors[i].posterior_mean(ai, bi);
          v_next(i, j) = priors[i].posterior_variance(ai, bi);
        } catch (const std::domain_error& e) {
          throw numeric_error("bp update undefined at iteration " + std::to_string(t) + ": " + e.what());
        }
      }
    m.swap(m_next);
    v.swap(v_next);
  }
  RelaxedBpResult out;
  A = S.cwiseProduct(m);
  B = Ln.cwiseProduct(m.cwiseAbs2() + v) - S2.cwiseProduct(v);
  sum_a = A.colwise().sum();
  sum_b = B.colwise().sum();
  out.marginal_mean.resize(n);
  out.marginal_var.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out.marginal_mean(i) = priors[i].posterior_mean(sum_a(i), sum_b(i));
      out.marginal_var(i) = priors[i].posterior_variance(sum_a(i), sum_b(i));
    } catch (const std::domain_error& e) {
      throw numeric_error(std::string("bp marginal undefined: ") + e.what());
    }
  }
  out.m_msg = m;
  out.v_msg = v;
  out.iterations = T;
  return out;
}

// Combined matrix and entrywise snr in the per-coordinate convention:
// ytilde_ij = sqrt(ltilde_ij) * (symmetrized unit-variance entry), zero diagonal.
struct TildeView {
  Eigen::MatrixXd y, lambda;
  std::vector<Prior> priors;
};

inline TildeView make_tilde(const SymObservations& sym, const ProblemSpec& spec) {
  const auto lay = detail::layout_of(sym);
  if (static_cast<long>(spec.priors.size()) != lay.K) throw config_error("spec priors do not match observation groups");
  TildeView tv;
  tv.y = detail::assemble_full(sym, lay, [&](long k, long l) { return std::sqrt(sym.lambda_sym(k, l)); });
  tv.lambda = Eigen::MatrixXd::Zero(lay.total, lay.total);
  for (long k = 0; k < lay.K; ++k)
    for (long l = k; l < lay.K; ++l) {
      const double s = sym.lambda_sym(k, l);
      tv.lambda.block(lay.off[k], lay.off[l], lay.n[k], lay.n[l]).setConstant(s);
      if (l > k) tv.lambda.block(lay.off[l], lay.off[k], lay.n[l], lay.n[k]).setConstant(s);
    }
  tv.y.diagonal().setZero();
  tv.lambda.diagonal().setZero();
  tv.priors.reserve(lay.total);
  for (long k = 0; k < lay.K; ++k)
    for (long i = 0; i < lay.n[k]; ++i) tv.priors.push_back(spec.priors[k]);
  return tv;
}

}  // namespace blockspike
