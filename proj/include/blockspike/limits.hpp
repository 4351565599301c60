#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blockspike/errors.hpp"
#include "blockspike/priors.hpp"
#include "blockspike/rng.hpp"

namespace blockspike {

// Problem data for the asymptotic limit: group fractions beta_k, pairwise
// snr matrix lambda (directed entries, both (k,l) and (l,k) count), side
// information snr r_k, and one prior per group.
struct ProblemSpec {
  Eigen::VectorXd beta;
  Eigen::MatrixXd lambda;
  Eigen::VectorXd r;
  std::vector<Prior> priors;

  int K() const { return static_cast<int>(beta.size()); }

  void validate() const {
    const int k = K();
    if (k < 1) throw config_error("spec needs at least one group");
    if (lambda.rows() != k || lambda.cols() != k)
      throw config_error("lambda must be K x K");
    if (r.size() != k) throw config_error("r must have K entries");
    if (static_cast<int>(priors.size()) != k)
      throw config_error("priors must have K entries");
    if (!beta.allFinite() || (beta.array() <= 0.0).any())
      throw config_error("beta entries must be positive and finite");
    if (!lambda.allFinite() || (lambda.array() < 0.0).any())
      throw config_error("lambda entries must be nonnegative and finite");
    if (!r.allFinite() || (r.array() < 0.0).any())
      throw config_error("r entries must be nonnegative and finite");
  }
};

struct SolverOptions {
  int quad_order = kDefaultQuadOrder;
  double fp_tol = 1e-12;            // fixed-point step size to declare converged
  int max_iter = 20000;
  double damping = 0.5;             // initial damping, adaptively reduced
  int random_starts = 32;
  std::uint64_t seed = 0xb10c501ull;
  double stationarity_tol = 1e-10;  // max residual ||q - T(q)|| accepted
  double value_tie_tol = 1e-7;      // objective tie window for uniqueness
  double q_distinct_tol = 1e-4;     // q-distance that counts as a distinct point
};

struct SaddlePoint {
  Eigen::VectorXd q_star;
  Eigen::VectorXd r_tilde_star;
  double value = 0.0;
  std::vector<Eigen::VectorXd> stationary_points;  // deduped, best first
  bool unique = true;
};

struct MmseResult {
  Eigen::VectorXd vector_mmse;                  // per group, 1 - q_k/beta_k
  Eigen::MatrixXd block_mmse;                   // per pair, 1 - (q_k/b_k)(q_l/b_l)
  std::vector<bool> is_bound_only_vector;       // q_k > 0 with no side channel
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> is_bound_only_block;
};

namespace detail {

// golden-section refinement of a coarse-grid maximum
template <typename F>
double maximize_1d(F&& f, double lo, double hi, int grid = 2049, double* argmax = nullptr) {
  double best_x = lo, best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    const double v = f(x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  const double cell = (hi - lo) / (grid - 1);
  double a = std::max(lo, best_x - cell), b = std::min(hi, best_x + cell);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 90 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b), vm = f(xm);
  const double out_v = std::max(vm, best_v);
  if (argmax) *argmax = vm >= best_v ? xm : best_x;
  return out_v;
}

// Workspace binding a spec to a quadrature rule. D'_k is increasing with
// sup 1/2, so the scalar inverse below is a plain monotone bisection.
class LimitProblem {
 public:
  LimitProblem(const ProblemSpec& spec, const SolverOptions& opts)
      : spec_(spec), quad_(Quadrature::gauss_hermite(opts.quad_order)) {
    lambda_sym_ = spec.lambda + spec.lambda.transpose();
  }

  const ProblemSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& lambda_sym() const { return lambda_sym_; }

  double dvalue(int k, double gamma) const {
    return relative_entropy(spec_.priors[k], gamma, quad_);
  }
  double dprime(int k, double gamma) const {
    return relative_entropy_deriv(spec_.priors[k], gamma, quad_);
  }

  // smallest gamma >= gamma_min with D'_k(gamma) = target (target < 1/2)
  double invert_dprime(int k, double target, double gamma_min) const {
    if (target <= dprime(k, gamma_min)) return gamma_min;
    if (spec_.priors[k].is_gaussian())
      return std::max(gamma_min, 2.0 * target / (1.0 - 2.0 * target));
    double hi = std::max(1.0, 2.0 * gamma_min);
    while (dprime(k, hi) < target) {
      hi *= 2.0;
      if (hi > 1e13)
        throw numeric_error("D' inversion bracket blew up for group " + std::to_string(k));
    }
    double lo = gamma_min;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dprime(k, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  Eigen::VectorXd t_map(const Eigen::VectorXd& q) const {
    Eigen::VectorXd rt = lambda_sym_ * q;
    Eigen::VectorXd out(spec_.K());
    for (int k = 0; k < spec_.K(); ++k) {
      const double v = 2.0 * spec_.beta(k) * dprime(k, spec_.r(k) + rt(k));
      out(k) = std::clamp(v, 0.0, spec_.beta(k));
    }
    return out;
  }

  // inner infimum over r_tilde_k >= 0 of beta_k D_k(r_k + t) - t q_k / 2
  double psi(int k, double qk, double* r_tilde_out = nullptr) const {
    const double beta = spec_.beta(k), r = spec_.r(k);
    const double target = qk / (2.0 * beta);
    if (target >= 0.5 * (1.0 - 1e-12)) {
      // saturated channel: infimum attained in the limit r_tilde -> inf
      if (r_tilde_out) *r_tilde_out = std::numeric_limits<double>::infinity();
      if (spec_.priors[k].is_gaussian()) return -std::numeric_limits<double>::infinity();
      return beta * (0.5 * r - spec_.priors[k].entropy());
    }
    const double gamma_star = invert_dprime(k, target, r);
    const double rt = gamma_star - r;
    if (r_tilde_out) *r_tilde_out = rt;
    return beta * dvalue(k, gamma_star) - 0.5 * rt * qk;
  }

  double objective(const Eigen::VectorXd& q) const {
    double v = 0.5 * q.dot(spec_.lambda * q);
    for (int k = 0; k < spec_.K(); ++k) v += psi(k, q(k));
    return v;
  }

 private:
  const ProblemSpec& spec_;
  const Quadrature& quad_;
  Eigen::MatrixXd lambda_sym_;
};

struct FixedPointRun {
  Eigen::VectorXd q;
  bool converged = false;
};

inline FixedPointRun run_fixed_point(const LimitProblem& prob, Eigen::VectorXd q,
                                     const SolverOptions& opts) {
  const auto& beta = prob.spec().beta;
  q = q.cwiseMax(0.0).cwiseMin(beta);
  double damping = opts.damping;
  double prev_delta = std::numeric_limits<double>::infinity();
  FixedPointRun run;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd qn = (1.0 - damping) * q + damping * prob.t_map(q);
    const double delta = (qn - q).lpNorm<Eigen::Infinity>();
    if (delta > prev_delta) damping = std::max(0.5 * damping, 0.05);
    prev_delta = delta;
    q = qn;
    if (delta < opts.fp_tol) {
      run.converged = true;
      break;
    }
  }
  run.q = q;
  return run;
}

}  // namespace detail

// Maximizer of the variational limit
//   max_{0 <= q <= beta} inf_{r_tilde >= 0}
//     sum_k beta_k D_k(r_k + r_tilde_k) + q^T Lambda q / 2 - <r_tilde, q> / 2.
// Found by damped iteration of the stationarity map
//   T(q)_k = 2 beta_k D'_k(r_k + ((Lambda + Lambda^T) q)_k)
// from a lattice of starts plus random restarts; candidates are compared by
// the independently evaluated objective. The q_k = beta_k face can never hold
// the maximum (the inner value has derivative -inf there), so the clamp in T
// is safe.
inline SaddlePoint solve_limit(const ProblemSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  detail::LimitProblem prob(spec, opts);
  const int K = spec.K();

  std::vector<Eigen::VectorXd> starts;
  if (K <= 4) {
    const int total = static_cast<int>(std::pow(3, K));
    for (int code = 0; code < total; ++code) {
      Eigen::VectorXd s(K);
      int c = code;
      for (int k = 0; k < K; ++k) {
        s(k) = spec.beta(k) * (c % 3) / 2.0;
        c /= 3;
      }
      starts.push_back(s);
    }
  } else {
    starts.push_back(Eigen::VectorXd::Zero(K));
    starts.push_back(spec.beta);
  }
  Substream rng(opts.seed, {tag::solver, static_cast<std::uint64_t>(K)});
  for (int i = 0; i < opts.random_starts; ++i) {
    Eigen::VectorXd s(K);
    for (int k = 0; k < K; ++k) s(k) = spec.beta(k) * rng.uniform();
    starts.push_back(s);
  }

  std::vector<Eigen::VectorXd> points;
  int converged_runs = 0;
  for (const auto& s : starts) {
    const auto run = detail::run_fixed_point(prob, s, opts);
    if (!run.converged) continue;
    const double resid = (run.q - prob.t_map(run.q)).lpNorm<Eigen::Infinity>();
    if (resid > opts.stationarity_tol) continue;
    ++converged_runs;
    bool fresh = true;
    for (const auto& p : points)
      if ((p - run.q).lpNorm<Eigen::Infinity>() <= 1e-8) {
        fresh = false;
        break;
      }
    if (fresh) points.push_back(run.q);
  }
  if (converged_runs == 0)
    throw solver_error("no fixed-point start converged within " +
                       std::to_string(opts.max_iter) + " iterations");

  std::vector<double> values(points.size());
  for (size_t i = 0; i < points.size(); ++i) values[i] = prob.objective(points[i]);
  size_t best = 0;
  for (size_t i = 1; i < points.size(); ++i)
    if (values[i] > values[best]) best = i;

  SaddlePoint sp;
  sp.q_star = points[best];
  sp.r_tilde_star = prob.lambda_sym() * sp.q_star;
  sp.value = values[best];
  sp.unique = true;
  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] > values[b]; });
  for (size_t i : order) {
    sp.stationary_points.push_back(points[i]);
    if (i != best && std::abs(values[i] - sp.value) <= opts.value_tie_tol &&
        (points[i] - sp.q_star).lpNorm<Eigen::Infinity>() > opts.q_distinct_tol)
      sp.unique = false;
  }
  return sp;
}

// Limit for a diagonal Lambda (independent symmetric problems):
//   sum_k max_{q in [0, beta_k]} beta_k D_k(2 lambda_kk q) - lambda_kk q^2 / 2.
// Independent 1-d path used as an oracle for solve_limit.
inline double limit_value_decoupled_wigner(const ProblemSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  for (int k = 0; k < spec.K(); ++k)
    for (int l = 0; l < spec.K(); ++l)
      if (k != l && spec.lambda(k, l) != 0.0)
        throw config_error("wigner decoupling needs a diagonal lambda");
  if ((spec.r.array() != 0.0).any())
    throw config_error("wigner decoupling assumes r = 0");
  const auto& quad = Quadrature::gauss_hermite(opts.quad_order);
  double total = 0.0;
  for (int k = 0; k < spec.K(); ++k) {
    const double lam = spec.lambda(k, k), beta = spec.beta(k);
    if (lam == 0.0) continue;
    total += detail::maximize_1d(
        [&](double q) {
          return beta * relative_entropy(spec.priors[k], 2.0 * lam * q, quad) -
                 0.5 * lam * q * q;
        },
        0.0, beta);
  }
  return total;
}

// Limit for an anti-diagonal Lambda (bipartite pairs l = K + 1 - k, 1-based):
//   sum over pairs k < l of
//     max_{q_k} min_{q_l} beta_k D_k(2 lb q_l) + beta_l D_l(2 lb q_k) - lb q_k q_l,
// with lb = (lambda_kl + lambda_lk)/2. A middle diagonal cell (odd K) is a
// plain symmetric summand. Independent max-min path used as an oracle.
inline double limit_value_decoupled_wishart(const ProblemSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  const int K = spec.K();
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      if (l != K - 1 - k && spec.lambda(k, l) != 0.0)
        throw config_error("wishart decoupling needs an anti-diagonal lambda");
  if ((spec.r.array() != 0.0).any())
    throw config_error("wishart decoupling assumes r = 0");
  detail::LimitProblem prob(spec, opts);
  const auto& quad = Quadrature::gauss_hermite(opts.quad_order);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const int l = K - 1 - k;
    if (k > l) continue;
    if (k == l) {
      const double lam = spec.lambda(k, k), beta = spec.beta(k);
      if (lam == 0.0) continue;
      total += detail::maximize_1d(
          [&](double q) {
            return beta * relative_entropy(spec.priors[k], 2.0 * lam * q, quad) -
                   0.5 * lam * q * q;
          },
          0.0, beta);
      continue;
    }
    const double lb = 0.5 * (spec.lambda(k, l) + spec.lambda(l, k));
    if (lb == 0.0) continue;
    const double bk = spec.beta(k), bl = spec.beta(l);
    auto inner = [&](double qk) {
      // min over q_l: convex, derivative 2 lb beta_k D'_k(2 lb q_l) - lb q_k;
      // at the saturated endpoint the derivative stays negative on [0, beta_l]
      const double target = qk / (2.0 * bk);
      double ql = target >= 0.5 * (1.0 - 1e-12)
                      ? bl
                      : prob.invert_dprime(k, target, 0.0) / (2.0 * lb);
      ql = std::clamp(ql, 0.0, bl);
      return bk * relative_entropy(spec.priors[k], 2.0 * lb * ql, quad) +
             bl * relative_entropy(spec.priors[l], 2.0 * lb * qk, quad) - lb * qk * ql;
    };
    total += detail::maximize_1d(inner, 0.0, bk);
  }
  return total;
}

// MMSE limits read off the maximizer (exact when the relevant observation
// channel is present; otherwise the value is only a bound and the flag says
// so).
inline MmseResult mmse_from_saddle(const ProblemSpec& spec, const SaddlePoint& sp) {
  const int K = spec.K();
  MmseResult m;
  m.vector_mmse.resize(K);
  m.block_mmse.resize(K, K);
  m.is_bound_only_vector.assign(K, false);
  m.is_bound_only_block.resize(K, K);
  const double eps = 1e-12;
  for (int k = 0; k < K; ++k) {
    const double ok = sp.q_star(k) / spec.beta(k);
    m.vector_mmse(k) = 1.0 - ok;
    m.is_bound_only_vector[k] = sp.q_star(k) > eps && spec.r(k) == 0.0;
  }
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) {
      const double prod = (sp.q_star(k) / spec.beta(k)) * (sp.q_star(l) / spec.beta(l));
      m.block_mmse(k, l) = 1.0 - prod;
      const bool observed = spec.lambda(k, l) + spec.lambda(l, k) > 0.0;
      m.is_bound_only_block(k, l) = sp.q_star(k) * sp.q_star(l) > eps && !observed;
    }
  return m;
}

struct ImmseComponent {
  enum class Kind { SideSnr, PairSnr };
  Kind kind = Kind::PairSnr;
  int k = 0;
  int l = 0;
  static ImmseComponent side(int k) { return {Kind::SideSnr, k, k}; }
  static ImmseComponent pair(int k, int l) { return {Kind::PairSnr, k, l}; }
};

struct ImmseCheck {
  double analytic = 0.0;
  double finite_difference = 0.0;
  double rel_err = 0.0;
};

// Envelope derivatives of the limit value: d/dr_k = q_k/2 and
// d/dlambda_kl = q_k q_l / 2, compared against a central finite difference.
inline ImmseCheck immse_check(const ProblemSpec& spec, const ImmseComponent& comp,
                              double h = 1e-4, const SolverOptions& opts = {}) {
  const SaddlePoint base = solve_limit(spec, opts);
  ImmseCheck out;
  if (comp.kind == ImmseComponent::Kind::SideSnr)
    out.analytic = 0.5 * base.q_star(comp.k);
  else
    out.analytic = 0.5 * base.q_star(comp.k) * base.q_star(comp.l);

  auto value_at = [&](double delta) {
    ProblemSpec s = spec;
    if (comp.kind == ImmseComponent::Kind::SideSnr)
      s.r(comp.k) += delta;
    else
      s.lambda(comp.k, comp.l) += delta;
    return solve_limit(s, opts).value;
  };
  const double base_coord = comp.kind == ImmseComponent::Kind::SideSnr
                                ? spec.r(comp.k)
                                : spec.lambda(comp.k, comp.l);
  if (base_coord >= h)
    out.finite_difference = (value_at(h) - value_at(-h)) / (2.0 * h);
  else
    out.finite_difference = (value_at(h) - base.value) / h;
  out.rel_err = std::abs(out.finite_difference - out.analytic) /
                std::max(1e-12, std::abs(out.analytic));
  return out;
}

}
