#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "blockspike/errors.hpp"
#include "blockspike/limits.hpp"
#include "blockspike/priors.hpp"
#include "blockspike/rng.hpp"

namespace blockspike {

// Finite-size realization plan: group sizes n_k = round(beta_k N), corrected
// so the total matches round(N sum beta) and every group is nonempty.
struct InstanceSpec {
  ProblemSpec spec;
  long N = 0;
  std::vector<long> n;
  std::uint64_t seed = 0;

  long total_n() const {
    long t = 0;
    for (long v : n) t += v;
    return t;
  }

  void validate() const {
    spec.validate();
    if (N < 1) throw config_error("instance needs N >= 1");
    if (static_cast<int>(n.size()) != spec.K()) throw config_error("group sizes do not match K");
    for (long v : n)
      if (v < 1) throw config_error("every group needs at least one coordinate");
  }
};

inline InstanceSpec make_instance(ProblemSpec spec, long N, std::uint64_t seed) {
  spec.validate();
  if (N < 1) throw config_error("instance needs N >= 1");
  const int K = spec.K();
  InstanceSpec is;
  is.spec = std::move(spec);
  is.N = N;
  is.seed = seed;
  is.n.resize(K);
  double beta_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    is.n[k] = std::max<long>(1, std::lround(is.spec.beta(k) * static_cast<double>(N)));
    beta_sum += is.spec.beta(k);
  }
  // push the total onto round(N sum beta) by nudging the groups whose
  // rounding residual points the right way; keeps sizes deterministic
  const long target = std::max<long>(K, std::lround(beta_sum * static_cast<double>(N)));
  long diff = target - is.total_n();
  while (diff != 0) {
    const int dir = diff > 0 ? 1 : -1;
    int pick = -1;
    double best = -1e300;
    for (int k = 0; k < K; ++k) {
      if (dir < 0 && is.n[k] <= 1) continue;
      const double resid = dir * (is.spec.beta(k) * static_cast<double>(N) - is.n[k]);
      if (resid > best) {
        best = resid;
        pick = k;
      }
    }
    if (pick < 0) break;
    is.n[pick] += dir;
    diff -= dir;
  }
  is.validate();
  return is;
}

// Sampled data: all K^2 rectangular blocks, side channels where r_k > 0,
// and the latent truth kept for evaluation only.
struct Observations {
  std::vector<std::vector<Eigen::MatrixXd>> blocks;  // [k][l], n_k x n_l
  std::vector<Eigen::VectorXd> side;                 // empty when r_k = 0
  std::vector<Eigen::VectorXd> truth;
};

// Redacted symmetric view handed to estimators: upper-triangular blocks of
// the symmetrized matrix and the combined snr table, no truth.
struct SymObservations {
  std::vector<std::vector<Eigen::MatrixXd>> sym_blocks;  // [k][l] filled for k <= l
  Eigen::MatrixXd lambda_sym;                            // lambda + lambda^T
};

inline double draw_from_prior(const Prior& prior, Substream& rng) {
  if (prior.kind() == Prior::Kind::UnitGaussian) return rng.gaussian();
  const auto& atoms = prior.atoms();
  const auto& probs = prior.probs();
  double u = rng.uniform(), acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < atoms.size(); ++i) {
    acc += probs(i);
    if (u < acc) return atoms(i);
  }
  return atoms(atoms.size() - 1);
}

inline Observations sample_instance(const InstanceSpec& ispec) {
  ispec.validate();
  const int K = ispec.spec.K();
  const long total = ispec.total_n();
  // blocks + truth + side, in doubles; keep instances well under sandbox RAM
  if (static_cast<double>(total) * static_cast<double>(total) + 2.0 * total > 2.5e8)
    throw resource_error("instance memory budget exceeded");

  Observations obs;
  obs.truth.resize(K);
  obs.side.resize(K);
  for (int k = 0; k < K; ++k) {
    Substream rng(ispec.seed, {tag::truth, static_cast<std::uint64_t>(k)});
    obs.truth[k].resize(ispec.n[k]);
    for (long i = 0; i < ispec.n[k]; ++i) obs.truth[k](i) = draw_from_prior(ispec.spec.priors[k], rng);
  }
  obs.blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  const double N = static_cast<double>(ispec.N);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      Substream rng(ispec.seed,
                    {tag::block, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(l)});
      Eigen::MatrixXd& Y = obs.blocks[k][l];
      Y.resize(ispec.n[k], ispec.n[l]);
      rng.fill_gaussian(Y);
      const double lam = ispec.spec.lambda(k, l);
      if (lam > 0.0)
        Y.noalias() += std::sqrt(lam / N) * obs.truth[k] * obs.truth[l].transpose();
    }
  }
  for (int k = 0; k < K; ++k) {
    const double r = ispec.spec.r(k);
    if (r <= 0.0) continue;
    Substream rng(ispec.seed, {tag::side, static_cast<std::uint64_t>(k)});
    Eigen::VectorXd w(ispec.n[k]);
    rng.fill_gaussian(w);
    obs.side[k] = std::sqrt(r) * obs.truth[k] + w;
  }
  return obs;
}

// Combines Y_kl and Y_lk^T into one block with snr lambda_kl + lambda_lk and
// unit noise variance; equal-weight convention when both snrs vanish.
// Diagonal blocks become (Y + Y^T)/sqrt(2), the symmetric-ensemble scaling,
// carrying snr 2 lambda_kk.
inline SymObservations symmetrize(const Observations& obs, const ProblemSpec& spec) {
  const int K = spec.K();
  SymObservations sym;
  sym.lambda_sym = spec.lambda + spec.lambda.transpose();
  sym.sym_blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  const double half = std::sqrt(0.5);
  for (int k = 0; k < K; ++k) {
    sym.sym_blocks[k][k] = half * (obs.blocks[k][k] + obs.blocks[k][k].transpose());
    for (int l = k + 1; l < K; ++l) {
      const double lkl = spec.lambda(k, l), llk = spec.lambda(l, k), ls = lkl + llk;
      const double a = ls > 0.0 ? std::sqrt(lkl / ls) : half;
      const double b = ls > 0.0 ? std::sqrt(llk / ls) : half;
      sym.sym_blocks[k][l] = a * obs.blocks[k][l] + b * obs.blocks[l][k].transpose();
    }
  }
  return sym;
}

// Two groups of equal size; alpha mixes self against cross observation while
// keeping the total snr budget lambda.
inline ProblemSpec make_two_group(double alpha, double lambda, Prior prior_u, Prior prior_v) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw config_error("alpha must lie in [0, 1]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw config_error("lambda must be positive");
  ProblemSpec s;
  s.beta = Eigen::VectorXd::Constant(2, 0.5);
  s.lambda.resize(2, 2);
  s.lambda << lambda * (1.0 - alpha), lambda * alpha, lambda * alpha, lambda * (1.0 - alpha);
  s.r = Eigen::VectorXd::Zero(2);
  s.priors = {std::move(prior_u), std::move(prior_v)};
  return s;
}

inline ProblemSpec make_two_group(double alpha, double lambda) {
  return make_two_group(alpha, lambda, Prior::unit_gaussian(), Prior::unit_gaussian());
}

// Equal nonzero entries on the given (row, col) support, scaled so that
// beta^T Lambda beta = lambda.
inline ProblemSpec make_three_group(const std::vector<std::pair<int, int>>& support, double lambda,
                                    const Eigen::Vector3d& beta) {
  if (support.empty()) throw config_error("support must be nonempty");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw config_error("lambda must be positive");
  if (!beta.allFinite() || (beta.array() <= 0.0).any())
    throw config_error("beta entries must be positive");
  ProblemSpec s;
  s.beta = beta;
  s.lambda = Eigen::MatrixXd::Zero(3, 3);
  double normalizer = 0.0;
  for (auto [k, l] : support) {
    if (k < 0 || k > 2 || l < 0 || l > 2) throw config_error("support index out of range");
    if (s.lambda(k, l) != 0.0) throw config_error("duplicate support entry");
    s.lambda(k, l) = 1.0;
    normalizer += beta(k) * beta(l);
  }
  s.lambda *= lambda / normalizer;
  s.r = Eigen::VectorXd::Zero(3);
  s.priors.assign(3, Prior::unit_gaussian());
  return s;
}

// Factor group 0 observed through L noisy views, snr 1/sigma_l^2 each.
inline ProblemSpec make_hetero_pca(double beta0, const Eigen::VectorXd& betas,
                                   const Eigen::VectorXd& sigmas) {
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw config_error("beta0 must be positive");
  const int L = static_cast<int>(betas.size());
  if (L < 1 || sigmas.size() != L) throw config_error("betas and sigmas need matching nonempty sizes");
  if (!betas.allFinite() || (betas.array() <= 0.0).any())
    throw config_error("betas must be positive");
  if (!sigmas.allFinite() || (sigmas.array() <= 0.0).any())
    throw config_error("sigmas must be positive");
  ProblemSpec s;
  s.beta.resize(L + 1);
  s.beta(0) = beta0;
  s.beta.tail(L) = betas;
  s.lambda = Eigen::MatrixXd::Zero(L + 1, L + 1);
  for (int l = 0; l < L; ++l) s.lambda(0, l + 1) = 1.0 / (sigmas(l) * sigmas(l));
  s.r = Eigen::VectorXd::Zero(L + 1);
  s.priors.assign(L + 1, Prior::unit_gaussian());
  return s;
}

// Community group u with self snr lambda_uu plus a feature group v observed
// against it; the feature-feature block carries no signal.
inline ProblemSpec make_csbm(double lambda_uu, double lambda_uv, double beta_u,
                             Prior u_prior = Prior::rademacher()) {
  if (!(beta_u > 0.0 && beta_u < 1.0)) throw config_error("beta_u must lie in (0, 1)");
  if (lambda_uu < 0.0 || lambda_uv < 0.0 || !std::isfinite(lambda_uu) || !std::isfinite(lambda_uv))
    throw config_error("snr entries must be nonnegative and finite");
  ProblemSpec s;
  s.beta.resize(2);
  s.beta << beta_u, 1.0 - beta_u;
  s.lambda = Eigen::MatrixXd::Zero(2, 2);
  s.lambda(0, 0) = lambda_uu;
  s.lambda(0, 1) = lambda_uv;
  s.r = Eigen::VectorXd::Zero(2);
  s.priors = {std::move(u_prior), Prior::unit_gaussian()};
  return s;
}

}  // namespace blockspike
