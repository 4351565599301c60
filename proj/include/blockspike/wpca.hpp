#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "blockspike/errors.hpp"

namespace blockspike {

// Closed-form analysis of the Gaussian one-spike PCA problem with L
// heteroskedastic observation arms: arm l sees the common factor at noise
// level sigma_l^2 and carries mass beta_l; the factor group has mass beta0.
struct WpcaAnalysis {
  double beta0 = 0.0;
  Eigen::VectorXd betas;
  Eigen::VectorXd sigmas;       // noise standard deviations per arm
  double threshold_sum = 0.0;   // sum_l beta0 beta_l / sigma_l^4
  bool above_threshold = false; // strict: threshold_sum > 1
  double q0 = 0.0;              // factor-group overlap parameter
  Eigen::VectorXd q_ell;        // arm overlaps beta_l q0 / (sigma_l^2 + q0)
};

namespace detail {

inline void check_wpca_inputs(double beta0, const Eigen::VectorXd& betas,
                              const Eigen::VectorXd& sigmas) {
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw config_error("beta0 must be positive");
  if (betas.size() == 0 || betas.size() != sigmas.size())
    throw config_error("betas and sigmas need matching nonempty sizes");
  if (!betas.allFinite() || (betas.array() <= 0.0).any())
    throw config_error("betas must be positive");
  if (!sigmas.allFinite() || (sigmas.array() <= 0.0).any())
    throw config_error("sigmas must be positive");
}

}  // namespace detail

// F(x) = x - beta0 log(beta0/(beta0-x)) + sum_l [beta_l x / sigma_l^2
//        - beta_l log(1 + x / sigma_l^2)]  on 0 <= x < beta0.
// The limit value of the mapped problem is F at the fixed point, halved.
inline double wpca_objective(double x, double beta0, const Eigen::VectorXd& betas,
                             const Eigen::VectorXd& sigmas) {
  detail::check_wpca_inputs(beta0, betas, sigmas);
  if (!(x >= 0.0) || x >= beta0)
    throw std::domain_error("wpca objective needs 0 <= x < beta0");
  double f = x - beta0 * std::log(beta0 / (beta0 - x));
  for (int l = 0; l < betas.size(); ++l) {
    const double s2 = sigmas(l) * sigmas(l);
    f += betas(l) * x / s2 - betas(l) * std::log1p(x / s2);
  }
  return f;
}

inline double wpca_objective_deriv(double x, double beta0, const Eigen::VectorXd& betas,
                                   const Eigen::VectorXd& sigmas) {
  detail::check_wpca_inputs(beta0, betas, sigmas);
  if (!(x >= 0.0) || x >= beta0)
    throw std::domain_error("wpca objective needs 0 <= x < beta0");
  double d = -x / (beta0 - x);
  for (int l = 0; l < betas.size(); ++l) {
    const double s2 = sigmas(l) * sigmas(l);
    d += betas(l) * x / (s2 * (s2 + x));
  }
  return d;
}

// R(x) = 1 - sum_l beta_l (beta0 - x) / (sigma_l^2 (sigma_l^2 + x)) is
// strictly increasing on (0, beta0) with R(0) = 1 - threshold_sum, R(beta0) = 1,
// so above threshold it has a unique root: the nonzero fixed point q0.
inline WpcaAnalysis wpca_analyze(double beta0, const Eigen::VectorXd& betas,
                                 const Eigen::VectorXd& sigmas) {
  detail::check_wpca_inputs(beta0, betas, sigmas);
  WpcaAnalysis a;
  a.beta0 = beta0;
  a.betas = betas;
  a.sigmas = sigmas;
  a.threshold_sum = 0.0;
  for (int l = 0; l < betas.size(); ++l)
    a.threshold_sum += beta0 * betas(l) / std::pow(sigmas(l), 4);
  a.above_threshold = a.threshold_sum > 1.0;
  a.q_ell = Eigen::VectorXd::Zero(betas.size());
  if (!a.above_threshold) return a;

  auto big_r = [&](double x) {
    double v = 1.0;
    for (int l = 0; l < betas.size(); ++l) {
      const double s2 = sigmas(l) * sigmas(l);
      v -= betas(l) * (beta0 - x) / (s2 * (s2 + x));
    }
    return v;
  };
  double lo = 0.0, hi = beta0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (big_r(mid) < 0.0 ? lo : hi) = mid;
  }
  a.q0 = 0.5 * (lo + hi);
  for (int l = 0; l < betas.size(); ++l) {
    const double s2 = sigmas(l) * sigmas(l);
    a.q_ell(l) = betas(l) * a.q0 / (s2 + a.q0);
  }
  return a;
}

}
