#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace blockspike {

// Frobenius mse of the rank-one matrix u u^T estimated by uhat uhat^T,
// normalized by n^2; expanded so the n x n matrices are never formed.
inline double diag_mse_direct(const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  const double n = static_cast<double>(u.size());
  const double uu = u.squaredNorm(), hh = uhat.squaredNorm(), uh = u.dot(uhat);
  return (uu * uu + hh * hh - 2.0 * uh * uh) / (n * n);
}

// Same for an off-diagonal block u v^T vs uhat vhat^T, normalized by n_u n_v.
inline double block_mse_direct(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& uhat, const Eigen::VectorXd& vhat) {
  const double n = static_cast<double>(u.size()) * static_cast<double>(v.size());
  return (u.squaredNorm() * v.squaredNorm() + uhat.squaredNorm() * vhat.squaredNorm() -
          2.0 * u.dot(uhat) * v.dot(vhat)) /
         n;
}

inline double vector_mse(const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  return (u - uhat).squaredNorm() / static_cast<double>(u.size());
}

// Per-trial terms of the scale-optimized spectral mse
//   inf_rho E|u u^T - rho^2 P|_F^2 / n^2 = E[A] - E[B]^2,
// with A = |u|^4/n^2 and B = (u^T uhat)^2 / (n |uhat|^2); the optimal radius
// is set against the distribution, so the square sits outside the mean of B.
struct ScaledMseTerms {
  double a = 0.0;
  double b = 0.0;
};

inline ScaledMseTerms scaled_mse_terms(const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  const double n = static_cast<double>(u.size());
  const double uu = u.squaredNorm(), hh = uhat.squaredNorm(), uh = u.dot(uhat);
  ScaledMseTerms t;
  t.a = uu * uu / (n * n);
  t.b = hh > 0.0 ? uh * uh / (n * hh) : 0.0;
  return t;
}

// Best mse over the scale of uhat for this single realization; the oracle
// criterion used when weights are tuned against the truth.
inline double diag_mse_optimal_scale(const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  const double n = static_cast<double>(u.size());
  const double uu = u.squaredNorm(), hh = uhat.squaredNorm(), uh = u.dot(uhat);
  const double proj = hh > 0.0 ? (uh * uh / hh) * (uh * uh / hh) : 0.0;
  return (uu * uu - proj) / (n * n);
}

}  // namespace blockspike
