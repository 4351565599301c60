#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blockspike/errors.hpp"
#include "blockspike/quadrature.hpp"

namespace blockspike {

// Scalar signal prior with unit second moment. Two kinds: the standard
// Gaussian (closed forms throughout) and a finite-support distribution
// (quadrature-backed channel functionals). Discrete atoms with a non-unit
// second moment are rejected unless rescale_to_unit is set.
class Prior {
 public:
  enum class Kind { UnitGaussian, Discrete };

  static Prior unit_gaussian() {
    Prior p;
    p.kind_ = Kind::UnitGaussian;
    p.fourth_moment_ = 3.0;
    return p;
  }

  static Prior discrete(Eigen::VectorXd atoms, Eigen::VectorXd probs,
                        bool rescale_to_unit = false) {
    if (atoms.size() == 0 || atoms.size() != probs.size())
      throw config_error("discrete prior needs matching nonempty atoms/probs");
    if (!atoms.allFinite() || !probs.allFinite())
      throw config_error("discrete prior has non-finite entries");
    if ((probs.array() <= 0.0).any())
      throw config_error("discrete prior probabilities must be positive");
    const double psum = probs.sum();
    if (std::abs(psum - 1.0) > 1e-12)
      throw config_error("discrete prior probabilities sum to " + std::to_string(psum));
    probs /= psum;
    const double m2 = (probs.array() * atoms.array().square()).sum();
    if (std::abs(m2 - 1.0) > 1e-9) {
      if (!rescale_to_unit)
        throw config_error("discrete prior second moment " + std::to_string(m2) +
                           " != 1 (set rescale_to_unit to standardize)");
      atoms /= std::sqrt(m2);
    }
    Prior p;
    p.kind_ = Kind::Discrete;
    p.atoms_ = std::move(atoms);
    p.probs_ = std::move(probs);
    p.log_probs_ = p.probs_.array().log();
    p.mean_ = (p.probs_.array() * p.atoms_.array()).sum();
    p.fourth_moment_ = (p.probs_.array() * p.atoms_.array().pow(4)).sum();
    return p;
  }

  static Prior rademacher() {
    Eigen::VectorXd a(2), p(2);
    a << -1.0, 1.0;
    p << 0.5, 0.5;
    return discrete(a, p);
  }

  // centered and variance-normalized Bernoulli(rho)
  static Prior bernoulli_standardized(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw config_error("bernoulli rate must be in (0,1)");
    const double s = std::sqrt(rho * (1.0 - rho));
    Eigen::VectorXd a(2), p(2);
    a << -rho / s, (1.0 - rho) / s;
    p << 1.0 - rho, rho;
    return discrete(a, p);
  }

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::UnitGaussian; }
  const Eigen::VectorXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  double mean() const { return mean_; }
  double second_moment() const { return 1.0; }
  double fourth_moment() const { return fourth_moment_; }

  // Shannon entropy in nats; finite-support only
  double entropy() const {
    if (is_gaussian()) throw std::logic_error("entropy() is defined for discrete priors only");
    return -(probs_.array() * log_probs_.array()).sum();
  }

  // Mean of the measure P(dx) * exp(a x - b x^2 / 2), normalized.
  // For the Gaussian prior the tilt must satisfy b > -1 to stay integrable.
  double posterior_mean(double a, double b) const {
    check_tilt(a, b);
    if (is_gaussian()) return a / (1.0 + b);
    double mx = -std::numeric_limits<double>::infinity();
    const int na = static_cast<int>(atoms_.size());
    for (int j = 0; j < na; ++j)
      mx = std::max(mx, log_probs_(j) + a * atoms_(j) - 0.5 * b * atoms_(j) * atoms_(j));
    double z = 0.0, zx = 0.0;
    for (int j = 0; j < na; ++j) {
      const double w = std::exp(log_probs_(j) + a * atoms_(j) - 0.5 * b * atoms_(j) * atoms_(j) - mx);
      z += w;
      zx += w * atoms_(j);
    }
    return zx / z;
  }

  // Variance of the same tilted measure (= d posterior_mean / d a)
  double posterior_variance(double a, double b) const {
    check_tilt(a, b);
    if (is_gaussian()) return 1.0 / (1.0 + b);
    double mx = -std::numeric_limits<double>::infinity();
    const int na = static_cast<int>(atoms_.size());
    for (int j = 0; j < na; ++j)
      mx = std::max(mx, log_probs_(j) + a * atoms_(j) - 0.5 * b * atoms_(j) * atoms_(j));
    double z = 0.0, zx = 0.0, zxx = 0.0;
    for (int j = 0; j < na; ++j) {
      const double w = std::exp(log_probs_(j) + a * atoms_(j) - 0.5 * b * atoms_(j) * atoms_(j) - mx);
      z += w;
      zx += w * atoms_(j);
      zxx += w * atoms_(j) * atoms_(j);
    }
    const double m = zx / z;
    return zxx / z - m * m;
  }

 private:
  void check_tilt(double a, double b) const {
    if (!std::isfinite(a) || !std::isfinite(b))
      throw std::domain_error("non-finite tilt parameters");
    if (is_gaussian() && b <= -1.0)
      throw std::domain_error("gaussian tilt needs b > -1, got " + std::to_string(b));
  }

  Kind kind_ = Kind::UnitGaussian;
  Eigen::VectorXd atoms_, probs_, log_probs_;
  double mean_ = 0.0;
  double fourth_moment_ = 3.0;
};

namespace detail {

// log of f_Y(y)/phi(y) for the channel Y = sqrt(gamma) X + W:
// log sum_j p_j exp(sqrt(gamma) a_j y - gamma a_j^2 / 2), stabilized
inline double log_density_ratio(const Prior& prior, double sqrt_gamma, double gamma, double y) {
  const auto& a = prior.atoms();
  const auto& lp = prior.probs();
  double mx = -std::numeric_limits<double>::infinity();
  const int na = static_cast<int>(a.size());
  for (int j = 0; j < na; ++j) {
    const double e = std::log(lp(j)) + sqrt_gamma * a(j) * y - 0.5 * gamma * a(j) * a(j);
    mx = std::max(mx, e);
  }
  double s = 0.0;
  for (int j = 0; j < na; ++j)
    s += std::exp(std::log(lp(j)) + sqrt_gamma * a(j) * y - 0.5 * gamma * a(j) * a(j) - mx);
  return mx + std::log(s);
}

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::domain_error("channel snr must be finite and nonnegative, got " +
                            std::to_string(gamma));
}

}  // namespace detail

// D(gamma) = D(law of sqrt(gamma) X + W || law of W), the single-letter
// relative entropy of the scalar observation channel. Equals gamma/2 - I(gamma),
// so D' = (1 - mmse)/2 and D is convex increasing with D(0) = 0.
inline double relative_entropy(const Prior& prior, double gamma,
                               const Quadrature& quad = Quadrature::gauss_hermite()) {
  detail::check_gamma(gamma);
  if (gamma == 0.0) return 0.0;
  if (prior.is_gaussian()) return 0.5 * (gamma - std::log1p(gamma));
  const double sg = std::sqrt(gamma);
  const auto& atoms = prior.atoms();
  const auto& probs = prior.probs();
  double d = 0.0;
  for (int i = 0; i < atoms.size(); ++i) {
    double inner = 0.0;
    for (int t = 0; t < quad.order; ++t)
      inner += quad.weights(t) *
               detail::log_density_ratio(prior, sg, gamma, sg * atoms(i) + quad.nodes(t));
    d += probs(i) * inner;
  }
  return d;
}

// D'(gamma) = E[ E[X|Y]^2 ] / 2 under the same channel
inline double relative_entropy_deriv(const Prior& prior, double gamma,
                                     const Quadrature& quad = Quadrature::gauss_hermite()) {
  detail::check_gamma(gamma);
  if (gamma == 0.0) return 0.5 * prior.mean() * prior.mean();
  if (prior.is_gaussian()) return 0.5 * gamma / (1.0 + gamma);
  const double sg = std::sqrt(gamma);
  const auto& atoms = prior.atoms();
  const auto& probs = prior.probs();
  double d = 0.0;
  for (int i = 0; i < atoms.size(); ++i) {
    double inner = 0.0;
    for (int t = 0; t < quad.order; ++t) {
      const double y = sg * atoms(i) + quad.nodes(t);
      const double m = prior.posterior_mean(sg * y, gamma);
      inner += quad.weights(t) * m * m;
    }
    d += probs(i) * inner;
  }
  return 0.5 * d;
}

// mmse of the scalar channel at snr gamma; 1 - 2 D'(gamma) for unit second moment
inline double channel_mmse(const Prior& prior, double gamma,
                           const Quadrature& quad = Quadrature::gauss_hermite()) {
  return 1.0 - 2.0 * relative_entropy_deriv(prior, gamma, quad);
}

}
