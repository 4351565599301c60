#pragma once

#include <map>
#include <mutex>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "blockspike/errors.hpp"

namespace blockspike {

inline constexpr int kDefaultQuadOrder = 61;
inline constexpr int kMinQuadOrder = 8;

// Gauss-Hermite rule in probabilist normalization: sum_i w_i f(x_i) ~ E f(Z),
// Z ~ N(0,1). Nodes/weights from Golub-Welsch on the Jacobi matrix of the
// probabilist Hermite recurrence (off-diagonal sqrt(i)); weights are squared
// first eigenvector components, so they are positive and sum to 1 exactly.
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int order = 0;

  static Quadrature compute_gauss_hermite(int order) {
    if (order < kMinQuadOrder)
      throw config_error("quadrature order " + std::to_string(order) +
                         " below minimum " + std::to_string(kMinQuadOrder));
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
      const double b = std::sqrt(static_cast<double>(i));
      jacobi(i, i - 1) = b;
      jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    Quadrature q;
    q.order = order;
    q.nodes = es.eigenvalues();
    q.weights = es.eigenvectors().row(0).transpose().array().square();
    return q;
  }

  static const Quadrature& gauss_hermite(int order = kDefaultQuadOrder) {
    static std::map<int, Quadrature> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss_hermite(order)).first;
    return it->second;
  }
};

}
