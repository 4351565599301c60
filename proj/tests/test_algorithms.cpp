#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "blockspike/algorithms.hpp"
#include "blockspike/model.hpp"

using namespace blockspike;

namespace {

Eigen::MatrixXd random_symmetric(long n, std::uint64_t seed) {
  Substream rng(seed, {0x51});
  Eigen::MatrixXd A(n, n);
  rng.fill_gaussian(A);
  return 0.5 * (A + A.transpose());
}

double corr2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double d = a.dot(b);
  return d * d / (a.squaredNorm() * b.squaredNorm());
}

// Zero-noise planted instance: every block is exactly its rank-one mean.
Observations planted_exact(const ProblemSpec& spec, const std::vector<long>& n, long N,
                           std::uint64_t seed) {
  Observations obs;
  const long K = spec.K();
  obs.truth.resize(K);
  for (long k = 0; k < K; ++k) {
    Substream rng(seed, {tag::truth, static_cast<std::uint64_t>(k)});
    obs.truth[k].resize(n[k]);
    for (long i = 0; i < n[k]; ++i) obs.truth[k](i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  obs.blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (long k = 0; k < K; ++k)
    for (long l = 0; l < K; ++l)
      obs.blocks[k][l] = std::sqrt(spec.lambda(k, l) / static_cast<double>(N)) * obs.truth[k] *
                         obs.truth[l].transpose();
  obs.side.resize(K);
  return obs;
}

ProblemSpec two_group(double alpha, double lambda) {
  return make_two_group(alpha, lambda);
}

}  // namespace

TEST_CASE("power iteration finds the largest algebraic eigenpair", "[algorithms][power]") {
  SECTION("diagonal matrix") {
    Eigen::MatrixXd A = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    const EigenPair p = power_iteration(A);
    REQUIRE(p.value == Catch::Approx(3.0).margin(1e-9));
    REQUIRE(std::abs(p.vec(0)) == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(std::abs(p.vec(1)) < 1e-8);
    REQUIRE(p.residual <= 1e-10);
  }
  SECTION("negative spectrum needs the shift to stay algebraic-largest") {
    Eigen::MatrixXd A = Eigen::Vector2d(-5.0, -2.0).asDiagonal();
    const EigenPair p = power_iteration(A);
    REQUIRE(p.value == Catch::Approx(-2.0).margin(1e-9));
    REQUIRE(std::abs(p.vec(1)) == Catch::Approx(1.0).margin(1e-8));
  }
  SECTION("rank-one plus small noise recovers the planted direction") {
    const long n = 40;
    Substream rng(0x11, {0x2});
    Eigen::VectorXd u(n);
    rng.fill_gaussian(u);
    u.normalize();
    const Eigen::MatrixXd A = 4.0 * u * u.transpose() + 0.01 * random_symmetric(n, 0x12);
    const EigenPair p = power_iteration(A);
    REQUIRE(corr2(p.vec, u) > 0.99);
  }
  SECTION("random 50x50 matches the dense eigendecomposition") {
    const Eigen::MatrixXd A = random_symmetric(50, 0x21);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const EigenPair p = power_iteration(A);
    REQUIRE(p.value == Catch::Approx(es.eigenvalues()(49)).margin(1e-8));
    REQUIRE(corr2(p.vec, es.eigenvectors().col(49)) > 1.0 - 1e-8);
  }
  SECTION("iteration cap converts to an error with the residual attached") {
    Eigen::MatrixXd A = Eigen::Vector3d(2.0, 2.0 - 1e-12, 1.0).asDiagonal();
    PowerOptions opts;
    opts.max_iter = 5;
    opts.tol = 1e-14;
    REQUIRE_THROWS_MATCHES(power_iteration(A, opts), solver_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("residual")));
  }
  SECTION("empty or rectangular input is refused") {
    REQUIRE_THROWS_AS(power_iteration(Eigen::MatrixXd()), config_error);
  }
}

TEST_CASE("large-n eigensolver path agrees with the dense oracle", "[algorithms][power]") {
  const Eigen::MatrixXd A = random_symmetric(300, 0x31);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const EigenPair top = detail::top_eigen_sym(A, 1e-9);
  REQUIRE(top.value == Catch::Approx(es.eigenvalues()(299)).margin(1e-7));
  REQUIRE(corr2(top.vec, es.eigenvectors().col(299)) > 1.0 - 1e-7);

  const Eigen::VectorXd warm = es.eigenvectors().col(299);
  const EigenPair warmed = detail::top_eigen_sym(A, 1e-9, 0x9a17, &warm);
  REQUIRE(warmed.value == Catch::Approx(es.eigenvalues()(299)).margin(1e-7));
  REQUIRE(warmed.iterations <= top.iterations);
}

TEST_CASE("joint pca assembles observed blocks and splits the eigenvector", "[algorithms][pca]") {
  SECTION("all blocks observed reduces to pca of the full symmetrized matrix") {
    const auto is = make_instance(two_group(0.5, 2.0), 256, 0x77);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const EstimateSet est = joint_pca(sym);
    REQUIRE(est.scale == EstimateSet::Scale::unit_scale_free);
    REQUIRE(est.xhat.size() == 2);

    Eigen::MatrixXd full(256, 256);
    full.topLeftCorner(128, 128) = sym.sym_blocks[0][0];
    full.topRightCorner(128, 128) = sym.sym_blocks[0][1];
    full.bottomLeftCorner(128, 128) = sym.sym_blocks[0][1].transpose();
    full.bottomRightCorner(128, 128) = sym.sym_blocks[1][1];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full);
    Eigen::VectorXd got(256);
    got << est.xhat[0], est.xhat[1];
    REQUIRE(corr2(got, es.eigenvectors().col(255)) > 1.0 - 1e-9);
  }
  SECTION("zero-snr blocks are dropped from the assembly") {
    const auto is = make_instance(two_group(0.0, 2.0), 200, 0x78);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    REQUIRE(sym.lambda_sym(0, 1) == 0.0);
    const EstimateSet est = joint_pca(sym);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(200, 200);
    full.topLeftCorner(100, 100) = sym.sym_blocks[0][0];
    full.bottomRightCorner(100, 100) = sym.sym_blocks[1][1];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full);
    Eigen::VectorXd got(200);
    got << est.xhat[0], est.xhat[1];
    REQUIRE(corr2(got, es.eigenvectors().col(199)) > 1.0 - 1e-9);
  }
  SECTION("strong signal aligns the eigenvector with the truth") {
    const auto is = make_instance(two_group(0.5, 6.0), 512, 0x79);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const EstimateSet est = joint_pca(sym);
    Eigen::VectorXd got(512), truth(512);
    got << est.xhat[0], est.xhat[1];
    truth << obs.truth[0], obs.truth[1];
    REQUIRE(corr2(got, truth) > 0.5);
  }
  SECTION("noise-dominated input is uncorrelated with the truth") {
    double acc = 0.0;
    const int trials = 8;
    for (int rep = 0; rep < trials; ++rep) {
      const auto is = make_instance(two_group(0.5, 1e-12), 256, 0x80 + rep);
      const auto obs = sample_instance(is);
      const auto sym = symmetrize(obs, is.spec);
      const EstimateSet est = joint_pca(sym);
      Eigen::VectorXd got(256), truth(256);
      got << est.xhat[0], est.xhat[1];
      truth << obs.truth[0], obs.truth[1];
      acc += corr2(got, truth);
    }
    REQUIRE(acc / trials <= 5.0 / 256.0);
  }
  SECTION("global sign flip of the truth leaves the estimate unchanged") {
    const ProblemSpec spec = two_group(0.5, 3.0);
    const std::vector<long> n = {40, 40};
    auto obs = planted_exact(spec, n, 80, 0x99);
    Substream rng(0x9b, {0x1});
    for (long k = 0; k < 2; ++k)
      for (long l = 0; l < 2; ++l) {
        Eigen::MatrixXd w(40, 40);
        rng.fill_gaussian(w);
        obs.blocks[k][l] += w;
      }
    Observations flipped = obs;
    for (long k = 0; k < 2; ++k) flipped.truth[k] = -obs.truth[k];
    // the rank-one mean is invariant under a global sign flip, so the data and
    // hence the estimate agree exactly
    const auto e1 = joint_pca(symmetrize(obs, spec));
    const auto e2 = joint_pca(symmetrize(flipped, spec));
    REQUIRE((e1.xhat[0] - e2.xhat[0]).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((e1.xhat[1] - e2.xhat[1]).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SECTION("all-zero snr is refused") {
    ProblemSpec spec = two_group(0.5, 2.0);
    spec.lambda.setZero();
    const auto is = make_instance(spec, 64, 0x81);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    REQUIRE_THROWS_AS(joint_pca(sym), config_error);
  }
}

TEST_CASE("weighted pca composes diagonal and cross-block information", "[algorithms][pca]") {
  const auto is = make_instance(two_group(0.5, 3.0), 160, 0x91);
  const auto obs = sample_instance(is);
  const auto sym = symmetrize(obs, is.spec);

  SECTION("diagonal-only weights reduce to plain pca of the block") {
    Eigen::VectorXd w(2);
    w << 1.0, 0.0;
    const Eigen::VectorXd v = weighted_pca(sym, w, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.sym_blocks[0][0]);
    REQUIRE(corr2(v, es.eigenvectors().col(79)) > 1.0 - 1e-9);
  }
  SECTION("cross-only weights use the gram matrix of the rectangular block") {
    Eigen::VectorXd w(2);
    w << 0.0, 1.0;
    const Eigen::VectorXd v = weighted_pca(sym, w, 0);
    const Eigen::MatrixXd G = sym.sym_blocks[0][1] * sym.sym_blocks[0][1].transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    REQUIRE(corr2(v, es.eigenvectors().col(79)) > 1.0 - 1e-9);
  }
  SECTION("mixed weights for the second group exercise the transposed block path") {
    Eigen::VectorXd w(2);
    w << 0.7, 0.3;
    const Eigen::VectorXd v = weighted_pca(sym, w, 1);
    const Eigen::MatrixXd M = 0.3 * sym.sym_blocks[1][1] +
                              0.7 * sym.sym_blocks[0][1].transpose() * sym.sym_blocks[0][1];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    REQUIRE(corr2(v, es.eigenvectors().col(79)) > 1.0 - 1e-9);
  }
  SECTION("invalid weights are refused") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
    REQUIRE_THROWS_AS(weighted_pca(sym, w, 0), config_error);
    w << 1.0, -0.1;
    REQUIRE_THROWS_AS(weighted_pca(sym, w, 0), config_error);
    w << 1.0, 0.0;
    REQUIRE_THROWS_AS(weighted_pca(sym, w, 5), config_error);
    REQUIRE_THROWS_AS(weighted_pca(sym, Eigen::VectorXd::Ones(3), 0), config_error);
  }
}

TEST_CASE("cross-block pca hits its predicted overlap above threshold", "[algorithms][pca][slow]") {
  // single-observation factor model with noise variance 0.5: the limiting
  // squared correlation of the cross-block estimator is 0.5
  const ProblemSpec spec = make_hetero_pca(1.0, Eigen::VectorXd::Ones(1),
                                           Eigen::VectorXd::Constant(1, std::sqrt(0.5)));
  double acc = 0.0;
  const int trials = 3;
  for (int rep = 0; rep < trials; ++rep) {
    const auto is = make_instance(spec, 1024, 0xc0 + rep);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    Eigen::VectorXd w(2);
    w << 0.0, 1.0;
    const Eigen::VectorXd v = weighted_pca(sym, w, 0);
    acc += corr2(v, obs.truth[0]);
  }
  REQUIRE(acc / trials == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("weight grid search prefers the informative blocks", "[algorithms][grid]") {
  SECTION("single-point grid returns the only candidate") {
    ProblemSpec spec;
    spec.beta = Eigen::VectorXd::Ones(1);
    spec.lambda = Eigen::MatrixXd::Constant(1, 1, 3.0);
    spec.r = Eigen::VectorXd::Zero(1);
    spec.priors = {Prior::rademacher()};
    const auto is = make_instance(spec, 64, 0xd0);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const auto res = weight_grid_search(sym, obs.truth, 4);
    REQUIRE(res.weights.size() == 1);
    REQUIRE(res.weights[0].size() == 1);
    REQUIRE(res.weights[0](0) == Catch::Approx(1.0));
  }
  SECTION("within-group-only snr concentrates weight on the diagonal block") {
    const auto is = make_instance(two_group(0.0, 4.0), 256, 0xd1);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const auto res = weight_grid_search(sym, obs.truth, 8);
    REQUIRE(res.weights[0](0) >= 0.75);
    REQUIRE(res.weights[1](1) >= 0.75);
  }
  SECTION("cross-group-only snr concentrates weight off the diagonal") {
    const auto is = make_instance(two_group(1.0, 4.0), 256, 0xd2);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const auto res = weight_grid_search(sym, obs.truth, 8);
    REQUIRE(res.weights[0](1) >= 0.75);
    REQUIRE(res.weights[1](0) >= 0.75);
  }
  SECTION("reported loss matches a fresh evaluation of the winning weights") {
    const auto is = make_instance(two_group(0.5, 3.0), 128, 0xd3);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const auto res = weight_grid_search(sym, obs.truth, 6);
    for (long k = 0; k < 2; ++k) {
      const Eigen::VectorXd v = weighted_pca(sym, res.weights[k], k);
      REQUIRE(res.loss[k] == Catch::Approx(diag_mse_optimal_scale(obs.truth[k], v)).margin(1e-6));
    }
  }
  SECTION("degenerate grids are refused") {
    const auto is = make_instance(two_group(0.5, 2.0), 64, 0xd4);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    REQUIRE_THROWS_AS(weight_grid_search(sym, obs.truth, 0), config_error);
    std::vector<Eigen::VectorXd> bad = {obs.truth[0]};
    REQUIRE_THROWS_AS(weight_grid_search(sym, bad, 4), config_error);
  }
}

TEST_CASE("gradient descent respects its fixed points and step control", "[algorithms][gd]") {
  const ProblemSpec spec = two_group(0.5, 2.0);

  SECTION("zero step size returns the init unchanged") {
    const auto is = make_instance(spec, 64, 0xe0);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    GdConfig cfg;
    cfg.gamma = 0.0;
    cfg.steps = 50;
    cfg.init = {Eigen::VectorXd::Ones(32), Eigen::VectorXd::Constant(32, -2.0)};
    const EstimateSet est = gradient_descent(sym, 64, cfg);
    REQUIRE(est.scale == EstimateSet::Scale::posterior_mean);
    REQUIRE((est.xhat[0] - cfg.init[0]).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((est.xhat[1] - cfg.init[1]).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SECTION("zero init is a fixed point whatever the data") {
    const auto is = make_instance(spec, 64, 0xe1);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    GdConfig cfg;
    cfg.steps = 20;
    cfg.init = {Eigen::VectorXd::Zero(32), Eigen::VectorXd::Zero(32)};
    const EstimateSet est = gradient_descent(sym, 64, cfg);
    REQUIRE(est.xhat[0].lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(est.xhat[1].lpNorm<Eigen::Infinity>() == 0.0);
  }
  SECTION("noise-free data with truth init stays put") {
    const std::vector<long> n = {40, 40};
    const auto obs = planted_exact(spec, n, 80, 0xe2);
    const auto sym = symmetrize(obs, spec);
    GdConfig cfg;
    cfg.steps = 100;
    cfg.init = obs.truth;
    const EstimateSet est = gradient_descent(sym, 80, cfg);
    REQUIRE((est.xhat[0] - obs.truth[0]).lpNorm<Eigen::Infinity>() <= 1e-10);
    REQUIRE((est.xhat[1] - obs.truth[1]).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SECTION("joint-pca init moves toward the planted signal") {
    const auto is = make_instance(two_group(0.5, 6.0), 512, 0xe3);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    const EstimateSet est = gradient_descent(sym, 512, {});
    Eigen::VectorXd got(512), truth(512);
    got << est.xhat[0], est.xhat[1];
    truth << obs.truth[0], obs.truth[1];
    REQUIRE(corr2(got, truth) > 0.5);
    // posterior-mean scale: the iterate norm sits near sqrt(n_k), not at 1
    REQUIRE(est.xhat[0].norm() > 5.0);
  }
  SECTION("runaway steps trigger halving and eventually an error") {
    const auto is = make_instance(spec, 64, 0xe4);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    GdConfig cfg;
    cfg.gamma = 1e4;
    cfg.max_restarts = 1;
    REQUIRE_THROWS_MATCHES(gradient_descent(sym, 64, cfg), numeric_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("smaller gamma")));
  }
  SECTION("halving rescues a too-aggressive but recoverable step size") {
    const auto is = make_instance(spec, 64, 0xe5);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    GdConfig cfg;
    cfg.gamma = 20.0;
    cfg.max_restarts = 12;
    const EstimateSet est = gradient_descent(sym, 64, cfg);
    REQUIRE(est.xhat[0].allFinite());
    REQUIRE(est.xhat[1].allFinite());
  }
  SECTION("malformed init is refused") {
    const auto is = make_instance(spec, 64, 0xe6);
    const auto obs = sample_instance(is);
    const auto sym = symmetrize(obs, is.spec);
    GdConfig cfg;
    cfg.init = {Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(32)};
    REQUIRE_THROWS_AS(gradient_descent(sym, 64, cfg), config_error);
    REQUIRE_THROWS_AS(gradient_descent(sym, 0, {}), config_error);
  }
}
