#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "blockspike/model.hpp"
#include "blockspike/model_io.hpp"

using namespace blockspike;

namespace {

ProblemSpec basic_spec(double l00, double l01, double l10, double l11, double r0 = 0.0) {
  ProblemSpec s;
  s.beta = Eigen::VectorXd::Constant(2, 0.5);
  s.lambda.resize(2, 2);
  s.lambda << l00, l01, l10, l11;
  s.r.resize(2);
  s.r << r0, 0.0;
  s.priors = {Prior::rademacher(), Prior::unit_gaussian()};
  return s;
}

// Gaussian log-likelihood of the latent vectors under the raw rectangular
// view: every block entry is unit-variance noise around its mean
double loglik_raw(const Observations& obs, const InstanceSpec& is) {
  const auto& spec = is.spec;
  double ll = 0.0;
  for (int k = 0; k < spec.K(); ++k)
    for (int l = 0; l < spec.K(); ++l) {
      const Eigen::MatrixXd mean =
          std::sqrt(spec.lambda(k, l) / is.N) * obs.truth[k] * obs.truth[l].transpose();
      ll -= 0.5 * (obs.blocks[k][l] - mean).squaredNorm();
    }
  return ll;
}

// Same under the symmetric view: independent entries are the upper triangle,
// with variance 2 on each diagonal block's diagonal
double loglik_sym(const SymObservations& sym, const Observations& obs, const InstanceSpec& is) {
  const auto& spec = is.spec;
  double ll = 0.0;
  for (int k = 0; k < spec.K(); ++k) {
    const Eigen::MatrixXd sk = std::sqrt(sym.lambda_sym(k, k) / is.N) * obs.truth[k] *
                               obs.truth[k].transpose();
    const Eigen::MatrixXd d = sym.sym_blocks[k][k] - sk;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      ll -= 0.25 * d(i, i) * d(i, i);
      for (Eigen::Index j = i + 1; j < d.cols(); ++j) ll -= 0.5 * d(i, j) * d(i, j);
    }
    for (int l = k + 1; l < spec.K(); ++l) {
      const Eigen::MatrixXd mean =
          std::sqrt(sym.lambda_sym(k, l) / is.N) * obs.truth[k] * obs.truth[l].transpose();
      ll -= 0.5 * (sym.sym_blocks[k][l] - mean).squaredNorm();
    }
  }
  return ll;
}

}  // namespace

TEST_CASE("group sizes round to the global scale with a stable total", "[model]") {
  {
    const auto is = make_instance(basic_spec(2, 0, 0, 2), 2048, 1);
    REQUIRE(is.n == std::vector<long>{1024, 1024});
  }
  {
    ProblemSpec s;
    s.beta.resize(3);
    s.beta << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;
    s.lambda = Eigen::MatrixXd::Zero(3, 3);
    s.r = Eigen::VectorXd::Zero(3);
    s.priors.assign(3, Prior::unit_gaussian());
    const auto is = make_instance(s, 100, 1);
    REQUIRE(is.total_n() == 100);
    for (long v : is.n) REQUIRE((v == 33 || v == 34));
  }
  {
    ProblemSpec s;
    s.beta.resize(3);
    s.beta << 0.2, 0.4, 0.4;
    s.lambda = Eigen::MatrixXd::Zero(3, 3);
    s.r = Eigen::VectorXd::Zero(3);
    s.priors.assign(3, Prior::unit_gaussian());
    const auto is = make_instance(s, 1025, 1);
    REQUIRE(is.n == std::vector<long>{205, 410, 410});
  }
  REQUIRE_THROWS_AS(make_instance(basic_spec(2, 0, 0, 2), 0, 1), config_error);
}

TEST_CASE("sampling is deterministic and blockwise isolated", "[model]") {
  const auto is = make_instance(basic_spec(1.5, 2.0, 0.5, 0.8), 64, 0xabcdef);
  const auto a = sample_instance(is);
  const auto b = sample_instance(is);
  for (int k = 0; k < 2; ++k) {
    REQUIRE(a.truth[k] == b.truth[k]);
    for (int l = 0; l < 2; ++l) REQUIRE(a.blocks[k][l] == b.blocks[k][l]);
  }
  REQUIRE(a.side[0].size() == 0);
  REQUIRE(a.side[1].size() == 0);

  // turning on a side channel must not perturb any other draw
  auto is2 = is;
  is2.spec.r(0) = 0.7;
  const auto c = sample_instance(is2);
  for (int k = 0; k < 2; ++k) {
    REQUIRE(a.truth[k] == c.truth[k]);
    for (int l = 0; l < 2; ++l) REQUIRE(a.blocks[k][l] == c.blocks[k][l]);
  }
  REQUIRE(c.side[0].size() == 32);
  REQUIRE(c.side[1].size() == 0);

  // different seed, different data
  auto is3 = is;
  is3.seed ^= 1;
  REQUIRE(sample_instance(is3).blocks[0][0] != a.blocks[0][0]);
}

TEST_CASE("noise-only blocks have standard entry statistics", "[model]") {
  const auto is = make_instance(basic_spec(0, 0, 0, 0), 128, 99);
  const auto obs = sample_instance(is);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      const auto& Y = obs.blocks[k][l];
      const double tol = 4.0 / std::sqrt(static_cast<double>(Y.size()));
      REQUIRE(Y.mean() == Catch::Approx(0.0).margin(tol));
      const double var = (Y.array() - Y.mean()).square().sum() / (Y.size() - 1.0);
      REQUIRE(var == Catch::Approx(1.0).margin(tol));
    }
}

TEST_CASE("planted signal shows up along the truth directions", "[model]") {
  const auto is = make_instance(basic_spec(0, 2.0, 0, 0), 512, 7);
  const auto obs = sample_instance(is);
  const auto& u = obs.truth[0];
  const auto& v = obs.truth[1];
  // u^T Y v / (|u||v|) ~ sqrt(lambda/N) |u||v| + N(0,1) ~ 16 here
  const double stat = u.dot(obs.blocks[0][1] * v) / (u.norm() * v.norm());
  REQUIRE(stat > 10.0);
  const double null_stat = u.dot(obs.blocks[1][0].transpose() * v) / (u.norm() * v.norm());
  REQUIRE(std::abs(null_stat) < 6.0);
}

TEST_CASE("symmetrization conventions", "[model]") {
  const auto is = make_instance(basic_spec(1.2, 1.0, 1.0, 0.0), 48, 5);
  const auto obs = sample_instance(is);
  const auto sym = symmetrize(obs, is.spec);

  REQUIRE(sym.lambda_sym(0, 0) == Catch::Approx(2.4));
  REQUIRE(sym.lambda_sym(0, 1) == Catch::Approx(2.0));
  REQUIRE(sym.lambda_sym(1, 0) == Catch::Approx(2.0));

  // equal cross snrs: plain average scaled to unit variance
  const Eigen::MatrixXd expect01 =
      (obs.blocks[0][1] + obs.blocks[1][0].transpose()) / std::sqrt(2.0);
  REQUIRE((sym.sym_blocks[0][1] - expect01).lpNorm<Eigen::Infinity>() <= 1e-14);

  // diagonal: symmetric with the ensemble scaling
  const Eigen::MatrixXd expect00 = (obs.blocks[0][0] + obs.blocks[0][0].transpose()) / std::sqrt(2.0);
  REQUIRE((sym.sym_blocks[0][0] - expect00).lpNorm<Eigen::Infinity>() <= 1e-14);
  REQUIRE((sym.sym_blocks[0][0] - sym.sym_blocks[0][0].transpose()).lpNorm<Eigen::Infinity>() <=
          1e-14);

  // both snrs zero: equal-weight convention still combines the two blocks
  const auto is0 = make_instance(basic_spec(0, 0, 0, 0), 48, 5);
  const auto obs0 = sample_instance(is0);
  const auto sym0 = symmetrize(obs0, is0.spec);
  const Eigen::MatrixXd expect0 =
      std::sqrt(0.5) * obs0.blocks[0][1] + std::sqrt(0.5) * obs0.blocks[1][0].transpose();
  REQUIRE((sym0.sym_blocks[0][1] - expect0).lpNorm<Eigen::Infinity>() <= 1e-14);

  // unbalanced snrs weight the informative direction more
  const auto isu = make_instance(basic_spec(0, 3.0, 1.0, 0), 48, 5);
  const auto obsu = sample_instance(isu);
  const auto symu = symmetrize(obsu, isu.spec);
  const Eigen::MatrixXd expectu = std::sqrt(0.75) * obsu.blocks[0][1] +
                                  std::sqrt(0.25) * obsu.blocks[1][0].transpose();
  REQUIRE((symu.sym_blocks[0][1] - expectu).lpNorm<Eigen::Infinity>() <= 1e-14);

  // noise-only symmetrized entries keep unit variance
  const auto isv = make_instance(basic_spec(0, 0, 0, 0), 256, 11);
  const auto symv = symmetrize(sample_instance(isv), isv.spec);
  const auto& Z = symv.sym_blocks[0][1];
  const double var = (Z.array() - Z.mean()).square().sum() / (Z.size() - 1.0);
  REQUIRE(var == Catch::Approx(1.0).margin(4.0 / std::sqrt(static_cast<double>(Z.size()))));
}

TEST_CASE("symmetrization preserves the likelihood up to a constant", "[model]") {
  auto is = make_instance(basic_spec(1.5, 2.0, 0.5, 0.8), 8, 31);
  is.n = {3, 2};  // deliberately lopsided tiny groups
  const auto obs = sample_instance(is);
  const auto sym = symmetrize(obs, is.spec);

  // evaluate both likelihoods with the truth replaced by arbitrary vectors;
  // the difference must not depend on them
  Substream rng(42, {tag::init});
  double delta_ref = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    Observations probe = obs;
    if (rep > 0)
      for (auto& x : probe.truth) rng.fill_gaussian(x);
    SymObservations sym_probe = sym;
    const double delta = loglik_raw(probe, is) - loglik_sym(sym_probe, probe, is);
    if (rep == 0)
      delta_ref = delta;
    else
      REQUIRE(delta == Catch::Approx(delta_ref).margin(1e-9));
  }
}

TEST_CASE("prior sampling matches the declared distributions", "[model]") {
  Substream rng(123, {tag::truth, 0});
  const auto rad = Prior::rademacher();
  double mean = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = draw_from_prior(rad, rng);
    REQUIRE(std::abs(x) == 1.0);
    mean += x;
  }
  REQUIRE(mean / 4000.0 == Catch::Approx(0.0).margin(0.07));

  const auto bern = Prior::bernoulli_standardized(0.1);
  int hits = 0;
  double m2 = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = draw_from_prior(bern, rng);
    hits += x > 0.0;
    m2 += x * x;
  }
  REQUIRE(hits / 4000.0 == Catch::Approx(0.1).margin(0.02));
  REQUIRE(m2 / 4000.0 == Catch::Approx(1.0).margin(0.15));
}

TEST_CASE("spec factories", "[model]") {
  {
    const auto s = make_two_group(0.5, 2.0);
    REQUIRE(s.lambda.isApprox(Eigen::MatrixXd::Ones(2, 2)));
    REQUIRE(s.beta(0) == 0.5);
    const auto d = make_two_group(0.0, 3.0);
    REQUIRE(d.lambda(0, 0) == 3.0);
    REQUIRE(d.lambda(0, 1) == 0.0);
    const auto a = make_two_group(1.0, 3.0);
    REQUIRE(a.lambda(0, 0) == 0.0);
    REQUIRE(a.lambda(0, 1) == 3.0);
    REQUIRE_THROWS_AS(make_two_group(-0.1, 2.0), config_error);
    REQUIRE_THROWS_AS(make_two_group(1.1, 2.0), config_error);
    REQUIRE_THROWS_AS(make_two_group(0.5, 0.0), config_error);
  }
  {
    const Eigen::Vector3d even = Eigen::Vector3d::Constant(1.0 / 3.0);
    const auto s = make_three_group({{0, 0}, {1, 2}}, 2.0, even);
    REQUIRE(s.lambda(0, 0) == Catch::Approx(9.0).margin(1e-12));  // 9 lambda / 2
    REQUIRE(s.lambda(1, 2) == Catch::Approx(9.0).margin(1e-12));
    REQUIRE(s.beta.dot(s.lambda * s.beta) == Catch::Approx(2.0).margin(1e-12));

    Eigen::Vector3d uneven;
    uneven << 0.2, 0.4, 0.4;
    const auto t = make_three_group({{0, 1}, {0, 2}}, 1.0, uneven);
    REQUIRE(t.lambda(0, 1) == Catch::Approx(1.0 / 0.16).margin(1e-12));
    REQUIRE(t.beta.dot(t.lambda * t.beta) == Catch::Approx(1.0).margin(1e-12));

    REQUIRE_THROWS_AS(make_three_group({}, 1.0, even), config_error);
    REQUIRE_THROWS_AS(make_three_group({{0, 3}}, 1.0, even), config_error);
    REQUIRE_THROWS_AS(make_three_group({{0, 1}, {0, 1}}, 1.0, even), config_error);
  }
  {
    const auto s = make_hetero_pca(1.0, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    REQUIRE(s.lambda(0, 1) == 1.0);
    REQUIRE(s.lambda(1, 0) == 0.0);
    REQUIRE(s.lambda(1, 1) == 0.0);

    Eigen::VectorXd sig(2);
    sig << 1.0, 2.0;
    const auto t = make_hetero_pca(0.5, Eigen::VectorXd::Constant(2, 0.25), sig);
    REQUIRE(t.lambda(0, 1) == 1.0);
    REQUIRE(t.lambda(0, 2) == 0.25);
    REQUIRE_THROWS_AS(
        make_hetero_pca(0.5, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)), config_error);
  }
  {
    const auto s = make_csbm(2.0, 1.5, 0.4);
    REQUIRE(s.beta(0) == Catch::Approx(0.4));
    REQUIRE(s.beta(1) == Catch::Approx(0.6));
    REQUIRE(s.lambda(0, 0) == 2.0);
    REQUIRE(s.lambda(0, 1) == 1.5);
    REQUIRE(s.lambda(1, 0) == 0.0);
    REQUIRE(s.lambda(1, 1) == 0.0);
    REQUIRE(s.priors[0].kind() == Prior::Kind::Discrete);

    const auto w = make_csbm(2.0, 0.0, 0.5);
    REQUIRE_NOTHROW(limit_value_decoupled_wigner(w));
    REQUIRE_THROWS_AS(make_csbm(2.0, 1.0, 1.0), config_error);
  }
}

TEST_CASE("instance dumps round-trip", "[model]") {
  const auto is = make_instance(basic_spec(1.5, 2.0, 0.5, 0.8, 0.7), 20, 17);
  const auto obs = sample_instance(is);
  const auto tmp = std::filesystem::path(BLOCKSPIKE_TEST_TMP);
  std::filesystem::create_directories(tmp);

  save_observations_binary(obs, tmp / "inst.bin");
  const auto back = load_observations_binary(tmp / "inst.bin");
  REQUIRE(back.truth[0] == obs.truth[0]);
  REQUIRE(back.side[0] == obs.side[0]);
  REQUIRE(back.side[1].size() == 0);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) REQUIRE(back.blocks[k][l] == obs.blocks[k][l]);

  save_observations_csv(obs, tmp / "inst_csv");
  const auto back2 = load_observations_csv(tmp / "inst_csv");
  REQUIRE(back2.truth[1] == obs.truth[1]);
  REQUIRE(back2.side[0] == obs.side[0]);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) REQUIRE(back2.blocks[k][l] == obs.blocks[k][l]);

  REQUIRE_THROWS_AS(load_observations_binary(tmp / "missing.bin"), resource_error);
}

TEST_CASE("oversized instances are refused before allocation", "[model]") {
  const auto is = make_instance(basic_spec(1.0, 0, 0, 1.0), 40000, 3);
  REQUIRE_THROWS_AS(sample_instance(is), resource_error);
}
