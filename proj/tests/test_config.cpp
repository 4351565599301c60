// Config schema: defaults, strict unknown-key rejection with dotted paths,
// normalization fixpoint, presets, and the installed CLI binary end to end.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "blockspike/config.hpp"
#include "blockspike/version.hpp"

using namespace blockspike;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

json minimal_two_group() {
  return json::parse(R"({"model": {"two_group": {"alpha": 0.3, "lambda": 1.5}}})");
}

}  // namespace

TEST_CASE("a minimal document fills in every default", "[config]") {
  const cfg::RunDocument d = cfg::parse_run_document(minimal_two_group());
  CHECK(d.N == 1024);
  CHECK(d.trials == 64);
  CHECK(d.base_seed == 0x5eedba5eull);
  CHECK(d.workers == 1);
  CHECK(d.algorithms.empty());
  CHECK(d.metric_diag_mse);
  CHECK_FALSE(d.metric_overlap);
  CHECK(d.with_limits);
  CHECK(d.format == "binary");
  CHECK(d.with_truth);

  REQUIRE(d.curves.size() == 1);
  const cfg::Curve& c = d.curves[0];
  CHECK(c.label.empty());
  CHECK(c.sweep_var == "none");
  REQUIRE(c.points.size() == 1);
  CHECK(c.points[0].value == 1.5);
  CHECK(c.points[0].spec.K() == 2);
  // alpha/lambda parameterization: off-diagonal entries carry alpha * lambda
  CHECK(c.points[0].spec.lambda(0, 1) == Catch::Approx(0.3 * 1.5));
  CHECK(c.points[0].spec.lambda(0, 0) == Catch::Approx(0.7 * 1.5));
}

TEST_CASE("unknown keys are rejected with their dotted path", "[config]") {
  json j = minimal_two_group();
  j["trialz"] = 3;
  CHECK_THROWS_WITH(cfg::parse_run_document(j), ContainsSubstring("$.trialz"));

  json j2 = minimal_two_group();
  j2["model"]["two_group"]["lamda"] = 2.0;
  CHECK_THROWS_WITH(cfg::parse_run_document(j2),
                    ContainsSubstring("$.model.two_group.lamda"));

  json j3 = minimal_two_group();
  j3["algorithms"] = json::array({{{"name", "joint_pca"}, {"damping", 0.5}}});
  CHECK_THROWS_WITH(cfg::parse_run_document(j3), ContainsSubstring("$.algorithms[0]"));
}

TEST_CASE("parsing a normalized document is a fixpoint", "[config]") {
  json j = json::parse(R"({
    "model": {"two_group": {"sweep": "alpha", "grid": [0.1, 0.9], "lambda": 2.0,
              "prior_u": {"kind": "rademacher"},
              "prior_v": {"kind": "bernoulli_std", "p": 0.1}}},
    "N": 256, "trials": 8, "workers": 2,
    "algorithms": [{"name": "amp", "damping": 0.25}, {"name": "gd", "steps": 100},
                   {"name": "wpca", "resolution": 9}],
    "metrics": ["diag_mse", "overlap"],
    "limits": false
  })");
  const cfg::RunDocument d = cfg::parse_run_document(j);
  const cfg::RunDocument d2 = cfg::parse_run_document(d.normalized);
  CHECK(d2.normalized == d.normalized);
  // aliases normalize to canonical names
  CHECK(d.normalized["algorithms"][1]["name"] == "gradient_descent");
  CHECK(d.normalized["algorithms"][2]["name"] == "weighted_pca");
  CHECK(d.normalized["algorithms"][0]["damping"] == 0.25);
}

TEST_CASE("three-group documents expand one curve per support", "[config]") {
  json j = json::parse(R"({
    "model": {"three_group": {"supports": [[[1, 1], [2, 3]], [[1, 2]]],
                              "grid": [1.0, 2.0, 3.0]}}
  })");
  const cfg::RunDocument d = cfg::parse_run_document(j);
  REQUIRE(d.curves.size() == 2);
  CHECK(d.curves[0].label == "11_23");
  CHECK(d.curves[1].label == "12");
  CHECK(d.curves[0].sweep_var == "lambda");
  REQUIRE(d.curves[0].points.size() == 3);
  // equal total power split over the support cells, symmetrized
  const ProblemSpec& s = d.curves[1].points[1].spec;
  CHECK(s.K() == 3);
  CHECK(s.lambda(0, 1) > 0.0);
  CHECK(s.lambda(1, 1) == 0.0);

  json both = j;
  both["model"]["three_group"]["all_size_two"] = true;
  CHECK_THROWS_WITH(cfg::parse_run_document(both),
                    ContainsSubstring("exactly one of supports, all_size_two"));

  json bad = j;
  bad["model"]["three_group"]["supports"] = json::parse("[[[0, 1]]]");
  CHECK_THROWS_WITH(cfg::parse_run_document(bad), ContainsSubstring("1-based"));
}

TEST_CASE("malformed sections carry precise errors", "[config]") {
  json p = minimal_two_group();
  p["model"]["two_group"]["prior_u"] = {{"kind", "gauss"}};
  CHECK_THROWS_WITH(cfg::parse_run_document(p),
                    ContainsSubstring("$.model.two_group.prior_u.kind"));

  json m = minimal_two_group();
  m["metrics"] = json::array({"diag_mse", "bogus"});
  CHECK_THROWS_WITH(cfg::parse_run_document(m), ContainsSubstring("$.metrics[1]"));

  json sweep = json::parse(
      R"({"model": {"two_group": {"sweep": "alpha", "grid": [0.5], "alpha": 0.2, "lambda": 2.0}}})");
  CHECK_THROWS_WITH(cfg::parse_run_document(sweep),
                    ContainsSubstring("alpha is the sweep variable"));

  json grid = minimal_two_group();
  grid["model"]["two_group"]["grid"] = json::array({0.5});
  CHECK_THROWS_WITH(cfg::parse_run_document(grid), ContainsSubstring("grid needs a sweep"));
}

TEST_CASE("presets expand to the advertised shapes", "[config]") {
  CHECK(cfg::preset_names().size() == 5);
  CHECK_THROWS_AS(cfg::preset_config("fig9z"), config_error);

  const cfg::RunDocument f1 = cfg::parse_run_document(cfg::preset_config("fig1a"));
  REQUIRE(f1.curves.size() == 1);
  CHECK(f1.curves[0].sweep_var == "alpha");
  CHECK(f1.curves[0].points.size() == 32);
  CHECK(f1.curves[0].points.front().value == 0.0);
  CHECK(f1.curves[0].points.back().value == 1.0);
  CHECK(f1.N == 2048);
  CHECK(f1.trials == 64);
  CHECK(f1.algorithms.size() == 4);

  const cfg::RunDocument f1b = cfg::parse_run_document(cfg::preset_config("fig1b"));
  CHECK(f1b.curves[0].points[0].spec.priors[0].kind() == Prior::Kind::Discrete);

  const cfg::RunDocument f2 = cfg::parse_run_document(cfg::preset_config("fig2a"));
  CHECK(f2.curves.size() == 15);  // C(6, 2) support pairs
  CHECK(f2.algorithms.empty());
  CHECK(f2.curves[0].points.size() == 40);

  const cfg::RunDocument fd = cfg::parse_run_document(cfg::preset_config("fig_appendix_d"));
  CHECK(fd.curves[0].sweep_var == "lambda");
  CHECK(fd.curves[0].points.size() == 15);
  REQUIRE(fd.algorithms.size() == 1);
  CHECK(fd.algorithms[0].kind == Algorithm::amp);
}

TEST_CASE("wpca documents validate and normalize", "[config]") {
  const cfg::WpcaDocument d =
      cfg::parse_wpca_document(json::parse(R"({"betas": [1.0, 2.0], "sigma2": [0.5, 1.0]})"));
  CHECK(d.beta0 == 1.0);
  CHECK(d.betas.size() == 2);
  CHECK(d.check_against_limit);
  CHECK(cfg::parse_wpca_document(d.normalized).normalized == d.normalized);

  CHECK_THROWS_WITH(
      cfg::parse_wpca_document(json::parse(R"({"betas": [1.0], "sigma2": [0.5, 1.0]})")),
      ContainsSubstring("$.sigma2"));
  CHECK_THROWS_WITH(
      cfg::parse_wpca_document(json::parse(R"({"betas": [1.0], "sigma2": [0.0]})")),
      ContainsSubstring("positive"));
}

TEST_CASE("the installed binary drives the documented surface", "[config][cli]") {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::path(BLOCKSPIKE_TEST_TMP) / "cli_smoke";
  fs::create_directories(tmp);
  const std::string cli = BLOCKSPIKE_CLI_PATH;

  {
    std::ofstream f(tmp / "limits.json");
    f << R"({"model": {"two_group": {"alpha": 0.5, "lambda": 2.0}}})";
  }
  auto run = [&](const std::string& cmdline) {
    const int rc = std::system(cmdline.c_str());
    return (rc >> 8) & 0xff;  // exit status on posix
  };

  const std::string out = (tmp / "out").string();
  REQUIRE(run(cli + " limits --config " + (tmp / "limits.json").string() + " --out " + out +
              " > /dev/null") == 0);
  REQUIRE(fs::exists(fs::path(out) / "mmse.csv"));
  REQUIRE(fs::exists(fs::path(out) / "saddle.json"));
  REQUIRE(fs::exists(fs::path(out) / "manifest.json"));
  {
    std::ifstream f(fs::path(out) / "mmse.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "sweep_value,group_or_block,mmse,unique_flag");
    // gaussian pair at total snr 2: every block limit is exactly 3/4
    std::string line;
    bool saw_block = false;
    while (std::getline(f, line))
      if (line.find("block_01") != std::string::npos) {
        saw_block = true;
        CHECK(std::stod(line.substr(line.rfind(',', line.rfind(',') - 1) + 1)) ==
              Catch::Approx(0.75).margin(1e-6));
        break;
      }
    CHECK(saw_block);
  }
  // manifest stores the normalized config: reparsing it is exact
  {
    std::ifstream f(fs::path(out) / "manifest.json");
    json manifest;
    f >> manifest;
    CHECK(manifest["version"] == kVersion);
    const cfg::RunDocument d = cfg::parse_run_document(manifest["config"]);
    CHECK(d.normalized == manifest["config"]);
  }

  // usage errors exit 2, resource refusals exit 4
  CHECK(run(cli + " limits 2> /dev/null") == 2);
  {
    std::ofstream f(tmp / "big.json");
    f << R"({"model": {"two_group": {"alpha": 0.5, "lambda": 2.0}}, "N": 100000})";
  }
  CHECK(run(cli + " sample --config " + (tmp / "big.json").string() + " --out " + out +
            " 2> /dev/null") == 4);
}
