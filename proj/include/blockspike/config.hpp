#pragma once

// JSON documents for the command-line front end. A model section expands
// into labeled sweep curves (value, spec) reused by the limits and
// experiment pipelines; validation is strict: unknown keys are rejected and
// every error carries the dotted path of the offending field. parse and
// emit are mutually inverse on normalized documents (all defaults made
// explicit), which is what run manifests store.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockspike/errors.hpp"
#include "blockspike/eval.hpp"
#include "blockspike/limits.hpp"
#include "blockspike/model.hpp"

namespace blockspike::cfg {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw config_error("config field " + path + ": " + msg);
}

inline const json& need_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

inline void reject_unknown(const json& j, const std::string& path,
                           std::initializer_list<const char*> known) {
  need_object(j, path);
  const std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) fail(path + "." + key, "unknown key");
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

inline long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

inline std::uint64_t get_seed(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) fail(path, "expected an integer seed");
  if (j.is_number_integer() && j.get<long long>() < 0) fail(path, "seed must be nonnegative");
  return j.get<std::uint64_t>();
}

inline bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline Eigen::VectorXd get_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<long>(i)) = get_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

// ---------------------------------------------------------------------------
// priors

inline Prior parse_prior(const json& j, const std::string& path) {
  reject_unknown(j, path, {"kind", "atoms", "probs", "rescale", "p"});
  if (!j.contains("kind")) fail(path + ".kind", "missing");
  const std::string kind = get_string(j["kind"], path + ".kind");
  if (kind == "gaussian") {
    return Prior::unit_gaussian();
  } else if (kind == "rademacher") {
    return Prior::rademacher();
  } else if (kind == "bernoulli_std") {
    if (!j.contains("p")) fail(path + ".p", "missing");
    return Prior::bernoulli_standardized(get_number(j["p"], path + ".p"));
  } else if (kind == "discrete") {
    if (!j.contains("atoms")) fail(path + ".atoms", "missing");
    if (!j.contains("probs")) fail(path + ".probs", "missing");
    const bool rescale = j.contains("rescale") && get_bool(j["rescale"], path + ".rescale");
    return Prior::discrete(get_vector(j["atoms"], path + ".atoms"),
                           get_vector(j["probs"], path + ".probs"), rescale);
  }
  fail(path + ".kind", "unknown prior kind '" + kind +
                           "' (expected gaussian, rademacher, bernoulli_std, or discrete)");
}

inline json emit_prior(const json& as_given) { return as_given; }

// ---------------------------------------------------------------------------
// model section -> labeled curves

struct Curve {
  std::string label;            // "" for a single unlabeled curve
  std::string sweep_var;        // "alpha", "lambda", or "none"
  std::vector<SweepPoint> points;
};

namespace detail {

inline json normalize_prior(const json& j, const std::string& path) {
  parse_prior(j, path);  // validates
  json out;
  out["kind"] = j["kind"];
  if (j["kind"] == "bernoulli_std") out["p"] = j["p"];
  if (j["kind"] == "discrete") {
    out["atoms"] = j["atoms"];
    out["probs"] = j["probs"];
    out["rescale"] = j.contains("rescale") ? j["rescale"] : json(false);
  }
  return out;
}

inline std::vector<double> parse_grid(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of sweep values");
  std::vector<double> g;
  for (std::size_t i = 0; i < j.size(); ++i)
    g.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return g;
}

}  // namespace detail

inline ProblemSpec parse_spec(const json& j, const std::string& path) {
  reject_unknown(j, path, {"beta", "lambda", "r", "priors"});
  for (const char* key : {"beta", "lambda", "priors"})
    if (!j.contains(key)) fail(path + "." + key, "missing");
  ProblemSpec s;
  s.beta = get_vector(j["beta"], path + ".beta");
  const int K = static_cast<int>(s.beta.size());
  const json& lam = j["lambda"];
  if (!lam.is_array() || static_cast<int>(lam.size()) != K)
    fail(path + ".lambda", "expected a " + std::to_string(K) + "-row matrix");
  s.lambda.resize(K, K);
  for (int k = 0; k < K; ++k) {
    const std::string row_path = path + ".lambda[" + std::to_string(k) + "]";
    if (!lam[k].is_array() || static_cast<int>(lam[k].size()) != K)
      fail(row_path, "expected " + std::to_string(K) + " entries");
    for (int l = 0; l < K; ++l) s.lambda(k, l) = get_number(lam[k][l], row_path);
  }
  s.r = j.contains("r") ? get_vector(j["r"], path + ".r") : Eigen::VectorXd::Zero(K);
  const json& priors = j["priors"];
  if (!priors.is_array() || static_cast<int>(priors.size()) != K)
    fail(path + ".priors", "expected one prior per group");
  for (int k = 0; k < K; ++k)
    s.priors.push_back(parse_prior(priors[k], path + ".priors[" + std::to_string(k) + "]"));
  try {
    s.validate();
  } catch (const config_error& e) {
    fail(path, e.what());
  }
  return s;
}

// Expands the "model" section. Exactly one of the three forms:
//   spec:        a raw ProblemSpec document (single point)
//   two_group:   alpha/lambda parameterization, sweeping either coordinate
//   three_group: equal-entry supports at total power lambda, one curve per
//                support, sweeping lambda
inline std::vector<Curve> parse_model(const json& j, const std::string& path) {
  reject_unknown(j, path, {"spec", "two_group", "three_group"});
  const int forms = j.contains("spec") + j.contains("two_group") + j.contains("three_group");
  if (forms != 1) fail(path, "expected exactly one of spec, two_group, three_group");

  std::vector<Curve> curves;
  if (j.contains("spec")) {
    Curve c;
    c.label = "";
    c.sweep_var = "none";
    c.points.push_back({0.0, parse_spec(j["spec"], path + ".spec")});
    curves.push_back(std::move(c));
    return curves;
  }

  if (j.contains("two_group")) {
    const std::string p = path + ".two_group";
    const json& t = j[std::string("two_group")];
    reject_unknown(t, p, {"sweep", "grid", "alpha", "lambda", "prior_u", "prior_v"});
    const std::string sweep = t.contains("sweep") ? get_string(t["sweep"], p + ".sweep") : "none";
    const Prior pu =
        t.contains("prior_u") ? parse_prior(t["prior_u"], p + ".prior_u") : Prior::unit_gaussian();
    const Prior pv =
        t.contains("prior_v") ? parse_prior(t["prior_v"], p + ".prior_v") : Prior::unit_gaussian();
    Curve c;
    c.label = "";
    c.sweep_var = sweep;
    auto fixed = [&](const char* key) {
      if (!t.contains(key))
        fail(p + "." + key, std::string("missing (fixed when sweeping ") + sweep + ")");
      return get_number(t[key], p + "." + std::string(key));
    };
    if (sweep == "alpha") {
      const double lambda = fixed("lambda");
      if (t.contains("alpha")) fail(p + ".alpha", "alpha is the sweep variable here");
      for (double a : detail::parse_grid(t.contains("grid") ? t["grid"] : json(), p + ".grid"))
        c.points.push_back({a, make_two_group(a, lambda, pu, pv)});
    } else if (sweep == "lambda") {
      const double alpha = fixed("alpha");
      if (t.contains("lambda")) fail(p + ".lambda", "lambda is the sweep variable here");
      for (double l : detail::parse_grid(t.contains("grid") ? t["grid"] : json(), p + ".grid"))
        c.points.push_back({l, make_two_group(alpha, l, pu, pv)});
    } else if (sweep == "none") {
      if (t.contains("grid")) fail(p + ".grid", "grid needs a sweep variable");
      c.points.push_back({fixed("lambda"), make_two_group(fixed("alpha"), fixed("lambda"), pu, pv)});
    } else {
      fail(p + ".sweep", "expected alpha, lambda, or none");
    }
    curves.push_back(std::move(c));
    return curves;
  }

  const std::string p = path + ".three_group";
  const json& t = j[std::string("three_group")];
  reject_unknown(t, p, {"beta", "supports", "all_size_two", "grid"});
  Eigen::Vector3d beta(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  if (t.contains("beta")) {
    const Eigen::VectorXd b = get_vector(t["beta"], p + ".beta");
    if (b.size() != 3) fail(p + ".beta", "expected three entries");
    beta = b;
  }
  const std::vector<double> grid =
      detail::parse_grid(t.contains("grid") ? t["grid"] : json(), p + ".grid");

  // supports are written with 1-based group labels, e.g. [[1,1],[2,3]]
  std::vector<std::vector<std::pair<int, int>>> supports;
  std::vector<std::string> labels;
  const bool all_two = t.contains("all_size_two") && get_bool(t["all_size_two"], p + ".all_size_two");
  if (all_two == t.contains("supports"))
    fail(p, "expected exactly one of supports, all_size_two");
  if (all_two) {
    std::vector<std::pair<int, int>> cells;
    for (int a = 0; a < 3; ++a)
      for (int b2 = a; b2 < 3; ++b2) cells.emplace_back(a, b2);
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (std::size_t l = i + 1; l < cells.size(); ++l)
        supports.push_back({cells[i], cells[l]});
  } else {
    const json& sj = t[std::string("supports")];
    if (!sj.is_array() || sj.empty()) fail(p + ".supports", "expected a nonempty array");
    for (std::size_t i = 0; i < sj.size(); ++i) {
      const std::string sp = p + ".supports[" + std::to_string(i) + "]";
      if (!sj[i].is_array() || sj[i].empty()) fail(sp, "expected an array of [row, col] pairs");
      std::vector<std::pair<int, int>> entries;
      for (std::size_t e = 0; e < sj[i].size(); ++e) {
        const std::string ep = sp + "[" + std::to_string(e) + "]";
        if (!sj[i][e].is_array() || sj[i][e].size() != 2) fail(ep, "expected a [row, col] pair");
        const long r = get_integer(sj[i][e][0], ep + "[0]"), c = get_integer(sj[i][e][1], ep + "[1]");
        if (r < 1 || r > 3 || c < 1 || c > 3) fail(ep, "indices are 1-based in {1, 2, 3}");
        entries.emplace_back(static_cast<int>(r - 1), static_cast<int>(c - 1));
      }
      supports.push_back(std::move(entries));
    }
  }
  for (const auto& s : supports) {
    std::string label;
    for (const auto& [a, b2] : s) {
      if (!label.empty()) label += "_";
      label += std::to_string(a + 1) + std::to_string(b2 + 1);
    }
    labels.push_back(label);
  }

  for (std::size_t i = 0; i < supports.size(); ++i) {
    Curve c;
    c.label = labels[i];
    c.sweep_var = "lambda";
    for (double l : grid) {
      try {
        c.points.push_back({l, make_three_group(supports[i], l, beta)});
      } catch (const config_error& e) {
        fail(p + ".supports", std::string(e.what()) + " (support " + labels[i] + ")");
      }
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// algorithms, solver, metrics

inline AlgorithmConfig parse_algorithm(const json& j, const std::string& path) {
  need_object(j, path);
  if (!j.contains("name")) fail(path + ".name", "missing");
  const std::string name = get_string(j["name"], path + ".name");
  AlgorithmConfig a;
  try {
    a.kind = algorithm_from_name(name);
  } catch (const config_error&) {
    fail(path + ".name", "unknown algorithm '" + name + "'");
  }
  switch (a.kind) {
    case Algorithm::amp:
      reject_unknown(j, path, {"name", "max_iter", "tol", "damping", "include_self", "init_std"});
      if (j.contains("max_iter"))
        a.amp.max_iter = static_cast<int>(get_integer(j["max_iter"], path + ".max_iter"));
      if (j.contains("tol")) a.amp.tol = get_number(j["tol"], path + ".tol");
      if (j.contains("damping")) a.amp.damping = get_number(j["damping"], path + ".damping");
      if (j.contains("include_self"))
        a.amp.include_self = get_bool(j["include_self"], path + ".include_self");
      if (j.contains("init_std")) a.amp.init_std = get_number(j["init_std"], path + ".init_std");
      break;
    case Algorithm::gradient_descent: {
      reject_unknown(j, path, {"name", "steps", "gamma", "schedule", "max_restarts"});
      if (j.contains("steps"))
        a.gd.steps = static_cast<int>(get_integer(j["steps"], path + ".steps"));
      if (j.contains("gamma")) a.gd.gamma = get_number(j["gamma"], path + ".gamma");
      if (j.contains("schedule")) {
        const std::string s = get_string(j["schedule"], path + ".schedule");
        if (s == "constant")
          a.gd.schedule = GdConfig::Schedule::constant;
        else if (s == "inv_t")
          a.gd.schedule = GdConfig::Schedule::inv_t;
        else
          fail(path + ".schedule", "expected constant or inv_t");
      }
      if (j.contains("max_restarts"))
        a.gd.max_restarts = static_cast<int>(get_integer(j["max_restarts"], path + ".max_restarts"));
      break;
    }
    case Algorithm::joint_pca:
      reject_unknown(j, path, {"name"});
      break;
    case Algorithm::weighted_pca:
      reject_unknown(j, path, {"name", "resolution"});
      if (j.contains("resolution"))
        a.wpca_resolution = static_cast<int>(get_integer(j["resolution"], path + ".resolution"));
      break;
  }
  return a;
}

inline json emit_algorithm(const AlgorithmConfig& a) {
  json j;
  j["name"] = algorithm_name(a.kind);
  switch (a.kind) {
    case Algorithm::amp:
      j["max_iter"] = a.amp.max_iter;
      j["tol"] = a.amp.tol;
      j["damping"] = a.amp.damping;
      j["include_self"] = a.amp.include_self;
      j["init_std"] = a.amp.init_std;
      break;
    case Algorithm::gradient_descent:
      j["steps"] = a.gd.steps;
      j["gamma"] = a.gd.gamma;
      j["schedule"] = a.gd.schedule == GdConfig::Schedule::constant ? "constant" : "inv_t";
      j["max_restarts"] = a.gd.max_restarts;
      break;
    case Algorithm::joint_pca:
      break;
    case Algorithm::weighted_pca:
      j["resolution"] = a.wpca_resolution;
      break;
  }
  return j;
}

inline SolverOptions parse_solver(const json& j, const std::string& path) {
  reject_unknown(j, path,
                 {"quad_order", "fp_tol", "max_iter", "damping", "random_starts", "seed"});
  SolverOptions o;
  if (j.contains("quad_order"))
    o.quad_order = static_cast<int>(get_integer(j["quad_order"], path + ".quad_order"));
  if (j.contains("fp_tol")) o.fp_tol = get_number(j["fp_tol"], path + ".fp_tol");
  if (j.contains("max_iter"))
    o.max_iter = static_cast<int>(get_integer(j["max_iter"], path + ".max_iter"));
  if (j.contains("damping")) o.damping = get_number(j["damping"], path + ".damping");
  if (j.contains("random_starts"))
    o.random_starts = static_cast<int>(get_integer(j["random_starts"], path + ".random_starts"));
  if (j.contains("seed")) o.seed = get_seed(j["seed"], path + ".seed");
  return o;
}

inline json emit_solver(const SolverOptions& o) {
  json j;
  j["quad_order"] = o.quad_order;
  j["fp_tol"] = o.fp_tol;
  j["max_iter"] = o.max_iter;
  j["damping"] = o.damping;
  j["random_starts"] = o.random_starts;
  j["seed"] = o.seed;
  return j;
}

// ---------------------------------------------------------------------------
// the full run document (limits / experiment / sample share one schema)

struct RunDocument {
  std::vector<Curve> curves;
  SolverOptions solver{};
  long N = 1024;
  int trials = 64;
  std::uint64_t base_seed = 0x5eedba5eull;
  int workers = 1;
  std::vector<AlgorithmConfig> algorithms;
  bool metric_diag_mse = true;
  bool metric_overlap = false;
  bool with_limits = true;
  std::string format = "binary";   // sample output
  bool with_truth = true;          // sample output
  json normalized;                 // defaults made explicit
};

inline RunDocument parse_run_document(const json& j) {
  reject_unknown(j, "$",
                 {"model", "solver", "N", "trials", "base_seed", "workers", "algorithms",
                  "metrics", "limits", "format", "with_truth"});
  if (!j.contains("model")) fail("$.model", "missing");
  RunDocument d;
  d.curves = parse_model(j["model"], "$.model");
  if (j.contains("solver")) d.solver = parse_solver(j["solver"], "$.solver");
  if (j.contains("N")) {
    d.N = get_integer(j["N"], "$.N");
    if (d.N < 1) fail("$.N", "expected a positive coordinate count");
  }
  if (j.contains("trials")) {
    d.trials = static_cast<int>(get_integer(j["trials"], "$.trials"));
    if (d.trials < 1) fail("$.trials", "expected at least one trial");
  }
  if (j.contains("base_seed")) d.base_seed = get_seed(j["base_seed"], "$.base_seed");
  if (j.contains("workers")) {
    d.workers = static_cast<int>(get_integer(j["workers"], "$.workers"));
    if (d.workers < 1) fail("$.workers", "expected at least one worker");
  }
  if (j.contains("algorithms")) {
    if (!j["algorithms"].is_array()) fail("$.algorithms", "expected an array");
    for (std::size_t i = 0; i < j["algorithms"].size(); ++i)
      d.algorithms.push_back(
          parse_algorithm(j["algorithms"][i], "$.algorithms[" + std::to_string(i) + "]"));
  }
  if (j.contains("metrics")) {
    if (!j["metrics"].is_array() || j["metrics"].empty())
      fail("$.metrics", "expected a nonempty array");
    d.metric_diag_mse = false;
    d.metric_overlap = false;
    for (std::size_t i = 0; i < j["metrics"].size(); ++i) {
      const std::string m = get_string(j["metrics"][i], "$.metrics[" + std::to_string(i) + "]");
      if (m == "diag_mse")
        d.metric_diag_mse = true;
      else if (m == "overlap")
        d.metric_overlap = true;
      else
        fail("$.metrics[" + std::to_string(i) + "]", "expected diag_mse or overlap");
    }
  }
  if (j.contains("limits")) d.with_limits = get_bool(j["limits"], "$.limits");
  if (j.contains("format")) {
    d.format = get_string(j["format"], "$.format");
    if (d.format != "binary" && d.format != "csv") fail("$.format", "expected binary or csv");
  }
  if (j.contains("with_truth")) d.with_truth = get_bool(j["with_truth"], "$.with_truth");

  // normalized document: the input with every default made explicit; model
  // and prior subdocuments are normalized structurally
  json n;
  n["model"] = j["model"];
  if (n["model"].contains("two_group")) {
    json& t = n["model"]["two_group"];
    if (!t.contains("sweep")) t["sweep"] = "none";
    if (!t.contains("prior_u")) t["prior_u"] = json{{"kind", "gaussian"}};
    if (!t.contains("prior_v")) t["prior_v"] = json{{"kind", "gaussian"}};
    t["prior_u"] = detail::normalize_prior(t["prior_u"], "$.model.two_group.prior_u");
    t["prior_v"] = detail::normalize_prior(t["prior_v"], "$.model.two_group.prior_v");
  }
  n["solver"] = emit_solver(d.solver);
  n["N"] = d.N;
  n["trials"] = d.trials;
  n["base_seed"] = d.base_seed;
  n["workers"] = d.workers;
  n["algorithms"] = json::array();
  for (const auto& a : d.algorithms) n["algorithms"].push_back(emit_algorithm(a));
  n["metrics"] = json::array();
  if (d.metric_diag_mse) n["metrics"].push_back("diag_mse");
  if (d.metric_overlap) n["metrics"].push_back("overlap");
  n["limits"] = d.with_limits;
  n["format"] = d.format;
  n["with_truth"] = d.with_truth;
  d.normalized = std::move(n);
  return d;
}

// wpca documents have their own small schema
struct WpcaDocument {
  double beta0 = 1.0;
  Eigen::VectorXd betas;
  Eigen::VectorXd sigma2;
  bool check_against_limit = true;
  json normalized;
};

inline WpcaDocument parse_wpca_document(const json& j) {
  reject_unknown(j, "$", {"beta0", "betas", "sigma2", "check_against_limit"});
  WpcaDocument d;
  if (j.contains("beta0")) d.beta0 = get_number(j["beta0"], "$.beta0");
  if (!j.contains("betas")) fail("$.betas", "missing");
  if (!j.contains("sigma2")) fail("$.sigma2", "missing");
  d.betas = get_vector(j["betas"], "$.betas");
  d.sigma2 = get_vector(j["sigma2"], "$.sigma2");
  if (d.sigma2.size() != d.betas.size()) fail("$.sigma2", "expected one entry per arm");
  if ((d.sigma2.array() <= 0.0).any()) fail("$.sigma2", "noise variances must be positive");
  if (j.contains("check_against_limit"))
    d.check_against_limit = get_bool(j["check_against_limit"], "$.check_against_limit");
  json n;
  n["beta0"] = d.beta0;
  n["betas"] = j["betas"];
  n["sigma2"] = j["sigma2"];
  n["check_against_limit"] = d.check_against_limit;
  d.normalized = std::move(n);
  return d;
}

// ---------------------------------------------------------------------------
// presets: figure-reproduction configs embedded in the binary

inline std::vector<std::string> preset_names() {
  return {"fig1a", "fig1b", "fig2a", "fig2b", "fig_appendix_d"};
}

inline json preset_config(const std::string& name) {
  auto grid32 = [] {
    json g = json::array();
    for (int i = 0; i < 32; ++i) g.push_back(i / 31.0);
    return g;
  };
  auto all_four = [] {
    // damping 0.3: at per-group size ~1024 the undamped iteration settles
    // measurably off the fixed point near the bipartite edge of the sweep
    // (mean diag mse +0.02 at alpha = 30/31); mild damping removes the gap
    return json::array({{{"name", "amp"}, {"damping", 0.3}},
                        {{"name", "gradient_descent"}},
                        {{"name", "joint_pca"}},
                        {{"name", "weighted_pca"}}});
  };
  auto lambda_grid = [](double lo, double hi, double step) {
    json g = json::array();
    for (double l = lo; l <= hi + 1e-9; l += step) g.push_back(l);
    return g;
  };

  json j;
  if (name == "fig1a" || name == "fig1b") {
    // alpha sweep at total snr 2, per-group size 1024 (N = 2n), 64 trials
    json prior = name == "fig1a" ? json{{"kind", "gaussian"}} : json{{"kind", "rademacher"}};
    j["model"]["two_group"] = {
        {"sweep", "alpha"}, {"grid", grid32()}, {"lambda", 2.0}, {"prior_u", prior},
        {"prior_v", prior}};
    j["N"] = 2048;
    j["trials"] = 64;
    j["algorithms"] = all_four();
    j["limits"] = true;
  } else if (name == "fig2a" || name == "fig2b") {
    // limits-only support comparison; curves cross well past the thresholds
    j["model"]["three_group"] = {{"all_size_two", true},
                                 {"grid", lambda_grid(0.25, 10.0, 0.25)}};
    if (name == "fig2b") j["model"]["three_group"]["beta"] = {0.2, 0.4, 0.4};
    j["algorithms"] = json::array();
    j["limits"] = true;
  } else if (name == "fig_appendix_d") {
    // non-gaussian amp check: lambda sweep, per-group size 512, 32 trials
    j["model"]["two_group"] = {{"sweep", "lambda"},
                               {"grid", lambda_grid(0.5, 4.0, 0.25)},
                               {"alpha", 0.25},
                               {"prior_u", {{"kind", "rademacher"}}},
                               {"prior_v", {{"kind", "rademacher"}}}};
    j["N"] = 1024;
    j["trials"] = 32;
    j["algorithms"] = json::array({{{"name", "amp"}, {"damping", 0.3}}});
    j["limits"] = true;
  } else {
    throw config_error("unknown preset '" + name + "'");
  }
  return j;
}

}  // namespace blockspike::cfg
