// Command-line front end. Four subcommands share one JSON document schema:
//   limits      exact asymptotic mmse curves from the variational solver
//   experiment  monte carlo sweep of the estimation algorithms
//   wpca        closed-form weighted-pca overlap analysis
//   sample      dump one sampled instance to disk
// Exit codes: 0 ok, 2 config, 3 solver/numeric, 4 resource, 1 unexpected.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockspike/algorithms.hpp"
#include "blockspike/config.hpp"
#include "blockspike/errors.hpp"
#include "blockspike/eval.hpp"
#include "blockspike/limits.hpp"
#include "blockspike/model.hpp"
#include "blockspike/model_io.hpp"
#include "blockspike/version.hpp"
#include "blockspike/wpca.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blockspike;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out = ".";
  int workers = 0;           // 0: keep the config value
  std::string seed;          // empty: keep the config value
  bool trace = false;
};

json load_document(const CommonArgs& args) {
  if (args.config_path.empty() == args.preset.empty())
    throw config_error("pass exactly one of --config and --preset");
  if (!args.preset.empty()) return cfg::preset_config(args.preset);
  std::ifstream in(args.config_path);
  if (!in) throw config_error("cannot open config file " + args.config_path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw config_error("config file " + args.config_path + ": " + e.what());
  }
}

// command-line overrides folded into the document before parsing, so the
// manifest's normalized config reflects what actually ran
void apply_overrides(json& doc, const CommonArgs& args) {
  if (args.workers > 0) {
    doc["workers"] = args.workers;
  } else if (!doc.contains("workers")) {
    // unstated anywhere: use the hardware; trial seeding makes the results
    // identical at any worker count, only the wall time changes
    const unsigned hc = std::thread::hardware_concurrency();
    doc["workers"] = hc > 0 ? static_cast<int>(hc) : 1;
  }
  if (!args.seed.empty()) {
    try {
      std::size_t pos = 0;
      const std::uint64_t s = std::stoull(args.seed, &pos, 0);
      if (pos != args.seed.size()) throw std::invalid_argument("trailing characters");
      doc["base_seed"] = s;
    } catch (const std::exception&) {
      throw config_error("--seed: expected an unsigned integer, got '" + args.seed + "'");
    }
  }
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw resource_error("cannot create output directory " + dir.string());
  return dir;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string suffix(const std::string& label) { return label.empty() ? "" : "_" + label; }

std::ofstream open_text(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw resource_error("cannot open " + p.string() + " for writing");
  return f;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& normalized,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = normalized;
  m["outputs"] = outputs;
  auto f = open_text(dir / "manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw resource_error("write failed for manifest.json");
}

struct NonUnique {
  std::string curve;
  double sweep_value;
};

void print_warnings(const std::vector<NonUnique>& rows) {
  if (rows.empty()) return;
  std::cout << "warning: the variational maximizer is not unique at " << rows.size()
            << " sweep point" << (rows.size() == 1 ? "" : "s")
            << "; reported mmse values there are upper bounds chosen as the best maximizer:\n";
  for (const auto& r : rows) {
    std::cout << "  ";
    if (!r.curve.empty()) std::cout << "curve " << r.curve << ", ";
    std::cout << "sweep_value " << num(r.sweep_value) << "\n";
  }
}

// shared by limits and experiment: exact curve rows at %.12g
void write_mmse_csv(const fs::path& p, const std::vector<LimitCurveRow>& rows) {
  auto f = open_text(p);
  f << "sweep_value,group_or_block,mmse,unique_flag\n";
  for (const auto& r : rows)
    f << num(r.sweep_value) << ',' << r.label << ',' << num(r.mmse) << ',' << (r.unique ? 1 : 0)
      << '\n';
  if (!f) throw resource_error("write failed for " + p.string());
}

json saddle_to_json(double sweep_value, const SaddlePoint& sp) {
  json e;
  e["sweep_value"] = sweep_value;
  e["q_star"] = std::vector<double>(sp.q_star.data(), sp.q_star.data() + sp.q_star.size());
  e["r_tilde"] =
      std::vector<double>(sp.r_tilde_star.data(), sp.r_tilde_star.data() + sp.r_tilde_star.size());
  e["value"] = sp.value;
  e["unique"] = sp.unique;
  e["stationary_points"] = json::array();
  for (const auto& q : sp.stationary_points)
    e["stationary_points"].push_back(std::vector<double>(q.data(), q.data() + q.size()));
  return e;
}

std::vector<LimitCurveRow> limit_rows_for(const SweepPoint& pt, const SolverOptions& opts,
                                          SaddlePoint* saddle_out) {
  const SaddlePoint sp = solve_limit(pt.spec, opts);
  const MmseResult mm = mmse_from_saddle(pt.spec, sp);
  std::vector<LimitCurveRow> rows;
  const int K = pt.spec.K();
  for (int k = 0; k < K; ++k)
    rows.push_back({pt.value, "vector_" + std::to_string(k), mm.vector_mmse(k), sp.unique});
  for (int k = 0; k < K; ++k)
    for (int l = k; l < K; ++l)
      rows.push_back({pt.value, "block_" + std::to_string(k) + std::to_string(l),
                      mm.block_mmse(k, l), sp.unique});
  if (saddle_out) *saddle_out = sp;
  return rows;
}

int cmd_limits(const CommonArgs& args) {
  json doc = load_document(args);
  apply_overrides(doc, args);
  const cfg::RunDocument d = cfg::parse_run_document(doc);
  const fs::path dir = prepare_out(args.out);
  std::vector<std::string> outputs;
  std::vector<NonUnique> warn;

  for (const auto& curve : d.curves) {
    std::vector<LimitCurveRow> rows;
    json saddles = json::array();
    for (const auto& pt : curve.points) {
      SaddlePoint sp;
      for (auto& r : limit_rows_for(pt, d.solver, &sp)) rows.push_back(std::move(r));
      saddles.push_back(saddle_to_json(pt.value, sp));
      if (!sp.unique) warn.push_back({curve.label, pt.value});
    }
    const std::string mmse_name = "mmse" + suffix(curve.label) + ".csv";
    const std::string saddle_name = "saddle" + suffix(curve.label) + ".json";
    write_mmse_csv(dir / mmse_name, rows);
    {
      auto f = open_text(dir / saddle_name);
      f << saddles.dump(2) << "\n";
      if (!f) throw resource_error("write failed for " + saddle_name);
    }
    outputs.push_back(mmse_name);
    outputs.push_back(saddle_name);
  }
  write_manifest(dir, "limits", d.normalized, outputs);
  print_warnings(warn);
  std::cout << "wrote " << outputs.size() + 1 << " files to " << dir.string() << "\n";
  return 0;
}

// reruns trial 0 of each sweep point with trajectory recording for the
// iterative algorithms; the instance matches the harness trial exactly
void write_trace_csv(const fs::path& p, const cfg::Curve& curve, const cfg::RunDocument& d) {
  auto f = open_text(p);
  f << "point_index,sweep_value,algorithm,t,group,overlap,mean_variance\n";
  auto emit = [&](long pi, double sv, const char* alg, int t, int k, double ov, double mv) {
    f << pi << ',' << num(sv) << ',' << alg << ',' << t << ',' << k << ',' << num(ov) << ','
      << num(mv) << '\n';
  };
  for (std::size_t pi = 0; pi < curve.points.size(); ++pi) {
    const SweepPoint& pt = curve.points[pi];
    const std::uint64_t seed = trial_seed(d.base_seed, pt.value, 0);
    const InstanceSpec is = make_instance(pt.spec, d.N, seed);
    const Observations obs = sample_instance(is);
    const SymObservations sym = symmetrize(obs, pt.spec);
    const int K = pt.spec.K();
    for (const auto& alg : d.algorithms) {
      if (alg.kind == Algorithm::amp) {
        AmpOptions o = alg.amp;
        o.seed = seed;
        o.record_trajectory = true;
        const AmpResult r = amp_groupwise(sym, pt.spec, d.N, o);
        for (const auto& st : r.trajectory)
          for (int k = 0; k < K; ++k)
            emit(static_cast<long>(pi), pt.value, "amp", st.t, k,
                 detail::squared_correlation(obs.truth[k], st.m[k]), st.v[k].mean());
      } else if (alg.kind == Algorithm::gradient_descent) {
        std::vector<std::vector<Eigen::VectorXd>> steps;
        GdConfig g = alg.gd;
        g.trace = &steps;
        gradient_descent(sym, d.N, g);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t t = 0; t < steps.size(); ++t)
          for (int k = 0; k < K; ++k)
            emit(static_cast<long>(pi), pt.value, "gradient_descent", static_cast<int>(t + 1), k,
                 detail::squared_correlation(obs.truth[k], steps[t][k]), nan);
      }
    }
  }
  if (!f) throw resource_error("write failed for " + p.string());
}

int cmd_experiment(const CommonArgs& args) {
  json doc = load_document(args);
  apply_overrides(doc, args);
  const cfg::RunDocument d = cfg::parse_run_document(doc);
  const fs::path dir = prepare_out(args.out);
  std::vector<std::string> outputs;
  std::vector<NonUnique> warn;

  for (const auto& curve : d.curves) {
    ExperimentConfig ec;
    ec.sweep_var = curve.sweep_var == "none" ? "lambda" : curve.sweep_var;
    ec.points = curve.points;
    ec.N = d.N;
    ec.algorithms = d.algorithms;
    ec.trials = d.trials;
    ec.base_seed = d.base_seed;
    ec.metric_diag_mse = d.metric_diag_mse;
    ec.metric_overlap = d.metric_overlap;
    ec.workers = d.workers;
    ec.compute_limits = d.with_limits;
    ec.limit_opts = d.solver;
    const ExperimentResult res = run_experiment(ec);

    const std::string results_name = "results" + suffix(curve.label) + ".csv";
    {
      auto f = open_text(dir / results_name);
      f << "sweep_var,sweep_value,algorithm,group,metric,mean,stderr,trials,completed\n";
      for (const auto& a : res.aggregates)
        f << ec.sweep_var << ',' << num(a.sweep_value) << ',' << algorithm_name(a.algorithm) << ','
          << a.group << ',' << a.metric << ',' << num(a.mean) << ',' << num(a.std_error) << ','
          << a.trials << ',' << a.completed << '\n';
      if (!f) throw resource_error("write failed for " + results_name);
    }
    outputs.push_back(results_name);

    int failed = 0;
    for (const auto& t : res.trials)
      if (!t.ok) ++failed;
    if (failed > 0) {
      const std::string fail_name = "failures" + suffix(curve.label) + ".csv";
      auto f = open_text(dir / fail_name);
      f << "point_index,sweep_value,algorithm,seed,reason\n";
      for (const auto& t : res.trials)
        if (!t.ok)
          f << t.point_index << ',' << num(t.sweep_value) << ',' << algorithm_name(t.algorithm)
            << ',' << t.seed << ",\"" << t.failure << "\"\n";
      outputs.push_back(fail_name);
      std::cout << "note: " << failed << " of " << res.trials.size()
                << " trial runs failed; see " << fail_name << "\n";
    }

    if (d.with_limits) {
      const std::string mmse_name = "mmse" + suffix(curve.label) + ".csv";
      write_mmse_csv(dir / mmse_name, res.limit_curve);
      outputs.push_back(mmse_name);
      for (const auto& r : res.limit_curve)
        if (!r.unique && (warn.empty() || warn.back().curve != curve.label ||
                          warn.back().sweep_value != r.sweep_value))
          warn.push_back({curve.label, r.sweep_value});
    }

    if (args.trace && !d.algorithms.empty()) {
      const std::string trace_name = "trace" + suffix(curve.label) + ".csv";
      write_trace_csv(dir / trace_name, curve, d);
      outputs.push_back(trace_name);
    }
  }
  write_manifest(dir, "experiment", d.normalized, outputs);
  print_warnings(warn);
  std::cout << "wrote " << outputs.size() + 1 << " files to " << dir.string() << "\n";
  return 0;
}

int cmd_wpca(const CommonArgs& args) {
  json doc = load_document(args);
  const cfg::WpcaDocument d = cfg::parse_wpca_document(doc);
  const fs::path dir = prepare_out(args.out);

  const Eigen::VectorXd sigmas = d.sigma2.array().sqrt();
  const WpcaAnalysis a = wpca_analyze(d.beta0, d.betas, sigmas);

  json out;
  out["beta0"] = a.beta0;
  out["betas"] = std::vector<double>(a.betas.data(), a.betas.data() + a.betas.size());
  out["sigma2"] = std::vector<double>(d.sigma2.data(), d.sigma2.data() + d.sigma2.size());
  out["threshold_sum"] = a.threshold_sum;
  out["above_threshold"] = a.above_threshold;
  out["q0"] = a.q0;
  out["q_ell"] = std::vector<double>(a.q_ell.data(), a.q_ell.data() + a.q_ell.size());
  const double ratio = a.q0 / a.beta0;
  out["factor_diag_mmse"] = 1.0 - ratio * ratio;

  if (d.check_against_limit) {
    const ProblemSpec spec = make_hetero_pca(d.beta0, d.betas, sigmas);
    const SaddlePoint sp = solve_limit(spec);
    out["solver_q0"] = sp.q_star(0);
    out["solver_agrees"] = std::abs(sp.q_star(0) - a.q0) <= 1e-6;
  }

  {
    auto f = open_text(dir / "analysis.json");
    f << out.dump(2) << "\n";
    if (!f) throw resource_error("write failed for analysis.json");
  }
  write_manifest(dir, "wpca", d.normalized, {"analysis.json"});
  std::cout << "q0 = " << num(a.q0) << (a.above_threshold ? " (above threshold)" : " (at or below threshold)")
            << "; wrote analysis.json to " << dir.string() << "\n";
  return 0;
}

int cmd_sample(const CommonArgs& args) {
  json doc = load_document(args);
  apply_overrides(doc, args);
  const cfg::RunDocument d = cfg::parse_run_document(doc);
  if (d.curves.size() != 1 || d.curves[0].points.size() != 1)
    throw config_error("sample needs a single-point model (no sweep grids)");
  constexpr long kMaxDumpN = 4096;
  if (d.N > kMaxDumpN)
    throw resource_error("instance dump capped at N = " + std::to_string(kMaxDumpN) +
                         " coordinates; asked for " + std::to_string(d.N));
  const fs::path dir = prepare_out(args.out);

  const SweepPoint& pt = d.curves[0].points[0];
  const std::uint64_t seed = trial_seed(d.base_seed, pt.value, 0);
  const InstanceSpec is = make_instance(pt.spec, d.N, seed);
  Observations obs = sample_instance(is);
  // the dump format keys dimensions off the truth vectors, so redaction
  // zeroes them rather than dropping them
  if (!d.with_truth)
    for (auto& x : obs.truth) x.setZero();

  std::vector<std::string> outputs;
  if (d.format == "binary") {
    save_observations_binary(obs, dir / "instance.bin");
    outputs.push_back("instance.bin");
  } else {
    save_observations_csv(obs, dir / "instance");
    outputs.push_back("instance/blocks.csv");
    outputs.push_back("instance/side.csv");
    outputs.push_back("instance/truth.csv");
  }
  json normalized = d.normalized;
  normalized["resolved_seed"] = seed;
  write_manifest(dir, "sample", normalized, outputs);
  std::cout << "sampled N = " << d.N << " instance with seed " << seed << " into " << dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact mmse limits and estimation experiments for groupwise spiked matrices"};
  app.require_subcommand(1);

  CommonArgs limits_args, exp_args, wpca_args, sample_args;
  auto add_common = [](CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config,-c", a.config_path, "JSON config document");
    sub->add_option("--preset", a.preset,
                    "embedded preset: fig1a, fig1b, fig2a, fig2b, fig_appendix_d");
    sub->add_option("--out,-o", a.out, "output directory")->capture_default_str();
    sub->add_option("--workers", a.workers, "parallel trial workers (overrides the config)");
    sub->add_option("--seed", a.seed, "base seed override (decimal or 0x hex)");
  };

  CLI::App* limits = app.add_subcommand("limits", "solve the asymptotic mmse curves");
  add_common(limits, limits_args);
  CLI::App* experiment = app.add_subcommand("experiment", "run the monte carlo sweep");
  add_common(experiment, exp_args);
  experiment->add_flag("--trace", exp_args.trace,
                       "also write per-iteration trajectories of trial 0");
  CLI::App* wpca = app.add_subcommand("wpca", "closed-form weighted-pca analysis");
  add_common(wpca, wpca_args);
  CLI::App* sample = app.add_subcommand("sample", "dump one sampled instance");
  add_common(sample, sample_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (limits->parsed()) return cmd_limits(limits_args);
    if (experiment->parsed()) return cmd_experiment(exp_args);
    if (wpca->parsed()) return cmd_wpca(wpca_args);
    if (sample->parsed()) return cmd_sample(sample_args);
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const resource_error& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 4;
  } catch (const solver_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
