// Command-line front end: synthetic instance generation, solving external
// view graphs, evaluating motion files and running parameter sweeps.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 solver
// failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lma/averaging.hpp"
#include "lma/bench.hpp"
#include "lma/errors.hpp"
#include "lma/metrics.hpp"
#include "lma/synth.hpp"
#include "lma/view_graph.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kSolver = 3;

void add_synth_flags(CLI::App* app, lma::SynthConfig& c) {
  app->add_option("--n", c.n, "number of nodes")->capture_default_str();
  app->add_option("--p", c.p, "edge probability")->capture_default_str();
  app->add_option("--q", c.q, "outlier probability")->capture_default_str();
  app->add_option("--sigma_r_init", c.sigma_r_init)->capture_default_str();
  app->add_option("--sigma_t_init", c.sigma_t_init)->capture_default_str();
  app->add_option("--sigma_r_inlier", c.sigma_r_inlier)->capture_default_str();
  app->add_option("--sigma_t_inlier", c.sigma_t_inlier)->capture_default_str();
  app->add_option("--seed", c.seed, "base PRNG seed")->capture_default_str();
}

void add_solver_flags(CLI::App* app, lma::SolverConfig& c) {
  app->add_option("--epsilon", c.epsilon, "tolerance on the increment norm")->capture_default_str();
  app->add_option("--k_max", c.k_max, "maximum outer iterations")->capture_default_str();
  app->add_option("--alpha", c.alpha, "kernel-width quantile")->capture_default_str();
  app->add_option("--chi", c.chi, "kernel-width floor")->capture_default_str();
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, end - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size()) {
      throw lma::InvalidArgument("--values: cannot parse '" + tok + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust motion averaging: L-MA, MCC-MA and MA solvers with a synthetic benchmark"};
  app.require_subcommand(1);

  // synth
  lma::SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic instance");
  add_synth_flags(synth, synth_cfg);
  synth->add_option("--out", synth_out, "output prefix; writes <out>.truth.txt, <out>.init.txt, "
                                        "<out>.graph.txt, <out>.outliers.txt")->required();

  // solve
  lma::SolverConfig solve_cfg;
  std::string graph_path, init_path, solve_out, report_out, method_name = "L_MA";
  auto* solve = app.add_subcommand("solve", "solve a view graph from files");
  solve->add_option("--graph", graph_path, "graph file")->required();
  solve->add_option("--init", init_path, "initial motion file")->required();
  solve->add_option("--method", method_name, "MA, MCC_MA or L_MA")->capture_default_str();
  add_solver_flags(solve, solve_cfg);
  solve->add_option("--out", solve_out, "estimated motion file")->required();
  solve->add_option("--report", report_out, "per-iteration report CSV (default <out>.report.csv)");

  // eval
  std::string est_path, truth_path, eval_out;
  auto* eval = app.add_subcommand("eval", "compare two motion files");
  eval->add_option("--estimate", est_path)->required();
  eval->add_option("--truth", truth_path)->required();
  eval->add_option("--out", eval_out, "CSV output (default stdout)");

  // sweep
  lma::SweepSpec spec;
  std::string vary_name = "q", values_str, methods_str = "MA,MCC_MA,L_MA", sweep_out;
  bool no_wall_time = false;
  auto* sweep = app.add_subcommand("sweep", "run a one-parameter sweep and write CSV");
  sweep->add_option("--vary", vary_name, "n, p, q, sigma_inlier or sigma_init")->capture_default_str();
  sweep->add_option("--values", values_str, "comma-separated parameter values")->required();
  sweep->add_option("--seeds_per_point", spec.seeds_per_point)->capture_default_str();
  sweep->add_option("--methods", methods_str, "comma-separated methods")->capture_default_str();
  sweep->add_option("--jobs", spec.jobs, "parallel workers")->capture_default_str();
  sweep->add_flag("--no_wall_time", no_wall_time, "write 0 in the wall-time column");
  add_synth_flags(sweep, spec.base);
  add_solver_flags(sweep, spec.solver);
  sweep->add_option("--out", sweep_out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*synth) {
      const lma::SynthInstance inst = lma::generate(synth_cfg);
      lma::save_motions(inst.truth, synth_out + ".truth.txt");
      lma::save_motions(inst.init, synth_out + ".init.txt");
      lma::save_graph(inst.graph, synth_out + ".graph.txt");
      std::ofstream mask(synth_out + ".outliers.txt");
      for (bool b : inst.outlier_mask) mask << (b ? 1 : 0) << '\n';
      if (!mask) throw lma::Error(synth_out + ".outliers.txt: write failed");
    } else if (*solve) {
      solve_cfg.method = lma::parse_method(method_name);
      if (report_out.empty()) report_out = solve_out + ".report.csv";
      const lma::SolverReport rep =
          lma::run_solve(graph_path, init_path, solve_cfg, solve_out, report_out);
      std::cout << "iterations " << rep.iterations << " converged " << (rep.converged ? 1 : 0)
                << '\n';
    } else if (*eval) {
      const lma::MotionSet est = lma::load_motions(est_path);
      const lma::MotionSet truth = lma::load_motions(truth_path);
      if (est.size() != truth.size()) {
        throw lma::ValidationError("estimate and truth differ in length");
      }
      const lma::ErrorSummary s = lma::global_errors(est, truth);
      std::ofstream file;
      if (!eval_out.empty()) {
        file.open(eval_out);
        if (!file) throw lma::Error(eval_out + ": cannot open for writing");
      }
      std::ostream& os = eval_out.empty() ? std::cout : file;
      os.precision(17);
      os << "e_R,e_t\n" << s.rotation_error << ',' << s.translation_error << '\n';
    } else if (*sweep) {
      spec.vary = lma::parse_sweep_param(vary_name);
      spec.values = parse_values(values_str);
      spec.methods.clear();
      std::size_t pos = 0;
      while (pos <= methods_str.size()) {
        const std::size_t end = std::min(methods_str.find(',', pos), methods_str.size());
        spec.methods.push_back(lma::parse_method(methods_str.substr(pos, end - pos)));
        pos = end + 1;
      }
      spec.record_wall_time = !no_wall_time;
      lma::run_sweep(spec, sweep_out);
    }
  } catch (const lma::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const lma::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const lma::StructuralError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const lma::GenerationError& e) {
    std::cerr << "generation failure: " << e.what() << '\n';
    return kSolver;
  } catch (const lma::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return 0;
}
