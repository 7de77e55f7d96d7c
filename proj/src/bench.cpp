#include "lma/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "lma/errors.hpp"
#include "lma/metrics.hpp"
#include "lma/rng.hpp"

namespace lma {
namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<ResultRow> run_point_seed(const SweepSpec& spec, std::size_t pi, std::size_t si) {
  SynthConfig cfg = point_config(spec, pi);
  cfg.seed = run_seed(spec.base.seed, pi, si);

  std::vector<ResultRow> rows;
  rows.reserve(spec.methods.size());
  for (Method m : spec.methods) {
    ResultRow r;
    r.method = m;
    r.config = cfg;
    r.param_index = pi;
    r.seed_index = si;
    r.e_r = r.e_t = std::numeric_limits<double>::quiet_NaN();
    rows.push_back(r);
  }

  SynthInstance inst;
  try {
    inst = generate(cfg);
  } catch (const Error& ex) {
    for (auto& r : rows) r.error = std::string("generation: ") + ex.what();
    return rows;
  }

  for (auto& r : rows) {
    SolverConfig sc = spec.solver;
    sc.method = r.method;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult res = solve(inst.graph, inst.init, sc);
      const auto t1 = std::chrono::steady_clock::now();
      if (spec.record_wall_time) {
        r.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
      }
      const ErrorSummary es = global_errors(res.motions, inst.truth);
      r.e_r = es.rotation_error;
      r.e_t = es.translation_error;
      r.iterations = res.report.iterations;
      r.converged = res.report.converged;
    } catch (const SolverError& ex) {
      r.iterations = ex.report().iterations;
      r.error = ex.what();
    } catch (const Error& ex) {
      r.error = ex.what();
    }
  }
  return rows;
}

}  // namespace

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::n: return "n";
    case SweepParam::p: return "p";
    case SweepParam::q: return "q";
    case SweepParam::sigma_inlier: return "sigma_inlier";
    case SweepParam::sigma_init: return "sigma_init";
  }
  return "unknown";
}

SweepParam parse_sweep_param(std::string_view s) {
  for (SweepParam p : {SweepParam::n, SweepParam::p, SweepParam::q, SweepParam::sigma_inlier,
                       SweepParam::sigma_init}) {
    if (s == to_string(p)) return p;
  }
  throw InvalidArgument("unknown sweep parameter '" + std::string(s) +
                        "' (expected n, p, q, sigma_inlier or sigma_init)");
}

void SweepSpec::validate() const {
  if (values.empty()) throw InvalidArgument("sweep needs at least one parameter value");
  if (seeds_per_point < 1) throw InvalidArgument("seeds_per_point must be >= 1");
  if (methods.empty()) throw InvalidArgument("sweep needs at least one method");
  solver.validate();
  for (std::size_t k = 0; k < values.size(); ++k) point_config(*this, k).validate();
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t param_index, std::size_t seed_index) {
  return derive_seed(derive_seed(base_seed, param_index), seed_index);
}

SynthConfig point_config(const SweepSpec& spec, std::size_t param_index) {
  SynthConfig c = spec.base;
  const double v = spec.values.at(param_index);
  switch (spec.vary) {
    case SweepParam::n:
      if (!(v >= 2.0) || v != std::floor(v)) throw InvalidArgument("n values must be integers >= 2");
      c.n = static_cast<std::size_t>(v);
      break;
    case SweepParam::p: c.p = v; break;
    case SweepParam::q: c.q = v; break;
    case SweepParam::sigma_inlier: c.sigma_r_inlier = c.sigma_t_inlier = v; break;
    case SweepParam::sigma_init: c.sigma_r_init = c.sigma_t_init = v; break;
  }
  return c;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t seeds = static_cast<std::size_t>(spec.seeds_per_point);
  const std::size_t tasks = spec.values.size() * seeds;
  std::vector<std::vector<ResultRow>> buffered(tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      buffered[t] = run_point_seed(spec, t / seeds, t % seeds);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(tasks)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }

  std::vector<ResultRow> rows;
  rows.reserve(tasks * spec.methods.size());
  for (auto& b : buffered) {
    for (auto& r : b) rows.push_back(std::move(r));
  }
  return rows;
}

std::string_view csv_header() {
  return "method,param_index,seed_index,seed,n,p,q,sigma_r_init,sigma_t_init,"
         "sigma_r_inlier,sigma_t_inlier,e_R,e_t,iterations,wall_time_seconds,converged,error";
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool record_wall_time) {
  os << csv_header() << '\n';
  for (const ResultRow& r : rows) {
    const SynthConfig& c = r.config;
    os << to_string(r.method) << ',' << r.param_index << ',' << r.seed_index << ',' << c.seed
       << ',' << c.n << ',' << num(c.p) << ',' << num(c.q) << ',' << num(c.sigma_r_init) << ','
       << num(c.sigma_t_init) << ',' << num(c.sigma_r_inlier) << ',' << num(c.sigma_t_inlier)
       << ',' << num(r.e_r) << ',' << num(r.e_t) << ',' << r.iterations << ','
       << num(record_wall_time ? r.wall_time_seconds : 0.0) << ',' << (r.converged ? 1 : 0)
       << ',' << csv_escape(r.error) << '\n';
  }
}

void run_sweep(const SweepSpec& spec, const std::filesystem::path& out) {
  const std::vector<ResultRow> rows = run_sweep(spec);
  std::ofstream f(out);
  if (!f) throw Error(out.string() + ": cannot open for writing");
  write_csv(f, rows, spec.record_wall_time);
  f.flush();
  if (!f) throw Error(out.string() + ": write failed");
}

void write_report_csv(std::ostream& os, const SolverReport& report) {
  os << "iteration,increment_norm,kernel_width,residual_min,residual_median,residual_max,"
        "weight_min,weight_median,weight_max,excluded_edges\n";
  for (std::size_t k = 0; k < report.per_iteration.size(); ++k) {
    const IterationRecord& r = report.per_iteration[k];
    os << k + 1 << ',' << num(r.increment_norm) << ',' << num(r.kernel_width) << ','
       << num(r.residual_min) << ',' << num(r.residual_median) << ',' << num(r.residual_max)
       << ',' << num(r.weight_min) << ',' << num(r.weight_median) << ',' << num(r.weight_max)
       << ',' << r.excluded_edges << '\n';
  }
}

SolverReport run_solve(const std::filesystem::path& graph_path,
                       const std::filesystem::path& init_path, const SolverConfig& cfg,
                       const std::filesystem::path& motions_out,
                       const std::filesystem::path& report_out) {
  const ViewGraph g = load_graph(graph_path);
  const MotionSet init = load_motions(init_path);
  if (init.size() != g.node_count()) {
    throw ValidationError(init_path.string() + ": motion count " + std::to_string(init.size()) +
                          " does not match graph node count " + std::to_string(g.node_count()));
  }
  const SolveResult res = solve(g, init, cfg);
  save_motions(res.motions, motions_out);
  std::ofstream f(report_out);
  if (!f) throw Error(report_out.string() + ": cannot open for writing");
  write_report_csv(f, res.report);
  if (!f) throw Error(report_out.string() + ": write failed");
  return res.report;
}

}  // namespace lma
