#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lma/averaging.hpp"
#include "lma/synth.hpp"

namespace lma {

enum class SweepParam { n, p, q, sigma_inlier, sigma_init };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view s);

struct SweepSpec {
  SweepParam vary = SweepParam::q;
  std::vector<double> values;
  SynthConfig base;  // fixed values; base.seed is the base seed
  SolverConfig solver;
  int seeds_per_point = 50;
  std::vector<Method> methods{Method::MA, Method::MCC_MA, Method::L_MA};
  /// When false the wall-time column is written as 0 so that repeated sweeps
  /// are byte-identical.
  bool record_wall_time = true;
  unsigned jobs = 1;

  void validate() const;
};

struct ResultRow {
  Method method = Method::L_MA;
  SynthConfig config;  // config.seed is the run seed
  std::size_t param_index = 0;
  std::size_t seed_index = 0;
  double e_r = 0.0;
  double e_t = 0.0;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  bool converged = false;
  std::string error;
};

/// Run seed: derive_seed(derive_seed(base_seed, param_index), seed_index).
/// Every method at one (point, seed) runs on the same instance.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t param_index, std::size_t seed_index);

/// SynthConfig of one sweep point (seed left at the base seed).
SynthConfig point_config(const SweepSpec& spec, std::size_t param_index);

/// Rows in parameter-major, seed-minor, method-innermost order. Failed runs
/// become rows with converged = false and a non-empty error note.
std::vector<ResultRow> run_sweep(const SweepSpec& spec);

/// Fixed column order; see csv_header().
std::string_view csv_header();
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool record_wall_time = true);

/// run_sweep + write_csv to a file. Throws Error on I/O failure.
void run_sweep(const SweepSpec& spec, const std::filesystem::path& out);

/// Per-iteration diagnostics as CSV.
void write_report_csv(std::ostream& os, const SolverReport& report);

/// Loads graph and initial motions, solves, writes the motion file and the
/// report CSV. Load errors propagate (ParseError / ValidationError), solver
/// failures as SolverError or StructuralError.
SolverReport run_solve(const std::filesystem::path& graph_path,
                       const std::filesystem::path& init_path, const SolverConfig& cfg,
                       const std::filesystem::path& motions_out,
                       const std::filesystem::path& report_out);

}  // namespace lma
