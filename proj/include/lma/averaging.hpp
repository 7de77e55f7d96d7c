#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lma/errors.hpp"
#include "lma/view_graph.hpp"

namespace lma {

enum class Method { MA, MCC_MA, L_MA };

std::string_view to_string(Method m);
/// Accepts "MA", "MCC_MA", "L_MA" (case-insensitive, '-' for '_').
Method parse_method(std::string_view s);

struct SolverConfig {
  double epsilon = 1e-4;  // tolerance on ||delta xi_G||
  int k_max = 50;
  double alpha = 0.7;     // kernel-width quantile
  double chi = 0.001;     // kernel-width floor
  Method method = Method::L_MA;

  void validate() const;
};

struct IterationRecord {
  double increment_norm = 0.0;
  double kernel_width = 0.0;  // 0 for MA, which has no kernel
  double residual_min = 0.0;
  double residual_median = 0.0;
  double residual_max = 0.0;
  double weight_min = 0.0;
  double weight_median = 0.0;
  double weight_max = 0.0;
  std::size_t excluded_edges = 0;  // residuals on the log branch cut
};

struct SolverReport {
  int iterations = 0;
  bool converged = false;
  /// Least-squares solvers: some nonzero singular value of the stacked
  /// system fell below 1e-12 * sigma_max and was truncated.
  bool conditioning_warning = false;
  /// L-MA: some inner solve stopped at its iteration limit.
  bool inner_max_iter = false;
  std::vector<IterationRecord> per_iteration;
};

struct SolveResult {
  MotionSet motions;
  SolverReport report;
};

/// Raised when an outer iteration cannot proceed; carries the report so far.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, SolverReport report)
      : Error(what), report_(std::move(report)) {}
  const SolverReport& report() const noexcept { return report_; }

 private:
  SolverReport report_;
};

/// Median of a nonempty set; mean of the two middle elements for even sizes.
double median(std::vector<double> values);

/// max(median of the ceil(alpha * m) smallest norms, chi).
double kernel_width(std::span<const double> residual_norms, double alpha, double chi);

/// Laplacian-kernel weight magnitudes exp(-|r| / sigma).
std::vector<double> laplacian_weights(std::span<const double> residual_norms, double sigma);

/// Gaussian-kernel weights exp(-r^2 / (2 sigma^2)).
std::vector<double> gaussian_weights(std::span<const double> residual_norms, double sigma);

/// M_i <- M_i * exp(delta_i) for every node, then gauge normalized.
/// delta holds 6n entries, node-major, each block [rho; theta].
MotionSet apply_increment(const MotionSet& ms, const Eigen::VectorXd& delta);

SolveResult lma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg);
SolveResult ma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg);
SolveResult mccma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg);

/// Dispatches on cfg.method.
SolveResult solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg);

}  // namespace lma
