#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lma/se3.hpp"

namespace lma {

/// One term v * || b + x_j - x_i || of a sum-of-norms objective. Endpoints
/// equal to the problem's anchor contribute a zero block.
struct Cone {
  std::size_t i = 0;
  std::size_t j = 0;
  Vec6 b = Vec6::Zero();
  double v = 1.0;
};

/// minimize sum_e v_e * || b_e + x_j - x_i ||  over x with x_anchor = 0.
/// Free blocks are the nodes other than the anchor, in increasing order.
struct SumOfNormsProblem {
  std::size_t node_count = 0;
  std::size_t anchor = 0;
  std::vector<Cone> cones;

  std::size_t var_dim() const { return node_count == 0 ? 0 : 6 * (node_count - 1); }
  /// Offset of a node's block inside x, or -1 for the anchor.
  std::ptrdiff_t block_offset(std::size_t node) const;
};

enum class ConeStatus { optimal, max_iter, numerical_failure };
std::string_view to_string(ConeStatus s);

struct ConeSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  ConeStatus status = ConeStatus::numerical_failure;
  int iterations = 0;
  /// Duality gap relative to max(1, objective) after normalizing the weights
  /// and residuals to unit scale.
  double gap = 0.0;
  /// Per-cone multipliers g_e with ||g_e|| <= v_e and sum_e A_e^T g_e = 0. For
  /// a cone with nonzero residual r_e at the optimum, g_e = v_e r_e / ||r_e||.
  std::vector<Vec6> dual;
};

inline constexpr double kMinConeWeight = 1e-12;

double objective_value(const SumOfNormsProblem& prob, const Eigen::VectorXd& x);

/// Primal-dual interior-point solve (Nesterov-Todd scaling, Mehrotra
/// predictor-corrector) of the equivalent program
///   minimize sum v_e gamma_e  s.t.  || b_e + A_e x || <= gamma_e.
/// Weights below kMinConeWeight are clamped. Throws StructuralError if some
/// free block is not linked to the anchor through the cones.
ConeSolution solve_sum_of_norms(const SumOfNormsProblem& prob, double tol = 1e-8,
                                int max_iter = 200);

}  // namespace lma
