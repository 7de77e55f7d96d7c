#pragma once

#include "lma/view_graph.hpp"

namespace lma {

struct ErrorSummary {
  double rotation_error = 0.0;     // mean geodesic angle, radians
  double translation_error = 0.0;  // mean Euclidean distance
};

/// Mean rotation and translation error of an estimate against ground truth.
/// Both sets are gauge normalized first. Throws InvalidArgument on a length
/// mismatch.
ErrorSummary global_errors(const MotionSet& estimate, const MotionSet& truth);

/// Mean error of the edge residual motions truth_i^-1 * m_ij * truth_j, i.e.
/// the noise and outlier content of the measurements themselves.
ErrorSummary relative_errors(const ViewGraph& g, const MotionSet& truth);

}  // namespace lma
