#include "lma/metrics.hpp"

#include "lma/errors.hpp"

namespace lma {

ErrorSummary global_errors(const MotionSet& estimate, const MotionSet& truth) {
  if (estimate.size() != truth.size()) {
    throw InvalidArgument("global_errors: motion sets differ in length");
  }
  if (truth.size() == 0) return {};
  const MotionSet a = gauge_normalize(estimate);
  const MotionSet b = gauge_normalize(truth);
  ErrorSummary s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.rotation_error += rotation_angle(a[i].rotation * b[i].rotation.transpose());
    s.translation_error += (a[i].translation - b[i].translation).norm();
  }
  const auto n = static_cast<double>(a.size());
  s.rotation_error /= n;
  s.translation_error /= n;
  return s;
}

ErrorSummary relative_errors(const ViewGraph& g, const MotionSet& truth) {
  if (truth.size() != g.node_count()) {
    throw InvalidArgument("relative_errors: truth does not match the view graph");
  }
  ErrorSummary s;
  if (g.edge_count() == 0) return s;
  for (const Edge& e : g.edges()) {
    const Pose r = compose(compose(inverse(truth[e.i]), e.m_ij), truth[e.j]);
    s.rotation_error += rotation_angle(r.rotation);
    s.translation_error += r.translation.norm();
  }
  const auto m = static_cast<double>(g.edge_count());
  s.rotation_error /= m;
  s.translation_error /= m;
  return s;
}

}  // namespace lma
