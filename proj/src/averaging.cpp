#include "lma/averaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/SVD>

#include "lma/socp.hpp"

namespace lma {
namespace {

constexpr double kSingularThreshold = 1e-12;

struct Residuals {
  std::vector<Vec6> xi;
  std::vector<double> norms;
  std::vector<bool> excluded;
  std::size_t excluded_count = 0;
};

// Residuals on the log branch cut get norm pi and are left out of the step.
Residuals edge_residuals(const ViewGraph& g, const MotionSet& ms) {
  Residuals r;
  const std::size_t m = g.edge_count();
  r.xi.resize(m, Vec6::Zero());
  r.norms.resize(m, 0.0);
  r.excluded.resize(m, false);
  for (std::size_t e = 0; e < m; ++e) {
    const Edge& ed = g.edge(e);
    try {
      r.xi[e] = residual_twist(ms[ed.i], ed.m_ij, ms[ed.j]).vector();
      r.norms[e] = r.xi[e].norm();
    } catch (const BranchCutError&) {
      r.excluded[e] = true;
      r.norms[e] = std::numbers::pi;
      ++r.excluded_count;
    }
  }
  return r;
}

void check_inputs(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg) {
  cfg.validate();
  if (init.size() != g.node_count()) {
    throw InvalidArgument("initial motion count does not match the view graph");
  }
  for (const Pose& p : init.poses) {
    if (!p.translation.allFinite() || !is_rotation(p.rotation, 1e-6)) {
      throw InvalidArgument("initial motions must be valid poses");
    }
  }
  if (!is_connected(g)) throw StructuralError("view graph is not connected");
}

IterationRecord summarize(const Residuals& r, std::span<const double> weights, double width) {
  IterationRecord rec;
  rec.kernel_width = width;
  rec.excluded_edges = r.excluded_count;
  if (!r.norms.empty()) {
    const auto [lo, hi] = std::minmax_element(r.norms.begin(), r.norms.end());
    rec.residual_min = *lo;
    rec.residual_max = *hi;
    rec.residual_median = median(r.norms);
  }
  if (!weights.empty()) {
    const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
    rec.weight_min = *lo;
    rec.weight_max = *hi;
    rec.weight_median = median(std::vector<double>(weights.begin(), weights.end()));
  }
  return rec;
}

// Minimum-norm least-squares increment for sum_e w_e^2 ||xi_e + d_j - d_i||^2
// over all 6n unknowns. The stacked system is B (x) I_6 with B the weighted
// incidence matrix, so one SVD of B gives the pseudo-inverse.
Eigen::VectorXd least_squares_increment(const ViewGraph& g, const Residuals& r,
                                        std::span<const double> w, bool& warning) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  std::vector<std::size_t> rows;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (!r.excluded[e]) rows.push_back(e);
  }
  const auto mk = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(mk, n);
  Eigen::MatrixXd rhs(mk, 6);
  for (Eigen::Index k = 0; k < mk; ++k) {
    const std::size_t e = rows[static_cast<std::size_t>(k)];
    const Edge& ed = g.edge(e);
    b(k, static_cast<Eigen::Index>(ed.j)) = w[e];
    b(k, static_cast<Eigen::Index>(ed.i)) = -w[e];
    rhs.row(k) = -w[e] * r.xi[e].transpose();
  }
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(6 * n);
  if (mk == 0) {
    warning = true;
    return delta;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSingularThreshold);
  // Rank n - 1 is the connected-graph case; one null direction is the gauge.
  if (svd.rank() < n - 1) warning = true;
  const Eigen::MatrixXd d = svd.solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) delta.segment<6>(6 * i) = d.row(i).transpose();
  return delta;
}

enum class LeastSquaresKernel { none, gaussian };

SolveResult least_squares_solve(const ViewGraph& g, const MotionSet& init,
                                const SolverConfig& cfg, LeastSquaresKernel kernel) {
  check_inputs(g, init, cfg);
  SolveResult out;
  out.motions = gauge_normalize(init);
  SolverReport& rep = out.report;
  for (int k = 1; k <= cfg.k_max; ++k) {
    const Residuals r = edge_residuals(g, out.motions);
    std::vector<double> w;
    double width = 0.0;
    if (kernel == LeastSquaresKernel::gaussian) {
      const double mean =
          r.norms.empty() ? 0.0
                          : std::accumulate(r.norms.begin(), r.norms.end(), 0.0) /
                                static_cast<double>(r.norms.size());
      width = std::max(mean, cfg.chi);
      w = gaussian_weights(r.norms, width);
    } else {
      w.assign(r.norms.size(), 1.0);
    }
    bool warning = false;
    const Eigen::VectorXd delta = least_squares_increment(g, r, w, warning);
    rep.conditioning_warning = rep.conditioning_warning || warning;
    out.motions = apply_increment(out.motions, delta);

    IterationRecord rec = summarize(r, w, width);
    rec.increment_norm = delta.norm();
    rep.per_iteration.push_back(rec);
    rep.iterations = k;
    if (rec.increment_norm <= cfg.epsilon) {
      rep.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::MA: return "MA";
    case Method::MCC_MA: return "MCC_MA";
    case Method::L_MA: return "L_MA";
  }
  return "unknown";
}

Method parse_method(std::string_view s) {
  std::string u;
  for (char c : s) u.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "MA") return Method::MA;
  if (u == "MCC_MA" || u == "MCCMA") return Method::MCC_MA;
  if (u == "L_MA" || u == "LMA") return Method::L_MA;
  throw InvalidArgument("unknown method '" + std::string(s) + "' (expected MA, MCC_MA or L_MA)");
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (!(chi > 0.0)) throw InvalidArgument("chi must be > 0");
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double kernel_width(std::span<const double> residual_norms, double alpha, double chi) {
  if (residual_norms.empty()) throw InvalidArgument("kernel_width: no residuals");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("kernel_width: alpha must lie in (0, 1]");
  std::vector<double> sorted(residual_norms.begin(), residual_norms.end());
  for (double r : sorted) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("kernel_width: norms must be finite and >= 0");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  // The small slack keeps alpha * m = 7.000000000000001 from rounding up to 8.
  auto keep = static_cast<std::size_t>(std::ceil(alpha * m - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, sorted.size());
  sorted.resize(keep);
  return std::max(median(std::move(sorted)), chi);
}

std::vector<double> laplacian_weights(std::span<const double> residual_norms, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("laplacian_weights: sigma must be > 0");
  std::vector<double> w;
  w.reserve(residual_norms.size());
  for (double r : residual_norms) w.push_back(std::exp(-std::abs(r) / sigma));
  return w;
}

std::vector<double> gaussian_weights(std::span<const double> residual_norms, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_weights: sigma must be > 0");
  std::vector<double> w;
  w.reserve(residual_norms.size());
  for (double r : residual_norms) w.push_back(std::exp(-r * r / (2.0 * sigma * sigma)));
  return w;
}

MotionSet apply_increment(const MotionSet& ms, const Eigen::VectorXd& delta) {
  if (delta.size() != static_cast<Eigen::Index>(6 * ms.size())) {
    throw InvalidArgument("apply_increment: delta must have 6n entries");
  }
  MotionSet out = ms;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Vec6 d = delta.segment<6>(6 * static_cast<Eigen::Index>(i));
    out[i] = compose(ms[i], exp_se3(Twist::from_vector(d)));
  }
  return gauge_normalize(out);
}

SolveResult lma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg) {
  check_inputs(g, init, cfg);
  SolveResult out;
  out.motions = gauge_normalize(init);
  SolverReport& rep = out.report;
  const std::size_t n = g.node_count();

  for (int k = 1; k <= cfg.k_max; ++k) {
    const Residuals r = edge_residuals(g, out.motions);
    const double width = kernel_width(r.norms, cfg.alpha, cfg.chi);
    const std::vector<double> w = laplacian_weights(r.norms, width);

    SumOfNormsProblem prob;
    prob.node_count = n;
    prob.anchor = 0;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (r.excluded[e]) continue;
      const Edge& ed = g.edge(e);
      prob.cones.push_back({ed.i, ed.j, r.xi[e], w[e]});
    }

    ConeSolution sol;
    try {
      sol = solve_sum_of_norms(prob);
    } catch (const StructuralError& ex) {
      throw SolverError(std::string("L-MA: ") + ex.what(), rep);
    }
    if (sol.status == ConeStatus::numerical_failure) {
      throw SolverError("L-MA: inner cone solve failed at iteration " + std::to_string(k), rep);
    }
    if (sol.status == ConeStatus::max_iter) rep.inner_max_iter = true;

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(6 * n));
    delta.tail(sol.x.size()) = sol.x;  // anchor is node 0, its block stays zero
    out.motions = apply_increment(out.motions, delta);

    IterationRecord rec = summarize(r, w, width);
    rec.increment_norm = delta.norm();
    rep.per_iteration.push_back(rec);
    rep.iterations = k;
    if (rec.increment_norm <= cfg.epsilon) {
      rep.converged = true;
      break;
    }
  }
  return out;
}

SolveResult ma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg) {
  return least_squares_solve(g, init, cfg, LeastSquaresKernel::none);
}

SolveResult mccma_solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg) {
  return least_squares_solve(g, init, cfg, LeastSquaresKernel::gaussian);
}

SolveResult solve(const ViewGraph& g, const MotionSet& init, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::MA: return ma_solve(g, init, cfg);
    case Method::MCC_MA: return mccma_solve(g, init, cfg);
    case Method::L_MA: return lma_solve(g, init, cfg);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace lma
