#include "lma/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "lma/errors.hpp"

namespace lma {
namespace {

constexpr int kMaxGraphAttempts = 100;

Mat3 normal_matrix(Rng& rng, std::normal_distribution<double>& nd) {
  Mat3 w;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w(r, c) = nd(rng);
  return w;
}

Vec3 normal_vector(Rng& rng, std::normal_distribution<double>& nd) {
  Vec3 w;
  for (int k = 0; k < 3; ++k) w(k) = nd(rng);
  return w;
}

// The noise matrix is always drawn so the stream layout does not depend on
// sigma; a zero sigma leaves the rotation untouched.
Pose perturb(const Pose& m, double sigma_r, double sigma_t, Rng& rng,
             std::normal_distribution<double>& nd) {
  const Mat3 wr = normal_matrix(rng, nd);
  const Vec3 wt = normal_vector(rng, nd);
  Pose out = m;
  if (sigma_r > 0.0) out.rotation = project_so3(m.rotation + sigma_r * wr);
  out.translation = m.translation + sigma_t * wt;
  return out;
}

void check_sigma(double s, const char* name) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw InvalidArgument(std::string(name) + " must be finite and >= 0");
  }
}

void check_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void SynthConfig::validate() const {
  if (n < 2) throw InvalidArgument("n must be >= 2");
  check_probability(p, "p");
  check_probability(q, "q");
  check_sigma(sigma_r_init, "sigma_r_init");
  check_sigma(sigma_t_init, "sigma_t_init");
  check_sigma(sigma_r_inlier, "sigma_r_inlier");
  check_sigma(sigma_t_inlier, "sigma_t_inlier");
}

Mat3 euler_zyx(double yaw, double pitch, double roll) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(yaw, Vec3::UnitZ()) * AngleAxisd(pitch, Vec3::UnitY()) *
          AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Pose random_pose(Rng& rng) {
  constexpr double pi = std::numbers::pi;
  std::uniform_real_distribution<double> full(-pi, pi);
  std::uniform_real_distribution<double> half(-pi / 2.0, pi / 2.0);
  std::normal_distribution<double> nd;
  const double yaw = full(rng);
  const double pitch = half(rng);
  const double roll = full(rng);
  Pose m;
  m.rotation = euler_zyx(yaw, pitch, roll);
  m.translation = normal_vector(rng, nd);
  return m;
}

MotionSet gen_truth(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("gen_truth: n must be >= 2");
  Rng rng(seed);
  MotionSet ms = MotionSet::identity(n);
  for (std::size_t i = 1; i < n; ++i) ms[i] = random_pose(rng);
  return ms;
}

MotionSet perturb_init(const MotionSet& truth, double sigma_r, double sigma_t,
                       std::uint64_t seed) {
  check_sigma(sigma_r, "sigma_r");
  check_sigma(sigma_t, "sigma_t");
  Rng rng(seed);
  std::normal_distribution<double> nd;
  MotionSet out = truth;
  for (auto& m : out.poses) m = perturb(m, sigma_r, sigma_t, rng, nd);
  return gauge_normalize(out);
}

GeneratedGraph gen_graph(const MotionSet& truth, double p, double q, double sigma_r,
                         double sigma_t, std::uint64_t seed) {
  check_probability(p, "p");
  check_probability(q, "q");
  check_sigma(sigma_r, "sigma_r");
  check_sigma(sigma_t, "sigma_t");
  const std::size_t n = truth.size();
  if (n < 2) throw InvalidArgument("gen_graph: need at least two nodes");

  for (int attempt = 0; attempt < kMaxGraphAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> nd;
    std::vector<Edge> edges;
    std::vector<bool> mask;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!(unit(rng) < p)) continue;
        const bool outlier = unit(rng) < q;
        Edge e{i, j, {}};
        if (outlier) {
          e.m_ij = random_pose(rng);
        } else {
          const Pose exact = compose(truth[i], inverse(truth[j]));
          e.m_ij = perturb(exact, sigma_r, sigma_t, rng, nd);
        }
        edges.push_back(e);
        mask.push_back(outlier);
      }
    }
    ViewGraph g(n, std::move(edges));
    if (is_connected(g)) return {std::move(g), std::move(mask)};
  }
  throw GenerationError("gen_graph: no connected graph after " +
                        std::to_string(kMaxGraphAttempts) + " attempts (p too small for n?)");
}

SynthInstance generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthInstance inst;
  inst.truth = gen_truth(cfg.n, derive_seed(cfg.seed, kTruthStream));
  inst.init = perturb_init(inst.truth, cfg.sigma_r_init, cfg.sigma_t_init,
                           derive_seed(cfg.seed, kInitStream));
  auto gg = gen_graph(inst.truth, cfg.p, cfg.q, cfg.sigma_r_inlier, cfg.sigma_t_inlier,
                      derive_seed(cfg.seed, kGraphStream));
  inst.graph = std::move(gg.graph);
  inst.outlier_mask = std::move(gg.outlier_mask);
  return inst;
}

}  // namespace lma
