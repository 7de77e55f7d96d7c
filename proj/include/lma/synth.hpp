#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lma/rng.hpp"
#include "lma/view_graph.hpp"

namespace lma {

struct SynthConfig {
  std::size_t n = 25;
  double p = 0.3;  // edge probability
  double q = 0.3;  // outlier probability per edge
  double sigma_r_init = 0.02;
  double sigma_t_init = 0.02;
  double sigma_r_inlier = 0.01;
  double sigma_t_inlier = 0.01;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct SynthInstance {
  MotionSet truth;
  MotionSet init;
  ViewGraph graph;
  std::vector<bool> outlier_mask;  // one entry per edge
};

struct GeneratedGraph {
  ViewGraph graph;
  std::vector<bool> outlier_mask;
};

// Sub-stream ids used by generate(). gen_graph further derives one seed per
// connectivity attempt: derive_seed(seed, attempt).
inline constexpr std::uint64_t kTruthStream = 1;
inline constexpr std::uint64_t kInitStream = 2;
inline constexpr std::uint64_t kGraphStream = 1000;

/// Z-Y-X intrinsic Euler angles: Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 euler_zyx(double yaw, double pitch, double roll);

/// Rotation from uniform Euler angles on [-pi,pi) x [-pi/2,pi/2) x [-pi,pi),
/// translation with standard-normal entries.
Pose random_pose(Rng& rng);

/// motions[0] is the identity; the remaining n - 1 are random_pose draws.
MotionSet gen_truth(std::size_t n, std::uint64_t seed);

/// R = project_so3(R* + sigma_r W_R), t = t* + sigma_t W_t, then gauge
/// normalized so that node 0 is the identity.
MotionSet perturb_init(const MotionSet& truth, double sigma_r, double sigma_t,
                       std::uint64_t seed);

/// Erdos-Renyi view graph over pairs i < j with inlier noise and random
/// outlier poses. Resamples until connected; throws GenerationError after
/// 100 attempts.
GeneratedGraph gen_graph(const MotionSet& truth, double p, double q, double sigma_r,
                         double sigma_t, std::uint64_t seed);

SynthInstance generate(const SynthConfig& cfg);

}  // namespace lma
