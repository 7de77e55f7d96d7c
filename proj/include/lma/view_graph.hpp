#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "lma/se3.hpp"

namespace lma {

/// Measured relative motion m_ij ~ M_i * M_j^-1 between nodes i and j.
struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  Pose m_ij;
};

/// Directed measurement graph. Construction validates indices, self-loops and
/// duplicate ordered pairs; connectivity is not required here.
class ViewGraph {
 public:
  ViewGraph() = default;
  ViewGraph(std::size_t node_count, std::vector<Edge> edges);

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
};

/// Global motions, one per node.
struct MotionSet {
  std::vector<Pose> poses;

  MotionSet() = default;
  explicit MotionSet(std::vector<Pose> p) : poses(std::move(p)) {}
  static MotionSet identity(std::size_t n) { return MotionSet(std::vector<Pose>(n)); }

  std::size_t size() const { return poses.size(); }
  const Pose& operator[](std::size_t i) const { return poses[i]; }
  Pose& operator[](std::size_t i) { return poses[i]; }
};

/// Removes the global gauge: right-multiplies every motion by M_0^-1, which
/// leaves every M_i * M_j^-1 unchanged and makes motions[0] the identity.
MotionSet gauge_normalize(const MotionSet& ms);

/// log(M_i^-1 * M_ij * M_j). Propagates BranchCutError.
Twist residual_twist(const Pose& m_i, const Pose& m_ij, const Pose& m_j);

/// Undirected connectivity over all node_count nodes.
bool is_connected(const ViewGraph& g);

// Text formats, whitespace separated, 17 significant digits on output:
//   graph:   "n m" then m lines "i j r00 r01 r02 r10 r11 r12 r20 r21 r22 t0 t1 t2"
//   motions: "n"   then n lines of the 12 pose numbers
ViewGraph load_graph(const std::filesystem::path& path);
void save_graph(const ViewGraph& g, const std::filesystem::path& path);
MotionSet load_motions(const std::filesystem::path& path);
void save_motions(const MotionSet& ms, const std::filesystem::path& path);

}  // namespace lma
