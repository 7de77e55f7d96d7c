#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "lma/errors.hpp"
#include "lma/metrics.hpp"
#include "lma/synth.hpp"
#include "test_support.hpp"

using namespace lma;
using std::numbers::pi;

TEST_CASE("global_errors examples") {
  std::mt19937_64 rng(1);
  MotionSet a;
  for (int k = 0; k < 6; ++k) a.poses.push_back(testing::random_pose(rng));
  a = gauge_normalize(a);
  const ErrorSummary same = global_errors(a, a);
  CHECK(same.rotation_error < 1e-15);
  CHECK(same.translation_error < 1e-15);
  const ErrorSummary ident = global_errors(MotionSet::identity(4), MotionSet::identity(4));
  CHECK(ident.rotation_error == 0.0);
  CHECK(ident.translation_error == 0.0);

  MotionSet est = MotionSet::identity(2);
  est[1] = Pose{testing::rodrigues(Vec3(0, 0, pi / 2)), Vec3(3, 4, 0)};
  const ErrorSummary e = global_errors(est, MotionSet::identity(2));
  CHECK(e.rotation_error == doctest::Approx(pi / 4).epsilon(1e-14));
  CHECK(e.translation_error == doctest::Approx(2.5).epsilon(1e-14));

  CHECK_THROWS_AS(global_errors(MotionSet::identity(2), MotionSet::identity(3)), InvalidArgument);
}

TEST_CASE("trace argument above one is clamped") {
  MotionSet est = MotionSet::identity(2);
  est[1].rotation(0, 0) = 1.0 + 2e-15;
  const ErrorSummary e = global_errors(est, MotionSet::identity(2));
  CHECK(e.rotation_error == 0.0);
  CHECK_FALSE(std::isnan(e.rotation_error));
}

TEST_CASE("estimates are compared after gauge normalization") {
  std::mt19937_64 rng(2);
  MotionSet a;
  for (int k = 0; k < 5; ++k) a.poses.push_back(testing::random_pose(rng));
  MotionSet b = a;
  const Pose g = testing::random_pose(rng);
  for (Pose& p : b.poses) p = p * g;  // same relative motions, different gauge
  const ErrorSummary e = global_errors(a, b);
  CHECK(e.rotation_error < 1e-12);
  CHECK(e.translation_error < 1e-12);
}

TEST_CASE("symmetry and zero iff equal") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    MotionSet a, b;
    for (int j = 0; j < 4; ++j) {
      a.poses.push_back(testing::random_pose(rng));
      b.poses.push_back(testing::random_pose(rng));
    }
    const ErrorSummary ab = global_errors(a, b), ba = global_errors(b, a);
    CHECK(ab.rotation_error == doctest::Approx(ba.rotation_error).epsilon(1e-12));
    CHECK(ab.translation_error == doctest::Approx(ba.translation_error).epsilon(1e-12));
    CHECK(ab.rotation_error > 0.0);
    CHECK(ab.rotation_error <= pi);
  }
  // A 1e-10 nudge of one rotation is seen, not lost in acos round-off.
  MotionSet a = MotionSet::identity(3);
  MotionSet b = a;
  b[2].rotation = testing::rodrigues(Vec3(1e-10, 0, 0));
  CHECK(global_errors(a, b).rotation_error == doctest::Approx(1e-10 / 3).epsilon(1e-6));
  CHECK(global_errors(a, a).rotation_error == 0.0);
}

TEST_CASE("relative_errors") {
  SynthConfig c;
  c.n = 10;
  c.p = 0.6;
  c.q = 0.0;
  c.sigma_r_inlier = c.sigma_t_inlier = 0.0;
  c.seed = 4;
  const SynthInstance inst = generate(c);
  const ErrorSummary clean = relative_errors(inst.graph, inst.truth);
  CHECK(clean.rotation_error < 1e-12);
  CHECK(clean.translation_error < 1e-12);

  // One edge rotated by pi about z from consistency.
  std::vector<Edge> edges(inst.graph.edges().begin(), inst.graph.edges().end());
  const Pose flip{testing::rodrigues(Vec3(0, 0, pi)), Vec3::Zero()};
  edges[3].m_ij = inst.truth[edges[3].i] * flip * inverse(inst.truth[edges[3].j]);
  const ErrorSummary one = relative_errors(ViewGraph(10, edges), inst.truth);
  CHECK(one.rotation_error == doctest::Approx(pi / static_cast<double>(edges.size())).epsilon(1e-12));
}

TEST_CASE("relative error sits between cleaner and dirtier graphs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double err[3];
    const double qs[3] = {0.0, 0.3, 0.7};
    for (int k = 0; k < 3; ++k) {
      SynthConfig c;
      c.q = qs[k];
      c.seed = 900 + seed;
      const SynthInstance inst = generate(c);
      err[k] = relative_errors(inst.graph, inst.truth).rotation_error;
    }
    CHECK(err[0] < err[1]);
    CHECK(err[1] < err[2]);
  }
}
