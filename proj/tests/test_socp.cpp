#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lma/errors.hpp"
#include "lma/socp.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lma;
using Eigen::VectorXd;
using testing::block;
using testing::random_problem;
using testing::subgradient_oracle;

namespace {

// Sum of norms accumulated in reverse cone order with explicit block reads.
double reverse_objective(const SumOfNormsProblem& p, const VectorXd& x) {
  double f = 0.0;
  for (std::size_t k = p.cones.size(); k-- > 0;) {
    const Cone& c = p.cones[k];
    Vec6 r = c.b;
    for (int d = 0; d < 6; ++d) {
      if (c.j != p.anchor) r(d) += x(6 * static_cast<long>(c.j < p.anchor ? c.j : c.j - 1) + d);
      if (c.i != p.anchor) r(d) -= x(6 * static_cast<long>(c.i < p.anchor ? c.i : c.i - 1) + d);
    }
    f += std::max(c.v, kMinConeWeight) * r.norm();
  }
  return f;
}

}  // namespace

TEST_CASE("block layout") {
  SumOfNormsProblem p;
  p.node_count = 4;
  p.anchor = 2;
  CHECK(p.var_dim() == 18);
  CHECK(p.block_offset(0) == 0);
  CHECK(p.block_offset(1) == 6);
  CHECK(p.block_offset(2) == -1);
  CHECK(p.block_offset(3) == 12);
}

TEST_CASE("objective_value") {
  std::mt19937_64 rng(1);
  const SumOfNormsProblem p = random_problem(rng, 5, 12);
  double direct = 0.0;
  for (const Cone& c : p.cones) direct += c.v * c.b.norm();
  CHECK(objective_value(p, VectorXd::Zero(24)) == doctest::Approx(direct).epsilon(1e-14));
  for (int k = 0; k < 20; ++k) {
    const VectorXd x = VectorXd::Random(24);
    CHECK(std::abs(objective_value(p, x) - reverse_objective(p, x)) < 1e-12);
  }
}

TEST_CASE("single cone is annihilated") {
  SumOfNormsProblem p;
  p.node_count = 2;
  p.cones = {Cone{0, 1, Vec6(1, -2, 3, 0.5, 0.1, -0.7), 1.0}};
  const ConeSolution s = solve_sum_of_norms(p);
  CHECK(s.status == ConeStatus::optimal);
  CHECK((s.x + p.cones[0].b).norm() < 1e-7);
  CHECK(s.objective < 1e-7);
  CHECK(objective_value(p, -p.cones[0].b) == 0.0);

  // Same cone with the anchor on the other side.
  p.cones = {Cone{1, 0, Vec6(1, -2, 3, 0.5, 0.1, -0.7), 1.0}};
  CHECK((solve_sum_of_norms(p).x - p.cones[0].b).norm() < 1e-7);
}

TEST_CASE("two parallel cones: the whole segment is optimal") {
  std::mt19937_64 rng(2);
  SumOfNormsProblem p;
  p.node_count = 2;
  const Vec6 b1 = testing::gaussian6(rng), b2 = testing::gaussian6(rng);
  p.cones = {Cone{0, 1, b1, 1.0}, Cone{0, 1, b2, 1.0}};
  const double opt = (b1 - b2).norm();

  const ConeSolution s = solve_sum_of_norms(p);
  CHECK(s.status == ConeStatus::optimal);
  CHECK(s.objective == doctest::Approx(opt).epsilon(1e-8));
  // Returned point lies on the segment [-b1, -b2].
  const Vec6 x = s.x;
  const Vec6 d = b1 - b2;
  const double t = std::clamp((-b1 - x).dot(-d) / d.squaredNorm(), 0.0, 1.0);
  CHECK((x - ((1 - t) * -b1 + t * -b2)).norm() < 1e-6);

  // Line search along the segment: constant at the optimum.
  for (int k = 0; k <= 100; ++k) {
    const double a = k / 100.0;
    const VectorXd y = (1 - a) * -b1 + a * -b2;
    CHECK(objective_value(p, y) == doctest::Approx(opt).epsilon(1e-12));
  }
  // Random probes never do better.
  for (int k = 0; k < 2000; ++k) {
    const VectorXd y = -b1 + testing::gaussian6(rng, 2.0);
    CHECK(objective_value(p, y) >= opt - 1e-12);
  }
}

TEST_CASE("consistent triangle stays at zero") {
  SumOfNormsProblem p;
  p.node_count = 3;
  p.cones = {Cone{0, 1, Vec6::Zero(), 1.0}, Cone{1, 2, Vec6::Zero(), 1.0}, Cone{0, 2, Vec6::Zero(), 1.0}};
  const ConeSolution s = solve_sum_of_norms(p);
  CHECK(s.status == ConeStatus::optimal);
  CHECK(s.x.size() == 12);
  CHECK(s.x.norm() == 0.0);
  CHECK(s.objective == 0.0);
}

TEST_CASE("unconstrained block is a structural error") {
  SumOfNormsProblem p;
  p.node_count = 4;
  p.cones = {Cone{0, 1, Vec6::Ones(), 1.0}, Cone{2, 3, Vec6::Ones(), 1.0}};
  CHECK_THROWS_AS(solve_sum_of_norms(p), StructuralError);
  p.cones.push_back(Cone{3, 1, Vec6::Ones(), 1.0});
  CHECK_NOTHROW(solve_sum_of_norms(p));
}

TEST_CASE("agrees with a subgradient oracle on small instances") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t nodes = trial < 4 ? 2 : 3;
    const SumOfNormsProblem p = random_problem(rng, nodes, 2 + static_cast<std::size_t>(trial % 4));
    const ConeSolution s = solve_sum_of_norms(p);
    REQUIRE(s.status == ConeStatus::optimal);
    const double oracle = subgradient_oracle(p);
    CHECK(std::abs(s.objective - oracle) < 1e-4);
    CHECK(s.objective <= oracle + 1e-9);
  }
}

TEST_CASE("optimality certificate") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t nodes = 2 + static_cast<std::size_t>(trial % 9);
    SumOfNormsProblem p = random_problem(rng, nodes, nodes * 3);
    // Make some cones exactly satisfiable so kinks are active at the optimum.
    if (trial % 2 == 0)
      for (std::size_t k = 0; k < p.cones.size(); k += 2) p.cones[k].b *= 1e-3;
    const ConeSolution s = solve_sum_of_norms(p);
    REQUIRE(s.status == ConeStatus::optimal);
    CHECK(s.gap <= 1e-8);
    REQUIRE(s.dual.size() == p.cones.size());

    // Stationarity per block: sum_e A_e^T g_e = 0, with g_e the unit residual
    // direction on active cones and any vector of the v_e-ball elsewhere.
    VectorXd agg = VectorXd::Zero(static_cast<long>(p.var_dim()));
    double dual_obj = 0.0;
    for (std::size_t e = 0; e < p.cones.size(); ++e) {
      const Cone& c = p.cones[e];
      const Vec6 r = c.b + block(p, s.x, c.j) - block(p, s.x, c.i);
      Vec6 g = s.dual[e];
      CHECK(g.norm() <= c.v * (1.0 + 1e-6));
      if (r.norm() > 1e-8) {
        g = c.v * r / r.norm();
        CHECK((g - s.dual[e]).norm() <= 1e-5 * c.v);
      }
      if (auto o = p.block_offset(c.j); o >= 0) agg.segment<6>(o) += g;
      if (auto o = p.block_offset(c.i); o >= 0) agg.segment<6>(o) -= g;
      dual_obj += g.dot(c.b);
    }
    for (std::size_t node = 1; node < nodes; ++node)
      CHECK(agg.segment<6>(p.block_offset(node)).norm() <= 1e-5);
    // Weak duality closes: f(x) = sum g_e . b_e up to the tolerance.
    CHECK(s.objective - dual_obj <= 1e-5 * std::max(1.0, s.objective));
    CHECK(s.objective - dual_obj >= -1e-5 * std::max(1.0, s.objective));
  }
}

TEST_CASE("weight scaling leaves the argmin unchanged") {
  std::mt19937_64 rng(5);
  const SumOfNormsProblem p = random_problem(rng, 6, 15);
  const ConeSolution base = solve_sum_of_norms(p);
  REQUIRE(base.status == ConeStatus::optimal);
  for (double c : {1e-3, 7.0, 1e3}) {
    SumOfNormsProblem q = p;
    for (Cone& cone : q.cones) cone.v *= c;
    const ConeSolution s = solve_sum_of_norms(q);
    REQUIRE(s.status == ConeStatus::optimal);
    CHECK(std::abs(s.objective - c * base.objective) <= 1e-9 * c * base.objective);
    CHECK(std::abs(objective_value(p, s.x) - base.objective) <= 1e-9 * base.objective);
  }
}

TEST_CASE("tiny weights are clamped, not rejected") {
  SumOfNormsProblem p;
  p.node_count = 2;
  p.cones = {Cone{0, 1, Vec6::Ones(), 0.0}, Cone{0, 1, -Vec6::Ones(), 1.0}};
  const ConeSolution s = solve_sum_of_norms(p);
  CHECK(s.status == ConeStatus::optimal);
  CHECK((s.x - Vec6::Ones()).norm() < 1e-6);
}

TEST_CASE("iteration limit returns the best iterate") {
  std::mt19937_64 rng(6);
  const SumOfNormsProblem p = random_problem(rng, 8, 30);
  for (int limit : {0, 1, 2}) {
    const ConeSolution s = solve_sum_of_norms(p, 1e-8, limit);
    // A rough iterate can still be polished into a certified optimum.
    CHECK(s.status != ConeStatus::numerical_failure);
    if (s.status == ConeStatus::optimal) CHECK(s.gap <= 1e-8);
    if (s.status == ConeStatus::max_iter) CHECK(s.gap > 1e-8);
    CHECK(s.iterations <= limit);
    CHECK(s.x.size() == static_cast<long>(p.var_dim()));
    CHECK(s.objective == doctest::Approx(objective_value(p, s.x)));
  }
  CHECK(to_string(ConeStatus::max_iter) == "max_iter");
}
