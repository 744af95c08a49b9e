#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dprmdi/lp.hpp"
#include "oracles.hpp"

using namespace dprmdi;

namespace {

LinearProgram box(int n, double lo = 0.0, double hi = 1.0) {
  return LinearProgram(Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Random program in 3 variables; roughly a third come out infeasible.
LinearProgram random_program(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ub(0.5, 4.0);
  std::uniform_int_distribution<int> rows(1, 4);
  std::uniform_int_distribution<int> rel(0, 2);
  Eigen::VectorXd lower(3), upper(3);
  for (int i = 0; i < 3; ++i) {
    lower[i] = u(rng) < 0.5 ? 0.0 : -ub(rng);
    upper[i] = ub(rng);
  }
  LinearProgram lp(lower, upper);
  const int m = rows(rng);
  for (int r = 0; r < m; ++r) {
    Eigen::VectorXd a(3);
    for (int i = 0; i < 3; ++i) a[i] = u(rng);
    const Relation kind = static_cast<Relation>(rel(rng));
    lp.add_constraint(a, kind, 1.5 * u(rng));
  }
  Eigen::VectorXd c(3);
  for (int i = 0; i < 3; ++i) c[i] = u(rng);
  lp.set_objective(c, u(rng) < 0.0 ? Sense::Minimize : Sense::Maximize);
  return lp;
}

}  // namespace

TEST_SUITE("lp_core") {

TEST_CASE("box only") {
  LinearProgram lp = box(3, 0.0, 2.0);
  lp.set_objective(vec({1.0, -1.0, 0.0}), Sense::Minimize);
  const LpSolution s = solve(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(-2.0));
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == 2.0);
}

TEST_CASE("small decoy-like program against vertex enumeration") {
  LinearProgram lp = box(3);
  lp.add_constraint(vec({0.9, 0.09, 0.009}), Relation::Equal, 0.01);
  lp.add_constraint(vec({0.99, 0.0099, 0.00005}), Relation::Equal, 0.002);
  lp.set_objective(vec({0.0, 1.0, 0.0}), Sense::Minimize);
  const LpSolution s = solve(lp);
  const auto ref = oracle::enumerate_vertices(lp);
  REQUIRE(ref.feasible);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(ref.objective_min).epsilon(1e-10));
  CHECK(max_constraint_violation(lp, s.values) < 1e-12);
}

TEST_CASE("infeasible and unbounded") {
  LinearProgram lp = box(2);
  lp.add_constraint(vec({1.0, 1.0}), Relation::GreaterEqual, 3.0);
  lp.set_objective(vec({1.0, 0.0}), Sense::Minimize);
  CHECK(solve(lp).status == LpStatus::Infeasible);

  const double inf = std::numeric_limits<double>::infinity();
  LinearProgram open(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, inf));
  open.add_constraint(vec({1.0, -1.0}), Relation::LessEqual, 1.0);
  open.set_objective(vec({1.0, 1.0}), Sense::Maximize);
  CHECK(solve(open).status == LpStatus::Unbounded);
  open.set_objective(vec({1.0, 1.0}), Sense::Minimize);
  const LpSolution s = solve(open);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(0.0));
}

TEST_CASE("zero rows") {
  LinearProgram ok = box(2);
  ok.add_constraint(vec({0.0, 0.0}), Relation::Equal, 0.0);
  ok.set_objective(vec({1.0, 1.0}), Sense::Maximize);
  const LpSolution s = solve(ok);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(2.0));

  LinearProgram bad = box(2);
  bad.add_constraint(vec({0.0, 0.0}), Relation::Equal, 1.0);
  CHECK(solve(bad).status == LpStatus::Infeasible);
}

TEST_CASE("degenerate program terminates") {
  // Many constraints through the same vertex; Bland's rule must not cycle.
  LinearProgram lp = box(3, 0.0, 10.0);
  lp.add_constraint(vec({1.0, 1.0, 0.0}), Relation::LessEqual, 0.0);
  lp.add_constraint(vec({1.0, 0.0, 1.0}), Relation::LessEqual, 0.0);
  lp.add_constraint(vec({0.0, 1.0, 1.0}), Relation::LessEqual, 0.0);
  lp.add_constraint(vec({1.0, 1.0, 1.0}), Relation::LessEqual, 0.0);
  lp.set_objective(vec({1.0, 2.0, 3.0}), Sense::Maximize);
  const LpSolution s = solve(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(0.0));
}

TEST_CASE("range rows") {
  LinearProgram lp = box(2);
  lp.add_range(vec({1.0, 1.0}), 0.5, 0.7);
  lp.set_objective(vec({1.0, 1.0}), Sense::Maximize);
  CHECK(solve(lp).objective_value == doctest::Approx(0.7));
  lp.set_objective(vec({1.0, 1.0}), Sense::Minimize);
  CHECK(solve(lp).objective_value == doctest::Approx(0.5));
  CHECK_THROWS(lp.add_range(vec({1.0, 0.0}), 1.0, 0.0));
}

TEST_CASE("badly scaled rows") {
  LinearProgram lp = box(3);
  lp.add_constraint(vec({1e-7, 2e-8, 3e-9}), Relation::Equal, 5e-8);
  lp.add_constraint(vec({1e3, 1e2, 1e1}), Relation::LessEqual, 500.0);
  lp.set_objective(vec({0.0, 0.0, 1.0}), Sense::Maximize);
  const LpSolution s = solve(lp);
  const auto ref = oracle::enumerate_vertices(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(ref.objective_max).epsilon(1e-9));
}

TEST_CASE("input validation") {
  CHECK_THROWS(LinearProgram(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)));
  CHECK_THROWS(LinearProgram(vec({1.0}), vec({0.0})));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS(LinearProgram(vec({-inf}), vec({0.0})));
  LinearProgram lp = box(2);
  CHECK_THROWS(lp.add_constraint(vec({1.0}), Relation::Equal, 0.0));
  CHECK_THROWS(lp.add_constraint(vec({1.0, std::nan("")}), Relation::Equal, 0.0));
  CHECK_THROWS(lp.set_objective(vec({1.0}), Sense::Minimize));
}

TEST_CASE("random programs agree with vertex enumeration") {
  std::mt19937_64 rng(20240611);
  int infeasible = 0;
  for (int t = 0; t < 100; ++t) {
    CAPTURE(t);
    const LinearProgram lp = random_program(rng);
    const LpSolution s = solve(lp);
    const auto ref = oracle::enumerate_vertices(lp);
    if (!ref.feasible) {
      ++infeasible;
      CHECK(s.status == LpStatus::Infeasible);
      continue;
    }
    REQUIRE(s.status == LpStatus::Optimal);
    const double want = lp.sense() == Sense::Minimize ? ref.objective_min : ref.objective_max;
    CHECK(std::abs(s.objective_value - want) <= 1e-8);
    CHECK(max_constraint_violation(lp, s.values) <= 1e-9);
  }
  CHECK(infeasible < 100);
}

}
