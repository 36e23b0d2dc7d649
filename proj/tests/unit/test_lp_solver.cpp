#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "popt/errors.hpp"
#include "popt/lp_solver.hpp"

using namespace popt;
using namespace popt::lp;

namespace {

struct DenseLp {
  std::size_t n = 0;
  std::vector<double> c;
  std::vector<std::vector<double>> a;
  std::vector<Relation> rel;
  std::vector<double> b;

  LinearProgram build() const {
    LinearProgram lp(n);
    for (std::size_t v = 0; v < n; ++v) lp.set_objective(v, c[v]);
    for (std::size_t r = 0; r < a.size(); ++r) {
      std::vector<Term> terms;
      for (std::size_t v = 0; v < n; ++v) {
        if (a[r][v] != 0.0) terms.push_back({v, a[r][v]});
      }
      lp.add_row(terms, rel[r], b[r]);
    }
    return lp;
  }
};

// Brute force: every basic solution picks n tight constraints among the rows
// and the bounds x_v >= 0; the optimum of a bounded feasible LP is the best
// feasible one.
std::optional<double> vertex_enumeration_optimum(const DenseLp& p) {
  const std::size_t n = p.n;
  const std::size_t m = p.a.size();
  std::vector<std::vector<double>> normals;
  std::vector<double> rhs;
  for (std::size_t r = 0; r < m; ++r) {
    normals.push_back(p.a[r]);
    rhs.push_back(p.b[r]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<double> e(n, 0.0);
    e[v] = 1.0;
    normals.push_back(e);
    rhs.push_back(0.0);
  }
  const std::size_t total = normals.size();
  std::optional<double> best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
    Eigen::MatrixXd mat(n, n);
    Eigen::VectorXd vec(n);
    std::size_t row = 0;
    for (std::size_t k = 0; k < total; ++k) {
      if (!(mask & (std::size_t{1} << k))) continue;
      for (std::size_t v = 0; v < n; ++v) mat(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(v)) = normals[k][v];
      vec[static_cast<Eigen::Index>(row)] = rhs[k];
      ++row;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
    if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
    const Eigen::VectorXd x = lu.solve(vec);
    bool feasible = true;
    for (std::size_t v = 0; v < n; ++v) feasible &= x[static_cast<Eigen::Index>(v)] >= -1e-9;
    for (std::size_t r = 0; r < m && feasible; ++r) {
      double act = 0.0;
      for (std::size_t v = 0; v < n; ++v) act += p.a[r][v] * x[static_cast<Eigen::Index>(v)];
      feasible = p.rel[r] == Relation::Equal ? std::abs(act - p.b[r]) <= 1e-9 : act <= p.b[r] + 1e-9;
    }
    if (!feasible) continue;
    double obj = 0.0;
    for (std::size_t v = 0; v < n; ++v) obj += p.c[v] * x[static_cast<Eigen::Index>(v)];
    if (!best || obj > *best) best = obj;
  }
  return best;
}

}  // namespace

TEST_CASE("single variable saturates its bound") {
  LinearProgram lp(1);
  lp.set_objective(0, 1.0);
  lp.add_row({{0, 1.0}}, Relation::LessEqual, 1.0);
  const Solution sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[0] == doctest::Approx(1.0));
  CHECK(sol.duals[0] == doctest::Approx(1.0));
  CHECK(sol.objective_value == doctest::Approx(1.0));
}

TEST_CASE("empty feasible set is reported as infeasible") {
  LinearProgram lp(1);
  lp.set_objective(0, 1.0);
  lp.add_row({{0, 1.0}}, Relation::LessEqual, -1.0);
  CHECK(solve(lp).status == Status::Infeasible);
}

TEST_CASE("unbounded objective is reported") {
  LinearProgram lp(2);
  lp.set_objective(0, 1.0);
  lp.add_row({{1, 1.0}}, Relation::LessEqual, 1.0);
  CHECK(solve(lp).status == Status::Unbounded);
}

TEST_CASE("three-row example agrees with vertex enumeration") {
  DenseLp p{2, {2.0, 1.0}, {{1, 0}, {0, 1}, {1, 1}}, {Relation::LessEqual, Relation::LessEqual, Relation::LessEqual},
            {1, 1, 1}};
  const LinearProgram lp = p.build();
  const Solution sol = solve(lp);
  REQUIRE(sol.optimal());
  const auto oracle = vertex_enumeration_optimum(p);
  REQUIRE(oracle);
  CHECK(sol.objective_value == doctest::Approx(*oracle).epsilon(1e-12));
  CHECK(sol.primal[0] == doctest::Approx(1.0));
  CHECK(sol.primal[1] == doctest::Approx(0.0));
  CHECK(dual_residual(lp, sol.duals) <= 1e-9);
  CHECK(std::abs(dual_objective(lp, sol.duals) - sol.objective_value) <= 1e-9);
  CHECK(complementary_slackness_residual(lp, sol) <= 1e-8);
}

TEST_CASE("complementary slackness residual of a hand-built pair") {
  LinearProgram lp(1);
  lp.set_objective(0, 1.0);
  lp.add_row({{0, 1.0}}, Relation::LessEqual, 1.0);
  Solution sol;
  sol.status = Status::Optimal;
  sol.primal = {0.5};
  sol.duals = {1.0};
  CHECK(complementary_slackness_residual(lp, sol) == doctest::Approx(0.5));

  LinearProgram trivial(2);
  const Solution zero = solve(trivial);
  REQUIRE(zero.optimal());
  CHECK(complementary_slackness_residual(trivial, zero) == 0.0);
}

TEST_CASE("equality rows and fixings") {
  // max x0 + 2 x1 + x2  s.t.  x0 + x1 + x2 = 1,  x1 <= 0.25,  x2 fixed at 0.5
  LinearProgram lp(3);
  lp.set_objective(0, 1.0);
  lp.set_objective(1, 2.0);
  lp.set_objective(2, 1.0);
  lp.add_row({{0, 1.0}, {1, 1.0}, {2, 1.0}}, Relation::Equal, 1.0);
  lp.add_row({{1, 1.0}}, Relation::LessEqual, 0.25);
  lp.fix(2, 0.5);
  const Solution sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[0] == doctest::Approx(0.25));
  CHECK(sol.primal[1] == doctest::Approx(0.25));
  CHECK(sol.primal[2] == doctest::Approx(0.5));
  CHECK(sol.objective_value == doctest::Approx(0.25 + 0.5 + 0.5));
  CHECK(primal_residual(lp, sol.primal) <= 1e-9);
  CHECK(complementary_slackness_residual(lp, sol) <= 1e-8);
}

TEST_CASE("malformed problems are rejected") {
  LinearProgram lp(1);
  lp.add_row({}, Relation::LessEqual, -1.0);
  CHECK_THROWS_AS(lp.validate(), InvalidConfig);
  LinearProgram nan_obj(1);
  nan_obj.set_objective(0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(solve(nan_obj), InvalidConfig);
}

TEST_CASE("debug dump lists one row per line") {
  LinearProgram lp(2);
  lp.set_objective(0, 3.0);
  lp.add_row({{0, 1.0}, {1, 2.0}}, Relation::LessEqual, 4.0);
  lp.add_row({{1, 1.0}}, Relation::Equal, 1.0);
  CHECK(lp.dump() == "max : x0=3\n<= 4 : x0=1 x1=2\n= 1 : x1=1\n");
}

TEST_CASE("random small LPs match vertex enumeration") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coef(-3.0, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> vars(1, 3);
  std::uniform_int_distribution<int> rows(1, 4);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    DenseLp p;
    p.n = static_cast<std::size_t>(vars(rng));
    for (std::size_t v = 0; v < p.n; ++v) p.c.push_back(std::round(coef(rng) * 2.0) / 2.0);
    const int m = rows(rng);
    for (int r = 0; r < m; ++r) {
      std::vector<double> row(p.n);
      for (double& x : row) x = unit(rng) < 0.25 ? 0.0 : std::round(coef(rng) * 2.0) / 2.0;
      p.a.push_back(row);
      p.rel.push_back(unit(rng) < 0.2 ? Relation::Equal : Relation::LessEqual);
      p.b.push_back(std::round((unit(rng) * 6.0 - 1.0) * 2.0) / 2.0);
      const bool empty_row = std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; });
      if (empty_row && p.rel.back() == Relation::LessEqual) p.b.back() = std::max(p.b.back(), 0.0);
    }
    // A bounding row keeps every feasible problem bounded.
    p.a.back().assign(p.n, 1.0);
    p.rel.back() = Relation::LessEqual;
    p.b.back() = 4.0;

    const LinearProgram lp = p.build();
    const Solution sol = solve(lp);
    const auto oracle = vertex_enumeration_optimum(p);
    CAPTURE(trial);
    CAPTURE(lp.dump());
    if (!oracle) {
      CHECK(sol.status == Status::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(sol.optimal());
    ++optimal;
    CHECK(std::abs(sol.objective_value - *oracle) <= 1e-7);
    CHECK(primal_residual(lp, sol.primal) <= 1e-8);
    CHECK(dual_residual(lp, sol.duals) <= 1e-7);
    CHECK(std::abs(dual_objective(lp, sol.duals) - sol.objective_value) <= 1e-7 * (1.0 + std::abs(sol.objective_value)));
    CHECK(complementary_slackness_residual(lp, sol) <= 1e-7 * (1.0 + std::abs(sol.objective_value)));
    std::size_t positive = 0;
    for (double x : sol.primal) positive += x > 1e-9;
    CHECK(positive <= lp.num_rows());
  }
  CHECK(optimal > 50);
  CHECK(infeasible > 0);
}

TEST_CASE("degenerate transportation-like LP terminates") {
  // Many ties: every assignment in a 4x4 doubly-stochastic polytope is optimal.
  const std::size_t n = 4;
  LinearProgram lp(n * n);
  for (std::size_t v = 0; v < n * n; ++v) lp.set_objective(v, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Term> row, col;
    for (std::size_t j = 0; j < n; ++j) {
      row.push_back({i * n + j, 1.0});
      col.push_back({j * n + i, 1.0});
    }
    lp.add_row(row, Relation::LessEqual, 1.0);
    lp.add_row(col, Relation::LessEqual, 1.0);
  }
  const Solution sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective_value == doctest::Approx(4.0));
  for (double x : sol.primal) CHECK((std::abs(x) < 1e-9 || std::abs(x - 1.0) < 1e-9));
}
