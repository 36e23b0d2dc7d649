#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "popt/errors.hpp"
#include "popt/hull.hpp"

using namespace popt;

namespace {

using Points = std::vector<std::vector<double>>;

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Oracle: the nearest point lies in the relative interior of some face, i.e.
// is the affine projection onto a subset of points with positive coefficients.
double brute_force_distance(const Points& pts, const std::vector<double>& target) {
  const std::size_t n = pts.size();
  const auto dim = static_cast<Eigen::Index>(target.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < n; ++t) {
      if (mask & (std::size_t{1} << t)) idx.push_back(t);
    }
    const auto s = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd q(dim, s);
    for (Eigen::Index c = 0; c < s; ++c) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        q(d, c) = pts[idx[static_cast<std::size_t>(c)]][static_cast<std::size_t>(d)] - target[static_cast<std::size_t>(d)];
      }
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    kkt.topLeftCorner(s, s) = q.transpose() * q;
    kkt.block(0, s, s, 1).setOnes();
    kkt.block(s, 0, 1, s).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
    rhs[s] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < s + 1) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if ((sol.head(s).array() < -1e-12).any()) continue;
    best = std::min(best, (q * sol.head(s)).norm());
  }
  return best;
}

void check_invariants(const Points& pts, const std::vector<double>& target, const HullProjection& proj) {
  double total = 0.0;
  std::vector<double> combo(target.size(), 0.0);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    CHECK(proj.lambdas[t] >= 0.0);
    total += proj.lambdas[t];
    for (std::size_t d = 0; d < target.size(); ++d) combo[d] += proj.lambdas[t] * pts[t][d];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(distance(combo, proj.y_star) <= 1e-9);
  CHECK(proj.distance == doctest::Approx(distance(proj.y_star, target)).epsilon(1e-9));
  for (const auto& p : pts) {
    double inner = 0.0;
    for (std::size_t d = 0; d < target.size(); ++d) inner += (target[d] - proj.y_star[d]) * (p[d] - proj.y_star[d]);
    CHECK(inner <= 1e-9);
  }
}

}  // namespace

TEST_CASE("single point equal to the target") {
  const Points pts{{0.3, 0.7}};
  const std::vector<double> target{0.3, 0.7};
  const HullProjection proj = nearest_point_in_hull(pts, target);
  CHECK(proj.distance == 0.0);
  CHECK(proj.lambdas == std::vector<double>{1.0});
  CHECK(proj.y_star == target);
}

TEST_CASE("projection onto a segment matches the closed form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> a{coord(rng), coord(rng), coord(rng)};
    const std::vector<double> b{coord(rng), coord(rng), coord(rng)};
    const std::vector<double> x{coord(rng), coord(rng), coord(rng)};
    double num = 0.0, den = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      num += (x[d] - a[d]) * (b[d] - a[d]);
      den += (b[d] - a[d]) * (b[d] - a[d]);
    }
    const double t = std::clamp(num / den, 0.0, 1.0);
    std::vector<double> expected(3);
    for (std::size_t d = 0; d < 3; ++d) expected[d] = a[d] + t * (b[d] - a[d]);

    const Points pts{a, b};
    const HullProjection proj = nearest_point_in_hull(pts, x);
    CAPTURE(trial);
    for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(proj.y_star[d] - expected[d]) <= 1e-9);
    check_invariants(pts, x, proj);
  }
}

TEST_CASE("interior target has zero distance") {
  const Points pts{{0, 0}, {1, 0}, {0, 1}};
  const std::vector<double> centroid{1.0 / 3.0, 1.0 / 3.0};
  const HullProjection proj = nearest_point_in_hull(pts, centroid);
  CHECK(proj.distance < 1e-6);
  for (double l : proj.lambdas) CHECK(l == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("random point sets agree with face enumeration") {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 7), dims(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dim = static_cast<std::size_t>(dims(rng));
    Points pts(static_cast<std::size_t>(count(rng)), std::vector<double>(dim));
    for (auto& p : pts) {
      for (double& v : p) v = std::round(coord(rng) * 4.0) / 4.0;  // ties and duplicates on purpose
    }
    std::vector<double> target(dim);
    for (double& v : target) v = coord(rng) * 1.5;
    const HullProjection proj = nearest_point_in_hull(pts, target);
    CAPTURE(trial);
    check_invariants(pts, target, proj);
    CHECK(std::abs(proj.distance - brute_force_distance(pts, target)) <= 1e-9);
  }
}

TEST_CASE("deterministic given input order") {
  const Points pts{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}};
  const std::vector<double> target{0.9, 0.1, -0.5};
  const HullProjection a = nearest_point_in_hull(pts, target);
  const HullProjection b = nearest_point_in_hull(pts, target);
  CHECK(a.lambdas == b.lambdas);
  CHECK(a.y_star == b.y_star);
}

TEST_CASE("empty point set is rejected") {
  const Points none;
  const std::vector<double> target{0.0};
  CHECK_THROWS_AS(nearest_point_in_hull(none, target), InvalidConfig);
}
