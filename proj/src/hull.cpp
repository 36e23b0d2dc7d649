#include "popt/hull.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popt/errors.hpp"

namespace popt {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// argmin ||Q alpha|| subject to sum(alpha) = 1, over the columns listed in `active`.
Vector affine_minimizer(const Matrix& q, const std::vector<Eigen::Index>& active) {
  const auto s = static_cast<Eigen::Index>(active.size());
  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = a; b < s; ++b) {
      const double g = q.col(active[static_cast<std::size_t>(a)]).dot(q.col(active[static_cast<std::size_t>(b)]));
      kkt(a, b) = g;
      kkt(b, a) = g;
    }
    kkt(a, s) = 1.0;
    kkt(s, a) = 1.0;
  }
  Vector rhs = Vector::Zero(s + 1);
  rhs[s] = 1.0;
  const Vector sol = kkt.fullPivLu().solve(rhs);
  return sol.head(s);
}

}  // namespace

HullProjection nearest_point_in_hull(std::span<const std::vector<double>> points, std::span<const double> target) {
  if (points.empty()) throw InvalidConfig("nearest_point_in_hull needs a non-empty point set");
  const auto dim = static_cast<Eigen::Index>(target.size());
  const auto n = static_cast<Eigen::Index>(points.size());

  Matrix q(dim, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& p = points[static_cast<std::size_t>(t)];
    if (static_cast<Eigen::Index>(p.size()) != dim) throw InvalidConfig("point dimension mismatch");
    for (Eigen::Index d = 0; d < dim; ++d) q(d, t) = p[static_cast<std::size_t>(d)] - target[static_cast<std::size_t>(d)];
  }
  const Vector norms = q.colwise().squaredNorm().transpose();
  const double scale = 1.0 + norms.maxCoeff();
  const double major_tol = 1e-14 * scale;
  const double weight_tol = 1e-12;

  Eigen::Index first = 0;
  norms.minCoeff(&first);
  std::vector<Eigen::Index> active{first};
  std::vector<double> weights{1.0};
  Vector y = q.col(first);

  std::size_t iterations = 0;
  const std::size_t major_cap = 20 * static_cast<std::size_t>(n) + 100;
  for (; iterations < major_cap; ++iterations) {
    if (y.squaredNorm() <= 1e-28 * scale) break;
    const Vector scores = q.transpose() * y;
    Eigen::Index j = 0;
    scores.minCoeff(&j);
    if (y.squaredNorm() - scores[j] <= major_tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    weights.push_back(0.0);

    for (std::size_t minor = 0; minor <= active.size() + 1; ++minor) {
      const Vector alpha = affine_minimizer(q, active);
      bool interior = true;
      for (Eigen::Index a = 0; a < alpha.size(); ++a) interior &= alpha[a] > weight_tol;
      if (interior) {
        for (std::size_t a = 0; a < active.size(); ++a) weights[a] = alpha[static_cast<Eigen::Index>(a)];
        break;
      }
      double theta = 1.0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const double al = alpha[static_cast<Eigen::Index>(a)];
        if (al <= weight_tol && weights[a] - al > 0.0) theta = std::min(theta, weights[a] / (weights[a] - al));
      }
      for (std::size_t a = 0; a < active.size(); ++a) {
        weights[a] = theta * alpha[static_cast<Eigen::Index>(a)] + (1.0 - theta) * weights[a];
      }
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_w;
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (weights[a] > weight_tol) {
          kept.push_back(active[a]);
          kept_w.push_back(weights[a]);
        }
      }
      if (kept.empty()) {
        // Degenerate step: fall back to the entering point alone.
        kept.push_back(active.back());
        kept_w.push_back(1.0);
      }
      const double total = std::accumulate(kept_w.begin(), kept_w.end(), 0.0);
      for (double& w : kept_w) w /= total;
      active = std::move(kept);
      weights = std::move(kept_w);
    }
    y.setZero();
    for (std::size_t a = 0; a < active.size(); ++a) y += weights[a] * q.col(active[a]);
  }

  HullProjection out;
  out.iterations = iterations;
  out.lambdas.assign(points.size(), 0.0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) out.lambdas[static_cast<std::size_t>(active[a])] = weights[a] / total;

  out.y_star.assign(target.begin(), target.end());
  Vector offset = Vector::Zero(dim);
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (out.lambdas[t] != 0.0) offset += out.lambdas[t] * q.col(static_cast<Eigen::Index>(t));
  }
  for (Eigen::Index d = 0; d < dim; ++d) out.y_star[static_cast<std::size_t>(d)] += offset[d];
  out.distance = offset.norm();

  // First-order optimality: (target - y*).(p - y*) <= tol for every p.
  const Vector scores = q.transpose() * offset;
  const double yy = offset.squaredNorm();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (yy - scores[t] > 1e-9 * scale) {
      throw NumericalFailure("hull projection did not reach first-order optimality");
    }
  }
  return out;
}

}  // namespace popt
