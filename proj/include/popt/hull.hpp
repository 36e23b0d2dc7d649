#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace popt {

struct HullProjection {
  std::vector<double> y_star;   // nearest point of conv(points) to the target
  std::vector<double> lambdas;  // one per input point, on the simplex
  double distance = 0.0;
  std::size_t iterations = 0;
};

/// Nearest point of the convex hull of `points` to `target`, by Wolfe's
/// minimum-norm-point method on the translated points p_t - target.
/// Throws NumericalFailure when the first-order optimality test
/// (target - y*).(p - y*) <= tol fails at exit.
HullProjection nearest_point_in_hull(std::span<const std::vector<double>> points, std::span<const double> target);

}  // namespace popt
