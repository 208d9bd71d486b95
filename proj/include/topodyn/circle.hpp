#pragma once

#include <cmath>
#include <stdexcept>

namespace topodyn {

// Agents sit at fractions i/K of the circumference.  Fractional positions
// feed circle_dist; radii, spacings and every other length exposed to the
// pipeline are arc lengths on the radius-1 circle, i.e. fraction * kArc.
inline constexpr double kArc = 6.283185307179586476925286766559;

struct CirclePositions {
  int K = 0;
  explicit CirclePositions(int k) : K(k) {
    if (k < 1) throw std::invalid_argument("CirclePositions: K must be positive");
  }
  double operator()(int i) const { return static_cast<double>(i) / static_cast<double>(K); }
};

// Geodesic distance between circumference fractions, in [0, 0.5].
inline double circle_dist(double a, double b) {
  const double d = std::fabs(a - b);
  return d <= 0.5 ? d : 1.0 - d;
}

// Same metric in arc-length units; this is what the filtration uses.
inline double arc_dist(double a, double b) { return kArc * circle_dist(a, b); }

}  // namespace topodyn
