#pragma once

#include <cmath>
#include <numbers>

namespace phaselab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double x) {
  if (x > -kPi && x <= kPi) return x;
  double r = std::remainder(x, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

/// Absolute circular distance |wrap(a - b)|, in [0, pi].
inline double circular_distance(double a, double b) { return std::abs(wrap_phase(a - b)); }

}  // namespace phaselab
