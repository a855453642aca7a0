// circle.hpp - angle arithmetic on S1 represented as radians in [0, 2*pi).
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace otc {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double pi = std::numbers::pi;

// Canonical representative of x modulo 2*pi, in [0, 2*pi).
inline double wrap(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("wrap: non-finite angle");
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;  // fmod can land exactly on 2*pi after the correction
    return r;
}

// Quotient distance on R/2piZ, equals arc-length distance on S1. Range [0, pi].
inline double circle_dist(double x, double y) {
    double d = std::fabs(x - y);
    d = std::fmod(d, two_pi);
    return std::min(d, two_pi - d);
}

// Signed shortest displacement d in (-pi, pi] with wrap(base + d) = target.
// The antipodal tie is resolved to +pi.
inline double signed_log(double base, double target) {
    double d = std::fmod(target - base, two_pi);
    if (d > pi) d -= two_pi;
    if (d <= -pi) d += two_pi;
    return d;
}

}  // namespace otc
