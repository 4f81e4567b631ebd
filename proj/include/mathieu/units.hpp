#pragma once

#include <complex>
#include <numbers>

namespace mathieu {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Configuration values are ordinary frequencies (omega / 2pi, GHz); matrices
// and propagators work in angular units (rad/ns).
constexpr double to_angular(double ghz) noexcept { return kTwoPi * ghz; }
constexpr double to_ghz(double rad_per_ns) noexcept { return rad_per_ns / kTwoPi; }

}  // namespace mathieu
