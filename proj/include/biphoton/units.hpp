#pragma once

#include <numbers>

// All quantities inside the library are SI: seconds for times, rad/s for
// (angular) frequencies. These helpers only exist at the edges, where values
// are quoted as "2pi x kHz" or in nanoseconds.
namespace biphoton::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double angular_hz(double f_hz) { return two_pi * f_hz; }
constexpr double angular_khz(double f_khz) { return two_pi * 1e3 * f_khz; }
constexpr double angular_mhz(double f_mhz) { return two_pi * 1e6 * f_mhz; }

constexpr double to_khz(double omega) { return omega / (two_pi * 1e3); }
constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }

constexpr double ns(double t) { return t * 1e-9; }
constexpr double us(double t) { return t * 1e-6; }
constexpr double ms(double t) { return t * 1e-3; }
constexpr double to_ns(double t) { return t * 1e9; }

}  // namespace biphoton::units
