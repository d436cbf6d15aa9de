#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace biphoton {

using ArrayXi64 = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;
using ArrayXXi64 = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// First two moments of a nonnegative weight profile w sampled at x.
template <typename Scalar>
struct Moments {
  Scalar total{0};
  Scalar mean{0};
  Scalar variance{0};
  Scalar stddev() const { return std::sqrt(std::max(variance, Scalar(0))); }
};

template <typename DerivedX, typename DerivedW>
Moments<typename DerivedX::Scalar> weighted_moments(const Eigen::ArrayBase<DerivedX>& x,
                                                    const Eigen::ArrayBase<DerivedW>& w) {
  using Scalar = typename DerivedX::Scalar;
  Moments<Scalar> m;
  m.total = w.sum();
  if (m.total == Scalar(0)) return m;
  m.mean = (x * w).sum() / m.total;
  m.variance = ((x - m.mean).square() * w).sum() / m.total;
  return m;
}

// Uniform-grid integral by the trapezoid rule.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::ArrayBase<Derived>& y, typename Derived::Scalar dx) {
  const auto n = y.size();
  if (n < 2) return typename Derived::Scalar(0);
  return dx * (y.sum() - 0.5 * (y(0) + y(n - 1)));
}

// Centered moving average; the window shrinks at the edges.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> moving_average(const Eigen::ArrayBase<Derived>& y,
                                                                         Eigen::Index width) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = y.size();
  const Eigen::Index half = std::max<Eigen::Index>(width, 1) / 2;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    out(i) = y.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar median(const Eigen::ArrayBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> v(y.derived().data(), y.derived().data() + y.size());
  if (v.empty()) return Scalar(0);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Linear interpolation on a uniform grid starting at x0 with spacing dx;
// zero outside the tabulated range.
template <typename Derived>
typename Derived::Scalar interpolate_uniform(const Eigen::ArrayBase<Derived>& y, double x0, double dx, double x) {
  const double u = (x - x0) / dx;
  if (u < 0.0 || u > static_cast<double>(y.size() - 1)) return 0;
  const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), y.size() - 2);
  const double f = u - static_cast<double>(i);
  return (1.0 - f) * y(i) + f * y(i + 1);
}

inline bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Relative L2 distance ||a - b|| / ||b||.
template <typename DerivedA, typename DerivedB>
double relative_l2(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  return std::sqrt((a - b).abs2().sum() / b.abs2().sum());
}

// Scaled complementary error function exp(x^2) erfc(x), x >= 0.
inline double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  const double inv2 = 1.0 / (x * x);
  return (1.0 - 0.5 * inv2 * (1.0 - 1.5 * inv2 * (1.0 - 2.5 * inv2))) / (x * std::sqrt(std::numbers::pi));
}

}  // namespace biphoton
