#include "biphoton/fourier.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/numeric.hpp"
#include "biphoton/units.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace biphoton {
namespace {

void check_length(Eigen::Index n) {
  if (!is_power_of_two(n) || n < 4) throw ValidationError("centered transform needs a power-of-two length >= 4");
}

// exp(-i w_k tau_m) on centered grids reduces to (-1)^(k+m) exp(-2pi i k m / n)
// because exp(-i pi n / 2) = 1 for n divisible by 4.
std::vector<std::complex<double>> alternate(const Eigen::ArrayXcd& x) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k) out[static_cast<std::size_t>(k)] = (k % 2 == 0) ? x(k) : -x(k);
  return out;
}

Eigen::ArrayXcd alternate_back(const std::vector<std::complex<double>>& y, double scale) {
  Eigen::ArrayXcd out(static_cast<Eigen::Index>(y.size()));
  for (Eigen::Index m = 0; m < out.size(); ++m) {
    const auto v = y[static_cast<std::size_t>(m)] * scale;
    out(m) = (m % 2 == 0) ? v : -v;
  }
  return out;
}

}  // namespace

Eigen::ArrayXd centered_axis(Eigen::Index n, double step) {
  return (Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) - static_cast<double>(n / 2)) * step;
}

Eigen::ArrayXcd centered_to_time(const Eigen::ArrayXcd& spectrum, double d_omega) {
  check_length(spectrum.size());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.fwd(out, alternate(spectrum));
  return alternate_back(out, d_omega / units::two_pi);
}

Eigen::ArrayXcd centered_to_frequency(const Eigen::ArrayXcd& signal, double d_tau) {
  check_length(signal.size());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<std::complex<double>> out;
  fft.inv(out, alternate(signal));
  return alternate_back(out, d_tau);
}

}  // namespace biphoton
