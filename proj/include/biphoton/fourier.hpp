#pragma once

#include <Eigen/Dense>

// Transforms between centered uniform grids x_k = (k - n/2) dx of
// power-of-two length n >= 4, with conjugate spacing 2pi / (n dx).
namespace biphoton {

Eigen::ArrayXd centered_axis(Eigen::Index n, double step);

// psi(tau_m) = (1/2pi) sum_k f(w_k) exp(-i w_k tau_m) dw
Eigen::ArrayXcd centered_to_time(const Eigen::ArrayXcd& spectrum, double d_omega);

// F(w_k) = sum_m g(tau_m) exp(+i w_k tau_m) dtau
Eigen::ArrayXcd centered_to_frequency(const Eigen::ArrayXcd& signal, double d_tau);

}  // namespace biphoton
