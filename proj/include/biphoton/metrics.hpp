#pragma once

#include <string_view>

// Entanglement certification from the measured sum-frequency width and the
// relative-time width.
namespace biphoton {

struct Measured {
  double value = 0.0;
  double error = 0.0;
};

// How independent relative errors combine in a product.
enum class Propagation {
  Linear,      // e/x = e1/x1 + e2/x2
  Quadrature,  // e/x = sqrt((e1/x1)^2 + (e2/x2)^2)
};

std::string_view propagation_name(Propagation p);
Propagation parse_propagation(std::string_view name);

// beta = delta_omega_sum * delta_t (rad/s times s).
Measured uncertainty_product(Measured delta_omega_sum, Measured delta_t, Propagation mode = Propagation::Quadrature);

struct SeparabilityVerdict {
  bool violated = false;
  double sigmas = 0.0;  // (1 - beta) / error
};

// Separable states obey beta >= 1.
SeparabilityVerdict separability_check(Measured beta);

// EPR steering needs beta < 1/2 (strict).
bool steering_check(double beta);

// K = 1 / sqrt(1 - 1 / (1 + r^2)^2), r = delta_omega_sum / delta_omega_single,
// evaluated as (1 + r^2) / (r sqrt(2 + r^2)).
double schmidt_number(double delta_omega_sum, double delta_omega_single);

struct EntanglementReport {
  Measured delta_t;          // s
  Measured delta_omega_sum;  // rad/s
  double delta_omega_single = 0.0;  // rad/s
  Measured product;
  Propagation propagation = Propagation::Quadrature;
  bool separability_violated = false;
  double violation_sigmas = 0.0;
  bool steering_satisfied = false;
  double schmidt_k = 0.0;
};

EntanglementReport certify(Measured delta_omega_sum, Measured delta_t, double delta_omega_single,
                           Propagation mode = Propagation::Quadrature);

}  // namespace biphoton
