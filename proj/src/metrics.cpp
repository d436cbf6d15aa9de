#include "biphoton/metrics.hpp"

#include "biphoton/errors.hpp"

#include <cmath>
#include <string>

namespace biphoton {
namespace {

void require_positive(double x, const char* what) {
  if (!(std::isfinite(x) && x > 0.0)) throw ValidationError(std::string(what) + " must be > 0");
}

void require_error(double e, const char* what) {
  if (!(std::isfinite(e) && e >= 0.0)) throw ValidationError(std::string(what) + " error must be >= 0");
}

}  // namespace

std::string_view propagation_name(Propagation p) { return p == Propagation::Linear ? "linear" : "quadrature"; }

Propagation parse_propagation(std::string_view name) {
  if (name == "linear") return Propagation::Linear;
  if (name == "quadrature") return Propagation::Quadrature;
  throw ValidationError("propagation must be 'linear' or 'quadrature', got '" + std::string(name) + "'");
}

Measured uncertainty_product(Measured delta_omega_sum, Measured delta_t, Propagation mode) {
  require_positive(delta_omega_sum.value, "delta_omega_sum");
  require_positive(delta_t.value, "delta_t");
  require_error(delta_omega_sum.error, "delta_omega_sum");
  require_error(delta_t.error, "delta_t");
  const double beta = delta_omega_sum.value * delta_t.value;
  const double a = delta_omega_sum.error / delta_omega_sum.value;
  const double b = delta_t.error / delta_t.value;
  const double rel = mode == Propagation::Linear ? a + b : std::hypot(a, b);
  return {beta, beta * rel};
}

SeparabilityVerdict separability_check(Measured beta) {
  require_positive(beta.value, "beta");
  require_positive(beta.error, "beta");
  return {beta.value < 1.0, (1.0 - beta.value) / beta.error};
}

bool steering_check(double beta) {
  require_positive(beta, "beta");
  return beta < 0.5;
}

double schmidt_number(double delta_omega_sum, double delta_omega_single) {
  require_positive(delta_omega_sum, "delta_omega_sum");
  require_positive(delta_omega_single, "delta_omega_single");
  const double r = delta_omega_sum / delta_omega_single;
  const double r2 = r * r;
  return (1.0 + r2) / (r * std::sqrt(2.0 + r2));
}

EntanglementReport certify(Measured delta_omega_sum, Measured delta_t, double delta_omega_single, Propagation mode) {
  EntanglementReport r;
  r.delta_t = delta_t;
  r.delta_omega_sum = delta_omega_sum;
  r.delta_omega_single = delta_omega_single;
  r.propagation = mode;
  r.product = uncertainty_product(delta_omega_sum, delta_t, mode);
  const SeparabilityVerdict sep = separability_check(r.product);
  r.separability_violated = sep.violated;
  r.violation_sigmas = sep.sigmas;
  r.steering_satisfied = steering_check(r.product.value);
  r.schmidt_k = schmidt_number(delta_omega_sum.value, delta_omega_single);
  return r;
}

}  // namespace biphoton
