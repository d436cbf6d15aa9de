#pragma once

#include <Eigen/Dense>

#include <functional>

// Small weighted least-squares front end over Eigen's Levenberg-Marquardt.
// Callers should pass x and parameters in units of order one; the numeric
// Jacobian steps are relative to the initial parameter magnitudes.
namespace biphoton {

using CurveModel = std::function<double(double x, const Eigen::VectorXd& p)>;

struct CurveFit {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // (J^T W J)^-1 at the solution
  double chi2 = 0.0;
  Eigen::Index dof = 0;

  double error(Eigen::Index i) const;
  double reduced_chi2() const { return dof > 0 ? chi2 / static_cast<double>(dof) : 0.0; }
};

// Minimizes sum_i w_i (y_i - f(x_i; p))^2. Throws ConvergenceError when the
// optimizer fails or returns non-finite parameters.
CurveFit fit_curve(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights,
                   const CurveModel& model, const Eigen::VectorXd& initial);

// Weighted linear least squares for c_0 + c_1 x + ... + c_d x^d.
Eigen::VectorXd fit_polynomial(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights,
                               int degree);

double eval_polynomial(const Eigen::VectorXd& coeffs, double x);

}  // namespace biphoton
