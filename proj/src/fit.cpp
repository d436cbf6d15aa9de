#include "biphoton/fit.hpp"

#include "biphoton/errors.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <cmath>

namespace biphoton {
namespace {

struct Residuals : Eigen::DenseFunctor<double> {
  const Eigen::ArrayXd& x;
  const Eigen::ArrayXd& y;
  Eigen::ArrayXd sqrt_w;
  const CurveModel& model;
  Eigen::VectorXd step_scale;

  Residuals(const Eigen::ArrayXd& x_, const Eigen::ArrayXd& y_, const Eigen::ArrayXd& w, const CurveModel& m,
            const Eigen::VectorXd& p0)
      : DenseFunctor<double>(static_cast<int>(p0.size()), static_cast<int>(x_.size())),
        x(x_),
        y(y_),
        sqrt_w(w.sqrt()),
        model(m),
        step_scale(p0.cwiseAbs().cwiseMax(1e-8)) {}

  int operator()(const InputType& p, ValueType& r) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) r(i) = sqrt_w(i) * (y(i) - model(x(i), p));
    return 0;
  }

  int df(const InputType& p, JacobianType& jac) const {
    ValueType rp(values()), rm(values());
    InputType q = p;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = 1e-6 * std::max(std::abs(p(j)), step_scale(j));
      q(j) = p(j) + h;
      (*this)(q, rp);
      q(j) = p(j) - h;
      (*this)(q, rm);
      q(j) = p(j);
      jac.col(j) = (rp - rm) / (2.0 * h);
    }
    return 0;
  }
};

}  // namespace

double CurveFit::error(Eigen::Index i) const { return std::sqrt(std::max(covariance(i, i), 0.0)); }

CurveFit fit_curve(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights,
                   const CurveModel& model, const Eigen::VectorXd& initial) {
  if (x.size() != y.size() || x.size() != weights.size()) throw ValidationError("fit_curve: size mismatch");
  if (x.size() <= initial.size()) throw FitFailure("fit_curve: fewer points than parameters");

  Residuals f(x, y, weights, model, initial);
  Eigen::LevenbergMarquardt<Residuals> lm(f);
  lm.setMaxfev(2000);
  Eigen::VectorXd p = initial;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation || !p.allFinite())
    throw ConvergenceError("least-squares fit did not converge");

  CurveFit out;
  out.params = p;
  Eigen::VectorXd r(x.size());
  f(p, r);
  out.chi2 = r.squaredNorm();
  out.dof = x.size() - p.size();
  Eigen::MatrixXd jac(x.size(), p.size());
  f.df(p, jac);
  const Eigen::MatrixXd info = jac.transpose() * jac;
  out.covariance = info.completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

Eigen::VectorXd fit_polynomial(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights,
                               int degree) {
  if (x.size() <= degree) throw FitFailure("fit_polynomial: too few points");
  Eigen::MatrixXd design(x.size(), degree + 1);
  design.col(0).setOnes();
  for (int d = 1; d <= degree; ++d) design.col(d) = design.col(d - 1).array() * x;
  const Eigen::ArrayXd sw = weights.sqrt();
  const Eigen::MatrixXd a = sw.matrix().asDiagonal() * design;
  const Eigen::VectorXd b = (sw * y).matrix();
  return a.colPivHouseholderQr().solve(b);
}

double eval_polynomial(const Eigen::VectorXd& coeffs, double x) {
  double acc = 0.0;
  for (Eigen::Index d = coeffs.size() - 1; d >= 0; --d) acc = acc * x + coeffs(d);
  return acc;
}

}  // namespace biphoton
