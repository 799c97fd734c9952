#pragma once

// Independent reference computations used to freeze expected values in the
// unit and acceptance suites. Nothing here calls into the library code paths
// being checked.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pvcast/interpolation.hpp"

namespace pvcast::oracles {

struct PowerFit {
  double nugget = 0.0;
  double scale = 0.0;
  double exponent = 0.0;
  double sse = 0.0;
};

/// Unconstrained Levenberg-Marquardt on gamma(h) = nugget + scale*h^exponent.
inline PowerFit levenberg_marquardt_power(std::span<const interpolation::LagPoint> pts, PowerFit start) {
  Eigen::Vector3d p(start.nugget, start.scale, start.exponent);
  auto residuals = [&](const Eigen::Vector3d& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = pts[i].semivariance - (q(0) + q(1) * std::pow(pts[i].lag, q(2)));
    return r;
  };
  double lambda = 1e-3;
  Eigen::VectorXd r = residuals(p);
  double sse = r.squaredNorm();
  for (int iter = 0; iter < 2000; ++iter) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double h = pts[i].lag;
      const double he = std::pow(h, p(2));
      jac.row(static_cast<Eigen::Index>(i)) << 1.0, he, p(1) * he * std::log(h);
    }
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d jtr = jac.transpose() * r;
    Eigen::Matrix3d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector3d step = damped.ldlt().solve(jtr);
    const Eigen::Vector3d trial = p + step;
    const Eigen::VectorXd r_trial = residuals(trial);
    const double sse_trial = r_trial.squaredNorm();
    if (std::isfinite(sse_trial) && sse_trial < sse) {
      const double rel = (sse - sse_trial) / std::max(sse, 1e-300);
      p = trial;
      r = r_trial;
      sse = sse_trial;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (step.norm() < 1e-15 || rel < 1e-16) break;
    } else {
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
  }
  return {p(0), p(1), p(2), sse};
}

/// Central finite-difference gradient of f at x.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Least squares through the normal equations with an intercept column.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design << x, Eigen::VectorXd::Ones(x.rows());
  return (design.transpose() * design).ldlt().solve(design.transpose() * y);
}

/// Brute-force sum_i a_i x_i^2 + b_i x_i.
inline double quadratic_linear_form(std::span<const double> a, std::span<const double> b, std::span<const double> x) {
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) e += a[i] * x[i] * x[i];
  for (std::size_t i = 0; i < x.size(); ++i) e += b[i] * x[i];
  return e;
}

}  // namespace pvcast::oracles
