#pragma once

// Derivative-free simplex descent (Nelder and Mead, standard coefficients).
// Internal to the core library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace pvcast::detail {

struct NelderMeadOptions {
  std::size_t max_evaluations = 20000;
  double initial_step = 0.1;
  double f_tolerance = 1e-14;  // relative spread of the vertex values
  double x_tolerance = 1e-10;  // simplex diameter
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  std::size_t evaluations = 0;
};

inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                    const Eigen::VectorXd& start, const NelderMeadOptions& opt = {}) {
  const auto n = start.size();
  std::size_t evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };
  if (n == 0) return {start, eval(start), evals};

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), start);
  std::vector<double> f(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += opt.initial_step;
  for (std::size_t i = 0; i < pts.size(); ++i) f[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  while (evals < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) diameter = std::max(diameter, (pts[i] - pts[best]).lpNorm<Eigen::Infinity>());
    const double spread = f[worst] - f[best];
    if (std::isfinite(spread) && spread <= opt.f_tolerance * (std::abs(f[best]) + 1e-300) && diameter <= opt.x_tolerance)
      break;
    if (diameter <= opt.x_tolerance * 1e-3) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < f[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        f[worst] = fe;
      } else {
        pts[worst] = reflected;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f[second]) {
      pts[worst] = reflected;
      f[worst] = fr;
      continue;
    }
    const bool outside = fr < f[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : f[worst])) {
      pts[worst] = contracted;
      f[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      f[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  return {pts[best], f[best], evals};
}

}  // namespace pvcast::detail
