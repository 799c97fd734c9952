#pragma once

// Limited-memory BFGS with a strong-Wolfe line search (Nocedal & Wright,
// algorithms 7.4, 3.5 and 3.6). Internal to the core library.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace pvcast::detail {

using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  std::size_t max_iterations = 500;
  std::size_t memory = 10;
  double tolerance = 1e-6;  // relative change of the objective
  double gradient_tolerance = 1e-12;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 25;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  std::vector<double> history;  // objective after each accepted iteration
};

namespace lbfgs_impl {

struct Point {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
};

// Minimizer of the cubic through (a, f, d) at both ends, clamped to the
// inner 80% of the interval; bisection when the fit is degenerate.
inline double cubic_step(const Point& lo, const Point& hi) {
  const double lower = std::min(lo.a, hi.a), upper = std::max(lo.a, hi.a);
  const double margin = 0.1 * (upper - lower);
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.d * hi.d;
  double a = 0.5 * (lo.a + hi.a);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
    const double denom = hi.d - lo.d + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / denom;
      if (std::isfinite(cand)) a = cand;
    }
  }
  if (a < lower + margin || a > upper - margin) a = 0.5 * (lo.a + hi.a);
  return a;
}

}  // namespace lbfgs_impl

inline LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x, const LbfgsOptions& opt) {
  using lbfgs_impl::Point;
  LbfgsResult result;
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);
  if (!std::isfinite(f)) {
    result.x = x;
    result.f = f;
    return result;
  }
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) break;

    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += s_hist[i] * (alpha[i] - beta);
    }
    dir = -dir;
    double d0 = g.dot(dir);
    if (!(d0 < 0.0)) {  // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      d0 = -g.squaredNorm();
    }

    // strong-Wolfe line search
    const Point start{0.0, f, d0};
    Eigen::VectorXd x_new(x.size()), g_new(x.size());
    auto eval = [&](double a) {
      x_new = x + a * dir;
      const double fa = objective(x_new, g_new);
      return Point{a, fa, g_new.dot(dir)};
    };
    double a_init = 1.0;
    if (s_hist.empty()) a_init = std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<1>()));
    bool found = false;
    Point accepted;
    Eigen::VectorXd x_acc, g_acc;
    auto accept = [&](const Point& p) {
      accepted = p;
      x_acc = x_new;
      g_acc = g_new;
      found = true;
    };
    auto zoom = [&](Point lo, Point hi) {
      for (int i = 0; i < opt.max_line_search && !found; ++i) {
        const double a = lbfgs_impl::cubic_step(lo, hi);
        if (a == lo.a || a == hi.a) break;
        const Point p = eval(a);
        if (!std::isfinite(p.f) || p.f > start.f + opt.c1 * a * d0 || p.f >= lo.f) {
          hi = p;
        } else {
          if (std::abs(p.d) <= -opt.c2 * d0) {
            accept(p);
            return;
          }
          if (p.d * (hi.a - lo.a) >= 0.0) hi = lo;
          lo = p;
        }
      }
      // fall back to the best sufficient-decrease point seen
      if (!found && lo.a > 0.0 && lo.f < start.f) {
        eval(lo.a);
        accept(lo);
      }
    };
    Point prev = start;
    double a = a_init;
    for (int i = 0; i < opt.max_line_search && !found; ++i) {
      const Point p = eval(a);
      if (!std::isfinite(p.f) || p.f > start.f + opt.c1 * a * d0 || (i > 0 && p.f >= prev.f)) {
        zoom(prev, p);
        break;
      }
      if (std::abs(p.d) <= -opt.c2 * d0) {
        accept(p);
        break;
      }
      if (p.d >= 0.0) {
        zoom(p, prev);
        break;
      }
      prev = p;
      a *= 2.0;
    }
    if (!found) break;

    const Eigen::VectorXd s = x_acc - x;
    const Eigen::VectorXd yv = g_acc - g;
    const double sy = s.dot(yv);
    const double f_old = f;
    x = x_acc;
    g = g_acc;
    f = accepted.f;
    result.history.push_back(f);
    if (sy > 1e-12 * yv.squaredNorm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if ((f_old - f) <= opt.tolerance * std::max({std::abs(f_old), std::abs(f), 1e-300})) break;
  }
  result.x = std::move(x);
  result.f = f;
  return result;
}

}  // namespace pvcast::detail
