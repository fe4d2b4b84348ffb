#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

namespace perivol {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;   // max-norm of the gradient at the solution
  double rel_step = 1e-5;   // central-difference step, relative with unit floor
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

// central differences, step h_i = rel_step * max(|x_i|, 1)
inline Eigen::VectorXd num_gradient(const Objective& f, const Eigen::VectorXd& x,
                                    double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// plain BFGS with backtracking Armijo line search.  The objective may return
// +inf (or NaN) to reject a trial point; the search then shortens the step.
inline BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                                const BfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.f = f(x0);
  if (!std::isfinite(res.f))
    throw std::invalid_argument("bfgs_minimize: objective not finite at the start point");
  res.grad = num_gradient(f, res.x, opt.rel_step);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool first_update = true;

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    if (res.grad.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      res.converged = true;
      return res;
    }
    Eigen::VectorXd d = -(Hinv * res.grad);
    double slope = res.grad.dot(d);
    if (!(slope < 0.0)) {  // not a descent direction: reset to steepest descent
      Hinv.setIdentity();
      first_update = true;
      d = -res.grad;
      slope = res.grad.dot(d);
    }
    // backtracking Armijo
    const double c1 = 1e-4;
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = res.x + step * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.f + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {  // stalled: cannot improve along d within 2^-60
      res.converged = res.grad.lpNorm<Eigen::Infinity>() < opt.grad_tol;
      return res;
    }
    Eigen::VectorXd g_new = num_gradient(f, x_new, opt.rel_step);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - res.grad;
    const double ys = y.dot(s);
    if (ys > 1e-10 * y.norm() * s.norm()) {
      if (first_update) {  // scale the seed matrix to the observed curvature
        Hinv = (ys / y.dot(y)) * Eigen::MatrixXd::Identity(n, n);
        first_update = false;
      }
      const Eigen::VectorXd Hy = Hinv * y;
      const double yHy = y.dot(Hy);
      // BFGS inverse update
      Hinv += ((ys + yHy) / (ys * ys)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / ys;
    }
    res.x = x_new;
    res.f = f_new;
    res.grad = g_new;
  }
  res.converged = res.grad.lpNorm<Eigen::Infinity>() < opt.grad_tol;
  return res;
}

}  // namespace perivol
