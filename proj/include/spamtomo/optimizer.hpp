// Copyright 2026 The spamtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Box-constrained nonlinear least squares.
//
// Objectives are written as residual functors templated on the scalar type, so the same code
// evaluates values (double) and exact Jacobians (forward-mode AutoDiffScalar). The default
// minimizer is a projected Levenberg-Marquardt with an active set on the box; a Nelder-Mead
// simplex is available for objectives whose Jacobian is unusable.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spamtomo {

using AdScalar = Eigen::AutoDiffScalar<Eigen::VectorXd>;

inline double value_of(double v) { return v; }
inline double value_of(const AdScalar& v) { return v.value(); }

struct OptimizerBudget {
  int max_evaluations = 4000;
  int n_restarts = 8;
  double tolerance = 1e-12;  ///< relative objective decrease below which a start has converged

  void validate() const {
    if (max_evaluations <= 0 || n_restarts <= 0 || !(tolerance > 0.0))
      throw std::invalid_argument("OptimizerBudget: all fields must be positive");
  }
};

struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Bounds unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double cost = std::numeric_limits<double>::infinity();  ///< sum of squared residuals
  bool converged = false;
  int evaluations = 0;
  std::string message;
};

template <typename Residuals>
Eigen::VectorXd evaluate_residuals(Residuals& f, const Eigen::VectorXd& x) {
  return f(x);
}

/// Residuals and their exact Jacobian at x.
template <typename Residuals>
std::pair<Eigen::VectorXd, Eigen::MatrixXd> evaluate_jacobian(Residuals& f,
                                                               const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::Matrix<AdScalar, Eigen::Dynamic, 1> xa(n);
  for (Eigen::Index i = 0; i < n; ++i) xa(i) = AdScalar(x(i), n, i);
  const Eigen::Matrix<AdScalar, Eigen::Dynamic, 1> ra = f(xa);
  Eigen::VectorXd r(ra.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(ra.size(), n);
  for (Eigen::Index k = 0; k < ra.size(); ++k) {
    r(k) = ra(k).value();
    if (ra(k).derivatives().size() == n) jac.row(k) = ra(k).derivatives().transpose();
  }
  return {r, jac};
}

/// Projected Levenberg-Marquardt for cost = sum_k r_k(x)^2 subject to lower <= x <= upper.
template <typename Residuals>
LeastSquaresResult minimize_least_squares(Residuals&& f, const Eigen::VectorXd& x0,
                                          const Bounds& bounds, const OptimizerBudget& budget) {
  const Eigen::Index n = x0.size();
  LeastSquaresResult res;
  res.x = bounds.clamp(x0);
  auto [r, jac] = evaluate_jacobian(f, res.x);
  res.evaluations = 1;
  if (!r.allFinite() || !jac.allFinite()) {
    res.message = "non-finite residuals at the initial point";
    res.cost = std::numeric_limits<double>::infinity();
    return res;
  }
  res.cost = r.squaredNorm();
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  double mu = 1e-3;  // relative to diag(J^T J): the damping below is Marquardt-scaled
  double nu = 2.0;

  while (res.evaluations < budget.max_evaluations) {
    const Eigen::VectorXd grad = jac.transpose() * r;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = res.x(i) <= bounds.lower(i) && grad(i) > 0.0;
      const bool at_upper = res.x(i) >= bounds.upper(i) && grad(i) < 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }
    double gmax = 0.0;
    for (auto i : free) gmax = std::max(gmax, std::abs(grad(i)));
    if (free.empty() || gmax == 0.0) {
      res.converged = true;
      res.message = "projected gradient vanished";
      return res;
    }

    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd a(nf, nf);
    Eigen::VectorXd b(nf);
    for (Eigen::Index p = 0; p < nf; ++p) {
      b(p) = -grad(free[p]);
      for (Eigen::Index q = 0; q < nf; ++q) a(p, q) = jtj(free[p], free[q]);
    }
    const double diag_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300);
    Eigen::MatrixXd damped = a;
    for (Eigen::Index p = 0; p < nf; ++p) damped(p, p) += mu * std::max(a(p, p), diag_floor);
    const Eigen::VectorXd step_free = damped.ldlt().solve(b);

    Eigen::VectorXd candidate = res.x;
    for (Eigen::Index p = 0; p < nf; ++p) candidate(free[p]) += step_free(p);
    candidate = bounds.clamp(candidate);
    const Eigen::VectorXd step = candidate - res.x;

    if (!step.allFinite()) {
      res.message = "non-finite step";
      return res;
    }
    if (step.norm() <= 1e-15 * (res.x.norm() + 1e-15)) {
      res.converged = true;
      res.message = "step below resolution";
      return res;
    }

    const Eigen::VectorXd r_new = evaluate_residuals(f, candidate);
    ++res.evaluations;
    const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                              : std::numeric_limits<double>::infinity();
    const double predicted = res.cost - (r + jac * step).squaredNorm();
    const double actual = res.cost - cost_new;

    if (actual > 0.0 && std::isfinite(cost_new)) {
      const double ratio = predicted > 0.0 ? actual / predicted : 1.0;
      const double previous = res.cost;
      res.x = candidate;
      res.cost = cost_new;
      std::tie(r, jac) = evaluate_jacobian(f, res.x);
      ++res.evaluations;
      jtj = jac.transpose() * jac;
      mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
      nu = 2.0;
      if (actual <= budget.tolerance * previous &&
          step.norm() <= 1e-6 * (res.x.norm() + 1e-6)) {
        res.converged = true;
        res.message = "relative decrease below tolerance";
        return res;
      }
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e30 || !std::isfinite(mu)) {
        // No descent direction survives the damping: a minimum up to rounding.
        res.converged = true;
        res.message = "no further decrease possible";
        return res;
      }
    }
  }
  res.message = "evaluation budget exhausted";
  return res;
}

/// Damped Newton on cost = sum_k r_k(x)^2 without bounds. The Hessian is assembled from
/// central differences of the exact gradient, so unlike Gauss-Newton it keeps the curvature
/// carried by nonzero residuals; this matters when the residual Jacobian loses rank at the
/// minimum. Converges when the gradient falls below gradient_tolerance * (1 + cost).
template <typename Residuals>
LeastSquaresResult minimize_newton(Residuals&& f, const Eigen::VectorXd& x0,
                                   const OptimizerBudget& budget,
                                   double gradient_tolerance = 1e-13) {
  const Eigen::Index n = x0.size();
  LeastSquaresResult res;
  res.x = x0;
  auto gradient = [&](const Eigen::VectorXd& x, double* cost) {
    auto [r, jac] = evaluate_jacobian(f, x);
    ++res.evaluations;
    if (cost) *cost = r.squaredNorm();
    return Eigen::VectorXd(2.0 * jac.transpose() * r);
  };
  Eigen::VectorXd g = gradient(res.x, &res.cost);
  if (!std::isfinite(res.cost) || !g.allFinite()) {
    res.message = "non-finite cost at the initial point";
    return res;
  }
  double mu = 0.0;
  while (res.evaluations < budget.max_evaluations) {
    if (g.cwiseAbs().maxCoeff() <= gradient_tolerance * (1.0 + res.cost)) {
      res.converged = true;
      res.message = "gradient below tolerance";
      return res;
    }
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(res.x(i)));
      Eigen::VectorXd xp = res.x;
      Eigen::VectorXd xm = res.x;
      xp(i) += step;
      xm(i) -= step;
      h.col(i) = (gradient(xp, nullptr) - gradient(xm, nullptr)) / (2.0 * step);
    }
    h = 0.5 * (h + h.transpose()).eval();
    const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);

    bool accepted = false;
    while (!accepted && res.evaluations < budget.max_evaluations) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += mu * scale;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) {
        mu = std::max(2.0 * mu, 1e-10);
        if (mu > 1e20) break;
        continue;
      }
      const Eigen::VectorXd step = llt.solve(-g);
      const Eigen::VectorXd candidate = res.x + step;
      double cost_new = std::numeric_limits<double>::infinity();
      const Eigen::VectorXd g_new = gradient(candidate, &cost_new);
      const double predicted = -(g.dot(step) + 0.5 * step.dot(h * step));
      const double actual = res.cost - cost_new;
      if (std::isfinite(cost_new) && g_new.allFinite() && actual > 0.0) {
        const double previous = res.cost;
        res.x = candidate;
        res.cost = cost_new;
        g = g_new;
        accepted = true;
        if (predicted > 0.0 && actual > 0.75 * predicted) mu *= 0.1;
        if (mu < 1e-14) mu = 0.0;
        if (actual <= budget.tolerance * previous) {
          res.converged = true;
          res.message = "relative decrease below tolerance";
          return res;
        }
      } else {
        mu = std::max(10.0 * mu, 1e-8);
        if (mu > 1e20) break;
      }
    }
    if (!accepted) {
      // Not even a tiny damped step decreases the cost: a minimum up to rounding, possibly
      // on a kink of a piecewise-smooth objective.
      res.converged = mu > 1e20;
      res.message = res.converged ? "no further decrease possible" : "evaluation budget exhausted";
      return res;
    }
  }
  res.message = "evaluation budget exhausted";
  return res;
}

/// Nelder-Mead on a scalar cost, with every vertex clamped into the box.
template <typename Cost>
LeastSquaresResult minimize_nelder_mead(Cost&& cost, const Eigen::VectorXd& x0,
                                        const Bounds& bounds, const OptimizerBudget& budget,
                                        double initial_step = 0.05) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  LeastSquaresResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = cost(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  simplex.push_back(bounds.clamp(x0));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = simplex[0];
    const double h = initial_step * std::max(1.0, std::abs(v(i)));
    v(i) += (v(i) + h <= bounds.upper(i)) ? h : -h;
    simplex.push_back(bounds.clamp(v));
  }
  for (const auto& v : simplex) values.push_back(eval(v));

  std::vector<std::size_t> order(simplex.size());
  while (res.evaluations < budget.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::abs(values[worst] - values[best]) <=
        budget.tolerance * (std::abs(values[best]) + 1e-300)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += simplex[order[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = bounds.clamp(centroid + (centroid - simplex[worst]));
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = bounds.clamp(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      const Eigen::VectorXd contracted = bounds.clamp(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = eval(contracted);
      if (fc < values[worst]) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t k = 0; k < simplex.size(); ++k) {
          if (k == best) continue;
          simplex[k] = bounds.clamp(simplex[best] + 0.5 * (simplex[k] - simplex[best]));
          values[k] = eval(simplex[k]);
        }
      }
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  res.cost = *it;
  res.message = res.converged ? "simplex collapsed" : "evaluation budget exhausted";
  return res;
}

}  // namespace spamtomo
