#pragma once

// Box-constrained Nelder-Mead minimizer. Trial points are projected onto
// the box, which keeps the method derivative-free and lets optima sit on a
// boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace qrect {

struct NelderMeadOptions {
  double ftol = 1e-4;   // spread of simplex values
  double xtol = 1e-6;   // simplex diameter
  std::size_t max_iterations = 500;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f over [lower, upper]. `step` sets the initial simplex edge per coordinate.
/// Non-finite objective values are treated as +infinity.
template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = start.size();
  NelderMeadResult res;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(project(start));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd p = pts.front();
    p(i) += step(i);
    if (p(i) > upper(i)) p(i) = pts.front()(i) - step(i);
    pts.push_back(project(p));
  }
  for (const auto& p : pts) vals.push_back(eval(p));

  std::vector<std::size_t> order(pts.size());
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= opt.ftol && diameter <= opt.xtol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k != worst) centroid += pts[k];
    }
    centroid /= double(n);

    const Eigen::VectorXd xr = project(centroid + (centroid - pts[worst]));
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc = outside ? project(centroid + 0.5 * (xr - centroid))
                                       : project(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = project(pts[best] + 0.5 * (pts[k] - pts[best]));
      vals[k] = eval(pts[k]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[std::size_t(it - vals.begin())];
  res.value = *it;
  return res;
}

}  // namespace qrect
