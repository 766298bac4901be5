#pragma once

// Embedded Dormand-Prince 5(4) integrator with elementary step control, for
// Eigen vector states (real or complex).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "qrect/types.hpp"

namespace qrect {

struct Dopri5Options {
  double rtol = 1e-8;
  double atol = 1e-12;
  double initial_step = 1e-3;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-13;
  std::size_t max_steps = 5'000'000;
};

struct Dopri5Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Integrates y' = f(t, y) from t0 to t1 in place. `on_step(t, y)` is called
/// after every accepted step (and once at t0). Throws NumericalError when the
/// step size underflows or the step budget is exhausted.
template <typename State, typename Rhs, typename Observer>
Dopri5Stats integrate_dopri5(Rhs&& f, State& y, double t0, double t1, const Dopri5Options& opt,
                             Observer&& on_step) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b* (fifth minus fourth order weights)
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Dopri5Stats stats;
  double t = t0;
  double h = std::min(opt.initial_step, opt.max_step);
  on_step(t, static_cast<const State&>(y));
  if (!(t1 > t0)) return stats;

  State k1 = f(t, y);
  ++stats.evaluations;
  State k2, k3, k4, k5, k6, k7, ynew, err;

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw NumericalError("dopri5: step budget exhausted before reaching t_end");
    }
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    k2 = f(t + c2 * h, y + h * (a21 * k1));
    k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f(t + h, ynew);
    stats.evaluations += 6;
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const auto scale = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).eval();
    const double enorm = std::sqrt((err.cwiseAbs().array() / scale).square().mean());
    if (!std::isfinite(enorm)) throw NumericalError("dopri5: non-finite error estimate");

    if (enorm <= 1.0) {
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;
      ++stats.accepted;
      on_step(t, static_cast<const State&>(y));
      const double grow = enorm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(enorm, -0.2));
      h = std::min(h * std::max(1.0, grow), opt.max_step);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(enorm, -0.2));
      if (h < opt.min_step) throw NumericalError("dopri5: step size underflow");
    }
  }
  return stats;
}

}  // namespace qrect
