#include "qrect/fockpulse.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qrect/io.hpp"

namespace qrect {

void PulseSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("pulse bandwidth must be positive");
  }
  if (!(delay >= 0.0) || !std::isfinite(delay)) {
    throw std::invalid_argument("pulse delay must be non-negative");
  }
}

Complex PulseSpec::amplitude(double t) const {
  const double s = t - delay;
  if (s < 0.0) return {0.0, 0.0};
  if (shape) return shape(s);
  return {std::sqrt(bandwidth) * std::exp(-0.5 * bandwidth * s), 0.0};
}

HierarchyGenerator hierarchy_generator(const EmitterArray& arr, Direction direction) {
  const JumpPair j = jump_operators(arr);
  return {emitter_liouvillian(arr), direction == Direction::RightGoing ? j.right : j.left};
}

HierarchyState hierarchy_rhs(const HierarchyState& state, Complex xi,
                             const HierarchyGenerator& sys) {
  const Operator& j = sys.source_jump;
  const Operator jd = j.adjoint();
  const Operator rho10 = state.rho10();
  const Complex xic = std::conj(xi);

  HierarchyState d;
  d.rho11 = apply(sys.generator, state.rho11);
  d.rho11 += xi * (state.rho01 * jd - jd * state.rho01) + xic * (j * rho10 - rho10 * j);
  d.rho01 = apply(sys.generator, state.rho01);
  d.rho01 += xic * (j * state.rho00 - state.rho00 * j);
  d.rho00 = apply(sys.generator, state.rho00);
  return d;
}

namespace {

struct FluxOperators {
  Operator jump_right;
  Operator jump_left;
  Operator n_right;  // J_R^dag J_R
  Operator n_left;   // J_L^dag J_L
  Direction direction;
};

// Instantaneous output fluxes in the rho11 sector:
//   dN_out/dt = |xi|^2 + 2 Re(xi^* Tr(J rho10)) + Tr(J^dag J rho11)
// on the mode carrying the photon, and Tr(J^dag J rho11) on the other.
FluxSample instantaneous_flux(double t, const HierarchyState& s, Complex xi,
                              const FluxOperators& ops) {
  const Operator rho10 = s.rho10();
  FluxSample f{t, (ops.n_right * s.rho11).trace().real(), (ops.n_left * s.rho11).trace().real()};
  const bool right = ops.direction == Direction::RightGoing;
  const Operator& j = right ? ops.jump_right : ops.jump_left;
  const double source = std::norm(xi) + 2.0 * (std::conj(xi) * (j * rho10).trace()).real();
  (right ? f.flux_r : f.flux_l) += source;
  return f;
}

HierarchyState unpack(const StateVector& y, Eigen::Index d) {
  const Eigen::Index d2 = d * d;
  return {y.segment(0, d2).reshaped(d, d), y.segment(d2, d2).reshaped(d, d),
          y.segment(2 * d2, d2).reshaped(d, d)};
}

}  // namespace

PulseResult integrate_pulse(const EmitterArray& arr, const PulseSpec& pulse,
                            const DensityMatrix& initial, const PulseOptions& options) {
  arr.validate();
  pulse.validate();
  if (!(options.t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  const auto d = static_cast<Eigen::Index>(arr.dimension());
  if (initial.rows() != d || initial.cols() != d) {
    throw std::invalid_argument("initial state dimension does not match the emitter array");
  }

  const HierarchyGenerator sys = hierarchy_generator(arr, pulse.direction);
  const JumpPair j = jump_operators(arr);
  const FluxOperators ops{j.right, j.left, j.right.adjoint() * j.right,
                          j.left.adjoint() * j.left, pulse.direction};
  const Operator number = excitation_number(arr.size());

  const Eigen::Index d2 = d * d;
  StateVector y = StateVector::Zero(3 * d2 + 2);
  y.segment(0, d2) = vectorize(initial);
  y.segment(2 * d2, d2) = vectorize(initial);

  PulseResult result;
  result.initial_excitation = (number * initial).trace().real();

  bool photon_active = pulse.delay == 0.0;
  auto xi_at = [&](double t) { return photon_active ? pulse.amplitude(t) : Complex{}; };

  auto rhs = [&](double t, const StateVector& state) {
    const Complex xi = xi_at(t);
    const HierarchyState s = unpack(state, d);
    const HierarchyState ds = hierarchy_rhs(s, xi, sys);
    const FluxSample f = instantaneous_flux(t, s, xi, ops);
    StateVector out(state.size());
    out.segment(0, d2) = ds.rho11.reshaped();
    out.segment(d2, d2) = ds.rho01.reshaped();
    out.segment(2 * d2, d2) = ds.rho00.reshaped();
    out(3 * d2) = f.flux_r;
    out(3 * d2 + 1) = f.flux_l;
    return out;
  };

  auto observe = [&](double t, const StateVector& state) {
    const HierarchyState s = unpack(state, d);
    const double tr11 = std::abs(s.rho11.trace() - 1.0);
    const double tr00 = std::abs(s.rho00.trace() - 1.0);
    const double tr01 = std::abs(s.rho01.trace());
    const double herm = std::max(max_hermitian_deviation(s.rho11), max_hermitian_deviation(s.rho00));
    if (tr11 > 1e-5 || tr00 > 1e-5 || tr01 > 1e-5 || herm > 1e-7) {
      std::ostringstream msg;
      msg << "integrate_pulse: hierarchy invariant breached at t=" << t << " (|tr rho11 - 1|="
          << tr11 << ", |tr rho00 - 1|=" << tr00 << ", |tr rho01|=" << tr01
          << ", hermiticity " << herm << ")";
      throw NumericalError(msg.str());
    }
    if (options.record_timeseries) {
      result.flux_timeseries.push_back(instantaneous_flux(t, s, xi_at(t), ops));
    }
  };

  Dopri5Options opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;
  opt.max_step = 0.25;

  auto accumulate = [&](const Dopri5Stats& s) {
    result.stats.accepted += s.accepted;
    result.stats.rejected += s.rejected;
    result.stats.evaluations += s.evaluations;
  };

  double t0 = 0.0;
  if (!photon_active) {
    const double t_front = std::min(pulse.delay, options.t_max);
    accumulate(integrate_dopri5(rhs, y, 0.0, t_front, opt, observe));
    t0 = t_front;
    photon_active = true;
    if (options.record_timeseries && t0 < options.t_max) {
      // the packet front is a discontinuity: sample its right limit too
      result.flux_timeseries.push_back(instantaneous_flux(t0, unpack(y, d), xi_at(t0), ops));
    }
  }
  if (t0 < options.t_max) {
    auto observe_tail = [&, first = true](double t, const StateVector& state) mutable {
      if (first && t0 > 0.0) {
        first = false;
        return;
      }
      first = false;
      observe(t, state);
    };
    accumulate(integrate_dopri5(rhs, y, t0, options.t_max, opt, observe_tail));
  }

  const HierarchyState final_state = unpack(y, d);
  result.n_r_out = y(3 * d2).real();
  result.n_l_out = y(3 * d2 + 1).real();
  result.residual_excitation = (number * final_state.rho11).trace().real();
  result.excitation_warning = result.residual_excitation >= 1e-4;
  return result;
}

DensityMatrix inverted_initial(const EmitterArray& arr, Direction pulse_direction) {
  arr.validate();
  if (arr.size() != 2) {
    throw std::invalid_argument("inverted_initial: the inversion protocol needs exactly 2 emitters");
  }
  return single_excitation_state(pulse_direction == Direction::RightGoing ? 0 : 1, 2);
}

void write_flux_csv(std::ostream& os, const PulseResult& result) {
  os << "t,flux_r,flux_l\n";
  for (const auto& s : result.flux_timeseries) {
    os << format_double(s.t) << ',' << format_double(s.flux_r) << ',' << format_double(s.flux_l)
       << '\n';
  }
}

}  // namespace qrect
