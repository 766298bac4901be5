#pragma once

// Single-photon Fock-state input: the coupled hierarchy (rho11, rho01, rho00)
// driven by a one-photon wave packet xi(t), and the output photon counts it
// produces in each channel direction.

#include <functional>
#include <iosfwd>
#include <vector>

#include "qrect/dopri5.hpp"
#include "qrect/model.hpp"
#include "qrect/types.hpp"

namespace qrect {

struct PulseSpec {
  Direction direction = Direction::RightGoing;
  /// Bandwidth Gamma_p of the exponential packet sqrt(Gamma_p) exp(-Gamma_p t / 2).
  double bandwidth = 2.0;
  /// The packet front arrives at t = delay; xi = 0 before.
  double delay = 0.0;
  /// Optional custom profile xi(t - delay), t - delay >= 0. Must be square-normalized.
  std::function<Complex(double)> shape;

  void validate() const;
  Complex amplitude(double t) const;
};

struct HierarchyState {
  Operator rho11;
  Operator rho01;
  Operator rho00;

  /// rho10 = rho01^dag
  Operator rho10() const { return rho01.adjoint(); }
};

/// The pieces of the hierarchy generator: the emitter Lindbladian and the
/// jump operator of the mode carrying the photon.
struct HierarchyGenerator {
  Liouvillian generator;
  Operator source_jump;
};

HierarchyGenerator hierarchy_generator(const EmitterArray& arr, Direction direction);

/// d rho11 = L rho11 + [rho01, J^dag] xi + [J, rho10] xi^*
/// d rho01 = L rho01 + [J, rho00] xi^*
/// d rho00 = L rho00
HierarchyState hierarchy_rhs(const HierarchyState& state, Complex xi,
                             const HierarchyGenerator& sys);

struct FluxSample {
  double t = 0.0;
  double flux_r = 0.0;
  double flux_l = 0.0;
};

struct PulseOptions {
  double t_max = 40.0;
  double rtol = 1e-8;
  double atol = 1e-12;
  bool record_timeseries = true;
};

struct PulseResult {
  double n_r_out = 0.0;
  double n_l_out = 0.0;
  /// sum_i <sigma_i^dag sigma_i> in rho11 at t_max.
  double residual_excitation = 0.0;
  /// sum_i <sigma_i^dag sigma_i> of the initial state.
  double initial_excitation = 0.0;
  /// Set when residual_excitation >= 1e-4 (t_max too short to drain the array).
  bool excitation_warning = false;
  std::vector<FluxSample> flux_timeseries;
  Dopri5Stats stats;

  /// n_r_out + n_l_out + residual_excitation, which should equal
  /// 1 + initial_excitation.
  double excitation_budget() const { return n_r_out + n_l_out + residual_excitation; }
  double n_r_out_reported() const { return n_r_out < 0.0 ? 0.0 : n_r_out; }
  double n_l_out_reported() const { return n_l_out < 0.0 ? 0.0 : n_l_out; }
};

/// Integrates the hierarchy from rho_ij(0) = initial delta_ij and accumulates
/// the output counts. Throws NumericalError on step-control failure or when a
/// hierarchy invariant drifts beyond ten times its tolerance.
PulseResult integrate_pulse(const EmitterArray& arr, const PulseSpec& pulse,
                            const DensityMatrix& initial, const PulseOptions& options = {});

/// Two-emitter state with the emitter first hit by the pulse excited:
/// emitter 0 for a right-going pulse, emitter 1 for a left-going one.
DensityMatrix inverted_initial(const EmitterArray& arr, Direction pulse_direction);

/// CSV with header t,flux_r,flux_l.
void write_flux_csv(std::ostream& os, const PulseResult& result);

}  // namespace qrect
