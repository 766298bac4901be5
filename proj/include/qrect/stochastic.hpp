#pragma once

// Trajectory-level treatment of a classical white-noise input on the
// left-going mode. Each trajectory integrates the conditional equation
//
//   d rho = L_det[rho] dt + [J_L - J_L^dag, rho] o dW,   dW ~ N(0, Gamma_n dt)
//
// in Stratonovich form with a Heun predictor-corrector, so that the
// ensemble mean converges to the dephasing master equation without any
// hand-inserted Ito correction.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qrect/cwdrive.hpp"
#include "qrect/types.hpp"

namespace qrect {

struct EnsembleSpec {
  std::size_t n_trajectories = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  double noise_intensity = 0.0;
  /// Run length; fluxes are time-averaged over [t_final / 2, t_final].
  double t_final = 10.0;
  /// When set, the ensemble-mean state at this time is also returned.
  std::optional<double> snapshot_time;
  unsigned workers = 0;

  /// Throws std::invalid_argument. dt must not exceed 0.01 / gamma.
  void validate(double gamma = 1.0) const;
  std::size_t steps() const;
};

struct StochasticGenerator {
  /// Noise-free generator: emitter Lindbladian plus the coherent drive.
  Liouvillian deterministic;
  /// rho -> [J_L - J_L^dag, rho]
  Liouvillian noise;
  /// Row functionals for the flux estimators.
  Eigen::Matrix<Complex, 1, Eigen::Dynamic> jr, jl_quadrature, nr, nl;
  Complex amplitude{};
};

/// Generator pieces for `arr` with the coherent drive on the right-going mode.
StochasticGenerator stochastic_generator(const EmitterArray& arr, Complex amplitude);

/// One Stratonovich-Heun step. Throws NumericalError when the trace drifts by more than 1e-6.
DensityMatrix sme_step(const DensityMatrix& rho, double dw, double dt,
                       const StochasticGenerator& gen);

struct TrajectoryOutcome {
  /// Time-averaged output fluxes over the averaging window and its two halves.
  FluxPair window;
  FluxPair first_half;
  FluxPair second_half;
  std::optional<DensityMatrix> snapshot;
  DensityMatrix final_state;
};

/// Integrates one trajectory driven by the given increment sequence.
TrajectoryOutcome simulate_trajectory(const DensityMatrix& initial, std::span<const double> increments,
                                      double dt, const StochasticGenerator& gen,
                                      std::optional<std::size_t> snapshot_step = std::nullopt);

/// Increments of trajectory `index` under `seed`; independent of evaluation order.
std::vector<double> wiener_increments(std::uint64_t seed, std::size_t index, std::size_t steps,
                                      double dt, double noise_intensity);

struct EnsembleResult {
  FluxPair mean;
  FluxPair standard_error;
  FluxPair first_half_mean, second_half_mean;
  FluxPair first_half_error, second_half_error;
  /// First and second halves of the averaging window differ by > 3 standard errors.
  bool nonstationary = false;
  std::optional<DensityMatrix> mean_snapshot;
  DensityMatrix mean_final;
  EnsembleSpec spec;
};

/// Monte-Carlo output fluxes for a cw drive on the right-going mode with the
/// ensemble's noise on the left-going mode, starting from `initial`
/// (|g...g> when omitted).
EnsembleResult ensemble_output_flux(const EnsembleSpec& spec, const CwDrive& drive,
                                    const EmitterArray& arr,
                                    const std::optional<DensityMatrix>& initial = std::nullopt);

/// Deterministic noise-averaged evolution of `initial` to time t (reference for the ensemble mean).
DensityMatrix evolve_master_equation(const Liouvillian& generator, const DensityMatrix& initial,
                                     double t, double rtol = 1e-10);

/// Master-equation output fluxes averaged over [t0, t1] starting from
/// `initial` at t = 0: the deterministic counterpart of the ensemble window.
FluxPair window_averaged_fluxes(const EmitterArray& arr, const CwDrive& drive,
                                const DensityMatrix& initial, double t0, double t1,
                                double rtol = 1e-10);

/// (1/2) || a - b ||_1 for Hermitian a, b.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

nlohmann::json to_json(const EnsembleResult& result);

}  // namespace qrect
