#pragma once

// Continuous-wave coherent drive on the right-going mode, optionally with a
// classical white-noise input on the counter-propagating (left-going) mode,
// whose noise average is a dephasing channel in X_L = i(J_L - J_L^dag).

#include <optional>
#include <string>

#include "qrect/model.hpp"
#include "qrect/types.hpp"

namespace qrect {

struct CwDrive {
  /// Coherent amplitude E in units of sqrt(gamma); |E|^2 is the input photon flux.
  Complex amplitude{0.0, 0.0};
  Direction direction = Direction::RightGoing;
  /// Noise intensity Gamma_n >= 0 on the mode opposite to `direction`.
  double noise_intensity = 0.0;

  void validate() const;
  double input_flux() const { return std::norm(amplitude) + noise_intensity; }
};

/// Mean output photon fluxes of the right- and left-going channel modes.
struct FluxPair {
  double phi_r_out = 0.0;
  double phi_l_out = 0.0;

  double total() const { return phi_r_out + phi_l_out; }
};

/// H_d = i(E^* J - E J^dag).
Operator drive_hamiltonian(Complex amplitude, const Operator& jump);

/// rho -> [E^* J - E J^dag, rho], i.e. -i[H_d, rho].
Liouvillian drive_term(Complex amplitude, const Operator& jump);

/// X_L = i(J_L - J_L^dag).
Operator noise_quadrature(const Operator& jump_left);

/// rho -> -(Gamma_n / 2)(X^2 rho + rho X^2 - 2 X rho X). Throws on Gamma_n < 0.
Liouvillian dephasing_term(double noise_intensity, const Operator& jump_left);

struct SteadyState {
  DensityMatrix rho;
  /// Second-smallest over smallest singular value of the generator.
  double gap_ratio = 0.0;
  /// ||L vec(rho)|| / ||L||.
  double relative_residual = 0.0;
};

/// Kernel uniqueness threshold on sigma_{n-1} / sigma_n.
inline constexpr double kNullSpaceGapRatio = 1e6;

/// Normalized kernel of a trace-preserving generator from the right singular
/// vector of its smallest singular value. Throws NullSpaceDimensionError when
/// the kernel is not one-dimensional.
SteadyState solve_steady_state(const Liouvillian& generator);

inline DensityMatrix steady_state(const Liouvillian& generator) {
  return solve_steady_state(generator).rho;
}

/// Returns an error description when `rho` violates the density matrix
/// invariants (Hermitian 1e-10, unit trace 1e-10, min eigenvalue >= -1e-8).
std::optional<std::string> density_matrix_violation(const DensityMatrix& rho,
                                                    double hermitian_tol = 1e-10,
                                                    double trace_tol = 1e-10,
                                                    double eigen_floor = -1e-8);

/// Gamma_n Tr((J^dag J - J J^dag) rho): Stratonovich-to-Ito correction of
/// the correlated noise/emitter term in the left output flux.
double noise_cross_term(const DensityMatrix& rho, double noise_intensity,
                        const Operator& jump_left);

/// Steady-state output fluxes for a right-going drive:
///   phi_r = |E|^2 + 2 Re(E^* <J_R>) + <J_R^dag J_R>
///   phi_l = <J_L^dag J_L> + Gamma_n + noise_cross_term
FluxPair output_fluxes(const DensityMatrix& rho, const CwDrive& drive, const Operator& jump_right,
                       const Operator& jump_left);

/// Full generator for `arr` pumped on the right-going mode (noise on the left-going mode).
Liouvillian cw_generator(const EmitterArray& arr, const CwDrive& drive);

struct CwSolution {
  FluxPair fluxes;
  SteadyState steady;
};

/// Steady state and fluxes, in the frame of `arr`. A left-going drive is
/// evaluated on the mirrored device and mapped back.
CwSolution solve_cw(const EmitterArray& arr, const CwDrive& drive);

}  // namespace qrect
