#pragma once

// Diode figures of merit and the parameter scans built on them.
//
// A "forward" run pumps (or sends the photon) from the left along the
// right-going mode; the "backward" run is the same experiment on the
// mirrored device, whose right output is the original device's left output
// under pumping from the right.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qrect/cwdrive.hpp"
#include "qrect/fockpulse.hpp"
#include "qrect/types.hpp"

namespace qrect {

struct DiodeMetrics {
  double n_r_out = 0.0;
  double n_l_out_mirror = 0.0;
  double rectification = 0.0;
  double transmission = 0.0;
  double efficiency = 0.0;
  double efficiency_clamped = 0.0;
  /// Both outputs vanished; rectification is reported as 0.
  bool dark = false;
};

/// R = (N_Rout - N_Lout^mirror) / (N_Rout + N_Lout^mirror), T_R = N_Rout / input_norm, D = R T_R.
/// Negative counts (integration noise) are clamped to zero here.
DiodeMetrics diode_metrics(double forward, double backward, double input_norm);

enum CellFlag : std::uint32_t {
  kCellOk = 0,
  kCellSolverFailed = 1u << 0,
  kCellDark = 1u << 1,
  kCellExcitationWarning = 1u << 2,
  kCellConservationViolated = 1u << 3,
};

std::string describe_flags(std::uint32_t flags);

struct SweepCell {
  double delta = 0.0;
  double kl = 0.0;
  DiodeMetrics metrics;
  std::uint32_t flags = kCellOk;
  /// Excitation budget error (single-photon cells only).
  double conservation_error = 0.0;
  std::string error;

  bool failed() const { return (flags & kCellSolverFailed) != 0; }
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Delta_1 x kL grid with Delta_2 = 0. Cells are stored Delta-major.
struct SweepGrid {
  std::vector<double> delta_values;
  std::vector<double> kl_values;
  std::vector<SweepCell> cells;

  static SweepGrid make(std::vector<double> deltas, std::vector<double> kls);
  /// Delta in [-3, 3], kL in [0.05, 2 pi - 0.05], 61 x 61.
  static SweepGrid default_grid();

  SweepCell& at(std::size_t i_delta, std::size_t i_kl) { return cells[i_delta * kl_values.size() + i_kl]; }
  const SweepCell& at(std::size_t i_delta, std::size_t i_kl) const {
    return cells[i_delta * kl_values.size() + i_kl];
  }
  /// Largest efficiency among evaluated cells (-inf if none).
  const SweepCell* best_efficiency() const;
};

struct CwEvaluation {
  DiodeMetrics metrics;
  FluxPair forward;
  FluxPair backward;
};

/// Forward and mirrored steady-state runs; input_norm = |E|^2 + Gamma_n.
CwEvaluation cw_metrics(const EmitterArray& arr, const CwDrive& drive);

void cw_sweep(SweepGrid& grid, const CwDrive& drive, double gamma = 1.0, unsigned workers = 0);

struct PhotonEvaluation {
  DiodeMetrics metrics;
  PulseResult forward;
  PulseResult backward;
};

struct PhotonSweepOptions {
  PulseOptions pulse_options{40.0, 1e-8, 1e-12, false};
  /// Excite the emitter first hit by the photon (input_norm = 2) or start from |gg> (input_norm = 1).
  bool inverted = true;
  double conservation_tol = 1e-3;
};

/// Forward (right-going photon) and mirrored runs on a two-emitter device.
PhotonEvaluation photon_metrics(const EmitterArray& arr, const PulseSpec& pulse,
                                const PhotonSweepOptions& options = {});

void single_photon_sweep(SweepGrid& grid, const PulseSpec& pulse,
                         const PhotonSweepOptions& options = {}, double gamma = 1.0,
                         unsigned workers = 0);

struct OptimizeOptions {
  double amplitude = 0.22360679774997896;  // sqrt(0.05)
  double gamma = 1.0;
  double delta_min = -3.0, delta_max = 3.0;
  double kl_min = 0.05, kl_max = kTwoPi - 0.05;
  std::size_t coarse_delta_points = 61;
  std::size_t coarse_kl_points = 61;
  /// Number of coarse local maxima refined with Nelder-Mead.
  std::size_t starts = 5;
  double tolerance = 1e-4;
  std::size_t max_iterations = 500;
  unsigned workers = 0;
};

struct OptimizeResult {
  double noise_ratio = 0.0;
  double d_opt = 0.0;
  double delta_opt = 0.0;
  double kl_opt = 0.0;
  /// Best coarse-grid value and its cell.
  double d_coarse = 0.0;
  double delta_coarse = 0.0;
  double kl_coarse = 0.0;
  /// False when the winning refinement hit the iteration cap (best-seen returned).
  bool converged = true;
  std::size_t evaluations = 0;
};

/// Efficiency D at (Delta_1, kL) with Delta_2 = 0 and Gamma_n = noise_ratio |E|^2;
/// -inf when the steady state is not unique.
double efficiency_at(double delta, double kl, double noise_ratio, const OptimizeOptions& options);

/// Coarse scan, then Nelder-Mead from the best distinct coarse local maxima.
OptimizeResult optimize_efficiency(double noise_ratio, const OptimizeOptions& options = {});

/// Nelder-Mead from a single given seed (used for restart diagnostics).
OptimizeResult refine_efficiency(double noise_ratio, double delta_seed, double kl_seed,
                                 const OptimizeOptions& options = {});

/// delta,kl,n_r_out,n_l_out_mirror,R,T,D,D_clamped,flags
void write_grid_csv(std::ostream& os, const SweepGrid& grid);

/// noise_ratio,D_opt,delta_opt,kl_opt
void write_optimization_csv(std::ostream& os, const std::vector<OptimizeResult>& curve);

}  // namespace qrect
