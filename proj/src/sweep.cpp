#include "qrect/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qrect/io.hpp"
#include "qrect/nelder_mead.hpp"
#include "qrect/parallel.hpp"

namespace qrect {

DiodeMetrics diode_metrics(double forward, double backward, double input_norm) {
  if (!(input_norm > 0.0)) throw std::invalid_argument("diode_metrics: input_norm must be positive");
  DiodeMetrics m;
  m.n_r_out = std::max(forward, 0.0);
  m.n_l_out_mirror = std::max(backward, 0.0);
  const double sum = m.n_r_out + m.n_l_out_mirror;
  if (sum > 0.0) {
    m.rectification = std::clamp((m.n_r_out - m.n_l_out_mirror) / sum, -1.0, 1.0);
  } else {
    m.dark = true;
  }
  m.transmission = m.n_r_out / input_norm;
  m.efficiency = m.rectification * m.transmission;
  m.efficiency_clamped = std::max(m.efficiency, 0.0);
  return m;
}

std::string describe_flags(std::uint32_t flags) {
  if (flags == kCellOk) return "ok";
  std::string s;
  auto add = [&](std::uint32_t bit, const char* name) {
    if (flags & bit) {
      if (!s.empty()) s += '|';
      s += name;
    }
  };
  add(kCellSolverFailed, "solver_failed");
  add(kCellDark, "dark");
  add(kCellExcitationWarning, "residual_excitation");
  add(kCellConservationViolated, "conservation");
  return s;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * double(i);
  v.back() = hi;
  return v;
}

SweepGrid SweepGrid::make(std::vector<double> deltas, std::vector<double> kls) {
  SweepGrid g{std::move(deltas), std::move(kls), {}};
  g.cells.resize(g.delta_values.size() * g.kl_values.size());
  for (std::size_t i = 0; i < g.delta_values.size(); ++i) {
    for (std::size_t j = 0; j < g.kl_values.size(); ++j) {
      g.at(i, j).delta = g.delta_values[i];
      g.at(i, j).kl = g.kl_values[j];
    }
  }
  return g;
}

SweepGrid SweepGrid::default_grid() {
  return make(linspace(-3.0, 3.0, 61), linspace(0.05, kTwoPi - 0.05, 61));
}

const SweepCell* SweepGrid::best_efficiency() const {
  const SweepCell* best = nullptr;
  for (const auto& c : cells) {
    if (c.failed()) continue;
    if (!best || c.metrics.efficiency > best->metrics.efficiency) best = &c;
  }
  return best;
}

CwEvaluation cw_metrics(const EmitterArray& arr, const CwDrive& drive) {
  CwDrive forward_drive = drive;
  forward_drive.direction = Direction::RightGoing;
  CwEvaluation e;
  e.forward = solve_cw(arr, forward_drive).fluxes;
  e.backward = solve_cw(arr.mirrored(), forward_drive).fluxes;
  e.metrics = diode_metrics(e.forward.phi_r_out, e.backward.phi_r_out, forward_drive.input_flux());
  return e;
}

void cw_sweep(SweepGrid& grid, const CwDrive& drive, double gamma, unsigned workers) {
  drive.validate();
  parallel_for(grid.cells.size(), workers, [&](std::size_t k) {
    SweepCell& cell = grid.cells[k];
    cell.flags = kCellOk;
    cell.error.clear();
    try {
      cell.metrics = cw_metrics(EmitterArray::pair(cell.kl, cell.delta, 0.0, gamma), drive).metrics;
      if (cell.metrics.dark) cell.flags |= kCellDark;
    } catch (const NumericalError& e) {
      cell.metrics = {};
      cell.flags |= kCellSolverFailed;
      cell.error = e.what();
    }
  });
}

PhotonEvaluation photon_metrics(const EmitterArray& arr, const PulseSpec& pulse,
                                const PhotonSweepOptions& options) {
  PulseSpec forward_pulse = pulse;
  forward_pulse.direction = Direction::RightGoing;
  const EmitterArray mirror = arr.mirrored();
  const DensityMatrix init_f =
      options.inverted ? inverted_initial(arr, Direction::RightGoing) : ground_state(arr.size());
  const DensityMatrix init_b =
      options.inverted ? inverted_initial(mirror, Direction::RightGoing) : ground_state(arr.size());

  PhotonEvaluation e;
  e.forward = integrate_pulse(arr, forward_pulse, init_f, options.pulse_options);
  e.backward = integrate_pulse(mirror, forward_pulse, init_b, options.pulse_options);
  const double input_norm = 1.0 + e.forward.initial_excitation;
  e.metrics = diode_metrics(e.forward.n_r_out, e.backward.n_r_out, input_norm);
  return e;
}

void single_photon_sweep(SweepGrid& grid, const PulseSpec& pulse, const PhotonSweepOptions& options,
                         double gamma, unsigned workers) {
  pulse.validate();
  parallel_for(grid.cells.size(), workers, [&](std::size_t k) {
    SweepCell& cell = grid.cells[k];
    cell.flags = kCellOk;
    cell.error.clear();
    try {
      const PhotonEvaluation e =
          photon_metrics(EmitterArray::pair(cell.kl, cell.delta, 0.0, gamma), pulse, options);
      cell.metrics = e.metrics;
      if (e.metrics.dark) cell.flags |= kCellDark;
      if (e.forward.excitation_warning || e.backward.excitation_warning) {
        cell.flags |= kCellExcitationWarning;
      }
      const double expected = 1.0 + e.forward.initial_excitation;
      cell.conservation_error = std::max(std::abs(e.forward.excitation_budget() - expected),
                                         std::abs(e.backward.excitation_budget() - expected));
      if (cell.conservation_error > options.conservation_tol) cell.flags |= kCellConservationViolated;
    } catch (const NumericalError& e) {
      cell.metrics = {};
      cell.flags |= kCellSolverFailed;
      cell.error = e.what();
    }
  });
}

double efficiency_at(double delta, double kl, double noise_ratio, const OptimizeOptions& options) {
  CwDrive drive;
  drive.amplitude = options.amplitude;
  drive.noise_intensity = noise_ratio * options.amplitude * options.amplitude;
  try {
    return cw_metrics(EmitterArray::pair(kl, delta, 0.0, options.gamma), drive).metrics.efficiency;
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

namespace {

struct Seed {
  double value;
  double delta;
  double kl;
};

OptimizeResult refine(double noise_ratio, const Seed& seed, const OptimizeOptions& options,
                      double delta_step, double kl_step) {
  Eigen::VectorXd start(2), step(2), lo(2), hi(2);
  start << seed.delta, seed.kl;
  step << delta_step, kl_step;
  lo << options.delta_min, options.kl_min;
  hi << options.delta_max, options.kl_max;
  NelderMeadOptions nm;
  nm.ftol = options.tolerance;
  nm.max_iterations = options.max_iterations;
  const auto res = nelder_mead(
      [&](const Eigen::VectorXd& x) { return -efficiency_at(x(0), x(1), noise_ratio, options); },
      start, step, lo, hi, nm);
  OptimizeResult out;
  out.noise_ratio = noise_ratio;
  out.d_coarse = seed.value;
  out.delta_coarse = seed.delta;
  out.kl_coarse = seed.kl;
  // the refinement never returns a point worse than its own seed
  if (-res.value >= seed.value) {
    out.d_opt = -res.value;
    out.delta_opt = res.x(0);
    out.kl_opt = res.x(1);
  } else {
    out.d_opt = seed.value;
    out.delta_opt = seed.delta;
    out.kl_opt = seed.kl;
  }
  out.converged = res.converged;
  out.evaluations = res.evaluations;
  return out;
}

double grid_step(double lo, double hi, std::size_t n) {
  return n > 1 ? (hi - lo) / double(n - 1) : 0.1 * (hi - lo);
}

}  // namespace

OptimizeResult refine_efficiency(double noise_ratio, double delta_seed, double kl_seed,
                                 const OptimizeOptions& options) {
  if (!(noise_ratio >= 0.0)) throw std::invalid_argument("noise_ratio must be non-negative");
  const Seed seed{efficiency_at(delta_seed, kl_seed, noise_ratio, options), delta_seed, kl_seed};
  return refine(noise_ratio, seed, options,
                grid_step(options.delta_min, options.delta_max, options.coarse_delta_points),
                grid_step(options.kl_min, options.kl_max, options.coarse_kl_points));
}

OptimizeResult optimize_efficiency(double noise_ratio, const OptimizeOptions& options) {
  if (!(noise_ratio >= 0.0)) throw std::invalid_argument("noise_ratio must be non-negative");
  if (options.coarse_delta_points == 0 || options.coarse_kl_points == 0 || options.starts == 0) {
    throw std::invalid_argument("optimizer grid sizes and start count must be positive");
  }
  const auto deltas = linspace(options.delta_min, options.delta_max, options.coarse_delta_points);
  const auto kls = linspace(options.kl_min, options.kl_max, options.coarse_kl_points);
  const std::size_t nd = deltas.size(), nk = kls.size();

  std::vector<double> values(nd * nk);
  parallel_for(values.size(), options.workers, [&](std::size_t k) {
    values[k] = efficiency_at(deltas[k / nk], kls[k % nk], noise_ratio, options);
  });

  // Seeds: coarse local maxima (8-neighbourhood), best first; ties keep grid order.
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t j = 0; j < nk; ++j) {
      const double v = values[i * nk + j];
      if (!std::isfinite(v)) continue;
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const long ii = long(i) + di, jj = long(j) + dj;
          if (ii < 0 || jj < 0 || ii >= long(nd) || jj >= long(nk)) continue;
          if (values[std::size_t(ii) * nk + std::size_t(jj)] > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) maxima.push_back(i * nk + j);
    }
  }
  if (maxima.empty()) throw NumericalError("optimize_efficiency: every coarse cell failed");
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](auto a, auto b) { return values[a] > values[b]; });
  maxima.resize(std::min(maxima.size(), options.starts));

  const double dstep = grid_step(options.delta_min, options.delta_max, nd);
  const double kstep = grid_step(options.kl_min, options.kl_max, nk);
  std::vector<OptimizeResult> runs(maxima.size());
  parallel_for(maxima.size(), options.workers, [&](std::size_t s) {
    const std::size_t k = maxima[s];
    runs[s] = refine(noise_ratio, Seed{values[k], deltas[k / nk], kls[k % nk]}, options, dstep, kstep);
  });

  std::size_t best = 0;
  std::size_t evaluations = values.size();
  for (std::size_t s = 0; s < runs.size(); ++s) {
    evaluations += runs[s].evaluations;
    if (runs[s].d_opt > runs[best].d_opt) best = s;
  }
  OptimizeResult out = runs[best];
  out.d_coarse = values[maxima.front()];
  out.delta_coarse = deltas[maxima.front() / nk];
  out.kl_coarse = kls[maxima.front() % nk];
  out.evaluations = evaluations;
  return out;
}

void write_grid_csv(std::ostream& os, const SweepGrid& grid) {
  os << "delta,kl,n_r_out,n_l_out_mirror,R,T,D,D_clamped,flags\n";
  for (const auto& c : grid.cells) {
    const auto& m = c.metrics;
    os << format_double(c.delta) << ',' << format_double(c.kl) << ',' << format_double(m.n_r_out)
       << ',' << format_double(m.n_l_out_mirror) << ',' << format_double(m.rectification) << ','
       << format_double(m.transmission) << ',' << format_double(m.efficiency) << ','
       << format_double(m.efficiency_clamped) << ',' << describe_flags(c.flags) << '\n';
  }
}

void write_optimization_csv(std::ostream& os, const std::vector<OptimizeResult>& curve) {
  os << "noise_ratio,D_opt,delta_opt,kl_opt\n";
  for (const auto& r : curve) {
    os << format_double(r.noise_ratio) << ',' << format_double(r.d_opt) << ','
       << format_double(r.delta_opt) << ',' << format_double(r.kl_opt) << '\n';
  }
}

}  // namespace qrect
