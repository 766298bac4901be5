#include "qrect/stochastic.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qrect/dopri5.hpp"
#include "qrect/model.hpp"
#include "qrect/parallel.hpp"

namespace qrect {

void EnsembleSpec::validate(double gamma) const {
  if (n_trajectories == 0) throw std::invalid_argument("n_trajectories must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (dt > 0.01 / gamma * (1.0 + 1e-12)) throw std::invalid_argument("dt must not exceed 0.01/gamma");
  if (!(noise_intensity >= 0.0)) throw std::invalid_argument("noise intensity must be non-negative");
  if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
  if (steps() < 4) throw std::invalid_argument("t_final must span at least 4 steps");
  if (snapshot_time && (*snapshot_time < 0.0 || *snapshot_time > t_final)) {
    throw std::invalid_argument("snapshot_time must lie in [0, t_final]");
  }
}

std::size_t EnsembleSpec::steps() const {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

StochasticGenerator stochastic_generator(const EmitterArray& arr, Complex amplitude) {
  const JumpPair j = jump_operators(arr);
  StochasticGenerator g;
  g.deterministic = emitter_liouvillian(arr) + drive_term(amplitude, j.right);
  g.noise = commutator_superoperator((j.left - j.left.adjoint()).eval());
  g.jr = expectation_functional(j.right);
  g.jl_quadrature = expectation_functional((j.left + j.left.adjoint()).eval());
  g.nr = expectation_functional((j.right.adjoint() * j.right).eval());
  g.nl = expectation_functional((j.left.adjoint() * j.left).eval());
  g.amplitude = amplitude;
  return g;
}

namespace {

Complex vec_trace(const StateVector& v, Eigen::Index d) {
  Complex t{};
  for (Eigen::Index i = 0; i < d; ++i) t += v(i * (d + 1));
  return t;
}

// splitmix64 finalizer: decorrelates (seed, index) pairs into generator seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct MeanAndError {
  double mean = 0.0;
  double error = 0.0;
};

template <typename Get>
MeanAndError sample_stats(const std::vector<TrajectoryOutcome>& outs, Get get) {
  const double n = static_cast<double>(outs.size());
  double sum = 0.0;
  for (const auto& o : outs) sum += get(o);
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& o : outs) ss += (get(o) - mean) * (get(o) - mean);
  const double var = outs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

DensityMatrix sme_step(const DensityMatrix& rho, double dw, double dt,
                       const StochasticGenerator& gen) {
  const Liouvillian m = gen.deterministic * dt + gen.noise * dw;
  const StateVector v = vectorize(rho);
  const StateVector v1 = m * v;
  const StateVector v2 = m * v1;
  DensityMatrix out = unvectorize((v + v1 + 0.5 * v2).eval());
  if (std::abs(out.trace() - rho.trace()) > 1e-6) {
    throw NumericalError("sme_step: trace drift exceeds 1e-6");
  }
  return out;
}

TrajectoryOutcome simulate_trajectory(const DensityMatrix& initial, std::span<const double> increments,
                                      double dt, const StochasticGenerator& gen,
                                      std::optional<std::size_t> snapshot_step) {
  const Eigen::Index d = initial.rows();
  const Eigen::Index n2 = d * d;
  const std::size_t steps = increments.size();
  const std::size_t window_start = steps / 2;
  const std::size_t window_mid = window_start + (steps - window_start) / 2;

  const Liouvillian ldt = gen.deterministic * dt;
  Liouvillian m(n2, n2);
  StateVector v = vectorize(initial);
  StateVector v1(n2), v2(n2), next(n2), mid(n2);
  const Complex tr0 = vec_trace(v, d);
  const double e2 = std::norm(gen.amplitude);
  const Complex ec = std::conj(gen.amplitude);

  TrajectoryOutcome out;
  double acc_r[2] = {0.0, 0.0};
  double acc_l[2] = {0.0, 0.0};
  if (snapshot_step && *snapshot_step == 0) out.snapshot = initial;

  for (std::size_t k = 0; k < steps; ++k) {
    const double dw = increments[k];
    m = ldt;
    if (dw != 0.0) m += dw * gen.noise;
    v1.noalias() = m * v;
    v2.noalias() = m * v1;
    next = v + v1 + 0.5 * v2;
    if (std::abs(vec_trace(next, d) - tr0) > 1e-6) {
      std::ostringstream msg;
      msg << "trajectory trace drift exceeds 1e-6 at step " << k;
      throw NumericalError(msg.str());
    }
    if (k >= window_start) {
      // Stratonovich midpoint evaluation of the flux integrands
      mid = 0.5 * (v + next);
      const Complex jr = (gen.jr * mid).value();
      const double r = (e2 + 2.0 * (ec * jr).real() + (gen.nr * mid).value().real()) * dt;
      const double l = dw * dw + (gen.jl_quadrature * mid).value().real() * dw +
                       (gen.nl * mid).value().real() * dt;
      const int half = k < window_mid ? 0 : 1;
      acc_r[half] += r;
      acc_l[half] += l;
    }
    v.swap(next);
    if (snapshot_step && k + 1 == *snapshot_step) out.snapshot = unvectorize(v);
  }

  const double t_first = static_cast<double>(window_mid - window_start) * dt;
  const double t_second = static_cast<double>(steps - window_mid) * dt;
  out.first_half = {acc_r[0] / t_first, acc_l[0] / t_first};
  out.second_half = {acc_r[1] / t_second, acc_l[1] / t_second};
  out.window = {(acc_r[0] + acc_r[1]) / (t_first + t_second),
                (acc_l[0] + acc_l[1]) / (t_first + t_second)};
  out.final_state = unvectorize(v);
  return out;
}

std::vector<double> wiener_increments(std::uint64_t seed, std::size_t index, std::size_t steps,
                                      double dt, double noise_intensity) {
  std::vector<double> dw(steps, 0.0);
  if (noise_intensity == 0.0) return dw;
  std::mt19937_64 rng(mix_seed(seed, index));
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_intensity * dt));
  for (auto& x : dw) x = normal(rng);
  return dw;
}

EnsembleResult ensemble_output_flux(const EnsembleSpec& spec, const CwDrive& drive,
                                    const EmitterArray& arr,
                                    const std::optional<DensityMatrix>& initial) {
  arr.validate();
  drive.validate();
  spec.validate(arr.gamma);
  if (drive.direction != Direction::RightGoing) {
    throw std::invalid_argument("ensemble_output_flux: drive must be right-going");
  }
  const StochasticGenerator gen = stochastic_generator(arr, drive.amplitude);
  const DensityMatrix rho0 = initial ? *initial : ground_state(arr.size());
  const std::size_t steps = spec.steps();
  std::optional<std::size_t> snap;
  if (spec.snapshot_time) snap = static_cast<std::size_t>(std::llround(*spec.snapshot_time / spec.dt));

  std::vector<TrajectoryOutcome> outs(spec.n_trajectories);
  parallel_for(spec.n_trajectories, spec.workers, [&](std::size_t i) {
    const auto dw = wiener_increments(spec.seed, i, steps, spec.dt, spec.noise_intensity);
    outs[i] = simulate_trajectory(rho0, dw, spec.dt, gen, snap);
  });

  EnsembleResult res;
  res.spec = spec;
  auto pair_stats = [&](auto get_r, auto get_l, FluxPair& mean, FluxPair& err) {
    const auto r = sample_stats(outs, get_r);
    const auto l = sample_stats(outs, get_l);
    mean = {r.mean, l.mean};
    err = {r.error, l.error};
  };
  pair_stats([](const auto& o) { return o.window.phi_r_out; },
             [](const auto& o) { return o.window.phi_l_out; }, res.mean, res.standard_error);
  pair_stats([](const auto& o) { return o.first_half.phi_r_out; },
             [](const auto& o) { return o.first_half.phi_l_out; }, res.first_half_mean,
             res.first_half_error);
  pair_stats([](const auto& o) { return o.second_half.phi_r_out; },
             [](const auto& o) { return o.second_half.phi_l_out; }, res.second_half_mean,
             res.second_half_error);
  auto drifted = [](double a, double ea, double b, double eb) {
    return std::abs(a - b) > 3.0 * std::hypot(ea, eb);
  };
  res.nonstationary =
      drifted(res.first_half_mean.phi_r_out, res.first_half_error.phi_r_out,
              res.second_half_mean.phi_r_out, res.second_half_error.phi_r_out) ||
      drifted(res.first_half_mean.phi_l_out, res.first_half_error.phi_l_out,
              res.second_half_mean.phi_l_out, res.second_half_error.phi_l_out);

  const double inv_n = 1.0 / static_cast<double>(outs.size());
  res.mean_final = DensityMatrix::Zero(rho0.rows(), rho0.cols());
  for (const auto& o : outs) res.mean_final += o.final_state;
  res.mean_final *= inv_n;
  if (snap) {
    DensityMatrix s = DensityMatrix::Zero(rho0.rows(), rho0.cols());
    for (const auto& o : outs) s += *o.snapshot;
    res.mean_snapshot = s * inv_n;
  }
  return res;
}

DensityMatrix evolve_master_equation(const Liouvillian& generator, const DensityMatrix& initial,
                                     double t, double rtol) {
  StateVector y = vectorize(initial);
  Dopri5Options opt;
  opt.rtol = rtol;
  opt.atol = rtol * 1e-3;
  integrate_dopri5([&](double, const StateVector& v) -> StateVector { return generator * v; }, y,
                   0.0, t, opt, [](double, const StateVector&) {});
  return unvectorize(y);
}

FluxPair window_averaged_fluxes(const EmitterArray& arr, const CwDrive& drive,
                                const DensityMatrix& initial, double t0, double t1, double rtol) {
  if (!(t1 > t0) || t0 < 0.0) throw std::invalid_argument("window_averaged_fluxes: need 0 <= t0 < t1");
  const Liouvillian l = cw_generator(arr, drive);
  const DensityMatrix start = t0 > 0.0 ? evolve_master_equation(l, initial, t0, rtol) : initial;

  // Augmented system (rho, integral of rho): both halves evolve together.
  const Eigen::Index n2 = l.rows();
  StateVector y = StateVector::Zero(2 * n2);
  y.head(n2) = vectorize(start);
  Dopri5Options opt;
  opt.rtol = rtol;
  opt.atol = rtol * 1e-3;
  integrate_dopri5(
      [&](double, const StateVector& v) -> StateVector {
        StateVector dv(2 * n2);
        dv.head(n2).noalias() = l * v.head(n2);
        dv.tail(n2) = v.head(n2);
        return dv;
      },
      y, t0, t1, opt, [](double, const StateVector&) {});
  const DensityMatrix mean = unvectorize((y.tail(n2) / (t1 - t0)).eval());
  const JumpPair j = jump_operators(arr);
  return output_fluxes(mean, drive, j.right, j.left);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const DensityMatrix diff = a - b;
  const DensityMatrix h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

nlohmann::json to_json(const EnsembleResult& r) {
  auto pair = [](const FluxPair& f) {
    return nlohmann::json{{"phi_r_out", f.phi_r_out}, {"phi_l_out", f.phi_l_out}};
  };
  return {{"n_trajectories", r.spec.n_trajectories},
          {"dt", r.spec.dt},
          {"seed", r.spec.seed},
          {"noise_intensity", r.spec.noise_intensity},
          {"t_final", r.spec.t_final},
          {"means", pair(r.mean)},
          {"standard_errors", pair(r.standard_error)},
          {"first_half_means", pair(r.first_half_mean)},
          {"second_half_means", pair(r.second_half_mean)},
          {"nonstationary", r.nonstationary}};
}

}  // namespace qrect
