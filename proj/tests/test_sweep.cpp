#include <doctest.h>

#include <sstream>

#include "qrect/io.hpp"
#include "qrect/nelder_mead.hpp"
#include "qrect/sweep.hpp"

using namespace qrect;

namespace {

CwDrive weak_drive(double noise = 0.0) {
  CwDrive d;
  d.amplitude = std::sqrt(0.05);
  d.noise_intensity = noise;
  return d;
}

}  // namespace

TEST_CASE("diode metrics") {
  const DiodeMetrics m = diode_metrics(0.6, 0.2, 2.0);
  CHECK(m.rectification == doctest::Approx(0.5));
  CHECK(m.transmission == doctest::Approx(0.3));
  CHECK(m.efficiency == doctest::Approx(0.15));
  CHECK(m.efficiency_clamped == doctest::Approx(0.15));

  const DiodeMetrics rev = diode_metrics(0.2, 0.6, 1.0);
  CHECK(rev.efficiency < 0.0);
  CHECK(rev.efficiency_clamped == 0.0);

  const DiodeMetrics dark = diode_metrics(0.0, -1e-15, 1.0);
  CHECK(dark.dark);
  CHECK(dark.rectification == 0.0);
  CHECK(dark.n_l_out_mirror == 0.0);

  const DiodeMetrics one_sided = diode_metrics(0.4, -1e-12, 1.0);
  CHECK(one_sided.rectification == 1.0);
}

TEST_CASE("flag descriptions") {
  CHECK(describe_flags(kCellOk) == "ok");
  CHECK(describe_flags(kCellSolverFailed) == "solver_failed");
  CHECK(describe_flags(kCellDark | kCellConservationViolated) == "dark|conservation");
}

TEST_CASE("grid construction") {
  const auto v = linspace(-3.0, 3.0, 61);
  CHECK(v.size() == 61);
  CHECK(v.front() == -3.0);
  CHECK(v.back() == 3.0);
  CHECK(std::abs(v[30]) < 1e-15);
  CHECK(linspace(1.0, 2.0, 1) == std::vector<double>{1.0});

  const SweepGrid g = SweepGrid::default_grid();
  CHECK(g.cells.size() == 61 * 61);
  CHECK(g.kl_values.front() == 0.05);
  CHECK(g.kl_values.back() == doctest::Approx(kTwoPi - 0.05));
  CHECK(g.at(2, 5).delta == g.delta_values[2]);
  CHECK(g.at(2, 5).kl == g.kl_values[5]);
}

TEST_CASE("identical emitters do not rectify") {
  for (double kl : {0.2, 1.0, 2.5, 4.4, 6.0}) {
    const CwEvaluation ev = cw_metrics(EmitterArray::pair(kl, 0.0, 0.0), weak_drive());
    CHECK(ev.metrics.rectification == 0.0);
    const PhotonEvaluation pe = photon_metrics(EmitterArray::pair(kl, 0.0, 0.0), PulseSpec{});
    CHECK(pe.metrics.rectification == 0.0);
  }
}

TEST_CASE("complex conjugation of the whole problem leaves the metrics unchanged") {
  // (Delta, kL) -> (-Delta, 2 pi - kL) maps the generator onto its complex
  // conjugate, so every real observable is unchanged.
  for (double delta : {-1.3, 0.1, 2.0}) {
    for (double kl : {0.4, 1.9, 3.0}) {
      const auto a = cw_metrics(EmitterArray::pair(kl, delta, 0.0), weak_drive());
      const auto b = cw_metrics(EmitterArray::pair(kTwoPi - kl, -delta, 0.0), weak_drive());
      CHECK(a.metrics.efficiency == doctest::Approx(b.metrics.efficiency).epsilon(1e-9));
      CHECK(a.metrics.rectification == doctest::Approx(b.metrics.rectification).epsilon(1e-9));
    }
  }
}

TEST_CASE("without noise only the phase difference matters") {
  const auto a = cw_metrics(EmitterArray::pair(1.7, 0.6, 0.0), weak_drive());
  const EmitterArray shifted{1.0, {2.0, 3.7}, {0.6, 0.0}};
  const auto b = cw_metrics(shifted, weak_drive());
  CHECK(a.metrics.efficiency == doctest::Approx(b.metrics.efficiency).epsilon(1e-10));
}

TEST_CASE("the noise quadrature pins the absolute placement") {
  // Translating the array by phi_0 rotates the left-going noise quadrature by
  // 2 phi_0 relative to the right-going drive; a shift by pi / 2 maps X_L to
  // -X_L and leaves the dephasing channel unchanged.
  const auto a = cw_metrics(EmitterArray::pair(1.7, 0.6, 0.0), weak_drive(0.02));
  const auto half_turn = cw_metrics(EmitterArray{1.0, {kPi / 2, kPi / 2 + 1.7}, {0.6, 0.0}}, weak_drive(0.02));
  const auto quarter = cw_metrics(EmitterArray{1.0, {kPi / 4, kPi / 4 + 1.7}, {0.6, 0.0}}, weak_drive(0.02));
  CHECK(a.metrics.efficiency == doctest::Approx(half_turn.metrics.efficiency).epsilon(1e-9));
  CHECK(std::abs(a.metrics.efficiency - quarter.metrics.efficiency) > 1e-6);
}

TEST_CASE("cw metrics are bounded and conservative") {
  const auto ev = cw_metrics(EmitterArray::pair(0.05, 0.1, 0.0), weak_drive());
  CHECK(ev.metrics.efficiency > 0.6);
  CHECK(ev.metrics.efficiency < 0.7);
  CHECK(ev.forward.total() == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(ev.backward.total() == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(std::abs(ev.metrics.rectification) <= 1.0);
}

TEST_CASE("cw sweep flags the degenerate cell and is worker-independent") {
  SweepGrid a = SweepGrid::make(linspace(-1.0, 1.0, 5), {1.0, kPi, 5.0});
  SweepGrid b = a;
  cw_sweep(a, weak_drive(), 1.0, 1);
  cw_sweep(b, weak_drive(), 1.0, 3);
  const SweepCell& bad = a.at(2, 1);
  CHECK(bad.delta == 0.0);
  CHECK(bad.failed());
  CHECK_FALSE(bad.error.empty());
  std::ostringstream sa, sb;
  write_grid_csv(sa, a);
  write_grid_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("delta,kl,n_r_out,n_l_out_mirror,R,T,D,D_clamped,flags\n", 0) == 0);
  CHECK(sa.str().find("solver_failed") != std::string::npos);
  const SweepCell* best = a.best_efficiency();
  REQUIRE(best != nullptr);
  CHECK_FALSE(best->failed());
}

TEST_CASE("single-photon sweep conserves excitations in both protocols") {
  SweepGrid g = SweepGrid::make({-1.0, 0.0, 2.0}, {1.0, kPi, 3.66});
  for (bool inverted : {false, true}) {
    PhotonSweepOptions o;
    o.inverted = inverted;
    single_photon_sweep(g, PulseSpec{}, o, 1.0, 2);
    for (const auto& c : g.cells) {
      CHECK_FALSE(c.failed());
      CHECK(c.conservation_error < 1e-3);
      CHECK((c.flags & kCellConservationViolated) == 0);
    }
  }
}

TEST_CASE("csv numbers round-trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, 6.283185307179586, -2.5e-300, 1e300, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("Nelder-Mead finds interior and boundary minima") {
  Eigen::VectorXd lo(2), hi(2), start(2), step(2);
  lo << -2, -2;
  hi << 2, 2;
  start << 1.5, -1.5;
  step << 0.5, 0.5;
  NelderMeadOptions o;
  o.ftol = 1e-12;
  o.xtol = 1e-8;
  o.max_iterations = 2000;
  auto rosen = [](const Eigen::VectorXd& x) {
    return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2);
  };
  const auto r = nelder_mead(rosen, start, step, lo, hi, o);
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-4));

  // Unconstrained minimum at (3, 0) lies outside the box.
  auto shifted = [](const Eigen::VectorXd& x) { return std::pow(x(0) - 3, 2) + x(1) * x(1); };
  const auto b = nelder_mead(shifted, start, step, lo, hi, o);
  CHECK(b.x(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(b.x(1)) < 1e-4);

  // Non-finite values repel the simplex.
  auto walled = [](const Eigen::VectorXd& x) {
    return x(0) < 0 ? std::numeric_limits<double>::quiet_NaN() : std::pow(x(0) - 1, 2) + x(1) * x(1);
  };
  start << 0.5, 0.5;
  const auto w = nelder_mead(walled, start, step, lo, hi, o);
  CHECK(w.x(0) == doctest::Approx(1.0).epsilon(1e-4));

  NelderMeadOptions capped = o;
  capped.max_iterations = 3;
  CHECK_FALSE(nelder_mead(rosen, start, step, lo, hi, capped).converged);
}

TEST_CASE("refinement never loses to the coarse scan") {
  OptimizeOptions o;
  o.coarse_delta_points = 9;
  o.coarse_kl_points = 9;
  o.starts = 2;
  o.workers = 1;
  for (double ratio : {0.0, 1.0}) {
    const OptimizeResult r = optimize_efficiency(ratio, o);
    CHECK(r.d_opt >= r.d_coarse);
    CHECK(r.delta_opt >= o.delta_min);
    CHECK(r.delta_opt <= o.delta_max);
    CHECK(r.kl_opt >= o.kl_min);
    CHECK(r.kl_opt <= o.kl_max);
    CHECK(efficiency_at(r.delta_opt, r.kl_opt, ratio, o) == doctest::Approx(r.d_opt));
  }
}

TEST_CASE("efficiency objective treats degenerate points as infeasible") {
  OptimizeOptions o;
  CHECK(efficiency_at(0.0, kPi, 0.0, o) == -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(efficiency_at(0.5, 1.0, 0.5, o)));
}

TEST_CASE("optimization csv layout") {
  std::ostringstream os;
  OptimizeResult r;
  r.noise_ratio = 0.25;
  r.d_opt = 0.5;
  r.delta_opt = -0.1;
  r.kl_opt = 3.0;
  write_optimization_csv(os, {r});
  CHECK(os.str() == "noise_ratio,D_opt,delta_opt,kl_opt\n0.25,0.5,-0.1,3\n");
}
