#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "qrect/dopri5.hpp"
#include "qrect/fockpulse.hpp"
#include "qrect/model.hpp"

using namespace qrect;

namespace {

PulseSpec exponential(double bandwidth = 2.0, double delay = 0.0) {
  PulseSpec p;
  p.bandwidth = bandwidth;
  p.delay = delay;
  return p;
}

PulseResult scatter(const EmitterArray& arr, const PulseSpec& p, bool inverted = false,
                    double t_max = 40.0) {
  PulseOptions o;
  o.t_max = t_max;
  const DensityMatrix rho0 = inverted ? inverted_initial(arr, p.direction) : ground_state(arr.size());
  return integrate_pulse(arr, p, rho0, o);
}

}  // namespace

TEST_CASE("dopri5 integrates linear test problems to tolerance") {
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  Dopri5Options opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  // Harmonic oscillator over several periods.
  integrate_dopri5(
      [](double, const Eigen::VectorXd& v) {
        Eigen::VectorXd d(2);
        d << v(1), -v(0);
        return d;
      },
      y, 0.0, 10.0, opt, [](double, const Eigen::VectorXd&) {});
  CHECK(y(0) == doctest::Approx(std::cos(10.0)).epsilon(1e-8));
  CHECK(y(1) == doctest::Approx(-std::sin(10.0)).epsilon(1e-8));

  Eigen::VectorXd z(1);
  z << 1.0;
  std::size_t calls = 0;
  const auto stats = integrate_dopri5(
      [](double t, const Eigen::VectorXd& v) { return (-t * v).eval(); }, z, 0.0, 3.0, opt,
      [&](double, const Eigen::VectorXd&) { ++calls; });
  CHECK(z(0) == doctest::Approx(std::exp(-4.5)).epsilon(1e-8));
  CHECK(calls == stats.accepted + 1);
}

TEST_CASE("dopri5 reports step budget exhaustion") {
  Eigen::VectorXd y(1);
  y << 1.0;
  Dopri5Options opt;
  opt.max_steps = 3;
  opt.max_step = 1e-3;
  CHECK_THROWS_AS(integrate_dopri5([](double, const Eigen::VectorXd& v) { return v; }, y, 0.0, 1.0,
                                   opt, [](double, const Eigen::VectorXd&) {}),
                  NumericalError);
}

TEST_CASE("pulse envelope is normalized and starts at the delay") {
  const PulseSpec p = exponential(2.0, 1.5);
  CHECK(std::abs(p.amplitude(1.0)) == 0.0);
  CHECK(std::abs(p.amplitude(1.5)) == doctest::Approx(std::sqrt(2.0)));
  // Integral of |xi|^2 with a fine trapezoid rule.
  double norm = 0.0;
  const double h = 1e-4;
  for (double t = 1.5; t < 40.0; t += h) {
    norm += 0.5 * h * (std::norm(p.amplitude(t)) + std::norm(p.amplitude(t + h)));
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));

  PulseSpec bad = exponential(-1.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("ground-state scattering matches the one-excitation wavefunction") {
  struct Case {
    std::vector<double> phases, detunings;
    double bandwidth;
  };
  const Case cases[] = {
      {{0.0}, {0.0}, 2.0},
      {{0.0}, {1.5}, 0.5},
      {{0.0, 1.0}, {0.0, 0.0}, 2.0},
      {{0.0, 2.7}, {-1.0, 0.4}, 1.0},
      {{0.0, 0.5, 3.0}, {0.2, -0.3, 1.0}, 2.0},
  };
  for (const auto& c : cases) {
    const EmitterArray arr{1.0, c.phases, c.detunings};
    const PulseSpec p = exponential(c.bandwidth);
    const PulseResult r = scatter(arr, p);
    const auto ref = oracle::wavefunction_scattering({c.phases, c.detunings, 1.0},
                                                     [&](double t) { return p.amplitude(t); }, 40.0,
                                                     80000);
    CHECK(r.n_r_out == doctest::Approx(ref.right).epsilon(1e-6));
    CHECK(r.n_l_out == doctest::Approx(ref.left).epsilon(1e-6));
    CHECK(r.excitation_budget() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("a slow photon on resonance is fully reflected by one emitter") {
  const PulseResult r = scatter(EmitterArray{1.0, {0.0}, {0.0}}, exponential(0.02), false, 1500.0);
  CHECK(r.n_r_out < 0.02);
  CHECK(r.n_l_out > 0.98);
}

TEST_CASE("spontaneous emission of an excited emitter splits evenly") {
  // A vanishing-bandwidth photon never arrives within the window: only the
  // initial excitation decays.
  const EmitterArray arr{1.0, {0.0}, {0.0}};
  PulseSpec p = exponential(2.0, 1000.0);
  PulseOptions o;
  o.t_max = 40.0;
  const PulseResult r = integrate_pulse(arr, p, single_excitation_state(0, 1), o);
  CHECK(r.n_r_out == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.n_l_out == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("linear transmission is symmetric under exchanging the detunings") {
  for (double kl : {0.3, 1.7, 4.0}) {
    const PulseResult a = scatter(EmitterArray::pair(kl, 1.1, -0.4), exponential());
    const PulseResult b = scatter(EmitterArray::pair(kl, -0.4, 1.1), exponential());
    CHECK(std::abs(a.n_r_out - b.n_r_out) < 1e-7);
  }
}

TEST_CASE("inverted protocol conserves two excitations") {
  const EmitterArray arr = EmitterArray::pair(3.66, -1.0, 0.0);
  const PulseResult r = scatter(arr, exponential(), true);
  CHECK(r.initial_excitation == doctest::Approx(1.0));
  CHECK(std::abs(r.excitation_budget() - 2.0) < 1e-6);
  CHECK(r.residual_excitation < 1e-4);
}

TEST_CASE("inverted initial state excites the emitter the photon meets first") {
  const EmitterArray arr = EmitterArray::pair(1.0);
  CHECK(inverted_initial(arr, Direction::RightGoing)(2, 2).real() == 1.0);
  CHECK(inverted_initial(arr, Direction::LeftGoing)(1, 1).real() == 1.0);
  CHECK_THROWS_AS(inverted_initial(EmitterArray{1.0, {0.0}, {0.0}}, Direction::RightGoing),
                  std::invalid_argument);
}

TEST_CASE("a short window leaves excitation behind and raises the warning") {
  const PulseResult r = scatter(EmitterArray::pair(1.0, 0.0, 0.0), exponential(), false, 2.0);
  CHECK(r.residual_excitation > 1e-4);
  CHECK(r.excitation_warning);
  // Only the part of the packet that has arrived by t_max is accounted for.
  CHECK(r.excitation_budget() == doctest::Approx(1.0 - std::exp(-4.0)).epsilon(1e-6));
}

TEST_CASE("left-going photon mirrors the right-going problem") {
  const EmitterArray arr = EmitterArray::pair(2.0, 0.7, -0.3);
  PulseSpec left = exponential();
  left.direction = Direction::LeftGoing;
  const PulseResult a = scatter(arr, left);
  const PulseResult b = scatter(arr.mirrored(), exponential());
  CHECK(a.n_l_out == doctest::Approx(b.n_r_out).epsilon(1e-7));
  CHECK(a.n_r_out == doctest::Approx(b.n_l_out).epsilon(1e-7));
}

TEST_CASE("flux time series integrates to the reported counts") {
  const PulseResult r = scatter(EmitterArray::pair(1.0, 0.5, 0.0), exponential());
  REQUIRE(r.flux_timeseries.size() > 10);
  double nr = 0.0, nl = 0.0;
  for (std::size_t k = 1; k < r.flux_timeseries.size(); ++k) {
    const auto& a = r.flux_timeseries[k - 1];
    const auto& b = r.flux_timeseries[k];
    nr += 0.5 * (b.t - a.t) * (a.flux_r + b.flux_r);
    nl += 0.5 * (b.t - a.t) * (a.flux_l + b.flux_l);
  }
  CHECK(nr == doctest::Approx(r.n_r_out).epsilon(2e-3));
  CHECK(nl == doctest::Approx(r.n_l_out).epsilon(2e-3));

  std::ostringstream os;
  write_flux_csv(os, r);
  CHECK(os.str().rfind("t,flux_r,flux_l\n", 0) == 0);
}

TEST_CASE("custom envelopes are accepted") {
  PulseSpec p;
  p.shape = [](double t) {
    // Gaussian with unit norm centred at t = 8, width 2.
    const double s = 2.0;
    return Complex(std::pow(2.0 * kPi * s * s, -0.25) * std::exp(-(t - 8.0) * (t - 8.0) / (4.0 * s * s)));
  };
  const EmitterArray arr = EmitterArray::pair(1.2, 0.3, 0.0);
  const PulseResult r = scatter(arr, p);
  const auto ref = oracle::wavefunction_scattering({arr.phases, arr.detunings, 1.0}, p.shape, 40.0,
                                                   80000);
  CHECK(r.n_r_out == doctest::Approx(ref.right).epsilon(1e-6));
}
