#include "qrect/cwdrive.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace qrect {

void CwDrive::validate() const {
  if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag())) {
    throw std::invalid_argument("amplitude must be finite");
  }
  if (!(noise_intensity >= 0.0) || !std::isfinite(noise_intensity)) {
    throw std::invalid_argument("noise intensity must be non-negative");
  }
}

Operator drive_hamiltonian(Complex amplitude, const Operator& jump) {
  return Complex(0, 1) * (std::conj(amplitude) * jump - amplitude * jump.adjoint());
}

Liouvillian drive_term(Complex amplitude, const Operator& jump) {
  return commutator_superoperator(
      (std::conj(amplitude) * jump - amplitude * jump.adjoint()).eval());
}

Operator noise_quadrature(const Operator& jump_left) {
  return Complex(0, 1) * (jump_left - jump_left.adjoint());
}

Liouvillian dephasing_term(double noise_intensity, const Operator& jump_left) {
  if (!(noise_intensity >= 0.0)) {
    throw std::invalid_argument("dephasing_term: noise intensity must be non-negative");
  }
  // D[sqrt(G) X] for Hermitian X is exactly -(G/2)(X^2 rho + rho X^2 - 2 X rho X).
  const Operator x = std::sqrt(noise_intensity) * noise_quadrature(jump_left);
  return dissipator_superoperator(x);
}

SteadyState solve_steady_state(const Liouvillian& generator) {
  const Eigen::Index n = generator.rows();
  if (n == 0 || generator.cols() != n) throw std::invalid_argument("steady_state: bad generator shape");
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(n))));
  if (d * d != n) throw std::invalid_argument("steady_state: generator is not a superoperator");

  Eigen::JacobiSVD<Liouvillian> svd(generator, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  SteadyState out;
  if (n == 1) {
    out.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    const double smallest = sv(n - 1);
    const double second = sv(n - 2);
    out.gap_ratio = smallest > 0.0 ? second / smallest : std::numeric_limits<double>::infinity();
  }
  if (!(out.gap_ratio > kNullSpaceGapRatio)) {
    std::ostringstream msg;
    msg << "steady_state: null space is not one-dimensional (singular value gap ratio "
        << out.gap_ratio << " <= " << kNullSpaceGapRatio << ")";
    throw NullSpaceDimensionError(msg.str(), out.gap_ratio);
  }

  const StateVector v = svd.matrixV().col(n - 1);
  DensityMatrix rho = unvectorize(v);
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("steady_state: kernel vector is traceless");
  rho /= tr;
  rho = (0.5 * (rho + rho.adjoint())).eval();

  const double lnorm = sv(0);
  out.relative_residual = lnorm > 0.0 ? (generator * vectorize(rho)).norm() / lnorm : 0.0;
  if (out.relative_residual > 1e-10) {
    std::ostringstream msg;
    msg << "steady_state: residual " << out.relative_residual << " exceeds 1e-10 ||L||";
    throw NumericalError(msg.str());
  }
  if (auto bad = density_matrix_violation(rho)) {
    throw NumericalError("steady_state: " + *bad);
  }
  out.rho = std::move(rho);
  return out;
}

std::optional<std::string> density_matrix_violation(const DensityMatrix& rho,
                                                    double hermitian_tol, double trace_tol,
                                                    double eigen_floor) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) return "density matrix is not square";
  const double herm = max_hermitian_deviation(rho);
  if (!(herm <= hermitian_tol)) {
    return "density matrix not Hermitian (deviation " + std::to_string(herm) + ")";
  }
  const Complex tr = rho.trace();
  if (!(std::abs(tr - 1.0) <= trace_tol)) {
    return "density matrix trace " + std::to_string(tr.real()) + " is not 1";
  }
  const DensityMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(h, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (!(lo >= eigen_floor)) {
    return "density matrix has negative eigenvalue " + std::to_string(lo);
  }
  return std::nullopt;
}

double noise_cross_term(const DensityMatrix& rho, double noise_intensity,
                        const Operator& jump_left) {
  if (noise_intensity == 0.0) return 0.0;
  const Operator c = jump_left.adjoint() * jump_left - jump_left * jump_left.adjoint();
  return noise_intensity * (c * rho).trace().real();
}

FluxPair output_fluxes(const DensityMatrix& rho, const CwDrive& drive, const Operator& jump_right,
                       const Operator& jump_left) {
  const Complex e = drive.amplitude;
  FluxPair f;
  f.phi_r_out = std::norm(e) + 2.0 * (std::conj(e) * (jump_right * rho).trace()).real() +
                (jump_right.adjoint() * jump_right * rho).trace().real();
  f.phi_l_out = (jump_left.adjoint() * jump_left * rho).trace().real();
  if (drive.noise_intensity > 0.0) {
    f.phi_l_out += drive.noise_intensity + noise_cross_term(rho, drive.noise_intensity, jump_left);
  }
  return f;
}

Liouvillian cw_generator(const EmitterArray& arr, const CwDrive& drive) {
  drive.validate();
  const JumpPair j = jump_operators(arr);
  Liouvillian l = emitter_liouvillian(arr);
  l += drive_term(drive.amplitude, j.right);
  if (drive.noise_intensity > 0.0) l += dephasing_term(drive.noise_intensity, j.left);
  return l;
}

CwSolution solve_cw(const EmitterArray& arr, const CwDrive& drive) {
  if (drive.direction == Direction::LeftGoing) {
    CwDrive forward = drive;
    forward.direction = Direction::RightGoing;
    CwSolution s = solve_cw(arr.mirrored(), forward);
    std::swap(s.fluxes.phi_r_out, s.fluxes.phi_l_out);
    return s;
  }
  const JumpPair j = jump_operators(arr);
  CwSolution s;
  s.steady = solve_steady_state(cw_generator(arr, drive));
  s.fluxes = output_fluxes(s.steady.rho, drive, j.right, j.left);
  return s;
}

}  // namespace qrect
