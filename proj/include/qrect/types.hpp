#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qrect {

template <typename Real>
using ComplexT = std::complex<Real>;

/// Dense operator on the 2^N emitter Hilbert space.
template <typename Real>
using OperatorT = Eigen::Matrix<ComplexT<Real>, Eigen::Dynamic, Eigen::Dynamic>;

/// Superoperator acting on column-stacked density matrices (4^N x 4^N).
template <typename Real>
using LiouvillianT = Eigen::Matrix<ComplexT<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using StateVectorT = Eigen::Matrix<ComplexT<Real>, Eigen::Dynamic, 1>;

using Complex = ComplexT<double>;
using Operator = OperatorT<double>;
using DensityMatrix = OperatorT<double>;
using Liouvillian = LiouvillianT<double>;
using StateVector = StateVectorT<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Propagation direction of an input field along the channel.
enum class Direction { RightGoing, LeftGoing };

inline const char* to_string(Direction d) {
  return d == Direction::RightGoing ? "right" : "left";
}

/// Numerical failure inside an engine (solver, integrator, ensemble).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Liouvillian kernel is not one-dimensional, so the steady state is
/// not unique (or not resolvable at the working precision).
class NullSpaceDimensionError : public NumericalError {
 public:
  NullSpaceDimensionError(const std::string& what, double gap_ratio)
      : NumericalError(what), gap_ratio_(gap_ratio) {}
  double gap_ratio() const { return gap_ratio_; }

 private:
  double gap_ratio_;
};

/// Emitters along the channel. Positions enter only through the
/// dimensionless phases k*x_i; detunings are w_i - w_in in units of gamma.
struct EmitterArray {
  double gamma = 1.0;
  std::vector<double> phases;
  std::vector<double> detunings;

  std::size_t size() const { return phases.size(); }
  std::size_t dimension() const { return std::size_t{1} << phases.size(); }

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  /// Spatial mirror image: reflect about the array centre, which reverses
  /// the emitter order and carries each detuning along with its emitter.
  EmitterArray mirrored() const;

  /// Two-emitter device with phases (0, kl) and detunings (delta1, delta2).
  static EmitterArray pair(double kl, double delta1 = 0.0, double delta2 = 0.0, double gamma = 1.0);
};

}  // namespace qrect
