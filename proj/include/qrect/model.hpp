#pragma once

// Operators of the emitter array coupled to the left- and right-going
// channel modes, and the vectorized Lindblad generator.
//
// Basis: each emitter has |g> = 0 and |e> = 1; emitter 0 is the most
// significant factor of the Kronecker product, so the product state index
// has bit (n - 1 - i) set when emitter i is excited. |g...g> is index 0.
//
// Vectorization is column-stacking: vec(A X B) = (B^T (x) A) vec(X).

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "qrect/types.hpp"

namespace qrect {

template <typename Real = double>
OperatorT<Real> lowering_operator(std::size_t i, std::size_t n) {
  if (n == 0 || i >= n) {
    throw std::invalid_argument("lowering_operator: emitter index " + std::to_string(i) +
                                " out of range for " + std::to_string(n) + " emitters");
  }
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::Index bit = Eigen::Index{1} << (n - 1 - i);
  OperatorT<Real> s = OperatorT<Real>::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    if (col & bit) s(col & ~bit, col) = Real(1);
  }
  return s;
}

/// sum_i sigma_i^dag sigma_i
template <typename Real = double>
OperatorT<Real> excitation_number(std::size_t n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  OperatorT<Real> m = OperatorT<Real>::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    m(s, s) = Real(__builtin_popcountll(static_cast<unsigned long long>(s)));
  }
  return m;
}

/// |g...g><g...g|
template <typename Real = double>
OperatorT<Real> ground_state(std::size_t n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  OperatorT<Real> rho = OperatorT<Real>::Zero(dim, dim);
  rho(0, 0) = Real(1);
  return rho;
}

/// Projector onto the product state with exactly emitter `i` excited.
template <typename Real = double>
OperatorT<Real> single_excitation_state(std::size_t i, std::size_t n) {
  OperatorT<Real> s = lowering_operator<Real>(i, n);
  return s.adjoint() * ground_state<Real>(n) * s;
}

template <typename Real>
struct JumpPairT {
  OperatorT<Real> right;
  OperatorT<Real> left;
};
using JumpPair = JumpPairT<double>;

/// J_R = sqrt(gamma) sum_i e^{-i phi_i} sigma_i,  J_L = sqrt(gamma) sum_i e^{+i phi_i} sigma_i.
template <typename Real = double>
JumpPairT<Real> jump_operators(const EmitterArray& arr) {
  arr.validate();
  const std::size_t n = arr.size();
  const Eigen::Index dim = Eigen::Index{1} << n;
  JumpPairT<Real> j{OperatorT<Real>::Zero(dim, dim), OperatorT<Real>::Zero(dim, dim)};
  const Real amp = std::sqrt(Real(arr.gamma));
  for (std::size_t i = 0; i < n; ++i) {
    const OperatorT<Real> s = lowering_operator<Real>(i, n);
    const Real phi = Real(arr.phases[i]);
    j.right += amp * std::polar(Real(1), -phi) * s;
    j.left += amp * std::polar(Real(1), phi) * s;
  }
  return j;
}

/// Channel-mediated coherent exchange, gamma sum_{i<j} sin|phi_i - phi_j| (s_i^dag s_j + h.c.).
template <typename Real = double>
OperatorT<Real> exchange_hamiltonian(const EmitterArray& arr) {
  arr.validate();
  const std::size_t n = arr.size();
  const Eigen::Index dim = Eigen::Index{1} << n;
  OperatorT<Real> h = OperatorT<Real>::Zero(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const OperatorT<Real> si = lowering_operator<Real>(i, n);
    for (std::size_t j = i + 1; j < n; ++j) {
      const OperatorT<Real> sj = lowering_operator<Real>(j, n);
      const Real c = Real(arr.gamma) * std::sin(std::abs(Real(arr.phases[i] - arr.phases[j])));
      h += c * (si.adjoint() * sj + sj.adjoint() * si);
    }
  }
  return h;
}

/// H0 = sum_i Delta_i sigma_i^dag sigma_i (diagonal in the product basis).
template <typename Real = double>
OperatorT<Real> bare_hamiltonian(const EmitterArray& arr) {
  arr.validate();
  const std::size_t n = arr.size();
  const Eigen::Index dim = Eigen::Index{1} << n;
  OperatorT<Real> h = OperatorT<Real>::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    Real e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (s & (Eigen::Index{1} << (n - 1 - i))) e += Real(arr.detunings[i]);
    }
    h(s, s) = e;
  }
  return h;
}

template <typename Derived>
auto max_hermitian_deviation(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// ---- superoperator building blocks -------------------------------------

/// X -> A X
template <typename Derived>
auto left_product(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const M id = M::Identity(a.rows(), a.cols());
  return M(Eigen::kroneckerProduct(id, a.eval()));
}

/// X -> X B
template <typename Derived>
auto right_product(const Eigen::MatrixBase<Derived>& b) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const M id = M::Identity(b.rows(), b.cols());
  return M(Eigen::kroneckerProduct(b.transpose().eval(), id));
}

/// X -> [A, X]
template <typename Derived>
auto commutator_superoperator(const Eigen::MatrixBase<Derived>& a) {
  return (left_product(a) - right_product(a)).eval();
}

/// X -> J X J^dag - (J^dag J X + X J^dag J) / 2
template <typename Derived>
auto dissipator_superoperator(const Eigen::MatrixBase<Derived>& j) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const M jj = (j.adjoint() * j).eval();
  M d = Eigen::kroneckerProduct(j.conjugate().eval(), j.eval());
  d -= (left_product(jj) + right_product(jj)) / typename Scalar::value_type(2);
  return d;
}

/// L[rho] = -i[H, rho] + sum_k D[J_k] rho. Jump operators carry their own rates.
template <typename Real>
LiouvillianT<Real> build_liouvillian(const OperatorT<Real>& h,
                                     std::span<const OperatorT<Real>> jumps = {}) {
  if (h.rows() != h.cols()) throw std::invalid_argument("build_liouvillian: H is not square");
  if (max_hermitian_deviation(h) > Real(1e-10)) {
    throw std::invalid_argument("build_liouvillian: Hamiltonian is not Hermitian");
  }
  LiouvillianT<Real> l = ComplexT<Real>(0, -1) * commutator_superoperator(h);
  for (const auto& j : jumps) {
    if (j.rows() != h.rows() || j.cols() != h.cols()) {
      throw std::invalid_argument("build_liouvillian: jump operator dimension mismatch");
    }
    l += dissipator_superoperator(j);
  }
  return l;
}

template <typename Real>
LiouvillianT<Real> build_liouvillian(const OperatorT<Real>& h,
                                     std::initializer_list<OperatorT<Real>> jumps) {
  return build_liouvillian<Real>(h, std::span<const OperatorT<Real>>(jumps.begin(), jumps.size()));
}

/// Undriven emitter generator: H0 + H_ex with the two channel dissipators.
template <typename Real = double>
LiouvillianT<Real> emitter_liouvillian(const EmitterArray& arr) {
  const JumpPairT<Real> j = jump_operators<Real>(arr);
  const OperatorT<Real> h = bare_hamiltonian<Real>(arr) + exchange_hamiltonian<Real>(arr);
  return build_liouvillian<Real>(h, {j.right, j.left});
}

// ---- vectorization -----------------------------------------------------

template <typename Derived>
auto vectorize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = m.eval().reshaped();
  return v;
}

template <typename Derived>
auto unvectorize(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m = v.eval().reshaped(d, d);
  return m;
}

/// L[rho] as a matrix.
template <typename Real>
OperatorT<Real> apply(const LiouvillianT<Real>& l, const OperatorT<Real>& rho) {
  return unvectorize((l * vectorize(rho)).eval());
}

/// Row vector r with r * vec(rho) == Tr(A rho).
template <typename Derived>
auto expectation_functional(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> r = a.transpose().eval().reshaped().transpose();
  return r;
}

}  // namespace qrect
