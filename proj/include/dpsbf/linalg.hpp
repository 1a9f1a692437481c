// SPDX-License-Identifier: Apache-2.0
//
// Small dense complex linear-algebra helpers shared by the precoder modules.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>

#include "dpsbf/error.hpp"

namespace dpsbf {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Phase with the convention that the phase of 0 is 0.
inline double phase_of(cdouble z) { return z == cdouble(0.0, 0.0) ? 0.0 : std::arg(z); }

inline cdouble unit_phasor(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline double frob2(const CMatrix& m) { return m.squaredNorm(); }

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Rotates a vector so its largest-modulus entry is real positive (lowest index on ties).
template <class Derived>
void canonicalize_phase(const Eigen::MatrixBase<Derived>& v_) {
  auto& v = const_cast<Eigen::MatrixBase<Derived>&>(v_);
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best_abs > 0.0) v *= std::conj(v(best)) / best_abs;
}

inline void canonicalize_columns(CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) canonicalize_phase(m.col(j));
}

/// Kronecker product a ⊗ b.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Column-major vectorization.
inline CVector vec(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

inline CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw Error(ErrorCode::shape_mismatch, "unvec size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

/// Orthonormal basis of the null space of `a` (columns). Singular values at or
/// below rel_tol * sigma_max count as zero.
inline CMatrix null_space(const CMatrix& a, double rel_tol = 1e-12) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return CMatrix::Identity(n, n);
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  const double cutoff = (s.size() > 0 ? s(0) : 0.0) * rel_tol;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// Top-`count` right singular vectors of `a`, phase-canonicalized.
inline CMatrix top_right_singular(const CMatrix& a, Eigen::Index count) {
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinV);
  if (svd.matrixV().cols() < count)
    throw Error(ErrorCode::infeasible_dimensions, "fewer right singular vectors than requested");
  CMatrix v = svd.matrixV().leftCols(count);
  canonicalize_columns(v);
  return v;
}

/// Top-`count` left singular vectors of `a`, phase-canonicalized.
inline CMatrix top_left_singular(const CMatrix& a, Eigen::Index count) {
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinU);
  if (svd.matrixU().cols() < count)
    throw Error(ErrorCode::infeasible_dimensions, "fewer left singular vectors than requested");
  CMatrix u = svd.matrixU().leftCols(count);
  canonicalize_columns(u);
  return u;
}

/// Largest eigenvalue and a unit eigenvector of the Hermitian matrix Y·Yᴴ, where
/// the columns of Y are given. Computed through the Gram matrix YᴴY.
struct PrincipalComponent {
  double value = 0.0;
  CVector vector;
};

inline PrincipalComponent principal_component(const CMatrix& y) {
  PrincipalComponent out;
  if (y.rows() == 0) return out;
  if (y.cols() == 1) {
    out.value = y.col(0).squaredNorm();
    out.vector = y.col(0);
  } else if (y.cols() > 1) {
    const CMatrix gram = y.adjoint() * y;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gram);
    const Eigen::Index top = gram.rows() - 1;
    out.value = std::max(0.0, es.eigenvalues()(top));
    out.vector = y * es.eigenvectors().col(top);
  }
  const double n = out.vector.size() > 0 ? out.vector.norm() : 0.0;
  if (out.value <= 0.0 || n == 0.0 || !std::isfinite(n)) {
    // zero rows: any unit vector is optimal
    out.value = 0.0;
    out.vector = CVector::Zero(y.rows());
    out.vector(0) = 1.0;
    return out;
  }
  out.vector /= n;
  canonicalize_phase(out.vector);
  return out;
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
inline double largest_eigenvalue(const CMatrix& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  if (hermitian.rows() == 1) return std::max(0.0, hermitian(0, 0).real());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(hermitian.rows() - 1));
}

}  // namespace dpsbf
