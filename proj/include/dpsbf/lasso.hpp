// SPDX-License-Identifier: Apache-2.0
//
// Complex LASSO  minimize ½‖Ax − b‖² + τ‖x‖₁  and its use as the dual of the
// amplitude-constrained analog precoder fit
//   minimize ‖F_opt − F_RF·F_BB‖_F²  s.t. |F_RF(i,j)| ≤ 2.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"

namespace dpsbf {

/// Modulus bound of a DPS connection (sum of two unit phasors).
inline constexpr double kDpsBound = 2.0;

/// Entrywise complex soft-threshold: z ↦ e^{j∠z}(|z| − t)⁺.
inline CVector soft_threshold(const CVector& z, double t) {
  CVector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z(i));
    out(i) = a > t ? z(i) * ((a - t) / a) : cdouble(0.0, 0.0);
  }
  return out;
}

/// Entrywise projection onto the disk of radius r (phase kept).
inline CMatrix project_disk(const CMatrix& z, double r = kDpsBound) {
  CMatrix out = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z(i));
    if (a > r) out(i) = z(i) * (r / a);
  }
  return out;
}

inline double l1_norm(const CVector& x) { return x.cwiseAbs().sum(); }

struct LassoProblem {
  CMatrix a;
  CVector b;
  double weight = kDpsBound;
  Eigen::Index n_tx = 0;  // rows of the analog precoder the problem encodes
  Eigen::Index n_rf = 0;
  bool semi_orthogonal = false;  // AᴴA = I, closed form applies

  double objective(const CVector& x) const { return 0.5 * (a * x - b).squaredNorm() + weight * l1_norm(x); }
};

/// Builds the LASSO dual of the analog fit for a fixed digital precoder.
/// With D = F_BBᵀ ⊗ I_{N_t} and (DᴴD)⁻¹ = U·S·Uᴴ, A = S^{1/2}·Uᴴ (so that
/// AᴴA = (DᴴD)⁻¹) and b = A·Dᴴ·f_opt, with f_opt = vec(F_opt).
///
/// DᴴD = (F_BB·F_BBᴴ)ᵀ ⊗ I, so the eigen-decomposition is done on the
/// N_RF × N_RF factor and lifted by the Kronecker structure.
inline LassoProblem build_lasso(const CMatrix& f_bb, const CVector& f_opt, double semi_orth_tol = 1e-10) {
  const Eigen::Index n_rf = f_bb.rows();
  const Eigen::Index cols = f_bb.cols();
  if (n_rf == 0 || cols == 0 || f_opt.size() % cols != 0)
    throw Error(ErrorCode::shape_mismatch, "f_opt length must be a multiple of F_BB's column count");
  const Eigen::Index n_tx = f_opt.size() / cols;
  const CMatrix gram = f_bb * f_bb.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram);
  const RVector& ev = es.eigenvalues();
  if (!(ev(0) > ev(n_rf - 1) * 1e-12) || ev(0) <= 0.0)
    throw Error(ErrorCode::rank_deficient, "F_BB must have full row rank");

  LassoProblem p;
  p.n_tx = n_tx;
  p.n_rf = n_rf;
  p.semi_orthogonal = (gram - CMatrix::Identity(n_rf, n_rf)).norm() <= semi_orth_tol * std::sqrt(double(n_rf));

  // (Gᵀ)⁻¹ = conj(Q)·Λ⁻¹·Qᵀ  where G = Q·Λ·Qᴴ.
  const CMatrix q_t = es.eigenvectors().conjugate();  // eigenvectors of Gᵀ
  const RVector inv_sqrt = ev.cwiseInverse().cwiseSqrt();
  const CMatrix small_a = inv_sqrt.asDiagonal() * q_t.adjoint();
  p.a = kron(small_a, CMatrix::Identity(n_tx, n_tx));
  const CMatrix f_opt_mat = unvec(f_opt, n_tx, cols);
  p.b = p.a * vec(f_opt_mat * f_bb.adjoint());  // Dᴴ·vec(F_opt) = vec(F_opt·F_BBᴴ)
  return p;
}

struct LassoOptions {
  double rel_tol = 1e-9;
  // stationarity: ‖x_next − y‖/step ≤ kkt_tol·max(1, ‖Aᴴb‖)
  double kkt_tol = 1e-10;
  int max_iter = 10000;
  bool force_iterative = false;
};

struct LassoSolution {
  CVector x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  bool closed_form = false;
};

/// Accelerated proximal gradient (FISTA, step 1/λ_max(AᴴA), restart when the
/// objective rises). Stops once the relative objective change is below
/// rel_tol and the gradient mapping is below kkt_tol, or when a plain step
/// can no longer descend; on hitting max_iter the best iterate is returned
/// with converged = false.
inline LassoSolution solve_lasso_iterative(const LassoProblem& p, const LassoOptions& opt = {}) {
  const CMatrix aha = p.a.adjoint() * p.a;
  const CVector ahb = p.a.adjoint() * p.b;
  const double lmax = largest_eigenvalue(aha);
  LassoSolution out;
  out.x = CVector::Zero(p.a.cols());
  if (lmax <= 0.0) {
    out.objective = p.objective(out.x);
    return out;
  }
  const double step = 1.0 / lmax;
  const double kkt_scale = opt.kkt_tol * std::max(1.0, ahb.norm());
  CVector x = out.x;
  CVector y = x;
  double t = 1.0;
  double prev = p.objective(x);
  out.objective = prev;
  out.converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iterations = it;
    const CVector grad = aha * y - ahb;
    const CVector x_next = soft_threshold(y - step * grad, step * p.weight);
    const double obj = p.objective(x_next);
    if (obj > prev) {
      // a plain step from the accepted point cannot rise in exact arithmetic,
      // so this is the round-off floor
      if (t == 1.0) {
        out.converged = true;
        break;
      }
      // restart momentum from the last accepted point
      y = x;
      t = 1.0;
      continue;
    }
    const double stationarity = (x_next - y).norm() / step;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = x_next;
    t = t_next;
    const double change = std::abs(prev - obj) / std::max(std::abs(prev), std::numeric_limits<double>::min());
    prev = obj;
    if (obj <= out.objective) {
      out.objective = obj;
      out.x = x;
    }
    if (change < opt.rel_tol && stationarity <= kkt_scale) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Solves the LASSO; uses the soft-threshold closed form x* = e^{j∠(Aᴴb)}∘(|Aᴴb| − τ)⁺
/// when A is semi-orthogonal.
inline LassoSolution solve_lasso(const LassoProblem& p, const LassoOptions& opt = {}) {
  if (p.semi_orthogonal && !opt.force_iterative) {
    LassoSolution out;
    out.x = soft_threshold(p.a.adjoint() * p.b, p.weight);
    out.objective = p.objective(out.x);
    out.closed_form = true;
    return out;
  }
  return solve_lasso_iterative(p, opt);
}

/// Primal objective ‖F_opt − F_RF·F_BB‖_F².
inline double analog_fit_objective(const CMatrix& f_opt, const CMatrix& f_rf, const CMatrix& f_bb) {
  return (f_opt - f_rf * f_bb).squaredNorm();
}

struct RfOnlyResult {
  CMatrix f_rf;
  LassoSolution lasso;
};

/// Recovers F_RF from the LASSO solution: vec(F_RF) = Aᴴ(b − A·x*). At the
/// exact optimum every entry already lies in the modulus-2 disk; the final
/// projection only removes the overshoot of an iterative x*.
inline RfOnlyResult rf_only_precoder_via_lasso(const CMatrix& f_opt, const CMatrix& f_bb, const LassoOptions& opt = {}) {
  if (f_opt.cols() != f_bb.cols()) throw Error(ErrorCode::shape_mismatch, "F_opt and F_BB column counts differ");
  const LassoProblem p = build_lasso(f_bb, vec(f_opt));
  RfOnlyResult out;
  out.lasso = solve_lasso(p, opt);
  const CVector f_rf = p.a.adjoint() * (p.b - p.a * out.lasso.x);
  out.f_rf = project_disk(unvec(f_rf, f_opt.rows(), f_bb.rows()));
  return out;
}

/// RF-only DPS precoder for a fixed digital precoder. For a semi-orthogonal
/// F_BB this is the entrywise modulus-2 disk projection of F_opt·F_BBᴴ;
/// otherwise the LASSO dual is solved iteratively.
inline CMatrix rf_only_precoder(const CMatrix& f_opt, const CMatrix& f_bb, const LassoOptions& opt = {}) {
  if (f_opt.cols() != f_bb.cols()) throw Error(ErrorCode::shape_mismatch, "F_opt and F_BB column counts differ");
  const CMatrix gram = f_bb * f_bb.adjoint();
  const bool semi_orth = (gram - CMatrix::Identity(gram.rows(), gram.cols())).norm() <= 1e-10 * std::sqrt(double(gram.rows()));
  if (semi_orth && !opt.force_iterative) {
    const CMatrix z = f_opt * f_bb.adjoint();
    // z − e^{j∠z}(|z| − 2)⁺ collapses to the disk projection
    return project_disk(z);
  }
  auto r = rf_only_precoder_via_lasso(f_opt, f_bb, opt);
  if (!r.lasso.converged)
    throw Error(ErrorCode::non_convergence,
                "LASSO did not converge in " + std::to_string(r.lasso.iterations) + " iterations");
  return r.f_rf;
}

}  // namespace dpsbf
