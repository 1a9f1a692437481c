// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected hybrid precoding with double phase shifters: low-rank
// approximation of the digital target, the identity-block split, the SPS
// phase-extraction heuristic and the phase-pair factorization of each entry.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dpsbf/error.hpp"
#include "dpsbf/lasso.hpp"
#include "dpsbf/linalg.hpp"

namespace dpsbf {

struct LowRankSplit {
  CMatrix f_hat;  // best rank-n_rf approximation
  CMatrix f_rf;   // U₁
  CMatrix f_bb;   // S₁·V₁ᴴ
  RVector singular_values;  // all singular values of the target, descending
  double residual = 0.0;    // Σ_{p>n_rf} σ_p²
};

/// Truncated SVD of `target` (N × M) at rank n_rf.
inline LowRankSplit hybrid_lowrank(const CMatrix& target, Eigen::Index n_rf) {
  const Eigen::Index min_dim = std::min(target.rows(), target.cols());
  if (n_rf < 1 || n_rf > min_dim)
    throw Error(ErrorCode::invalid_argument,
                "n_rf = " + std::to_string(n_rf) + " must lie in [1, " + std::to_string(min_dim) + "]");
  Eigen::BDCSVD<CMatrix> svd(target, Eigen::ComputeThinU | Eigen::ComputeThinV);
  LowRankSplit out;
  out.singular_values = svd.singularValues();
  CMatrix u = svd.matrixU().leftCols(n_rf);
  CMatrix v = svd.matrixV().leftCols(n_rf);
  // fix the phase of each U₁ column; compensate in V₁ so the product is unchanged
  for (Eigen::Index j = 0; j < n_rf; ++j) {
    Eigen::Index best = 0;
    u.col(j).cwiseAbs().maxCoeff(&best);
    const cdouble z = u(best, j);
    if (std::abs(z) > 0.0) {
      const cdouble rot = std::conj(z) / std::abs(z);
      u.col(j) *= rot;
      v.col(j) *= rot;
    }
  }
  out.f_rf = u;
  out.f_bb = out.singular_values.head(n_rf).cast<cdouble>().asDiagonal() * v.adjoint();
  out.f_hat = out.f_rf * out.f_bb;
  out.residual = out.singular_values.tail(out.singular_values.size() - n_rf).squaredNorm();
  return out;
}

struct IdentityBlockSplit {
  CMatrix f_rf;  // identity on the pivot rows
  CMatrix f_bb;  // the pivot rows of the input
  std::vector<int> pivot_rows;  // rows carrying the identity block, in order
  bool pivoted = false;
  long phase_shifters = 0;  // 2·n_rf·(N_t − n_rf)
};

/// Splits a rank-n_rf matrix as F_RF = [I; F₂·F₁†], F_BB = F₁ where F₁ is its
/// first n_rf rows. If F₁ is near singular (condition number > 1e10) a
/// well-conditioned row set chosen by pivoted QR takes its place.
inline IdentityBlockSplit decompose_identity_block(const CMatrix& f_hat, Eigen::Index n_rf) {
  const Eigen::Index n = f_hat.rows();
  if (n_rf < 1 || n_rf > n || n_rf > f_hat.cols())
    throw Error(ErrorCode::invalid_argument, "n_rf out of range for identity-block split");
  IdentityBlockSplit out;
  out.pivot_rows.resize(static_cast<std::size_t>(n_rf));
  std::iota(out.pivot_rows.begin(), out.pivot_rows.end(), 0);

  auto condition = [](const CMatrix& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    const RVector& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  };
  if (!(condition(f_hat.topRows(n_rf)) <= 1e10)) {
    Eigen::ColPivHouseholderQR<CMatrix> qr(f_hat.adjoint());
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = 0; j < n_rf; ++j) out.pivot_rows[static_cast<std::size_t>(j)] = perm(j);
    std::sort(out.pivot_rows.begin(), out.pivot_rows.end());
    out.pivoted = true;
  }
  CMatrix top(n_rf, f_hat.cols());
  for (Eigen::Index j = 0; j < n_rf; ++j) top.row(j) = f_hat.row(out.pivot_rows[static_cast<std::size_t>(j)]);
  if (!(condition(top) <= 1e10)) throw Error(ErrorCode::rank_deficient, "input has rank below n_rf");

  // X·F₁ = F₂ with F₁ of full row rank: X = F₂·F₁ᴴ(F₁F₁ᴴ)⁻¹
  const CMatrix gram = top * top.adjoint();
  const Eigen::LDLT<CMatrix> ldlt(gram);
  out.f_rf = ldlt.solve(top * f_hat.adjoint()).adjoint();
  for (Eigen::Index j = 0; j < n_rf; ++j) {
    out.f_rf.row(out.pivot_rows[static_cast<std::size_t>(j)]).setZero();
    out.f_rf(out.pivot_rows[static_cast<std::size_t>(j)], j) = 1.0;
  }
  out.f_bb = top;
  out.phase_shifters = 2L * n_rf * (n - n_rf);
  return out;
}

/// SPS heuristic: F_RF = exp(j∠U₁), keeping F_BB = S₁V₁ᴴ. Zero entries get phase 0.
inline std::pair<CMatrix, CMatrix> sps_phase_extract(const CMatrix& u1, const CMatrix& f_bb) {
  CMatrix f_rf(u1.rows(), u1.cols());
  for (Eigen::Index i = 0; i < u1.size(); ++i) f_rf(i) = unit_phasor(phase_of(u1(i)));
  return {f_rf, f_bb};
}

inline std::pair<CMatrix, CMatrix> sps_phase_extract(const LowRankSplit& split) {
  return sps_phase_extract(split.f_rf, split.f_bb);
}

/// Two phase-shifter settings whose unit phasors sum to a DPS entry.
struct PhasePair {
  double theta_plus = 0.0;
  double theta_minus = 0.0;

  cdouble reconstruct() const { return unit_phasor(theta_plus) + unit_phasor(theta_minus); }
};

/// a·e^{jθ} = e^{j(θ+φ)} + e^{j(θ−φ)} with φ = arccos(a/2).
inline PhasePair factor_double_phase(cdouble entry) {
  const double a = std::abs(entry);
  if (a > kDpsBound + 1e-12) throw Error(ErrorCode::invalid_argument, "entry modulus exceeds 2");
  const double theta = phase_of(entry);
  const double phi = std::acos(std::min(1.0, a / kDpsBound));
  return {theta + phi, theta - phi};
}

/// Phase-shifter settings for every entry of an analog matrix, column-major
/// per entry. Zero entries of a partially-connected matrix are skipped.
inline std::vector<PhasePair> factor_matrix(const CMatrix& f_rf, bool skip_zeros = false) {
  std::vector<PhasePair> out;
  out.reserve(static_cast<std::size_t>(f_rf.size()));
  for (Eigen::Index i = 0; i < f_rf.size(); ++i) {
    if (skip_zeros && f_rf(i) == cdouble(0.0, 0.0)) continue;
    out.push_back(factor_double_phase(f_rf(i)));
  }
  return out;
}

/// (F_RF/γ, γ·F_BB) with γ = ‖vec(F_RF)‖_∞/2, so the largest entry modulus is 2.
inline std::pair<CMatrix, CMatrix> rescale_feasible(const CMatrix& f_rf, const CMatrix& f_bb) {
  const double gamma = max_abs(f_rf) / kDpsBound;
  if (!(gamma > 0.0)) throw Error(ErrorCode::invalid_argument, "cannot rescale an all-zero analog precoder");
  return {f_rf / gamma, gamma * f_bb};
}

}  // namespace dpsbf
