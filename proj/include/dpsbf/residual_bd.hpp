// SPDX-License-Identifier: Apache-2.0
//
// Baseband BD cascade that removes the interuser interference left by a
// hybrid approximation, and the final transmit-power normalization.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dpsbf/channel.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"

namespace dpsbf {

/// Ĥ_{k,f} = W_BBᴴ·W_RFᴴ·H_{k,f}·F_RF·F_BB_f, each N_s × K·N_s.
struct EffectiveChannelSet {
  BlockGrid h;
};

inline EffectiveChannelSet effective_channels(const ChannelRealization& chan, const PrecoderBundle& b) {
  const int K = b.f_bb.users();
  const int F = b.f_bb.subcarriers();
  if (chan.n_users != K || chan.n_subcarriers != F || static_cast<int>(b.w_rf.size()) != K)
    throw Error(ErrorCode::shape_mismatch, "bundle and channel disagree on users/subcarriers");
  if (b.f_rf.rows() != chan.at(0, 0).cols() || b.f_rf.cols() != b.f_bb.block_rows())
    throw Error(ErrorCode::shape_mismatch, "F_RF does not match the channel or F_BB");
  const Eigen::Index ns = b.w_bb.block_cols();
  EffectiveChannelSet out{BlockGrid(K, F, ns, b.f_bb.block_cols() * K)};
  for (int f = 0; f < F; ++f) {
    const CMatrix tx_f = b.f_rf * b.f_bb.subcarrier(f);
    for (int k = 0; k < K; ++k) {
      const CMatrix& w_rf = b.w_rf[static_cast<std::size_t>(k)];
      if (w_rf.rows() != chan.at(k, f).rows()) throw Error(ErrorCode::shape_mismatch, "W_RF does not match N_r");
      out.h.set(k, f, b.w_bb.at(k, f).adjoint() * (w_rf.adjoint() * (chan.at(k, f) * tx_f)));
    }
  }
  return out;
}

/// F_BD_{k,f} (K·N_s × N_s): orthonormal columns in the null space of the
/// other users' stacked effective channels, eigen-beamformed onto Ĥ_{k,f}.
inline BlockGrid bd_cascade(const EffectiveChannelSet& eff) {
  const auto& h = eff.h;
  const int K = h.users();
  const Eigen::Index ns = h.block_rows();
  const Eigen::Index width = h.block_cols();
  BlockGrid out(K, h.subcarriers(), width, ns);
  for (int f = 0; f < h.subcarriers(); ++f) {
    for (int k = 0; k < K; ++k) {
      CMatrix basis;
      if (K == 1) {
        basis = CMatrix::Identity(width, width);
      } else {
        CMatrix stacked((K - 1) * ns, width);
        Eigen::Index r = 0;
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          stacked.middleRows(r, ns) = h.at(j, f);
          r += ns;
        }
        basis = null_space(stacked, 1e-10);
      }
      if (basis.cols() < ns)
        throw Error(ErrorCode::infeasible_dimensions, "effective channels leave a null space of dimension " +
                                                          std::to_string(basis.cols()) + " < N_s");
      CMatrix fbd = basis * top_right_singular(h.at(k, f) * basis, ns);
      canonicalize_columns(fbd);
      out.set(k, f, std::move(fbd));
    }
  }
  return out;
}

/// Scales every block of F_B by √(K·N_s·F)/‖F_RF·F_B‖_F, where the norm runs over all (k, f).
inline BlockGrid normalize_power(const CMatrix& f_rf, const BlockGrid& f_b, double budget) {
  double p = 0.0;
  for (int f = 0; f < f_b.subcarriers(); ++f)
    for (int k = 0; k < f_b.users(); ++k) p += (f_rf * f_b.at(k, f)).squaredNorm();
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::singular_matrix, "cannot normalize a zero precoder");
  BlockGrid out = f_b;
  out *= cdouble(std::sqrt(budget / p), 0.0);
  return out;
}

inline BlockGrid normalize_power(const CMatrix& f_rf, const BlockGrid& f_b, const SystemConfig& cfg) {
  return normalize_power(f_rf, f_b, cfg.power_budget());
}

/// F_B_{k,f} = F_BB_f·F_BD_{k,f}.
inline BlockGrid cascade_digital(const BlockGrid& f_bb, const BlockGrid& f_bd) {
  BlockGrid out(f_bb.users(), f_bb.subcarriers(), f_bb.block_rows(), f_bd.block_cols());
  for (int f = 0; f < f_bb.subcarriers(); ++f) {
    const CMatrix comp = f_bb.subcarrier(f);
    for (int k = 0; k < f_bb.users(); ++k) out.set(k, f, comp * f_bd.at(k, f));
  }
  return out;
}

/// Worst ‖Ĥ_{j,f}·F_BD_{k,f}‖_F / ‖Ĥ_{j,f}‖_F over j ≠ k and f.
inline double worst_bd_leakage(const EffectiveChannelSet& eff, const BlockGrid& f_bd) {
  double worst = 0.0;
  for (int f = 0; f < eff.h.subcarriers(); ++f)
    for (int k = 0; k < eff.h.users(); ++k)
      for (int j = 0; j < eff.h.users(); ++j) {
        if (j == k) continue;
        const double hn = eff.h.at(j, f).norm();
        if (hn == 0.0) continue;
        worst = std::max(worst, (eff.h.at(j, f) * f_bd.at(k, f)).norm() / hn);
      }
  return worst;
}

}  // namespace dpsbf
