// SPDX-License-Identifier: Apache-2.0
//
// Fully digital block-diagonalization precoder and SVD combiners. These are
// the targets every hybrid design approximates.
#pragma once

#include <string>

#include "dpsbf/channel.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"

namespace dpsbf {

struct FullyDigitalPrecoder {
  BlockGrid blocks;  // N_t × N_s per (k, f)

  /// N_t × K·N_s·F concatenation, subcarrier-major.
  CMatrix concat() const { return blocks.concat(); }
};

/// BD for one subcarrier: block k lies in the null space of every other user's
/// channel and is eigen-beamformed onto user k's channel restricted to it.
/// Columns are orthonormal, so each block carries power N_s.
inline CMatrix bd_block(const std::vector<CMatrix>& channels, int k, int n_streams) {
  const int K = static_cast<int>(channels.size());
  const auto n_tx = channels.front().cols();
  CMatrix basis;
  if (K == 1) {
    basis = CMatrix::Identity(n_tx, n_tx);
  } else {
    Eigen::Index rows = 0;
    for (int j = 0; j < K; ++j)
      if (j != k) rows += channels[static_cast<std::size_t>(j)].rows();
    CMatrix stacked(rows, n_tx);
    Eigen::Index r = 0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      const auto& hj = channels[static_cast<std::size_t>(j)];
      stacked.middleRows(r, hj.rows()) = hj;
      r += hj.rows();
    }
    basis = null_space(stacked);
  }
  if (basis.cols() < n_streams)
    throw Error(ErrorCode::infeasible_dimensions,
                "null space of other users' channels has dimension " + std::to_string(basis.cols()) + " < N_s");
  CMatrix f = basis * top_right_singular(channels[static_cast<std::size_t>(k)] * basis, n_streams);
  canonicalize_columns(f);
  return f;
}

/// Classical BD precoder for every (k, f), equal power per stream so that
/// ‖F_opt‖_F² = K·N_s·F.
inline FullyDigitalPrecoder bd_precoder(const ChannelRealization& chan, const SystemConfig& cfg) {
  if (chan.n_users != cfg.n_users || chan.n_subcarriers != cfg.n_subcarriers)
    throw Error(ErrorCode::shape_mismatch, "channel realization does not match the configuration");
  FullyDigitalPrecoder out{BlockGrid(cfg.n_users, cfg.n_subcarriers, cfg.n_tx, cfg.n_streams)};
  std::vector<CMatrix> per_user(static_cast<std::size_t>(cfg.n_users));
  for (int f = 0; f < cfg.n_subcarriers; ++f) {
    for (int k = 0; k < cfg.n_users; ++k) per_user[static_cast<std::size_t>(k)] = chan.at(k, f);
    for (int k = 0; k < cfg.n_users; ++k) out.blocks.set(k, f, bd_block(per_user, k, cfg.n_streams));
  }
  return out;
}

/// W_opt_{k,f}: top-N_s left singular vectors of H_{k,f}·F_opt_{k,f}.
inline BlockGrid digital_combiner(const ChannelRealization& chan, const FullyDigitalPrecoder& fopt) {
  const auto& g = fopt.blocks;
  const auto n_rx = chan.at(0, 0).rows();
  BlockGrid w(g.users(), g.subcarriers(), n_rx, g.block_cols());
  for (int f = 0; f < g.subcarriers(); ++f)
    for (int k = 0; k < g.users(); ++k) w.set(k, f, top_left_singular(chan.at(k, f) * g.at(k, f), g.block_cols()));
  return w;
}

}  // namespace dpsbf
