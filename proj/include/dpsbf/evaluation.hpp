// SPDX-License-Identifier: Apache-2.0
//
// Achievable sum rate with Gaussian signaling, per subcarrier and averaged.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dpsbf/channel.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"

namespace dpsbf {

/// Ω_{k,f} = Wᴴ[(1/(K·N_s·F))·H(Σ_{j≠k}F_jF_jᴴ)Hᴴ + σ²I]W with W = W_RF·W_BB and
/// F_j = F_RF·F_B,j.
inline CMatrix interference_matrix(int k, int f, const ChannelRealization& chan, const PrecoderBundle& b,
                                   const SystemConfig& cfg, double noise_var) {
  const CMatrix& h = chan.at(k, f);
  const CMatrix w = b.combiner(k, f);
  const CMatrix hw = h.adjoint() * w;  // N_t × N_s
  const double scale = 1.0 / cfg.power_budget();
  CMatrix omega = noise_var * (w.adjoint() * w);
  for (int j = 0; j < cfg.n_users; ++j) {
    if (j == k) continue;
    const CMatrix g = hw.adjoint() * b.precoder(j, f);  // Wᴴ H F_j
    omega += scale * (g * g.adjoint());
  }
  return omega;
}

namespace detail {

inline double log2det_hpd(const CMatrix& m, const char* what) {
  Eigen::LLT<CMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::singular_matrix, std::string(what) + " is not positive definite");
  const auto& l = llt.matrixL();
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double d = std::real(l(i, i));
    if (!(d > 0.0)) throw Error(ErrorCode::singular_matrix, std::string(what) + " is singular");
    s += 2.0 * std::log2(d);
  }
  return s;
}

}  // namespace detail

/// Noise-independent products for one subcarrier: WᴴW and Wᴴ·H_k·F_j for every
/// user pair, so rates at many SNR points reuse them.
struct SubcarrierGains {
  std::vector<CMatrix> wtw;    // per k
  std::vector<CMatrix> cross;  // index k·K + j: W_kᴴ H_k F_j
};

inline SubcarrierGains subcarrier_gains(int f, const ChannelRealization& chan, const PrecoderBundle& b,
                                        const SystemConfig& cfg) {
  const int K = cfg.n_users;
  SubcarrierGains g;
  g.wtw.resize(static_cast<std::size_t>(K));
  g.cross.resize(static_cast<std::size_t>(K) * K);
  std::vector<CMatrix> precoders(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) precoders[static_cast<std::size_t>(j)] = b.precoder(j, f);
  for (int k = 0; k < K; ++k) {
    const CMatrix w = b.combiner(k, f);
    g.wtw[static_cast<std::size_t>(k)] = w.adjoint() * w;
    const CMatrix wh = w.adjoint() * chan.at(k, f);
    for (int j = 0; j < K; ++j) g.cross[static_cast<std::size_t>(k) * K + j] = wh * precoders[static_cast<std::size_t>(j)];
  }
  return g;
}

/// R_f = Σ_k log₂det(I + (1/(K·N_s·F))·WᴴHF·FᴴHᴴW·Ω⁻¹), in bits/s/Hz.
inline double sum_rate(const SubcarrierGains& g, const SystemConfig& cfg, double noise_var) {
  const int K = cfg.n_users;
  const double scale = 1.0 / cfg.power_budget();
  double rate = 0.0;
  for (int k = 0; k < K; ++k) {
    CMatrix omega = noise_var * g.wtw[static_cast<std::size_t>(k)];
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      const CMatrix& c = g.cross[static_cast<std::size_t>(k) * K + j];
      omega += scale * (c * c.adjoint());
    }
    const CMatrix& s = g.cross[static_cast<std::size_t>(k) * K + k];
    const CMatrix signal = scale * (s * s.adjoint());
    // det(I + SΩ⁻¹) = det(Ω + S)/det(Ω)
    const double r = detail::log2det_hpd(omega + signal, "signal-plus-interference matrix") -
                     detail::log2det_hpd(omega, "interference-plus-noise matrix");
    rate += std::max(0.0, r);
  }
  return rate;
}

inline double sum_rate(int f, const ChannelRealization& chan, const PrecoderBundle& b, const SystemConfig& cfg,
                       double noise_var) {
  return sum_rate(subcarrier_gains(f, chan, b, cfg), cfg, noise_var);
}

inline double sum_rate(int f, const ChannelRealization& chan, const PrecoderBundle& b, const SystemConfig& cfg) {
  return sum_rate(f, chan, b, cfg, cfg.noise_var);
}

/// Mean over subcarriers of R_f, for each noise variance given.
inline std::vector<double> spectral_efficiency(const ChannelRealization& chan, const PrecoderBundle& b,
                                               const SystemConfig& cfg, const std::vector<double>& noise_vars) {
  std::vector<double> out(noise_vars.size(), 0.0);
  for (int f = 0; f < cfg.n_subcarriers; ++f) {
    const auto g = subcarrier_gains(f, chan, b, cfg);
    for (std::size_t i = 0; i < noise_vars.size(); ++i) out[i] += sum_rate(g, cfg, noise_vars[i]);
  }
  for (auto& v : out) v /= cfg.n_subcarriers;
  return out;
}

inline double spectral_efficiency(const ChannelRealization& chan, const PrecoderBundle& b, const SystemConfig& cfg,
                                  double noise_var) {
  return spectral_efficiency(chan, b, cfg, std::vector<double>{noise_var}).front();
}

struct RateSample {
  int realization = 0;
  double snr_db = 0.0;
  std::string algorithm;
  double spectral_efficiency = 0.0;
};

}  // namespace dpsbf
