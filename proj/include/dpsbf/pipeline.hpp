// SPDX-License-Identifier: Apache-2.0
//
// End-to-end construction of a precoder/combiner bundle for one channel
// realization and one algorithm tag.
//
// Tag grammar:  <method>[+bd][@<n_rf>]
//   method ∈ fully-digital, dps-full, sps-heuristic, dps-rf-only, sps-rf-only,
//            partial-fixed, partial-greedy, partial-kmeans
//   +bd     cascades a baseband BD stage after the hybrid approximation
//   @n      overrides the BS RF-chain count of the configuration
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "dpsbf/channel.hpp"
#include "dpsbf/digital.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/fully_connected.hpp"
#include "dpsbf/lasso.hpp"
#include "dpsbf/model.hpp"
#include "dpsbf/partially_connected.hpp"
#include "dpsbf/residual_bd.hpp"

namespace dpsbf {

enum class Method {
  fully_digital,
  dps_full,        // truncated SVD, rescaled into the modulus-2 region
  sps_heuristic,   // phases of U₁ with S₁V₁ᴴ kept
  dps_rf_only,     // analog-only fit for a shared semi-orthogonal F_BB
  sps_rf_only,     // unit-modulus analog fit for the same F_BB
  partial_fixed,
  partial_greedy,
  partial_kmeans,
};

inline constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::fully_digital, "fully-digital"},
    {Method::dps_full, "dps-full"},
    {Method::sps_heuristic, "sps-heuristic"},
    {Method::dps_rf_only, "dps-rf-only"},
    {Method::sps_rf_only, "sps-rf-only"},
    {Method::partial_fixed, "partial-fixed"},
    {Method::partial_greedy, "partial-greedy"},
    {Method::partial_kmeans, "partial-kmeans"},
}};

inline std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

inline bool is_partial(Method m) {
  return m == Method::partial_fixed || m == Method::partial_greedy || m == Method::partial_kmeans;
}

struct AlgorithmTag {
  Method method = Method::fully_digital;
  bool bd_cascade = false;
  std::optional<int> n_rf;  // overrides cfg.n_rf_tx

  std::string name() const {
    std::string s(method_name(method));
    if (bd_cascade) s += "+bd";
    if (n_rf) s += "@" + std::to_string(*n_rf);
    return s;
  }

  int rf_chains(const SystemConfig& cfg) const { return n_rf.value_or(cfg.n_rf_tx); }

  static AlgorithmTag parse(std::string_view text) {
    AlgorithmTag tag;
    std::string_view rest = text;
    if (const auto at = rest.find('@'); at != std::string_view::npos) {
      const std::string digits(rest.substr(at + 1));
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(digits, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (digits.empty() || used != digits.size() || v <= 0)
        throw Error(ErrorCode::config_error, "bad RF-chain override in tag '" + std::string(text) + "'");
      tag.n_rf = v;
      rest = rest.substr(0, at);
    }
    constexpr std::string_view bd = "+bd";
    if (rest.size() > bd.size() && rest.substr(rest.size() - bd.size()) == bd) {
      tag.bd_cascade = true;
      rest.remove_suffix(bd.size());
    }
    bool found = false;
    for (const auto& [method, name] : kMethodNames)
      if (rest == name) {
        tag.method = method;
        found = true;
      }
    if (!found) throw Error(ErrorCode::config_error, "unknown algorithm '" + std::string(text) + "'");
    if (tag.method == Method::fully_digital && (tag.bd_cascade || tag.n_rf))
      throw Error(ErrorCode::config_error, "fully-digital takes no options");
    return tag;
  }

  bool operator==(const AlgorithmTag&) const = default;
};

/// Fully digital BD targets shared by every hybrid design of a realization.
struct DigitalTargets {
  FullyDigitalPrecoder f_opt;
  BlockGrid w_opt;
  CMatrix f_opt_concat;  // N_t × K·N_s·F
};

inline DigitalTargets digital_targets(const ChannelRealization& chan, const SystemConfig& cfg) {
  try {
    DigitalTargets t;
    t.f_opt = bd_precoder(chan, cfg);
    t.w_opt = digital_combiner(chan, t.f_opt);
    t.f_opt_concat = t.f_opt.concat();
    return t;
  } catch (const Error& e) {
    throw annotate(e, "digital targets");
  }
}

/// What the pipeline learned on the way, for reports and tests.
struct PipelineDiagnostics {
  double tx_residual = 0.0;  // ‖F_opt − F_RF·F_BB‖_F² before power normalization
  double bd_leakage = 0.0;   // worst relative leakage after the cascade, 0 without it
  std::optional<MappingResult> mapping;
};

struct PipelineResult {
  PrecoderBundle bundle;
  PipelineDiagnostics diagnostics;
};

namespace detail {

struct TxStage {
  CMatrix f_rf;
  CMatrix f_bb;  // n_rf × K·N_s·F
  std::optional<MappingSets> mapping;
  std::optional<MappingResult> mapping_run;
};

inline TxStage transmitter_stage(const AlgorithmTag& tag, const CMatrix& f_opt, int n_rf) {
  TxStage s;
  switch (tag.method) {
    case Method::dps_full: {
      const auto split = hybrid_lowrank(f_opt, n_rf);
      std::tie(s.f_rf, s.f_bb) = rescale_feasible(split.f_rf, split.f_bb);
      break;
    }
    case Method::sps_heuristic: {
      const auto split = hybrid_lowrank(f_opt, n_rf);
      std::tie(s.f_rf, s.f_bb) = sps_phase_extract(split);
      break;
    }
    case Method::dps_rf_only:
    case Method::sps_rf_only: {
      // shared digital precoder: the top-n_rf right singular vectors as rows
      s.f_bb = top_right_singular(f_opt, n_rf).adjoint();
      if (tag.method == Method::dps_rf_only) {
        s.f_rf = rf_only_precoder(f_opt, s.f_bb);
      } else {
        const CMatrix z = f_opt * s.f_bb.adjoint();
        s.f_rf.resize(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) s.f_rf(i) = unit_phasor(phase_of(z(i)));
      }
      break;
    }
    case Method::partial_fixed:
    case Method::partial_greedy:
    case Method::partial_kmeans: {
      const int n_tx = static_cast<int>(f_opt.rows());
      if (tag.method == Method::partial_fixed) {
        s.mapping = fixed_block_mapping(n_tx, n_rf);
      } else {
        s.mapping_run = tag.method == Method::partial_greedy ? greedy_mapping(f_opt, n_rf) : kmeans_mapping(f_opt, n_rf);
        s.mapping = s.mapping_run->mapping;
      }
      const auto split = hybrid_partial(f_opt, *s.mapping);
      // zeros stay zero under the rescale, so the row pattern survives
      std::tie(s.f_rf, s.f_bb) = rescale_feasible(split.f_rf, split.f_bb);
      break;
    }
    case Method::fully_digital:
      throw Error(ErrorCode::invalid_argument, "fully-digital has no transmitter hybrid stage");
  }
  return s;
}

/// Per-user DPS combiners: a rank-N_RF^r approximation of W_opt_k over all
/// subcarriers, rescaled into the modulus-2 region.
inline void receiver_stage(const BlockGrid& w_opt, int n_rf_rx, PrecoderBundle& b) {
  const int K = w_opt.users();
  const int F = w_opt.subcarriers();
  const auto ns = w_opt.block_cols();
  b.w_rf.assign(static_cast<std::size_t>(K), CMatrix());
  b.w_bb = BlockGrid(K, F, n_rf_rx, ns);
  for (int k = 0; k < K; ++k) {
    const auto split = hybrid_lowrank(w_opt.user(k), n_rf_rx);
    auto [w_rf, w_bb] = rescale_feasible(split.f_rf, split.f_bb);
    b.w_rf[static_cast<std::size_t>(k)] = std::move(w_rf);
    for (int f = 0; f < F; ++f) b.w_bb.set(k, f, w_bb.middleCols(f * ns, ns));
  }
}

}  // namespace detail

/// Builds the complete bundle for `tag`. Stage errors are re-raised with the
/// stage name prefixed and their code kept.
inline PipelineResult build_precoders(const AlgorithmTag& tag, const ChannelRealization& chan, const SystemConfig& cfg,
                                      const DigitalTargets& targets) {
  PipelineResult out;
  auto& b = out.bundle;
  const int K = cfg.n_users;
  const int F = cfg.n_subcarriers;

  if (tag.method == Method::fully_digital) {
    b.structure = Structure::fully_digital;
    b.f_rf = CMatrix::Identity(cfg.n_tx, cfg.n_tx);
    b.f_bb = targets.f_opt.blocks;
    b.f_b = targets.f_opt.blocks;
    b.w_rf.assign(static_cast<std::size_t>(K), CMatrix::Identity(cfg.n_rx, cfg.n_rx));
    b.w_bb = targets.w_opt;
    return out;
  }

  SystemConfig eff = cfg;
  eff.n_rf_tx = tag.rf_chains(cfg);
  try {
    validate_config(eff, tag.method == Method::partial_fixed ? MappingRequirement::fixed_block : MappingRequirement::none);
  } catch (const Error& e) {
    throw annotate(e, "config");
  }

  detail::TxStage tx;
  try {
    tx = detail::transmitter_stage(tag, targets.f_opt_concat, eff.n_rf_tx);
  } catch (const Error& e) {
    throw annotate(e, "transmitter");
  }
  out.diagnostics.tx_residual = analog_fit_objective(targets.f_opt_concat, tx.f_rf, tx.f_bb);
  out.diagnostics.mapping = std::move(tx.mapping_run);
  b.structure = is_partial(tag.method) ? Structure::partially_connected : Structure::fully_connected;
  b.mapping = std::move(tx.mapping);
  b.f_rf = std::move(tx.f_rf);
  b.f_bb = BlockGrid::from_concat(tx.f_bb, K, F, cfg.n_streams);

  try {
    detail::receiver_stage(targets.w_opt, cfg.n_rf_rx, b);
  } catch (const Error& e) {
    throw annotate(e, "receiver");
  }

  try {
    if (tag.bd_cascade) {
      const auto channels = effective_channels(chan, b);
      BlockGrid f_bd = bd_cascade(channels);
      out.diagnostics.bd_leakage = worst_bd_leakage(channels, f_bd);
      b.f_b = normalize_power(b.f_rf, cascade_digital(b.f_bb, f_bd), cfg);
      b.f_bd = std::move(f_bd);
    } else {
      b.f_b = normalize_power(b.f_rf, b.f_bb, cfg);
    }
  } catch (const Error& e) {
    throw annotate(e, tag.bd_cascade ? "bd cascade" : "power normalization");
  }
  return out;
}

inline PipelineResult build_precoders(const AlgorithmTag& tag, const ChannelRealization& chan,
                                      const SystemConfig& cfg) {
  return build_precoders(tag, chan, cfg, digital_targets(chan, cfg));
}

inline PipelineResult build_precoders(std::string_view tag, const ChannelRealization& chan, const SystemConfig& cfg) {
  return build_precoders(AlgorithmTag::parse(tag), chan, cfg);
}

}  // namespace dpsbf
