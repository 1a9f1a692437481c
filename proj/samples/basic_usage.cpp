// SPDX-License-Identifier: Apache-2.0
//
// One channel draw, three designs, rates at a few SNR points.
#include <cstdio>

#include "dpsbf/dpsbf.hpp"

int main() {
  dpsbf::SystemConfig cfg;
  cfg.n_tx = 64;
  cfg.n_rx = 16;
  cfg.n_users = 3;
  cfg.n_subcarriers = 8;
  cfg.n_streams = 2;
  cfg.n_rf_tx = 8;
  cfg.n_rf_rx = 2;

  const auto chan = dpsbf::generate_channel(cfg, dpsbf::ChannelParams{}, 42);
  const auto targets = dpsbf::digital_targets(chan, cfg);
  const std::vector<double> snr_db{0.0, 10.0, 20.0};
  std::vector<double> noise;
  for (double s : snr_db) noise.push_back(dpsbf::noise_var_from_snr_db(s));

  for (const char* name : {"fully-digital", "dps-full+bd", "sps-heuristic+bd", "partial-kmeans+bd"}) {
    const auto res = dpsbf::build_precoders(dpsbf::AlgorithmTag::parse(name), chan, cfg, targets);
    const auto report = dpsbf::check_bundle(res.bundle, cfg);
    const auto se = dpsbf::spectral_efficiency(chan, res.bundle, cfg, noise);
    std::printf("%-20s", name);
    for (double v : se) std::printf("  %7.3f", v);
    std::printf("   bits/s/Hz   max|F_RF| = %.3f  %s\n", report.max_rf_modulus, report.ok() ? "ok" : "invariant broken");
  }
  return 0;
}
