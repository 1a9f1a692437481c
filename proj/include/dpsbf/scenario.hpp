// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo scenarios: built-in presets, JSON configuration, seeded parallel
// execution and the CSV writers for samples, summaries and gap reports.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dpsbf/channel.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/evaluation.hpp"
#include "dpsbf/model.hpp"
#include "dpsbf/pipeline.hpp"
#include "dpsbf/rng.hpp"

namespace dpsbf {

struct Scenario {
  std::string name;
  SystemConfig cfg;
  ChannelParams channel;
  std::vector<std::string> algorithms;
  int realizations = 1;
  std::uint64_t seed = 1;
};

inline const std::vector<double>& default_snr_grid() {
  static const std::vector<double> grid{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
  return grid;
}

inline std::vector<std::string> preset_names() {
  return {"fig2", "fig3", "fig4", "fig5", "fig2-desk", "fig3-desk", "fig4-desk", "fig5-desk"};
}

/// Built-in scenario. Full-scale presets use the reference array sizes with
/// F = 128 and 1000 realizations; "-desk" variants shrink to N_t = 64, N_r = 8,
/// F = 16 and 50 realizations.
inline Scenario preset(const std::string& name) {
  const bool desk = name.size() > 5 && name.substr(name.size() - 5) == "-desk";
  const std::string base = desk ? name.substr(0, name.size() - 5) : name;
  Scenario s;
  s.name = name;
  s.cfg.n_subcarriers = desk ? 16 : 128;
  s.realizations = desk ? 50 : 1000;
  s.cfg.snr_grid_db = default_snr_grid();
  auto dims = [&](int n_tx, int n_rx, int k, int ns, int n_rf, int n_rf_rx) {
    s.cfg.n_tx = desk ? 64 : n_tx;
    s.cfg.n_rx = desk ? 8 : n_rx;
    s.cfg.n_users = k;
    s.cfg.n_streams = ns;
    s.cfg.n_rf_tx = n_rf;
    s.cfg.n_rf_rx = n_rf_rx;
  };
  if (base == "fig2") {
    dims(64, 9, 5, 2, 10, 2);
    s.algorithms = {"fully-digital", "dps-rf-only", "sps-rf-only"};
  } else if (base == "fig3") {
    dims(256, 16, 3, 3, 9, 3);
    s.algorithms = {"fully-digital", "dps-full+bd", "dps-full", "sps-heuristic+bd", "sps-heuristic"};
  } else if (base == "fig4") {
    dims(256, 16, 3, 3, 9, 3);
    s.cfg.snr_grid_db = {5.0};
    s.algorithms = {"fully-digital"};
    for (int n : {9, 10, 11, 12, 14, 16}) {
      s.algorithms.push_back("dps-full+bd@" + std::to_string(n));
      s.algorithms.push_back("sps-heuristic+bd@" + std::to_string(n));
    }
  } else if (base == "fig5") {
    dims(256, 16, 4, 2, 8, 2);
    s.algorithms = {"fully-digital", "dps-full+bd", "partial-kmeans+bd", "partial-greedy+bd", "partial-fixed+bd"};
  } else {
    throw Error(ErrorCode::config_error, "unknown preset '" + name + "'");
  }
  s.cfg.noise_var = noise_var_from_snr_db(s.cfg.snr_grid_db.front());
  return s;
}

/// Applies a JSON object on top of `s`. Recognized keys: preset, name,
/// n_tx, n_rx, n_users, n_subcarriers, n_streams, n_rf_tx, n_rf_rx, snr_db,
/// algorithms, realizations, seed, channel{n_clusters, n_rays,
/// cluster_power, angle_spread_deg, n_delay_taps}. Unknown keys are errors.
inline Scenario apply_config(Scenario s, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");
  try {
    if (j.contains("preset")) s = preset(j.at("preset").get<std::string>());
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      else if (key == "name") s.name = v.get<std::string>();
      else if (key == "n_tx") s.cfg.n_tx = v.get<int>();
      else if (key == "n_rx") s.cfg.n_rx = v.get<int>();
      else if (key == "n_users") s.cfg.n_users = v.get<int>();
      else if (key == "n_subcarriers") s.cfg.n_subcarriers = v.get<int>();
      else if (key == "n_streams") s.cfg.n_streams = v.get<int>();
      else if (key == "n_rf_tx") s.cfg.n_rf_tx = v.get<int>();
      else if (key == "n_rf_rx") s.cfg.n_rf_rx = v.get<int>();
      else if (key == "snr_db") s.cfg.snr_grid_db = v.get<std::vector<double>>();
      else if (key == "algorithms") s.algorithms = v.get<std::vector<std::string>>();
      else if (key == "realizations") s.realizations = v.get<int>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "channel") {
        if (!v.is_object()) throw Error(ErrorCode::config_error, "channel must be an object");
        for (const auto& [ck, cv] : v.items()) {
          if (ck == "n_clusters") s.channel.n_clusters = cv.get<int>();
          else if (ck == "n_rays") s.channel.n_rays = cv.get<int>();
          else if (ck == "cluster_power") s.channel.cluster_power = cv.get<double>();
          else if (ck == "angle_spread_deg") s.channel.angle_spread_deg = cv.get<double>();
          else if (ck == "n_delay_taps") s.channel.n_delay_taps = cv.get<int>();
          else throw Error(ErrorCode::config_error, "unknown channel key '" + ck + "'");
        }
      } else {
        throw Error(ErrorCode::config_error, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("bad config value: ") + e.what());
  }
  return s;
}

inline Scenario load_config(const std::string& path, Scenario base = {}) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::config_error, "cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, "cannot parse config '" + path + "': " + e.what());
  }
  return apply_config(std::move(base), j);
}

/// Checks everything that can be checked before running: config invariants
/// for every tag's RF-chain count, channel parameters, tags and counts.
inline std::vector<AlgorithmTag> validate_scenario(const Scenario& s) {
  if (s.realizations < 1) throw Error(ErrorCode::config_error, "realizations must be at least 1");
  if (s.cfg.snr_grid_db.empty()) throw Error(ErrorCode::config_error, "SNR grid is empty");
  if (s.algorithms.empty()) throw Error(ErrorCode::config_error, "no algorithms selected");
  try {
    validate_channel_params(s.channel);
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
  std::vector<AlgorithmTag> tags;
  for (const auto& a : s.algorithms) {
    const auto tag = AlgorithmTag::parse(a);
    if (std::find(tags.begin(), tags.end(), tag) != tags.end())
      throw Error(ErrorCode::config_error, "algorithm '" + a + "' listed twice");
    SystemConfig eff = s.cfg;
    eff.n_rf_tx = tag.rf_chains(s.cfg);
    validate_config(eff, tag.method == Method::partial_fixed ? MappingRequirement::fixed_block : MappingRequirement::none);
    tags.push_back(tag);
  }
  return tags;
}

/// One row of the gap report.
struct GapRow {
  std::string algorithm;
  int realization = 0;
  double f_star_full = 0.0;
  double f_star_partial = 0.0;
  double delta = 0.0;
  double delta_formula = 0.0;
};

struct ScenarioResult {
  std::vector<RateSample> samples;  // ordered by algorithm (as listed), SNR, realization
  std::vector<GapRow> gaps;         // ordered by algorithm, realization
};

/// f*_f (fully-connected residual at n_rf) and f*_p (partial residual for the
/// mapping) on the digital target, with Δ both as their difference and from
/// the eigenvalue formula.
inline GapRow gap_row(const std::string& algorithm, int realization, const CMatrix& f_opt, const MappingSets& mapping) {
  GapRow g;
  g.algorithm = algorithm;
  g.realization = realization;
  g.f_star_full = hybrid_lowrank(f_opt, mapping.n_rf()).residual;
  g.f_star_partial = hybrid_partial(f_opt, mapping).residual;
  g.delta = g.f_star_partial - g.f_star_full;
  g.delta_formula = gap_delta(f_opt, mapping, mapping.n_rf());
  return g;
}

namespace detail {

struct RealizationOutput {
  std::vector<std::vector<double>> rates;  // [tag][snr]
  std::vector<std::optional<GapRow>> gaps;  // [tag]
};

inline RealizationOutput run_realization(const Scenario& s, const std::vector<AlgorithmTag>& tags, int r, bool want_gaps) {
  RealizationOutput out;
  const auto chan = generate_channel(s.cfg, s.channel, mix_seed(s.seed, static_cast<std::uint64_t>(r)));
  const auto targets = digital_targets(chan, s.cfg);
  std::vector<double> noise;
  for (double snr : s.cfg.snr_grid_db) noise.push_back(noise_var_from_snr_db(snr));
  for (const auto& tag : tags) {
    const auto res = build_precoders(tag, chan, s.cfg, targets);
    out.rates.push_back(spectral_efficiency(chan, res.bundle, s.cfg, noise));
    if (want_gaps && is_partial(tag.method))
      out.gaps.emplace_back(gap_row(tag.name(), r, targets.f_opt_concat, *res.bundle.mapping));
    else
      out.gaps.emplace_back();
  }
  return out;
}

}  // namespace detail

/// Runs every realization of the scenario on `threads` workers. Realization r
/// draws its channel from seed mix(seed, r), so the output does not depend on
/// the thread count. The first failing realization (lowest index) decides the
/// error that is rethrown.
inline ScenarioResult run_scenario(const Scenario& s, int threads = 1, bool want_gaps = false) {
  const auto tags = validate_scenario(s);
  if (want_gaps) {
    const bool has_full = std::any_of(tags.begin(), tags.end(), [](const auto& t) { return t.method == Method::dps_full; });
    const bool has_partial = std::any_of(tags.begin(), tags.end(), [](const auto& t) { return is_partial(t.method); });
    if (!has_full || !has_partial)
      throw Error(ErrorCode::missing_tags, "gap report needs a dps-full tag and at least one partial tag");
  }
  const int n = s.realizations;
  std::vector<std::optional<detail::RealizationOutput>> outputs(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::atomic<int> first_failure{n};
  auto worker = [&]() {
    for (int r = next++; r < n; r = next++) {
      // indices past a known failure are skipped; lower ones still run so the
      // reported error is always the lowest failing realization
      if (r > first_failure.load()) continue;
      try {
        outputs[static_cast<std::size_t>(r)] = detail::run_realization(s, tags, r, want_gaps);
      } catch (...) {
        failures[static_cast<std::size_t>(r)] = std::current_exception();
        int seen = first_failure.load();
        while (r < seen && !first_failure.compare_exchange_weak(seen, r)) {
        }
      }
    }
  };
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  ScenarioResult result;
  for (std::size_t a = 0; a < tags.size(); ++a) {
    const std::string name = s.algorithms[a];
    for (std::size_t i = 0; i < s.cfg.snr_grid_db.size(); ++i)
      for (int r = 0; r < n; ++r)
        result.samples.push_back({r, s.cfg.snr_grid_db[i], name, outputs[static_cast<std::size_t>(r)]->rates[a][i]});
    for (int r = 0; r < n; ++r)
      if (const auto& g = outputs[static_cast<std::size_t>(r)]->gaps[a]) result.gaps.push_back(*g);
  }
  return result;
}

/// Samples for one algorithm over a given set of channels; realization ids
/// are the positions in `channels`.
inline std::vector<RateSample> evaluate_scenario(const std::vector<ChannelRealization>& channels,
                                                 const AlgorithmTag& tag, const SystemConfig& cfg,
                                                 const std::vector<double>& snr_grid_db) {
  std::vector<double> noise;
  for (double snr : snr_grid_db) noise.push_back(noise_var_from_snr_db(snr));
  std::vector<std::vector<double>> rates;
  for (const auto& chan : channels) rates.push_back(spectral_efficiency(chan, build_precoders(tag, chan, cfg).bundle, cfg, noise));
  std::vector<RateSample> out;
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i)
    for (std::size_t r = 0; r < channels.size(); ++r)
      out.push_back({static_cast<int>(r), snr_grid_db[i], tag.name(), rates[r][i]});
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_samples_csv(std::ostream& os, const std::string& scenario, const std::vector<RateSample>& samples) {
  os << "scenario,algorithm,snr_db,realization,sum_rate_bps_hz\n";
  for (const auto& s : samples)
    os << scenario << ',' << s.algorithm << ',' << format_double(s.snr_db) << ',' << s.realization << ','
       << format_double(s.spectral_efficiency) << '\n';
}

struct SummaryRow {
  std::string algorithm;
  double snr_db = 0.0;
  int realizations = 0;
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96·s/√n, 0 for a single sample
  int rank = 0;       // 1 = highest mean at this SNR
  std::optional<bool> ge_next;  // mean ≥ mean of the next listed algorithm at this SNR
};

/// Per (algorithm, SNR) statistics, in the order algorithms are listed.
inline std::vector<SummaryRow> summarize(const std::vector<RateSample>& samples, const std::vector<std::string>& algorithms,
                                         const std::vector<double>& snr_grid_db) {
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const auto& s : samples) groups[{s.algorithm, s.snr_db}].push_back(s.spectral_efficiency);
  std::vector<SummaryRow> rows;
  for (double snr : snr_grid_db) {
    const std::size_t first = rows.size();
    for (const auto& a : algorithms) {
      const auto it = groups.find({a, snr});
      if (it == groups.end()) continue;
      const auto& v = it->second;
      SummaryRow row{a, snr, static_cast<int>(v.size())};
      for (double x : v) row.mean += x;
      row.mean /= v.size();
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - row.mean) * (x - row.mean);
        row.ci95 = 1.96 * std::sqrt(ss / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
      }
      rows.push_back(row);
    }
    for (std::size_t i = first; i < rows.size(); ++i) {
      rows[i].rank = 1;
      for (std::size_t j = first; j < rows.size(); ++j)
        if (rows[j].mean > rows[i].mean) ++rows[i].rank;
      if (i + 1 < rows.size()) rows[i].ge_next = rows[i].mean >= rows[i + 1].mean;
    }
  }
  // group by algorithm, then SNR
  std::stable_sort(rows.begin(), rows.end(), [&](const SummaryRow& x, const SummaryRow& y) {
    const auto px = std::find(algorithms.begin(), algorithms.end(), x.algorithm) - algorithms.begin();
    const auto py = std::find(algorithms.begin(), algorithms.end(), y.algorithm) - algorithms.begin();
    return px < py;
  });
  return rows;
}

inline void write_summary_csv(std::ostream& os, const std::string& scenario, const std::vector<SummaryRow>& rows) {
  os << "scenario,algorithm,snr_db,realizations,mean_bps_hz,ci95_half_width,rank_at_snr,ge_next\n";
  for (const auto& r : rows)
    os << scenario << ',' << r.algorithm << ',' << format_double(r.snr_db) << ',' << r.realizations << ','
       << format_double(r.mean) << ',' << format_double(r.ci95) << ',' << r.rank << ','
       << (r.ge_next ? (*r.ge_next ? "1" : "0") : "") << '\n';
}

inline void write_gap_csv(std::ostream& os, const std::vector<GapRow>& rows) {
  os << "algorithm,realization,f_star_full,f_star_partial,delta,delta_formula\n";
  for (const auto& g : rows)
    os << g.algorithm << ',' << g.realization << ',' << format_double(g.f_star_full) << ','
       << format_double(g.f_star_partial) << ',' << format_double(g.delta) << ',' << format_double(g.delta_formula)
       << '\n';
}

}  // namespace dpsbf
