// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end of the simulator. Kept in a header so tests can drive
// it in-process.
#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpsbf/error.hpp"
#include "dpsbf/scenario.hpp"

namespace dpsbf {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_infeasible = 3,
  exit_numerical = 4,
};

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::dimension_violation:
    case ErrorCode::divisibility_violation:
    case ErrorCode::infeasible_dimensions:
      return exit_infeasible;
    case ErrorCode::rank_deficient:
    case ErrorCode::singular_matrix:
    case ErrorCode::non_convergence:
      return exit_numerical;
    case ErrorCode::shape_mismatch:
    case ErrorCode::invalid_argument:
    case ErrorCode::missing_tags:
    case ErrorCode::config_error:
      return exit_config;
  }
  return exit_config;
}

/// Summary path used when --summary is not given: "<out without .csv>_summary.csv".
inline std::string default_summary_path(const std::string& out) {
  const std::string ext = ".csv";
  std::string stem = out;
  if (stem.size() >= ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0)
    stem.resize(stem.size() - ext.size());
  return stem + "_summary.csv";
}

struct RunOptions {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::vector<double> snr_db;
  std::vector<std::string> algorithms;
  std::string out = "results.csv";
  std::string summary;
  std::string gap_report;
  int threads = 1;
  std::optional<int> n_tx, n_rx, n_users, n_subcarriers, n_streams, n_rf_tx, n_rf_rx;
};

inline Scenario resolve_scenario(const RunOptions& o) {
  if (o.preset.empty() && o.config.empty()) throw Error(ErrorCode::config_error, "give --preset or --config");
  Scenario s = o.preset.empty() ? Scenario{} : preset(o.preset);
  if (!o.config.empty()) s = load_config(o.config, std::move(s));
  if (s.name.empty()) s.name = "custom";
  if (o.seed) s.seed = *o.seed;
  if (o.realizations) s.realizations = *o.realizations;
  if (!o.snr_db.empty()) s.cfg.snr_grid_db = o.snr_db;
  if (!o.algorithms.empty()) s.algorithms = o.algorithms;
  auto put = [](const std::optional<int>& v, int& field) {
    if (v) field = *v;
  };
  put(o.n_tx, s.cfg.n_tx);
  put(o.n_rx, s.cfg.n_rx);
  put(o.n_users, s.cfg.n_users);
  put(o.n_subcarriers, s.cfg.n_subcarriers);
  put(o.n_streams, s.cfg.n_streams);
  put(o.n_rf_tx, s.cfg.n_rf_tx);
  put(o.n_rf_rx, s.cfg.n_rf_rx);
  if (!s.cfg.snr_grid_db.empty()) s.cfg.noise_var = noise_var_from_snr_db(s.cfg.snr_grid_db.front());
  return s;
}

inline int execute_run(const RunOptions& o, std::ostream& log) {
  const Scenario s = resolve_scenario(o);
  const auto result = run_scenario(s, o.threads, !o.gap_report.empty());
  auto open = [](const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::config_error, "cannot write '" + path + "'");
    return os;
  };
  {
    auto os = open(o.out);
    write_samples_csv(os, s.name, result.samples);
  }
  const std::string summary = o.summary.empty() ? default_summary_path(o.out) : o.summary;
  {
    auto os = open(summary);
    write_summary_csv(os, s.name, summarize(result.samples, s.algorithms, s.cfg.snr_grid_db));
  }
  if (!o.gap_report.empty()) {
    auto os = open(o.gap_report);
    write_gap_csv(os, result.gaps);
  }
  log << s.name << ": " << result.samples.size() << " samples -> " << o.out << ", summary -> " << summary;
  if (!o.gap_report.empty()) log << ", gaps -> " << o.gap_report;
  log << '\n';
  return exit_ok;
}

/// Parses and runs. Returns the process exit code; messages go to `log` and `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Hybrid precoding Monte-Carlo simulator"};
  app.require_subcommand(1);
  RunOptions o;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV results");
  run->add_option("--preset", o.preset, "Built-in scenario (fig2..fig5, optionally with -desk)");
  run->add_option("--config", o.config, "JSON scenario file; applied on top of --preset");
  run->add_option("--seed", o.seed, "Base seed");
  run->add_option("--realizations", o.realizations, "Channel realizations");
  run->add_option("--snr-db", o.snr_db, "SNR grid in dB")->delimiter(',');
  run->add_option("--algorithms", o.algorithms, "Algorithm tags")->delimiter(',');
  run->add_option("--out", o.out, "Sample CSV path");
  run->add_option("--summary", o.summary, "Summary CSV path (default <out>_summary.csv)");
  run->add_option("--gap-report", o.gap_report, "Per-realization gap CSV path");
  run->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--n-tx", o.n_tx, "BS antennas");
  run->add_option("--n-rx", o.n_rx, "Antennas per user");
  run->add_option("--users", o.n_users, "Users");
  run->add_option("--subcarriers", o.n_subcarriers, "Subcarriers");
  run->add_option("--streams", o.n_streams, "Streams per user");
  run->add_option("--n-rf", o.n_rf_tx, "BS RF chains");
  run->add_option("--n-rf-rx", o.n_rf_rx, "RF chains per user");
  app.add_subcommand("presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? exit_ok : exit_config;
  }
  if (app.got_subcommand("presets")) {
    for (const auto& n : preset_names()) log << n << '\n';
    return exit_ok;
  }
  try {
    return execute_run(o, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"dpsbf_sim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), log, err);
}

}  // namespace dpsbf
