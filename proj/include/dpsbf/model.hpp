// SPDX-License-Identifier: Apache-2.0
//
// Configuration and matrix-bundle types shared by every precoding stage.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"

namespace dpsbf {

/// Dimensions and noise level of a multiuser OFDM downlink.
struct SystemConfig {
  int n_tx = 0;           // BS antennas
  int n_rx = 0;           // antennas per user
  int n_users = 0;        // K
  int n_subcarriers = 0;  // F
  int n_streams = 0;      // streams per user per subcarrier
  int n_rf_tx = 0;        // BS RF chains
  int n_rf_rx = 0;        // RF chains per user
  double noise_var = 1.0;
  std::vector<double> snr_grid_db;

  int streams_per_subcarrier() const { return n_users * n_streams; }
  /// Column count of the concatenated digital precoder, K·N_s·F.
  int digital_columns() const { return n_users * n_streams * n_subcarriers; }
  /// Target transmit power K·N_s·F.
  double power_budget() const { return static_cast<double>(digital_columns()); }

  bool operator==(const SystemConfig&) const = default;
};

/// Noise variance for an SNR point; SNR is defined as 1/σ².
inline double noise_var_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

enum class MappingRequirement { none, fixed_block };

struct ConfigViolation {
  ErrorCode code;
  std::string text;
};

/// Every violated invariant of `cfg`, in a fixed order.
inline std::vector<ConfigViolation> config_violations(const SystemConfig& cfg,
                                                      MappingRequirement mapping = MappingRequirement::none) {
  std::vector<ConfigViolation> out;
  auto dim = [&](bool ok, const std::string& text) {
    if (!ok) out.push_back({ErrorCode::dimension_violation, text});
  };
  dim(cfg.n_tx > 0, "N_t > 0");
  dim(cfg.n_rx > 0, "N_r > 0");
  dim(cfg.n_users > 0, "K > 0");
  dim(cfg.n_subcarriers >= 1, "F >= 1");
  dim(cfg.n_streams > 0, "N_s > 0");
  dim(cfg.n_rf_tx > 0, "N_RF^t > 0");
  dim(cfg.n_rf_rx > 0, "N_RF^r > 0");
  dim(cfg.noise_var > 0.0 && std::isfinite(cfg.noise_var), "noise_var > 0");
  dim(cfg.n_users * cfg.n_streams <= cfg.n_rf_tx, "K*N_s <= N_RF^t");
  dim(cfg.n_rf_tx < cfg.n_tx, "N_RF^t < N_t");
  dim(cfg.n_streams <= cfg.n_rf_rx, "N_s <= N_RF^r");
  dim(cfg.n_rf_rx < cfg.n_rx, "N_RF^r < N_r");
  for (double snr : cfg.snr_grid_db)
    if (!std::isfinite(snr)) {
      dim(false, "finite SNR grid");
      break;
    }
  if (mapping == MappingRequirement::fixed_block && cfg.n_rf_tx > 0 && cfg.n_tx % cfg.n_rf_tx != 0) {
    std::ostringstream os;
    os << "N_t mod N_RF^t == 0 (" << cfg.n_tx << " mod " << cfg.n_rf_tx << " = " << cfg.n_tx % cfg.n_rf_tx << ")";
    out.push_back({ErrorCode::divisibility_violation, os.str()});
  }
  return out;
}

/// Returns `cfg` unchanged when every invariant holds; otherwise throws an
/// Error listing each violated inequality. The code is divisibility_violation
/// only when that is the sole kind of violation.
inline SystemConfig validate_config(const SystemConfig& cfg,
                                    MappingRequirement mapping = MappingRequirement::none) {
  const auto violations = config_violations(cfg, mapping);
  if (violations.empty()) return cfg;
  ErrorCode code = ErrorCode::divisibility_violation;
  std::string msg = "violated:";
  for (const auto& v : violations) {
    if (v.code == ErrorCode::dimension_violation) code = ErrorCode::dimension_violation;
    msg += " [" + v.text + "]";
  }
  throw Error(code, msg);
}

/// K×F grid of equally shaped complex blocks, one per (user, subcarrier).
/// Concatenation is subcarrier-major: column block index f·K + k.
class BlockGrid {
 public:
  BlockGrid() = default;

  BlockGrid(int n_users, int n_subcarriers, Eigen::Index rows, Eigen::Index cols)
      : users_(n_users), subcarriers_(n_subcarriers), rows_(rows), cols_(cols),
        blocks_(static_cast<std::size_t>(n_users) * n_subcarriers, CMatrix::Zero(rows, cols)) {
    if (n_users <= 0 || n_subcarriers <= 0 || rows < 0 || cols < 0)
      throw Error(ErrorCode::shape_mismatch, "BlockGrid needs positive user and subcarrier counts");
  }

  static BlockGrid from_concat(const CMatrix& flat, int n_users, int n_subcarriers, Eigen::Index block_cols) {
    if (flat.cols() != static_cast<Eigen::Index>(n_users) * n_subcarriers * block_cols)
      throw Error(ErrorCode::shape_mismatch, "concatenated matrix has wrong column count");
    BlockGrid g(n_users, n_subcarriers, flat.rows(), block_cols);
    for (int f = 0; f < n_subcarriers; ++f)
      for (int k = 0; k < n_users; ++k)
        g.at(k, f) = flat.middleCols((static_cast<Eigen::Index>(f) * n_users + k) * block_cols, block_cols);
    return g;
  }

  int users() const { return users_; }
  int subcarriers() const { return subcarriers_; }
  Eigen::Index block_rows() const { return rows_; }
  Eigen::Index block_cols() const { return cols_; }
  bool empty() const { return blocks_.empty(); }

  const CMatrix& at(int k, int f) const { return blocks_.at(index(k, f)); }
  CMatrix& at(int k, int f) { return blocks_.at(index(k, f)); }

  /// Replaces a block; the shape must match the grid's block shape.
  void set(int k, int f, CMatrix m) {
    if (m.rows() != rows_ || m.cols() != cols_)
      throw Error(ErrorCode::shape_mismatch, "block shape does not match grid");
    at(k, f) = std::move(m);
  }

  /// All users' blocks on subcarrier f, side by side.
  CMatrix subcarrier(int f) const {
    CMatrix out(rows_, cols_ * users_);
    for (int k = 0; k < users_; ++k) out.middleCols(k * cols_, cols_) = at(k, f);
    return out;
  }

  /// One user's blocks over all subcarriers, side by side.
  CMatrix user(int k) const {
    CMatrix out(rows_, cols_ * subcarriers_);
    for (int f = 0; f < subcarriers_; ++f) out.middleCols(f * cols_, cols_) = at(k, f);
    return out;
  }

  CMatrix concat() const {
    CMatrix out(rows_, cols_ * users_ * subcarriers_);
    for (int f = 0; f < subcarriers_; ++f)
      for (int k = 0; k < users_; ++k)
        out.middleCols((static_cast<Eigen::Index>(f) * users_ + k) * cols_, cols_) = at(k, f);
    return out;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& b : blocks_) s += b.squaredNorm();
    return s;
  }

  BlockGrid& operator*=(cdouble s) {
    for (auto& b : blocks_) b *= s;
    return *this;
  }

 private:
  std::size_t index(int k, int f) const {
    if (k < 0 || k >= users_ || f < 0 || f >= subcarriers_)
      throw Error(ErrorCode::shape_mismatch, "block index out of range");
    return static_cast<std::size_t>(f) * users_ + k;
  }

  int users_ = 0;
  int subcarriers_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<CMatrix> blocks_;
};

/// Partition of antenna indices (0-based) over RF chains.
struct MappingSets {
  std::vector<std::vector<int>> clusters;

  int n_rf() const { return static_cast<int>(clusters.size()); }

  /// Chain index of every antenna, or -1 for unassigned ones.
  std::vector<int> owner(int n_tx) const {
    std::vector<int> out(static_cast<std::size_t>(n_tx), -1);
    for (int j = 0; j < n_rf(); ++j)
      for (int i : clusters[static_cast<std::size_t>(j)])
        if (i >= 0 && i < n_tx) out[static_cast<std::size_t>(i)] = j;
    return out;
  }

  bool operator==(const MappingSets&) const = default;
};

/// Throws unless the clusters are non-empty, disjoint and cover 0..n_tx-1.
inline void validate_mapping(const MappingSets& m, int n_tx) {
  std::vector<int> seen(static_cast<std::size_t>(std::max(n_tx, 0)), 0);
  for (const auto& c : m.clusters) {
    if (c.empty()) throw Error(ErrorCode::invalid_argument, "mapping has an empty cluster");
    for (int i : c) {
      if (i < 0 || i >= n_tx) throw Error(ErrorCode::invalid_argument, "antenna index out of range");
      if (seen[static_cast<std::size_t>(i)]++) throw Error(ErrorCode::invalid_argument, "antenna mapped twice");
    }
  }
  for (int s : seen)
    if (s == 0) throw Error(ErrorCode::invalid_argument, "mapping does not cover every antenna");
}

enum class Structure { fully_digital, fully_connected, partially_connected };

/// Complete precoder and combiner set for one channel realization.
///
/// f_bb holds the per-(k,f) blocks of the hybrid digital precoder before any
/// interference cascade; f_b holds the final per-(k,f) digital precoders that
/// are transmitted (F_BB_f·F_BD_{k,f} when the cascade is on, scaled to the
/// power budget). f_bd is present only when the cascade ran.
struct PrecoderBundle {
  CMatrix f_rf;
  BlockGrid f_bb;
  BlockGrid f_b;
  std::optional<BlockGrid> f_bd;
  std::vector<CMatrix> w_rf;
  BlockGrid w_bb;
  Structure structure = Structure::fully_connected;
  std::optional<MappingSets> mapping;

  /// Checks every shape against `cfg`; throws shape_mismatch on the first problem.
  void check_shapes(const SystemConfig& cfg) const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::shape_mismatch, what); };
    if (f_rf.rows() != cfg.n_tx) fail("f_rf must have N_t rows");
    const auto n_rf = f_rf.cols();
    auto grid_ok = [&](const BlockGrid& g, Eigen::Index rows, Eigen::Index cols, const char* name) {
      if (g.empty() || g.users() != cfg.n_users || g.subcarriers() != cfg.n_subcarriers || g.block_rows() != rows ||
          g.block_cols() != cols)
        fail(std::string(name) + " has the wrong shape");
    };
    grid_ok(f_bb, n_rf, cfg.n_streams, "f_bb");
    grid_ok(f_b, n_rf, cfg.n_streams, "f_b");
    if (f_bd) grid_ok(*f_bd, cfg.streams_per_subcarrier(), cfg.n_streams, "f_bd");
    if (static_cast<int>(w_rf.size()) != cfg.n_users) fail("w_rf needs one combiner per user");
    const auto n_rf_rx = w_rf.empty() ? 0 : w_rf.front().cols();
    for (const auto& w : w_rf)
      if (w.rows() != cfg.n_rx || w.cols() != n_rf_rx) fail("w_rf blocks must be N_r x N_RF^r");
    grid_ok(w_bb, n_rf_rx, cfg.n_streams, "w_bb");
    if (structure == Structure::partially_connected) {
      if (!mapping) fail("partially-connected bundle needs its mapping");
      if (mapping->n_rf() != n_rf) fail("mapping size differs from RF chain count");
    }
  }

  /// Sum over (k,f) of ‖F_RF·F_B,k,f‖_F².
  double transmit_power() const {
    double p = 0.0;
    for (int f = 0; f < f_b.subcarriers(); ++f)
      for (int k = 0; k < f_b.users(); ++k) p += (f_rf * f_b.at(k, f)).squaredNorm();
    return p;
  }

  CMatrix precoder(int k, int f) const { return f_rf * f_b.at(k, f); }
  CMatrix combiner(int k, int f) const { return w_rf.at(static_cast<std::size_t>(k)) * w_bb.at(k, f); }
};

/// Invariant report for a bundle; `ok()` when all hold.
struct BundleReport {
  bool structure_ok = true;
  bool amplitude_ok = true;
  bool power_ok = true;
  double max_rf_modulus = 0.0;
  double power = 0.0;
  std::vector<std::string> problems;

  bool ok() const { return structure_ok && amplitude_ok && power_ok; }
};

/// Checks the structure, DPS amplitude and transmit-power invariants.
/// With `exact_power` the power must equal the budget (relative tolerance
/// `rel_tol`); otherwise it must not exceed it.
inline BundleReport check_bundle(const PrecoderBundle& b, const SystemConfig& cfg, bool exact_power = true,
                                 double rel_tol = 1e-9) {
  BundleReport r;
  b.check_shapes(cfg);
  if (b.structure == Structure::partially_connected) {
    const auto owner = b.mapping->owner(cfg.n_tx);
    for (Eigen::Index i = 0; i < b.f_rf.rows(); ++i) {
      int nonzero = 0;
      for (Eigen::Index j = 0; j < b.f_rf.cols(); ++j) {
        if (b.f_rf(i, j) != cdouble(0.0, 0.0)) {
          ++nonzero;
          if (owner[static_cast<std::size_t>(i)] != j) r.structure_ok = false;
        }
      }
      if (nonzero > 1) r.structure_ok = false;
    }
    if (!r.structure_ok) r.problems.emplace_back("partial F_RF row pattern does not match its mapping");
  }
  r.max_rf_modulus = max_abs(b.f_rf);
  for (const auto& w : b.w_rf) r.max_rf_modulus = std::max(r.max_rf_modulus, max_abs(w));
  if (r.max_rf_modulus > 2.0 + 1e-9) {
    r.amplitude_ok = false;
    r.problems.emplace_back("analog entry modulus exceeds 2");
  }
  r.power = b.transmit_power();
  const double budget = cfg.power_budget();
  r.power_ok = exact_power ? std::abs(r.power - budget) <= rel_tol * budget : r.power <= budget * (1.0 + rel_tol);
  if (!r.power_ok) r.problems.emplace_back("transmit power off budget");
  return r;
}

}  // namespace dpsbf
