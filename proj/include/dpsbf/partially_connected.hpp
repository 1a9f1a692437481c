// SPDX-License-Identifier: Apache-2.0
//
// Partially-connected DPS hybrid precoding. Each antenna row i of the target
// contributes an observation y_i = F_optᵀ(i,:); a cluster D_j of antennas is
// served by one RF chain, whose best rank-one fit comes from the principal
// eigenvector of Σ_{i∈D_j} y_i·y_iᴴ. Mapping design (fixed, greedy, modified
// K-means) chooses the clusters.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"

namespace dpsbf {

/// D_j = adjacent antennas j·n_tx/n_rf … (j+1)·n_tx/n_rf − 1.
inline MappingSets fixed_block_mapping(int n_tx, int n_rf) {
  if (n_tx <= 0 || n_rf <= 0 || n_rf > n_tx) throw Error(ErrorCode::invalid_argument, "need 0 < n_rf <= n_tx");
  if (n_tx % n_rf != 0)
    throw Error(ErrorCode::divisibility_violation,
                std::to_string(n_tx) + " antennas cannot be split evenly over " + std::to_string(n_rf) + " RF chains");
  MappingSets m;
  const int size = n_tx / n_rf;
  m.clusters.resize(static_cast<std::size_t>(n_rf));
  for (int j = 0; j < n_rf; ++j)
    for (int i = 0; i < size; ++i) m.clusters[static_cast<std::size_t>(j)].push_back(j * size + i);
  return m;
}

/// Observation vectors as columns: column i is y_i = F_optᵀ(i,:).
inline CMatrix observations(const CMatrix& f_opt) { return f_opt.transpose(); }

inline CMatrix gather_columns(const CMatrix& y, const std::vector<int>& idx) {
  CMatrix out(y.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = y.col(idx[c]);
  return out;
}

struct SubproblemSolution {
  CVector x;             // unit-norm centroid, F_BB(j,:) = xᵀ
  CVector gains;         // a_i = xᴴ·y_i / ‖x‖², in the order rows were given
  double lambda = 0.0;   // λ₁(Σ y_i y_iᴴ)
  double residual = 0.0; // Σ‖y_i‖² − λ₁
};

/// Rank-one fit of a set of observation vectors (given as columns).
inline SubproblemSolution solve_subproblem(const CMatrix& rows) {
  if (rows.cols() == 0) throw Error(ErrorCode::invalid_argument, "subproblem needs at least one row");
  SubproblemSolution s;
  const auto pc = principal_component(rows);
  s.x = pc.vector;
  s.lambda = pc.value;
  s.gains = (s.x.adjoint() * rows).transpose() / s.x.squaredNorm();
  s.residual = std::max(0.0, rows.squaredNorm() - s.lambda);
  return s;
}

struct PartialSplit {
  CMatrix f_rf;  // one non-zero per row
  CMatrix f_bb;  // n_rf × columns of the target
  double residual = 0.0;  // ‖F_opt‖_F² − Σ_j λ_j
  std::vector<double> lambdas;
};

/// Optimal F_RF ∈ A_b and F_BB for a given mapping, chain by chain.
inline PartialSplit hybrid_partial(const CMatrix& f_opt, const MappingSets& mapping) {
  validate_mapping(mapping, static_cast<int>(f_opt.rows()));
  const CMatrix y = observations(f_opt);
  PartialSplit out;
  out.f_rf = CMatrix::Zero(f_opt.rows(), mapping.n_rf());
  out.f_bb = CMatrix::Zero(mapping.n_rf(), f_opt.cols());
  double captured = 0.0;
  for (int j = 0; j < mapping.n_rf(); ++j) {
    const auto& idx = mapping.clusters[static_cast<std::size_t>(j)];
    const auto sol = solve_subproblem(gather_columns(y, idx));
    for (std::size_t c = 0; c < idx.size(); ++c) out.f_rf(idx[c], j) = sol.gains(static_cast<Eigen::Index>(c));
    out.f_bb.row(j) = sol.x.transpose();
    out.lambdas.push_back(sol.lambda);
    captured += sol.lambda;
  }
  out.residual = std::max(0.0, f_opt.squaredNorm() - captured);
  return out;
}

/// Σ_j λ₁(Σ_{i∈D_j} y_i·y_iᴴ).
inline double mapping_objective(const CMatrix& f_opt, const MappingSets& mapping) {
  validate_mapping(mapping, static_cast<int>(f_opt.rows()));
  const CMatrix y = observations(f_opt);
  double total = 0.0;
  for (const auto& c : mapping.clusters) total += principal_component(gather_columns(y, c)).value;
  return total;
}

struct MappingResult {
  MappingSets mapping;
  int iterations = 0;
  long evd_count = 0;
  std::vector<double> distortion_trace;
  bool converged = true;
};

namespace detail {

/// |y_iᴴy_l| / (‖y_i‖‖y_l‖) from a Gram matrix; 1 when either vector is zero.
inline double normalized_correlation(const CMatrix& gram, int i, int l) {
  const double ni = gram(i, i).real();
  const double nl = gram(l, l).real();
  if (ni <= 0.0 || nl <= 0.0) return 1.0;
  return std::abs(gram(i, l)) / std::sqrt(ni * nl);
}

inline CMatrix principal_submatrix(const CMatrix& gram, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  CMatrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return out;
}

}  // namespace detail

/// Greedy dynamic mapping. Seeds: the largest-norm row first, then repeatedly
/// the unassigned row whose largest normalized correlation with the seeds is
/// smallest (larger norm, then lower index, breaks ties). Afterwards the
/// (antenna, chain) pair with the largest increase of λ₁ is connected until
/// every antenna is assigned.
inline MappingResult greedy_mapping(const CMatrix& f_opt, int n_rf) {
  const int n_tx = static_cast<int>(f_opt.rows());
  if (n_rf < 1 || n_rf > n_tx) throw Error(ErrorCode::invalid_argument, "need 1 <= n_rf <= n_tx");
  const CMatrix y = observations(f_opt);
  const CMatrix gram = y.adjoint() * y;  // gram(i,l) = y_iᴴ y_l
  auto norm2 = [&](int i) { return gram(i, i).real(); };

  MappingResult out;
  out.mapping.clusters.resize(static_cast<std::size_t>(n_rf));
  std::vector<char> assigned(static_cast<std::size_t>(n_tx), 0);
  std::vector<int> seeds;
  for (int j = 0; j < n_rf; ++j) {
    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_tx; ++i) {
      if (assigned[static_cast<std::size_t>(i)]) continue;
      double score = 0.0;
      if (!seeds.empty() && norm2(i) <= 0.0) score = 1.0;
      for (int s : seeds) score = std::max(score, detail::normalized_correlation(gram, i, s));
      if (best < 0 || score < best_score || (score == best_score && norm2(i) > norm2(best))) {
        best = i;
        best_score = score;
      }
    }
    seeds.push_back(best);
    assigned[static_cast<std::size_t>(best)] = 1;
    out.mapping.clusters[static_cast<std::size_t>(j)].push_back(best);
  }

  std::vector<double> lambda(static_cast<std::size_t>(n_rf));
  for (int j = 0; j < n_rf; ++j) lambda[static_cast<std::size_t>(j)] = norm2(seeds[static_cast<std::size_t>(j)]);

  // gain[i][j]: λ₁(D_j ∪ {i}) − λ₁(D_j), refreshed only for the chain that changed
  std::vector<std::vector<double>> gain(static_cast<std::size_t>(n_tx), std::vector<double>(static_cast<std::size_t>(n_rf), 0.0));
  auto refresh = [&](int j) {
    auto idx = out.mapping.clusters[static_cast<std::size_t>(j)];
    idx.push_back(-1);
    for (int i = 0; i < n_tx; ++i) {
      if (assigned[static_cast<std::size_t>(i)]) continue;
      idx.back() = i;
      gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          largest_eigenvalue(detail::principal_submatrix(gram, idx)) - lambda[static_cast<std::size_t>(j)];
      ++out.evd_count;
    }
  };
  for (int j = 0; j < n_rf; ++j) refresh(j);

  for (int remaining = n_tx - n_rf; remaining > 0; --remaining) {
    int bi = -1, bj = -1;
    double bg = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_tx; ++i) {
      if (assigned[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n_rf; ++j)
        if (gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > bg) {
          bg = gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          bi = i;
          bj = j;
        }
    }
    assigned[static_cast<std::size_t>(bi)] = 1;
    out.mapping.clusters[static_cast<std::size_t>(bj)].push_back(bi);
    lambda[static_cast<std::size_t>(bj)] += bg;
    ++out.iterations;
    if (remaining > 1) refresh(bj);
  }
  for (auto& c : out.mapping.clusters) std::sort(c.begin(), c.end());
  double total = 0.0;
  for (double l : lambda) total += l;
  out.distortion_trace.push_back(total);
  return out;
}

/// Initial centroids: ⌊n_rf/2⌋ disjoint pairs of rows with the smallest
/// normalized inner products, plus, for odd n_rf, the row least correlated
/// with the chosen ones. Returns the chosen row indices.
inline std::vector<int> kmeans_initial_rows(const CMatrix& gram, int n_rf) {
  const int n = static_cast<int>(gram.rows());
  struct Pair {
    double corr;
    int i, l;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int l = i + 1; l < n; ++l) pairs.push_back({detail::normalized_correlation(gram, i, l), i, l});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.corr < b.corr; });
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<int> rows;
  for (const auto& p : pairs) {
    if (static_cast<int>(rows.size()) >= 2 * (n_rf / 2)) break;
    if (used[static_cast<std::size_t>(p.i)] || used[static_cast<std::size_t>(p.l)]) continue;
    used[static_cast<std::size_t>(p.i)] = used[static_cast<std::size_t>(p.l)] = 1;
    rows.push_back(p.i);
    rows.push_back(p.l);
  }
  while (static_cast<int>(rows.size()) < n_rf) {
    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      double score = 0.0;
      for (int r : rows) score = std::max(score, detail::normalized_correlation(gram, i, r));
      if (score < best_score) {
        best = i;
        best_score = score;
      }
    }
    used[static_cast<std::size_t>(best)] = 1;
    rows.push_back(best);
  }
  return rows;
}

/// Modified K-means for dynamic mapping. Alternates assignment of each row to
/// the centroid with the largest |y_iᴴx_j|² and centroid update to the
/// principal eigenvector of its cluster, until the assignment repeats or
/// max_iter rounds ran. The trace records Σ_j λ₁ after every round.
inline MappingResult kmeans_mapping(const CMatrix& f_opt, int n_rf, int max_iter = 50) {
  const int n_tx = static_cast<int>(f_opt.rows());
  if (n_rf < 1 || n_rf > n_tx) throw Error(ErrorCode::invalid_argument, "need 1 <= n_rf <= n_tx");
  const CMatrix y = observations(f_opt);
  const CMatrix gram = y.adjoint() * y;

  MappingResult out;
  CMatrix centroids(y.rows(), n_rf);
  {
    const auto rows = kmeans_initial_rows(gram, n_rf);
    for (int j = 0; j < n_rf; ++j) {
      const CVector yj = y.col(rows[static_cast<std::size_t>(j)]);
      const double nj = yj.norm();
      if (nj > 0.0) {
        centroids.col(j) = yj / nj;
      } else {
        centroids.col(j).setZero();
        centroids(j % y.rows(), j) = 1.0;
      }
    }
  }

  std::vector<int> owner(static_cast<std::size_t>(n_tx), -1);
  out.converged = false;
  for (int round = 0; round < max_iter; ++round) {
    // cluster update
    const RMatrix score = (y.adjoint() * centroids).cwiseAbs2();  // n_tx × n_rf
    std::vector<int> next(static_cast<std::size_t>(n_tx));
    std::vector<int> count(static_cast<std::size_t>(n_rf), 0);
    for (int i = 0; i < n_tx; ++i) {
      int best = 0;
      for (int j = 1; j < n_rf; ++j)
        if (score(i, j) > score(i, best)) best = j;
      next[static_cast<std::size_t>(i)] = best;
      ++count[static_cast<std::size_t>(best)];
    }
    // empty-cluster repair: move the worst-fitting row of a multi-row cluster
    for (int j = 0; j < n_rf; ++j) {
      if (count[static_cast<std::size_t>(j)] > 0) continue;
      int worst = -1;
      double worst_fit = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_tx; ++i) {
        if (count[static_cast<std::size_t>(next[static_cast<std::size_t>(i)])] < 2) continue;
        const double n2 = gram(i, i).real();
        const double fit = n2 > 0.0 ? score.row(i).maxCoeff() / n2 : 0.0;
        if (fit < worst_fit) {
          worst_fit = fit;
          worst = i;
        }
      }
      --count[static_cast<std::size_t>(next[static_cast<std::size_t>(worst)])];
      next[static_cast<std::size_t>(worst)] = j;
      ++count[static_cast<std::size_t>(j)];
    }
    if (next == owner) {
      out.converged = true;
      break;
    }
    owner = std::move(next);

    // centroid update
    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(n_rf));
    for (int i = 0; i < n_tx; ++i) clusters[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])].push_back(i);
    double distortion = 0.0;
    for (int j = 0; j < n_rf; ++j) {
      const auto pc = principal_component(gather_columns(y, clusters[static_cast<std::size_t>(j)]));
      ++out.evd_count;
      centroids.col(j) = pc.vector;
      distortion += pc.value;
    }
    out.distortion_trace.push_back(distortion);
    ++out.iterations;
    out.mapping.clusters = std::move(clusters);
  }
  if (!out.converged && out.mapping.clusters.empty())
    throw Error(ErrorCode::non_convergence, "K-means ran no rounds");
  return out;
}

/// Δ = Σ_{p≤n_rf} λ_p(F_optᴴF_opt) − Σ_j λ₁(Y_jY_jᴴ): the extra approximation
/// error of the partially-connected structure over the fully-connected one.
inline double gap_delta(const CMatrix& f_opt, const MappingSets& mapping, int n_rf) {
  if (mapping.n_rf() != n_rf) throw Error(ErrorCode::invalid_argument, "mapping size differs from n_rf");
  // λ_p(F_optᴴF_opt) = λ_p(F_opt·F_optᴴ); the N_t × N_t side is the smaller one here
  const CMatrix outer = f_opt.rows() <= f_opt.cols() ? CMatrix(f_opt * f_opt.adjoint()) : CMatrix(f_opt.adjoint() * f_opt);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(outer, Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();  // ascending
  double top = 0.0;
  for (Eigen::Index p = 0; p < std::min<Eigen::Index>(n_rf, ev.size()); ++p) top += std::max(0.0, ev(ev.size() - 1 - p));
  return top - mapping_objective(f_opt, mapping);
}

}  // namespace dpsbf
