// SPDX-License-Identifier: Apache-2.0
//
// Frequency-selective clustered (Saleh-Valenzuela) mm-wave MIMO channels on
// planar half-wavelength arrays.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpsbf/error.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"
#include "dpsbf/rng.hpp"

namespace dpsbf {

struct ChannelParams {
  int n_clusters = 3;
  int n_rays = 8;
  double cluster_power = 1.0;
  double angle_spread_deg = 10.0;  // standard deviation of the Laplacian ray offsets
  int n_delay_taps = 16;

  bool operator==(const ChannelParams&) const = default;
};

inline void validate_channel_params(const ChannelParams& p) {
  if (p.n_clusters < 1) throw Error(ErrorCode::invalid_argument, "n_clusters >= 1");
  if (p.n_rays < 1) throw Error(ErrorCode::invalid_argument, "n_rays >= 1");
  if (!(p.angle_spread_deg > 0.0)) throw Error(ErrorCode::invalid_argument, "angle_spread_deg > 0");
  if (!(p.cluster_power > 0.0)) throw Error(ErrorCode::invalid_argument, "cluster_power > 0");
  if (p.n_delay_taps < 1) throw Error(ErrorCode::invalid_argument, "n_delay_taps >= 1");
}

/// Laplacian scale b for an angular spread given as a standard deviation (σ = √2·b).
inline double laplacian_scale(double spread_rad) { return spread_rad / std::sqrt(2.0); }

inline bool is_perfect_square(int n) {
  if (n <= 0) return false;
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n;
}

/// Grid shape for an n-element planar array: the square USPA when n is a
/// perfect square, otherwise the most nearly square rows×cols factorization.
inline std::pair<int, int> planar_grid(int n) {
  if (n <= 0) throw Error(ErrorCode::invalid_argument, "array size must be positive");
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (n % rows != 0) --rows;
  return {rows, n / rows};
}

/// Unit-norm response of a rows×cols half-wavelength planar array. Element
/// (m, n), stored at index m·cols + n, has phase π(m·sin(az)·sin(el) + n·cos(el)).
inline CVector planar_array_response(int rows, int cols, double azimuth, double elevation) {
  const int n = rows * cols;
  CVector a(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double u = std::sin(azimuth) * std::sin(elevation);
  const double v = std::cos(elevation);
  for (int m = 0; m < rows; ++m)
    for (int q = 0; q < cols; ++q) a(m * cols + q) = scale * unit_phasor(kPi * (m * u + q * v));
  return a;
}

/// USPA response; `array_size` must be a perfect square.
inline CVector array_response(int array_size, double azimuth, double elevation) {
  if (!is_perfect_square(array_size))
    throw Error(ErrorCode::invalid_argument, "USPA size must be a perfect square, got " + std::to_string(array_size));
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(array_size))));
  return planar_array_response(side, side, azimuth, elevation);
}

inline CVector planar_array_response(int array_size, double azimuth, double elevation) {
  const auto [rows, cols] = planar_grid(array_size);
  return planar_array_response(rows, cols, azimuth, elevation);
}

struct PathRay {
  int cluster = 0;
  int tap = 0;
  double aod_az = 0.0;
  double aod_el = 0.0;
  double aoa_az = 0.0;
  double aoa_el = 0.0;
  cdouble gain;
};

namespace detail {

inline double sample_laplacian(Philox4x32& rng, double scale) {
  if (scale == 0.0) {
    (void)rng.uniform();
    return 0.0;
  }
  const double u = rng.uniform() - 0.5;  // [-0.5, 0.5)
  const double mag = std::max(1e-300, 1.0 - 2.0 * std::abs(u));
  return -scale * std::copysign(1.0, u) * std::log(mag);
}

/// Circularly-symmetric complex Gaussian with the given variance (Box-Muller).
inline cdouble sample_complex_gaussian(Philox4x32& rng, double variance) {
  const double u1 = std::max(rng.uniform(), 0x1.0p-60);
  const double u2 = rng.uniform();
  const double r = std::sqrt(-variance * std::log(u1));
  return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
}

}  // namespace detail

/// Cluster means: azimuths uniform on [0, 2π), elevations uniform on [0, π),
/// one uniformly drawn delay tap per cluster. Each ray offsets all four
/// angles by independent Laplacian draws and carries a CN(0, σ_α²) gain.
inline std::vector<PathRay> sample_path_angles(Philox4x32& rng, const ChannelParams& params) {
  const double b = laplacian_scale(params.angle_spread_deg * kPi / 180.0);
  std::vector<PathRay> rays;
  rays.reserve(static_cast<std::size_t>(params.n_clusters) * params.n_rays);
  for (int c = 0; c < params.n_clusters; ++c) {
    const double aod_az = 2.0 * kPi * rng.uniform();
    const double aod_el = kPi * rng.uniform();
    const double aoa_az = 2.0 * kPi * rng.uniform();
    const double aoa_el = kPi * rng.uniform();
    const int taps = std::max(1, params.n_delay_taps);
    const int tap = std::min(taps - 1, static_cast<int>(rng.uniform() * taps));
    for (int r = 0; r < params.n_rays; ++r) {
      PathRay ray;
      ray.cluster = c;
      ray.tap = tap;
      ray.aod_az = aod_az + detail::sample_laplacian(rng, b);
      ray.aod_el = aod_el + detail::sample_laplacian(rng, b);
      ray.aoa_az = aoa_az + detail::sample_laplacian(rng, b);
      ray.aoa_el = aoa_el + detail::sample_laplacian(rng, b);
      ray.gain = detail::sample_complex_gaussian(rng, params.cluster_power);
      rays.push_back(ray);
    }
  }
  return rays;
}

/// H_{k,f} for every user and subcarrier.
struct ChannelRealization {
  int n_users = 0;
  int n_subcarriers = 0;
  std::uint64_t seed = 0;
  std::vector<CMatrix> h;  // index f·K + k

  const CMatrix& at(int k, int f) const {
    return h.at(static_cast<std::size_t>(f) * n_users + static_cast<std::size_t>(k));
  }
  CMatrix& at(int k, int f) { return h.at(static_cast<std::size_t>(f) * n_users + static_cast<std::size_t>(k)); }

  bool operator==(const ChannelRealization&) const = default;
};

/// Per-user delay-tap matrices H_d, before the subcarrier DFT.
inline std::vector<CMatrix> channel_taps(const SystemConfig& cfg, const ChannelParams& params, std::uint64_t seed,
                                         int user) {
  Philox4x32 rng(seed, static_cast<std::uint64_t>(user));
  const auto rays = sample_path_angles(rng, params);
  const double gamma =
      std::sqrt(static_cast<double>(cfg.n_tx) * cfg.n_rx / (static_cast<double>(params.n_clusters) * params.n_rays));
  std::vector<CMatrix> taps(static_cast<std::size_t>(params.n_delay_taps), CMatrix::Zero(cfg.n_rx, cfg.n_tx));
  for (const auto& ray : rays) {
    const CVector ar = planar_array_response(cfg.n_rx, ray.aoa_az, ray.aoa_el);
    const CVector at = planar_array_response(cfg.n_tx, ray.aod_az, ray.aod_el);
    taps[static_cast<std::size_t>(ray.tap)] += (gamma * ray.gain) * ar * at.adjoint();
  }
  return taps;
}

/// H_{k,f} = Σ_d H_d·exp(−j2π·f·d/F). Deterministic in (cfg, params, seed);
/// each user draws from its own Philox stream.
inline ChannelRealization generate_channel(const SystemConfig& cfg, const ChannelParams& params, std::uint64_t seed) {
  validate_channel_params(params);
  if (cfg.n_tx <= 0 || cfg.n_rx <= 0 || cfg.n_users <= 0 || cfg.n_subcarriers <= 0)
    throw Error(ErrorCode::dimension_violation, "channel dimensions must be positive");
  ChannelRealization out;
  out.n_users = cfg.n_users;
  out.n_subcarriers = cfg.n_subcarriers;
  out.seed = seed;
  out.h.assign(static_cast<std::size_t>(cfg.n_users) * cfg.n_subcarriers, CMatrix());
  const double F = cfg.n_subcarriers;
  for (int k = 0; k < cfg.n_users; ++k) {
    const auto taps = channel_taps(cfg, params, seed, k);
    for (int f = 0; f < cfg.n_subcarriers; ++f) {
      CMatrix hf = CMatrix::Zero(cfg.n_rx, cfg.n_tx);
      for (int d = 0; d < params.n_delay_taps; ++d)
        hf += unit_phasor(-2.0 * kPi * f * d / F) * taps[static_cast<std::size_t>(d)];
      out.at(k, f) = std::move(hf);
    }
  }
  return out;
}

// Text dump format:
//   dpsbf-channel 1
//   <K> <F> <N_r> <N_t> <seed>
//   then K·F blocks in (f, k) order, each N_r lines of N_t "re im" pairs (row-major).

inline void write_channel(std::ostream& os, const ChannelRealization& ch) {
  if (ch.h.empty()) throw Error(ErrorCode::invalid_argument, "empty channel");
  const auto rows = ch.h.front().rows();
  const auto cols = ch.h.front().cols();
  os << "dpsbf-channel 1\n" << ch.n_users << ' ' << ch.n_subcarriers << ' ' << rows << ' ' << cols << ' ' << ch.seed
     << '\n';
  os << std::setprecision(17);
  for (const auto& m : ch.h) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (j) os << ' ';
        os << m(i, j).real() << ' ' << m(i, j).imag();
      }
      os << '\n';
    }
  }
}

inline ChannelRealization read_channel(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "dpsbf-channel" || version != 1)
    throw Error(ErrorCode::config_error, "not a dpsbf-channel v1 stream");
  ChannelRealization ch;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> ch.n_users >> ch.n_subcarriers >> rows >> cols >> ch.seed) || ch.n_users <= 0 ||
      ch.n_subcarriers <= 0 || rows <= 0 || cols <= 0)
    throw Error(ErrorCode::config_error, "bad channel header");
  ch.h.assign(static_cast<std::size_t>(ch.n_users) * ch.n_subcarriers, CMatrix(rows, cols));
  for (auto& m : ch.h)
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        double re = 0.0, im = 0.0;
        if (!(is >> re >> im)) throw Error(ErrorCode::config_error, "truncated channel data");
        m(i, j) = {re, im};
      }
  return ch;
}

inline void save_channel(const std::string& path, const ChannelRealization& ch) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::config_error, "cannot open " + path);
  write_channel(os, ch);
}

inline ChannelRealization load_channel(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::config_error, "cannot open " + path);
  return read_channel(is);
}

}  // namespace dpsbf
