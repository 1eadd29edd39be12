#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "regulab/common.hpp"
#include "regulab/csvio.hpp"
#include "regulab/fft.hpp"
#include "regulab/grid.hpp"

namespace regulab {

/// Covariance of scalar fractional Brownian motion:
/// E[w_t w_s] = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double t, double s, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("fbm_covariance: H must be in (0,1)");
  if (t < 0.0 || s < 0.0) throw std::invalid_argument("fbm_covariance: times must be >= 0");
  const double twoH = 2.0 * hurst;
  return 0.5 * (std::pow(t, twoH) + std::pow(s, twoH) - std::pow(std::abs(t - s), twoH));
}

/// A driving path sampled on a dyadic time grid.  values is (steps+1) x dim
/// row-major with w_0 = 0 for synthesized kinds.
struct SamplePath {
  TimeGrid grid;
  std::size_t dim = 1;
  std::vector<double> values;
  double hurst = 0.0;       // 0 when not a fractional path
  std::uint64_t seed = 0;   // 0 when not synthesized
  std::string kind = "fbm";

  double value(std::size_t k, std::size_t c) const { return values[k * dim + c]; }
  std::span<const double> value(std::size_t k) const {
    return std::span<const double>(values.data() + k * dim, dim);
  }

  /// Per-axis min/max over all nodes (used to derive covering value grids).
  std::pair<double, double> component_range(std::size_t c) const {
    double mn = value(0, c), mx = mn;
    for (std::size_t k = 1; k <= grid.steps; ++k) {
      mn = std::min(mn, value(k, c));
      mx = std::max(mx, value(k, c));
    }
    return {mn, mx};
  }
};

inline SamplePath make_zero_path(const TimeGrid& grid, std::size_t dim) {
  SamplePath p;
  p.grid = grid;
  p.dim = dim;
  p.values.assign((grid.steps + 1) * dim, 0.0);
  p.kind = "zero";
  return p;
}

/// w_t = slope * t in every component.
inline SamplePath make_linear_path(const TimeGrid& grid, std::size_t dim, double slope) {
  SamplePath p = make_zero_path(grid, dim);
  p.kind = "linear";
  for (std::size_t k = 0; k <= grid.steps; ++k)
    for (std::size_t c = 0; c < dim; ++c) p.values[k * dim + c] = slope * grid.t(k);
  return p;
}

enum class FbmMethod { automatic, circulant, cholesky };

namespace detail {

/// Autocovariance of fractional Gaussian noise increments at step dt:
/// gamma(k) = dt^{2H} (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2.
inline double fgn_autocov(std::size_t k, double dt, double hurst) {
  const double twoH = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  return 0.5 * std::pow(dt, twoH) *
         (std::pow(kk + 1.0, twoH) - 2.0 * std::pow(kk, twoH) + std::pow(std::abs(kk - 1.0), twoH));
}

/// One scalar fGn sample of length steps via circulant embedding
/// (Davies-Harte).  Exact in law; throws when the embedding has an eigenvalue
/// below -1e-10 relative to the largest (never the case for fGn, but the
/// tolerance is enforced rather than silently truncated).
inline std::vector<double> fgn_circulant(std::size_t steps, double dt, double hurst,
                                         std::mt19937_64& rng) {
  const std::size_t m = steps, L = 2 * m;
  std::vector<std::complex<double>> c(L);
  for (std::size_t j = 0; j <= m; ++j) c[j] = {fgn_autocov(j, dt, hurst), 0.0};
  for (std::size_t j = m + 1; j < L; ++j) c[j] = c[L - j];
  fft::transform(c, {L}, true);

  double lam_max = 0.0, lam_min = 0.0;
  std::vector<double> lam(L);
  for (std::size_t j = 0; j < L; ++j) {
    lam[j] = c[j].real();
    lam_max = std::max(lam_max, lam[j]);
    lam_min = std::min(lam_min, lam[j]);
  }
  if (lam_min < -1e-10 * std::max(lam_max, 1e-300))
    throw std::runtime_error("fgn_circulant: embedding not nonnegative definite");
  for (double& l : lam) l = std::max(l, 0.0);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> v(L);
  v[0] = {std::sqrt(lam[0]) * gauss(rng), 0.0};
  v[m] = {std::sqrt(lam[m]) * gauss(rng), 0.0};
  for (std::size_t k = 1; k < m; ++k) {
    const double a = gauss(rng), b = gauss(rng);
    const double s = std::sqrt(0.5 * lam[k]);
    v[k] = {s * a, s * b};
    v[L - k] = std::conj(v[k]);
  }
  fft::transform(v, {L}, true);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  std::vector<double> inc(m);
  for (std::size_t j = 0; j < m; ++j) inc[j] = v[j].real() * scale;
  return inc;
}

/// Dense-covariance fallback: Cholesky factor of the value covariance.
inline std::vector<double> fbm_values_cholesky(const TimeGrid& grid, double hurst,
                                               std::mt19937_64& rng) {
  const std::size_t m = grid.steps;
  if (m > 4096)
    throw std::runtime_error("generate_fbm: Cholesky fallback limited to steps <= 4096");
  Eigen::MatrixXd cov(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          fbm_covariance(grid.t(i + 1), grid.t(j + 1), hurst);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("generate_fbm: Cholesky factorization failed");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd g(m);
  for (std::size_t i = 0; i < m; ++i) g(static_cast<Eigen::Index>(i)) = gauss(rng);
  Eigen::VectorXd w = llt.matrixL() * g;
  std::vector<double> vals(m);
  for (std::size_t i = 0; i < m; ++i) vals[i] = w(static_cast<Eigen::Index>(i));
  return vals;
}

}  // namespace detail

/// Samples dim independent fractional Brownian motions on the grid.
/// Deterministic: identical (grid, dim, hurst, seed, method) give
/// bit-identical output.  Component c uses an RNG stream derived from the
/// seed via SplitMix64, so components are independent and reordering-stable.
inline SamplePath generate_fbm(const TimeGrid& grid, std::size_t dim, double hurst,
                               std::uint64_t seed, FbmMethod method = FbmMethod::automatic) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("generate_fbm: H must be in (0,1)");
  if (dim == 0 || dim > 3) throw std::invalid_argument("generate_fbm: dim must be 1..3");

  SamplePath path = make_zero_path(grid, dim);
  path.kind = "fbm";
  path.hurst = hurst;
  path.seed = seed;

  std::uint64_t state = seed;
  for (std::size_t c = 0; c < dim; ++c) {
    std::mt19937_64 rng(splitmix64(state));
    if (method == FbmMethod::cholesky) {
      auto vals = detail::fbm_values_cholesky(grid, hurst, rng);
      for (std::size_t k = 1; k <= grid.steps; ++k) path.values[k * dim + c] = vals[k - 1];
      continue;
    }
    try {
      auto inc = detail::fgn_circulant(grid.steps, grid.dt(), hurst, rng);
      double acc = 0.0;
      for (std::size_t k = 1; k <= grid.steps; ++k) {
        acc += inc[k - 1];
        path.values[k * dim + c] = acc;
      }
    } catch (const std::runtime_error&) {
      if (method == FbmMethod::circulant) throw;
      std::mt19937_64 rng2(splitmix64(state));  // fresh stream for the fallback
      auto vals = detail::fbm_values_cholesky(grid, hurst, rng2);
      for (std::size_t k = 1; k <= grid.steps; ++k) path.values[k * dim + c] = vals[k - 1];
    }
  }
  return path;
}

struct HolderEstimate {
  double alpha = 1.0;
  bool degenerate = false;
};

/// Regression estimate of the path's Hoelder exponent: least-squares slope of
/// log sup-increment against log lag over dyadic lags.  Constant paths are
/// flagged degenerate (alpha reported as 1).  The result is clamped to (0, 1].
inline HolderEstimate estimate_holder_exponent(const SamplePath& path) {
  const std::size_t m = path.grid.steps;
  if (m < 16) throw std::invalid_argument("estimate_holder_exponent: need >= 16 steps");

  double sup_abs = 0.0;
  for (double v : path.values) sup_abs = std::max(sup_abs, std::abs(v));

  std::vector<double> lx, ly;
  const std::size_t max_log = std::min<std::size_t>(10, log2_exact(m) - 2);
  for (std::size_t j = 0; j <= max_log; ++j) {
    const std::size_t lag = std::size_t{1} << j;
    double sup = 0.0;
    for (std::size_t k = 0; k + lag <= m; ++k) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < path.dim; ++c)
        d2 += sq(path.value(k + lag, c) - path.value(k, c));
      sup = std::max(sup, d2);
    }
    sup = std::sqrt(sup);
    if (sup > 0.0) {
      lx.push_back(std::log(static_cast<double>(lag) * path.grid.dt()));
      ly.push_back(std::log(sup));
    }
  }

  HolderEstimate est;
  if (lx.size() < 3 || sup_abs < 1e-14) {
    est.alpha = 1.0;
    est.degenerate = true;
    return est;
  }
  est.alpha = std::clamp(fit_line(lx, ly).slope, 1e-12, 1.0);
  return est;
}

/// CSV round trip: header "t, w_1, ..., w_N", one row per node, 17
/// significant digits.
inline void write_path_csv(const SamplePath& path, const std::string& file) {
  std::vector<std::string> header{"t"};
  for (std::size_t c = 0; c < path.dim; ++c) header.push_back("w_" + std::to_string(c + 1));
  std::vector<double> cells;
  cells.reserve((path.grid.steps + 1) * (path.dim + 1));
  for (std::size_t k = 0; k <= path.grid.steps; ++k) {
    cells.push_back(path.grid.t(k));
    for (std::size_t c = 0; c < path.dim; ++c) cells.push_back(path.value(k, c));
  }
  write_csv(file, header, cells);
}

inline SamplePath read_path_csv(const std::string& file) {
  CsvTable table = read_csv(file);
  if (table.cols() < 2 || table.header[0] != "t")
    throw config_error("read_path_csv: expected header 't, w_1, ...'");
  const std::size_t rows = table.rows();
  if (rows < 3) throw config_error("read_path_csv: need at least 3 rows");
  SamplePath p;
  p.dim = table.cols() - 1;
  p.kind = "file";
  const double horizon = table.at(rows - 1, 0);
  p.grid = TimeGrid(horizon, rows - 1);
  p.values.resize(rows * p.dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double expected = p.grid.t(r);
    if (std::abs(table.at(r, 0) - expected) > 1e-9 * std::max(1.0, horizon))
      throw config_error("read_path_csv: non-uniform time column at row " + std::to_string(r));
    for (std::size_t c = 0; c < p.dim; ++c) p.values[r * p.dim + c] = table.at(r, c + 1);
  }
  return p;
}

}  // namespace regulab
