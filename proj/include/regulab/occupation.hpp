#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regulab/common.hpp"
#include "regulab/fbm.hpp"
#include "regulab/grid.hpp"

namespace regulab {

/// Family of occupation densities L_{t_i} of one path, stored on a shared
/// value grid.  Slice i approximates the occupation measure of [0, t_i)
/// divided by the bin volume; its mass is exactly t_i by construction.
struct LocalTimeDensity {
  ValueGrid grid;
  TimeGrid time;
  std::vector<std::size_t> nodes;  // strictly increasing path-node indices
  std::vector<double> density;     // nodes.size() x grid.total(), row-major
  double sigma = 0.0;              // smoothing bandwidth in value units

  std::size_t count() const { return nodes.size(); }
  double time_at(std::size_t i) const { return time.t(nodes[i]); }

  std::span<const double> slice(std::size_t i) const {
    const std::size_t n = grid.total();
    return std::span<const double>(density.data() + i * n, n);
  }

  /// Total mass sum L * h^N of slice i.
  double mass(std::size_t i) const { return pairwise_sum(slice(i)) * grid.cell_volume(); }

  /// Density increment L_{t_j} - L_{t_i} (j > i).
  std::vector<double> increment(std::size_t i, std::size_t j) const {
    auto a = slice(i), b = slice(j);
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = b[k] - a[k];
    return out;
  }
};

namespace detail {

/// Separable truncated-Gaussian smoothing with unit-sum kernel weights: the
/// total mass is preserved whenever the support stays inside the box.
inline void smooth_density(std::vector<double>& slice, const ValueGrid& grid, double sigma) {
  for (std::size_t axis = 0; axis < grid.dim; ++axis) {
    const double h = grid.h(axis);
    const long radius = static_cast<long>(std::ceil(4.0 * sigma / h));
    if (radius == 0) continue;
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
      kernel[i + radius] = std::exp(-0.5 * sq(static_cast<double>(i) * h / sigma));
      ksum += kernel[i + radius];
    }
    for (double& k : kernel) k /= ksum;

    // Convolve along `axis`.  Iterate over all lines of the flat array.
    std::size_t stride = 1;
    for (std::size_t a = axis + 1; a < grid.dim; ++a) stride *= grid.bins;
    const std::size_t n = slice.size();
    std::vector<double> line(grid.bins), out(grid.bins);
    for (std::size_t base = 0; base < n; ++base) {
      const std::size_t along = (base / stride) % grid.bins;
      if (along != 0) continue;  // visit each line once, at its first element
      for (std::size_t i = 0; i < grid.bins; ++i) line[i] = slice[base + i * stride];
      for (std::size_t i = 0; i < grid.bins; ++i) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long j = static_cast<long>(i) + k;
          if (j < 0 || j >= static_cast<long>(grid.bins)) continue;
          acc += kernel[k + radius] * line[j];
        }
        out[i] = acc;
      }
      for (std::size_t i = 0; i < grid.bins; ++i) slice[base + i * stride] = out[i];
    }
  }
}

}  // namespace detail

/// Occupation densities of the path at the given (strictly increasing) node
/// indices.  Sample k < node contributes dt / h^N to the bin of w_{t_k}
/// (left-endpoint convention, so mass(i) = t_i exactly).  sigma > 0 smooths
/// every slice with a truncated Gaussian kernel of that bandwidth.
inline LocalTimeDensity local_time_family(const SamplePath& path, const ValueGrid& grid,
                                          const std::vector<std::size_t>& nodes, double sigma) {
  if (grid.dim != path.dim) throw std::invalid_argument("local_time_family: grid/path dim mismatch");
  if (nodes.empty()) throw std::invalid_argument("local_time_family: no time nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] > path.grid.steps)
      throw std::invalid_argument("local_time_family: node beyond path end");
    if (i > 0 && nodes[i] <= nodes[i - 1])
      throw std::invalid_argument("local_time_family: nodes must be strictly increasing");
  }
  if (sigma < 0.0) throw std::invalid_argument("local_time_family: sigma must be >= 0");

  LocalTimeDensity fam;
  fam.grid = grid;
  fam.time = path.grid;
  fam.nodes = nodes;
  fam.sigma = sigma;
  const std::size_t nbins = grid.total();
  fam.density.assign(nodes.size() * nbins, 0.0);

  std::vector<double> running(nbins, 0.0);
  const double weight = path.grid.dt() / grid.cell_volume();
  std::size_t k = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (; k < nodes[i]; ++k)
      running[grid.locate(path.value(k), "time index " + std::to_string(k))] += weight;
    std::copy(running.begin(), running.end(), fam.density.begin() + i * nbins);
  }
  if (sigma > 0.0) {
    std::vector<double> tmp(nbins);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      tmp.assign(fam.density.begin() + i * nbins, fam.density.begin() + (i + 1) * nbins);
      detail::smooth_density(tmp, grid, sigma);
      std::copy(tmp.begin(), tmp.end(), fam.density.begin() + i * nbins);
    }
  }
  return fam;
}

/// Single occupation histogram of [0, t_node) without smoothing.
inline std::vector<double> occupation_histogram(const SamplePath& path, std::size_t node,
                                                const ValueGrid& grid) {
  LocalTimeDensity fam = local_time_family(path, grid, {node}, 0.0);
  return {fam.slice(0).begin(), fam.slice(0).end()};
}

/// Left-Riemann time quadrature of f along the path: sum_{k < node} f(w_k) dt.
inline double occupation_integral(const std::function<double(std::span<const double>)>& f,
                                  const SamplePath& path, std::size_t node) {
  if (node > path.grid.steps) throw std::invalid_argument("occupation_integral: node beyond path");
  std::vector<double> terms(node);
  for (std::size_t k = 0; k < node; ++k) terms[k] = f(path.value(k));
  return pairwise_sum(terms) * path.grid.dt();
}

/// Value-space pairing sum f(z_b) L_b h^N — the dual route to
/// occupation_integral through the occupation density.
inline double occupation_pairing(std::span<const double> f_on_grid, std::span<const double> density,
                                 const ValueGrid& grid) {
  if (f_on_grid.size() != density.size() || density.size() != grid.total())
    throw std::invalid_argument("occupation_pairing: size mismatch");
  std::vector<double> terms(density.size());
  for (std::size_t b = 0; b < density.size(); ++b) terms[b] = f_on_grid[b] * density[b];
  return pairwise_sum(terms) * grid.cell_volume();
}

/// Discrete gradient magnitude per bin: central differences inside, one-sided
/// at the box edges, Euclidean norm across axes.
inline std::vector<double> grid_gradient_magnitude(std::span<const double> values,
                                                   const ValueGrid& grid) {
  if (values.size() != grid.total())
    throw std::invalid_argument("grid_gradient_magnitude: size mismatch");
  const std::size_t n = values.size();
  std::vector<double> mag(n, 0.0);
  for (std::size_t axis = 0; axis < grid.dim; ++axis) {
    std::size_t stride = 1;
    for (std::size_t a = axis + 1; a < grid.dim; ++a) stride *= grid.bins;
    const double h = grid.h(axis);
    for (std::size_t flat = 0; flat < n; ++flat) {
      const std::size_t i = (flat / stride) % grid.bins;
      double g;
      if (i == 0)
        g = (values[flat + stride] - values[flat]) / h;
      else if (i == grid.bins - 1)
        g = (values[flat] - values[flat - stride]) / h;
      else
        g = (values[flat + stride] - values[flat - stride]) / (2.0 * h);
      mag[flat] += g * g;
    }
  }
  for (double& m : mag) m = std::sqrt(m);
  return mag;
}

/// Discrete L^rho norm (sum |v|^rho h^N)^{1/rho}; rho = infinity gives the
/// sup norm (no volume factor).
inline double lp_norm(std::span<const double> values, const ValueGrid& grid, double rho) {
  if (!(rho >= 1.0)) throw std::invalid_argument("lp_norm: rho must be >= 1 (or inf)");
  if (values.size() != grid.total()) throw std::invalid_argument("lp_norm: size mismatch");
  if (std::isinf(rho)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  std::vector<double> p(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) p[i] = std::pow(std::abs(values[i]), rho);
  return std::pow(pairwise_sum(p) * grid.cell_volume(), 1.0 / rho);
}

/// Discrete W^{1,rho} norm: (sum |L|^rho h^N)^{1/rho} + (sum |grad L|^rho h^N)^{1/rho}.
/// rho = infinity gives sup-norm versions of both parts.
inline double sobolev_norm(std::span<const double> values, const ValueGrid& grid, double rho) {
  const std::vector<double> mag = grid_gradient_magnitude(values, grid);
  return lp_norm(values, grid, rho) + lp_norm(mag, grid, rho);
}

struct TimeRegularityEstimate {
  double gamma = 1.0;
  bool degenerate = false;
  std::vector<double> lag_times;  // abscissae used by the fit
  std::vector<double> lag_norms;  // sup_i ||L_{t_{i+lag}} - L_{t_i}||_{W^{1,rho}}
};

/// Hoelder-in-time exponent of t -> L_t in W^{1,rho}: least-squares slope of
/// log sup-increment-norm against log lag over dyadic lags.  Requires a
/// uniformly spaced family; flags a degenerate fit when increments vanish.
inline TimeRegularityEstimate estimate_time_regularity(const LocalTimeDensity& fam, double rho) {
  const std::size_t nt = fam.count();
  if (nt < 9) throw std::invalid_argument("estimate_time_regularity: need >= 9 family nodes");
  const std::size_t spacing = fam.nodes[1] - fam.nodes[0];
  for (std::size_t i = 1; i + 1 < nt; ++i)
    if (fam.nodes[i + 1] - fam.nodes[i] != spacing)
      throw std::invalid_argument("estimate_time_regularity: family must be uniformly spaced");

  TimeRegularityEstimate est;
  const std::size_t max_lag = (nt - 1) / 2;
  for (std::size_t lag = 1; lag <= max_lag; lag *= 2) {
    double sup = 0.0;
    for (std::size_t i = 0; i + lag < nt; ++i) {
      const std::vector<double> inc = fam.increment(i, i + lag);
      sup = std::max(sup, sobolev_norm(inc, fam.grid, rho));
    }
    est.lag_times.push_back(static_cast<double>(lag * spacing) * fam.time.dt());
    est.lag_norms.push_back(sup);
  }
  if (est.lag_times.size() < 3) throw std::invalid_argument("estimate_time_regularity: too few lags");

  double max_norm = 0.0;
  for (double v : est.lag_norms) max_norm = std::max(max_norm, v);
  if (max_norm < 1e-14) {
    est.gamma = 1.0;
    est.degenerate = true;
    return est;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < est.lag_times.size(); ++i)
    if (est.lag_norms[i] > 0.0) {
      lx.push_back(std::log(est.lag_times[i]));
      ly.push_back(std::log(est.lag_norms[i]));
    }
  if (lx.size() < 3) {
    est.gamma = 1.0;
    est.degenerate = true;
    return est;
  }
  est.gamma = std::clamp(fit_line(lx, ly).slope, 1e-12, 1.0);
  return est;
}

/// Hoelder-in-time seminorm of the family measured over all stored pairs:
/// sup_{i<j} ||L_{t_j} - L_{t_i}||_{W^{1,rho}} / (t_j - t_i)^gamma.
inline double local_time_holder_norm(const LocalTimeDensity& fam, double rho, double gamma) {
  double sup = 0.0;
  for (std::size_t i = 0; i < fam.count(); ++i)
    for (std::size_t j = i + 1; j < fam.count(); ++j) {
      const std::vector<double> inc = fam.increment(i, j);
      const double dtij = fam.time_at(j) - fam.time_at(i);
      sup = std::max(sup, sobolev_norm(inc, fam.grid, rho) / std::pow(dtij, gamma));
    }
  return sup;
}

/// Exponent bookkeeping for the regularity budget coupling the path roughness
/// H, the local-time space regularity lambda, the time exponent gamma, and
/// the potential integrability pair (r, q) for a potential with singularity
/// exponent eta in dimension dim.
struct RegularityBudget {
  double hurst = 0.1;
  double lambda = 1.0;
  double gamma = 0.75;
  double r = 1.0;
  double q = 1.0;
  double eta = -1.0;
  std::size_t dim = 1;

  /// Largest admissible space exponent: lambda < 1/(2H) - N/2.
  double lambda_space_max() const { return 1.0 / (2.0 * hurst) - static_cast<double>(dim) / 2.0; }
  /// Largest admissible time exponent: gamma < 1 - (lambda + N/2) H.
  double gamma_max() const { return 1.0 - (lambda + static_cast<double>(dim) / 2.0) * hurst; }

  bool space_ok() const { return lambda < lambda_space_max(); }
  bool time_ok() const { return gamma >= 0.0 && gamma < gamma_max(); }
  /// Coupled Sobolev window: 1 <= lambda < 1 + N/2 and lambda > 1 - (N + 4 eta)/2.
  bool sobolev_ok() const {
    const double n = static_cast<double>(dim);
    return lambda >= 1.0 && lambda < 1.0 + n / 2.0 && lambda > 1.0 - (n + 4.0 * eta) / 2.0;
  }
  bool exponents_ok() const { return r >= 1.0 && q >= r; }
  bool admissible() const { return space_ok() && time_ok() && sobolev_ok() && exponents_ok(); }

  double r_conjugate() const { return r <= 1.0 ? inf : r / (r - 1.0); }
  double q_conjugate() const { return q <= 1.0 ? inf : q / (q - 1.0); }

  /// Roughness threshold for the singular example: H < 1 / max(2 - 4 eta, N).
  static double hurst_threshold(double eta, std::size_t dim) {
    return 1.0 / std::max(2.0 - 4.0 * eta, static_cast<double>(dim));
  }
};

}  // namespace regulab
