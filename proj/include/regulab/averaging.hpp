#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regulab/common.hpp"
#include "regulab/fbm.hpp"
#include "regulab/fft.hpp"
#include "regulab/grid.hpp"
#include "regulab/occupation.hpp"
#include "regulab/potential.hpp"

namespace regulab {

namespace detail {

/// Hoelder-conjugate exponent: 1/rho + 1/rho' = 1, with 1 <-> infinity.
inline double conjugate_exponent(double rho) {
  if (!(rho >= 1.0)) throw std::invalid_argument("conjugate_exponent: rho must be >= 1 (or inf)");
  if (std::isinf(rho)) return 1.0;
  if (rho == 1.0) return inf;
  return rho / (rho - 1.0);
}

/// Full linear convolution of two scalar fields sampled at bin centers,
/// scaled by the integration cell volume.  Both grids must share the same
/// spacing per axis; the result lives on the Minkowski-sum box, whose bin
/// centers are exactly the pairwise sums of the input bin centers.
inline std::pair<ValueGrid, std::vector<double>> convolve_samples(const ValueGrid& ga,
                                                                  std::span<const double> a,
                                                                  const ValueGrid& gb,
                                                                  std::span<const double> b) {
  if (ga.dim != gb.dim)
    throw std::invalid_argument("convolve_samples: grid dimensions differ");
  if (a.size() != ga.total() || b.size() != gb.total())
    throw std::invalid_argument("convolve_samples: data/grid size mismatch");
  std::vector<double> lo(ga.dim), hi(ga.dim);
  for (std::size_t x = 0; x < ga.dim; ++x) {
    const double ha = ga.h(x), hb = gb.h(x);
    if (std::abs(ha - hb) > 1e-9 * std::max(ha, hb))
      throw std::invalid_argument("convolve_samples: grid spacings are not commensurate");
    lo[x] = ga.lo[x] + gb.lo[x] + 0.5 * ha;
    hi[x] = ga.hi[x] + gb.hi[x] - 0.5 * ha;
  }
  const std::vector<std::size_t> sa(ga.dim, ga.bins), sb(gb.dim, gb.bins);
  std::vector<double> out = fft::convolve_full(std::vector<double>(a.begin(), a.end()), sa,
                                               std::vector<double>(b.begin(), b.end()), sb);
  const double vol = gb.cell_volume();
  for (double& v : out) v *= vol;
  ValueGrid og(ga.dim, ga.bins + gb.bins - 1, std::move(lo), std::move(hi));
  return {std::move(og), std::move(out)};
}

}  // namespace detail

/// Averaged drift (b * L_{s,t}) sampled on the Minkowski-sum value grid of
/// the potential box and the occupation box, with multilinear interpolation
/// (zero outside the box, where the convolution genuinely vanishes).  The
/// recorded sup bound is the discrete Cauchy-Schwarz bound
/// max_c ||b_c||_{L^2} ||L_{s,t}||_{L^2}, an unconditional ceiling for every
/// table value.
struct DriftTable {
  SampledPotential table;  // sampled (b * L_{s,t}), component-major
  double time_lo = 0.0;
  double time_hi = 0.0;
  double sup_bound = 0.0;

  const ValueGrid& grid() const { return table.grid; }
  std::size_t dim() const { return table.dim; }

  double eval_component(std::size_t c, std::span<const double> u) const {
    return table.eval_component(c, u);
  }
  std::vector<double> eval(std::span<const double> u) const { return table.eval(u); }
};

/// Convolves a sampled potential with an occupation density over the window
/// [s, t], turning the time average of b along the path into a space
/// convolution.  The density grid must share the potential grid's spacing.
inline DriftTable convolve_local_time(const SampledPotential& b, const ValueGrid& density_grid,
                                      std::span<const double> density, double s, double t) {
  if (!(t >= s)) throw std::invalid_argument("convolve_local_time: needs t >= s");
  DriftTable drift;
  drift.time_lo = s;
  drift.time_hi = t;
  drift.table.dim = b.dim;
  drift.table.epsilon = b.epsilon;

  const double density_l2 = lp_norm(density, density_grid, 2.0);
  for (std::size_t c = 0; c < b.dim; ++c) {
    auto [og, vals] = detail::convolve_samples(b.grid, b.component(c), density_grid, density);
    if (c == 0) {
      drift.table.grid = og;
      drift.table.values.assign(b.dim * og.total(), 0.0);
    }
    const double bound = lp_norm(b.component(c), b.grid, 2.0) * density_l2;
    drift.sup_bound = std::max(drift.sup_bound, bound);
    double sup = 0.0;
    for (double v : vals) {
      if (!std::isfinite(v))
        throw numeric_abort("averaging", "convolved drift has a non-finite value");
      sup = std::max(sup, std::abs(v));
    }
    if (sup > bound * (1.0 + 1e-6) + 1e-12)
      throw numeric_abort("averaging", "convolved drift exceeds its Cauchy-Schwarz bound");
    std::copy(vals.begin(), vals.end(), drift.table.component(c).begin());
  }
  return drift;
}

/// Convenience overload taking two recorded nodes of a local-time family;
/// the density is the increment L_{t_j} - L_{t_i}.
inline DriftTable convolve_local_time(const SampledPotential& b, const LocalTimeDensity& family,
                                      std::size_t node_i, std::size_t node_j) {
  if (node_j >= family.count() || node_i > node_j)
    throw std::invalid_argument("convolve_local_time: need node_i <= node_j < family size");
  const std::vector<double> density = node_i == node_j
                                          ? std::vector<double>(family.grid.total(), 0.0)
                                          : family.increment(node_i, node_j);
  return convolve_local_time(b, family.grid, density, family.time_at(node_i),
                             family.time_at(node_j));
}

/// Direct left-Riemann quadrature of the averaged drift
/// integral_s^t b(u - w_r) dr between two path nodes: the independent oracle
/// for convolve_local_time.  The integrand must be evaluable pointwise.
inline std::vector<double> averaging_direct(
    const std::function<std::vector<double>(std::span<const double>)>& b, const SamplePath& path,
    std::size_t k0, std::size_t k1, std::span<const double> u) {
  if (k1 > path.grid.steps || k0 > k1)
    throw std::invalid_argument("averaging_direct: need k0 <= k1 <= path steps");
  if (u.size() != path.dim) throw std::invalid_argument("averaging_direct: wrong point dim");
  const std::size_t n = k1 - k0;
  std::vector<std::vector<double>> terms(path.dim, std::vector<double>(n, 0.0));
  std::vector<double> arg(path.dim);
  for (std::size_t k = 0; k < n; ++k) {
    const std::span<const double> w = path.value(k0 + k);
    for (std::size_t c = 0; c < path.dim; ++c) arg[c] = u[c] - w[c];
    const std::vector<double> v = b(arg);
    if (v.size() != path.dim)
      throw std::invalid_argument("averaging_direct: integrand has wrong field dimension");
    for (std::size_t c = 0; c < path.dim; ++c) terms[c][k] = v[c];
  }
  std::vector<double> out(path.dim, 0.0);
  for (std::size_t c = 0; c < path.dim; ++c) out[c] = pairwise_sum(terms[c]) * path.grid.dt();
  return out;
}

/// Analytic-potential overload.  Quadrature needs a continuous integrand, so
/// singular exponents (eta < 0) are rejected; mollify first instead.
inline std::vector<double> averaging_direct(const PotentialSpec& spec, const SamplePath& path,
                                            std::size_t k0, std::size_t k1,
                                            std::span<const double> u) {
  if (spec.eta < 0.0)
    throw std::invalid_argument(
        "averaging_direct: potential with eta < 0 is singular; direct quadrature needs a "
        "continuous integrand");
  return averaging_direct(
      [&spec](std::span<const double> z) { return eval_potential(spec, z); }, path, k0, k1, u);
}

/// Outcome of the convolution-regularity inequality
///   ||f * g||_sup + ||grad(f * g)||_sup <= ||f||_{L^rho} ||g||_{W^{1,rho'}}
/// with conjugate rho'; the 5% slack absorbs one-sided differences at the
/// box edges of the discrete gradient.
struct YoungBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
};

inline YoungBoundCheck young_bound_check(const ValueGrid& fgrid, std::span<const double> f,
                                         const ValueGrid& ggrid, std::span<const double> g,
                                         double rho) {
  const double rho_conj = detail::conjugate_exponent(rho);
  auto [ogrid, conv] = detail::convolve_samples(fgrid, f, ggrid, g);
  const std::vector<double> mag = grid_gradient_magnitude(conv, ogrid);
  YoungBoundCheck check;
  for (double v : conv) check.lhs = std::max(check.lhs, std::abs(v));
  double grad_sup = 0.0;
  for (double m : mag) grad_sup = std::max(grad_sup, m);
  check.lhs += grad_sup;
  check.rhs = lp_norm(f, fgrid, rho) * sobolev_norm(g, ggrid, rho_conj);
  check.pass = check.lhs <= 1.05 * check.rhs;
  return check;
}

}  // namespace regulab
