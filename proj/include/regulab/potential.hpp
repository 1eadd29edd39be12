#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "regulab/common.hpp"
#include "regulab/fft.hpp"
#include "regulab/grid.hpp"

namespace regulab {

/// Analytic potential b(u) = -|u|^{eta-1} u on the ball |u| <= cutoff, zero
/// outside.  eta < 1 makes the origin singular; callers mollify before use.
struct PotentialSpec {
  double eta = -1.0;
  double cutoff = 1.0;
  std::size_t dim = 1;

  PotentialSpec() = default;
  PotentialSpec(double eta_, double cutoff_, std::size_t dim_)
      : eta(eta_), cutoff(cutoff_), dim(dim_) {
    if (!(eta >= -2.0 && eta <= 1.0)) throw std::invalid_argument("PotentialSpec: eta in [-2,1]");
    if (!(cutoff > 0.0)) throw std::invalid_argument("PotentialSpec: cutoff must be positive");
    if (dim < 1 || dim > 3) throw std::invalid_argument("PotentialSpec: dim in {1,2,3}");
  }
};

/// Pointwise analytic evaluation.  Throws at the origin when eta < 1.
inline std::vector<double> eval_potential(const PotentialSpec& spec, std::span<const double> u) {
  if (u.size() != spec.dim) throw std::invalid_argument("eval_potential: wrong dimension");
  double norm2 = 0.0;
  for (double x : u) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  std::vector<double> out(spec.dim, 0.0);
  if (norm > spec.cutoff) return out;
  if (norm == 0.0) {
    if (spec.eta < 1.0) throw std::invalid_argument("eval_potential: singular at the origin");
    return out;  // eta = 1: -u vanishes at 0
  }
  const double factor = -std::pow(norm, spec.eta - 1.0);
  for (std::size_t c = 0; c < spec.dim; ++c) out[c] = factor * u[c];
  return out;
}

/// Vector field sampled at value-grid centers, component-major storage.
/// Evaluation is multilinear between centers and zero outside the box, so a
/// sampled field is always compactly supported.
struct SampledPotential {
  ValueGrid grid;
  std::size_t dim = 1;          // components of the field value
  std::vector<double> values;   // dim x grid.total(), component-major
  double epsilon = 0.0;         // mollification bandwidth used to build it

  std::span<const double> component(std::size_t c) const {
    return std::span<const double>(values.data() + c * grid.total(), grid.total());
  }
  std::span<double> component(std::size_t c) {
    return std::span<double>(values.data() + c * grid.total(), grid.total());
  }

  /// Multilinear interpolation of one component; zero outside the grid box.
  double eval_component(std::size_t c, std::span<const double> u) const {
    if (u.size() != grid.dim) throw std::invalid_argument("SampledPotential: wrong point dim");
    std::array<std::size_t, 3> base{};
    std::array<double, 3> frac{};
    for (std::size_t a = 0; a < grid.dim; ++a) {
      if (u[a] < grid.lo[a] || u[a] > grid.hi[a]) return 0.0;
      const double pos = (u[a] - grid.lo[a]) / grid.h(a) - 0.5;  // center coordinates
      if (pos <= 0.0) {
        base[a] = 0;
        frac[a] = 0.0;
      } else if (pos >= static_cast<double>(grid.bins - 1)) {
        base[a] = grid.bins - 2;
        frac[a] = 1.0;
      } else {
        const double fl = std::floor(pos);
        base[a] = static_cast<std::size_t>(fl);
        frac[a] = pos - fl;
      }
    }
    const std::span<const double> comp = component(c);
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << grid.dim;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      double weight = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < grid.dim; ++a) {
        const bool hi = (mask >> a) & 1u;
        weight *= hi ? frac[a] : 1.0 - frac[a];
        flat = flat * grid.bins + base[a] + (hi ? 1 : 0);
      }
      acc += weight * comp[flat];
    }
    return acc;
  }

  std::vector<double> eval(std::span<const double> u) const {
    std::vector<double> out(dim);
    for (std::size_t c = 0; c < dim; ++c) out[c] = eval_component(c, u);
    return out;
  }

  /// Build a table by sampling an arbitrary vector field at bin centers.
  static SampledPotential from_function(
      const ValueGrid& grid, std::size_t dim,
      const std::function<std::vector<double>(std::span<const double>)>& f) {
    SampledPotential t;
    t.grid = grid;
    t.dim = dim;
    t.values.assign(dim * grid.total(), 0.0);
    std::vector<double> point(grid.dim);
    for (std::size_t b = 0; b < grid.total(); ++b) {
      const auto idx = grid.unflatten(b);
      for (std::size_t a = 0; a < grid.dim; ++a) point[a] = grid.center(a, idx[a]);
      const std::vector<double> v = f(point);
      if (v.size() != dim) throw std::invalid_argument("from_function: wrong field dimension");
      for (std::size_t c = 0; c < dim; ++c) t.values[c * grid.total() + b] = v[c];
    }
    return t;
  }
};

/// Raw sampling of the analytic potential (no mollification).  Bin centers on
/// a symmetric grid never hit the origin, so this is well defined; refining
/// such grids probes the integrability frontier.
inline SampledPotential sample_potential(const PotentialSpec& spec, const ValueGrid& grid) {
  if (grid.dim != spec.dim) throw std::invalid_argument("sample_potential: dim mismatch");
  return SampledPotential::from_function(
      grid, spec.dim, [&](std::span<const double> u) { return eval_potential(spec, u); });
}

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 -
                           (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

/// Integrate f over [a,b] with an n-point Gauss-Legendre rule.
inline double gl_integrate(const std::function<double(double)>& f, double a, double b,
                           std::size_t n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * f(mid + half * x[i]);
  return acc * half;
}

/// Normalized Gaussian of deviation eps truncated at |x| <= 4 eps.
struct TruncatedGaussian {
  double eps;
  double norm;
  explicit TruncatedGaussian(double e)
      : eps(e), norm(1.0 / (e * std::sqrt(2.0 * std::numbers::pi) * std::erf(4.0 / std::sqrt(2.0)))) {}
  double operator()(double x) const {
    if (std::abs(x) > 4.0 * eps) return 0.0;
    return norm * std::exp(-0.5 * sq(x / eps));
  }
};

/// One-dimensional mollification of the singular potential at a point u > 0,
/// by the odd reduction b_eps(u) = -int_0^K z^eta [rho(u-z) - rho(u+z)] dz.
/// The bracket vanishes linearly at z=0, so the integrand is z^{1+eta} there;
/// the substitution z = y^{2/(2+eta)} removes the remaining singularity.
inline double mollified_singular_1d(double u, double eta, double cutoff,
                                    const TruncatedGaussian& rho) {
  const double reach = 4.0 * rho.eps;
  const double z1 = std::min(cutoff, u + reach);
  auto integrand = [&](double z) { return std::pow(z, eta) * (rho(u - z) - rho(u + z)); };
  double acc = 0.0;
  if (u > reach) {
    const double z0 = u - reach;
    if (z0 < z1) acc = gl_integrate(integrand, z0, z1, 96);
  } else {
    const double kappa = 2.0 / (2.0 + eta);
    auto sub = [&](double y) {
      const double z = std::pow(y, kappa);
      return kappa * std::pow(y, kappa - 1.0) * integrand(z);
    };
    acc = gl_integrate(sub, 0.0, std::pow(z1, 1.0 / kappa), 192);
  }
  return -acc;
}

}  // namespace detail

/// Mollify the analytic potential onto a table: b_eps = b * rho_eps with a
/// truncated Gaussian mollifier.  Exactly odd on symmetric grids (in
/// particular b_eps(0) = 0), finite everywhere, sup norm growing like
/// eps^eta for eta < 0.  Requires grid spacing <= eps/4 and eta > -2 (the
/// convolution integral diverges at eta = -2).
inline SampledPotential mollify_potential(const PotentialSpec& spec, double eps,
                                          const ValueGrid& grid) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify_potential: eps must be positive");
  if (!(spec.eta > -2.0))
    throw std::invalid_argument("mollify_potential: eta must exceed -2 for a finite convolution");
  if (grid.dim != spec.dim) throw std::invalid_argument("mollify_potential: dim mismatch");
  for (std::size_t a = 0; a < grid.dim; ++a)
    if (grid.h(a) > eps / 4.0 + 1e-15)
      throw std::invalid_argument("mollify_potential: grid spacing must be <= eps/4");

  SampledPotential table;
  table.grid = grid;
  table.dim = spec.dim;
  table.values.assign(spec.dim * grid.total(), 0.0);
  table.epsilon = eps;

  if (spec.dim == 1) {
    const detail::TruncatedGaussian rho(eps);
    for (std::size_t b = 0; b < grid.bins; ++b) {
      const double u = grid.center(0, b);
      if (u == 0.0) continue;
      const double v = detail::mollified_singular_1d(std::abs(u), spec.eta, spec.cutoff, rho);
      table.values[b] = u > 0.0 ? v : -v;
    }
  } else {
    // Grid convolution of the raw samples with a product-Gaussian kernel; the
    // origin cell is zeroed (its contribution vanishes with the cell size for
    // eta > -N).  Kernel weights are normalized discretely to unit sum.
    SampledPotential raw = SampledPotential::from_function(
        grid, spec.dim, [&](std::span<const double> u) -> std::vector<double> {
          double n2 = 0.0;
          for (double x : u) n2 += x * x;
          if (std::sqrt(n2) < 0.5 * grid.h(0)) return std::vector<double>(spec.dim, 0.0);
          return eval_potential(spec, u);
        });
    const long radius = static_cast<long>(std::ceil(4.0 * eps / grid.h(0)));
    const std::size_t klen = static_cast<std::size_t>(2 * radius + 1);
    std::vector<double> kernel(1, 1.0);
    std::vector<std::size_t> kshape;
    {
      std::vector<double> axis(klen);
      for (long j = -radius; j <= radius; ++j)
        axis[static_cast<std::size_t>(j + radius)] =
            std::exp(-0.5 * sq(static_cast<double>(j) * grid.h(0) / eps));
      std::vector<double> acc(1, 1.0);
      for (std::size_t a = 0; a < grid.dim; ++a) {
        std::vector<double> next(acc.size() * klen);
        for (std::size_t i = 0; i < acc.size(); ++i)
          for (std::size_t j = 0; j < klen; ++j) next[i * klen + j] = acc[i] * axis[j];
        acc = std::move(next);
        kshape.push_back(klen);
      }
      kernel = std::move(acc);
      const double total = pairwise_sum(kernel);
      for (double& k : kernel) k /= total;
    }
    const std::vector<std::size_t> bshape(grid.dim, grid.bins);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      const std::vector<double> comp(raw.component(c).begin(), raw.component(c).end());
      const std::vector<double> full = fft::convolve_full(comp, bshape, kernel, kshape);
      // crop the centered window back to the original shape
      std::vector<std::size_t> fshape(grid.dim);
      for (std::size_t a = 0; a < grid.dim; ++a) fshape[a] = grid.bins + klen - 1;
      for (std::size_t b = 0; b < grid.total(); ++b) {
        const auto idx = grid.unflatten(b);
        std::size_t flat = 0;
        for (std::size_t a = 0; a < grid.dim; ++a)
          flat = flat * fshape[a] + idx[a] + static_cast<std::size_t>(radius);
        table.values[c * grid.total() + b] = full[flat];
      }
    }
  }

  // Exact odd symmetry on symmetric grids: antisymmetrize u -> -u pairs.
  bool symmetric = true;
  for (std::size_t a = 0; a < grid.dim; ++a)
    if (std::abs(grid.lo[a] + grid.hi[a]) > 1e-12 * (grid.hi[a] - grid.lo[a])) symmetric = false;
  if (symmetric) {
    for (std::size_t c = 0; c < spec.dim; ++c) {
      auto comp = table.component(c);
      for (std::size_t b = 0; b < grid.total(); ++b) {
        auto idx = grid.unflatten(b);
        std::size_t mirror = 0;
        for (std::size_t a = 0; a < grid.dim; ++a)
          mirror = mirror * grid.bins + (grid.bins - 1 - idx[a]);
        if (mirror < b) continue;
        const double anti = 0.5 * (comp[b] - comp[mirror]);
        comp[b] = anti;
        comp[mirror] = -anti;
      }
    }
  }
  return table;
}

/// Mollify an already-sampled field by discrete convolution with the sampled
/// truncated-Gaussian kernel (unit discrete mass).  Same spacing contract.
inline SampledPotential mollify_table(const SampledPotential& in, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify_table: eps must be positive");
  for (std::size_t a = 0; a < in.grid.dim; ++a)
    if (in.grid.h(a) > eps / 4.0 + 1e-15)
      throw std::invalid_argument("mollify_table: grid spacing must be <= eps/4");
  SampledPotential out = in;
  out.epsilon = eps;
  const long radius = static_cast<long>(std::ceil(4.0 * eps / in.grid.h(0)));
  const std::size_t klen = static_cast<std::size_t>(2 * radius + 1);
  std::vector<double> axis(klen);
  for (long j = -radius; j <= radius; ++j)
    axis[static_cast<std::size_t>(j + radius)] =
        std::exp(-0.5 * sq(static_cast<double>(j) * in.grid.h(0) / eps));
  std::vector<double> kernel(1, 1.0);
  std::vector<std::size_t> kshape;
  for (std::size_t a = 0; a < in.grid.dim; ++a) {
    std::vector<double> next(kernel.size() * klen);
    for (std::size_t i = 0; i < kernel.size(); ++i)
      for (std::size_t j = 0; j < klen; ++j) next[i * klen + j] = kernel[i] * axis[j];
    kernel = std::move(next);
    kshape.push_back(klen);
  }
  const double total = pairwise_sum(kernel);
  for (double& k : kernel) k /= total;

  const std::vector<std::size_t> bshape(in.grid.dim, in.grid.bins);
  std::vector<std::size_t> fshape(in.grid.dim, in.grid.bins + klen - 1);
  for (std::size_t c = 0; c < in.dim; ++c) {
    const std::vector<double> comp(in.component(c).begin(), in.component(c).end());
    const std::vector<double> full = fft::convolve_full(comp, bshape, kernel, kshape);
    for (std::size_t b = 0; b < in.grid.total(); ++b) {
      const auto idx = in.grid.unflatten(b);
      std::size_t flat = 0;
      for (std::size_t a = 0; a < in.grid.dim; ++a)
        flat = flat * fshape[a] + idx[a] + static_cast<std::size_t>(radius);
      out.values[c * in.grid.total() + b] = full[flat];
    }
  }
  return out;
}

struct MonotonicityReport {
  double max_violation = -inf;  // max of (b(u)-b(v)).(u-v) over sampled pairs
  std::vector<double> worst_u, worst_v;
  bool pass = false;
};

/// Property check of (b(u)-b(v)).(u-v) <= 1e-12 over random pairs drawn
/// uniformly from the table's box.
inline MonotonicityReport monotonicity_check(const SampledPotential& table, std::size_t pairs,
                                             std::uint64_t seed) {
  if (pairs < 10000) throw std::invalid_argument("monotonicity_check: need >= 1e4 pairs");
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> dists;
  for (std::size_t a = 0; a < table.grid.dim; ++a)
    dists.emplace_back(table.grid.lo[a], table.grid.hi[a]);
  MonotonicityReport report;
  std::vector<double> u(table.grid.dim), v(table.grid.dim);
  for (std::size_t i = 0; i < pairs; ++i) {
    for (std::size_t a = 0; a < table.grid.dim; ++a) {
      u[a] = dists[a](rng);
      v[a] = dists[a](rng);
    }
    const std::vector<double> bu = table.eval(u), bv = table.eval(v);
    double dot = 0.0;
    for (std::size_t c = 0; c < table.dim; ++c) dot += (bu[c] - bv[c]) * (u[c] - v[c]);
    if (dot > report.max_violation) {
      report.max_violation = dot;
      report.worst_u = u;
      report.worst_v = v;
    }
  }
  report.pass = report.max_violation <= 1e-12;
  return report;
}

/// Grid quadrature of (int |b|^{2q})^{1/(2q)} over the table's box, with the
/// Euclidean magnitude for vector fields.
inline double l2q_norm(const SampledPotential& table, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("l2q_norm: q must be >= 1");
  const std::size_t n = table.grid.total();
  std::vector<double> terms(n);
  for (std::size_t b = 0; b < n; ++b) {
    double m2 = 0.0;
    for (std::size_t c = 0; c < table.dim; ++c) m2 += sq(table.values[c * n + b]);
    terms[b] = std::pow(m2, q);  // |b|^{2q}
  }
  const double integral = pairwise_sum(terms) * table.grid.cell_volume();
  return std::pow(integral, 1.0 / (2.0 * q));
}

struct IntegrabilityProbe {
  std::vector<double> integrals;  // int |b|^{2q} at successive refinements
  std::vector<double> norms;      // corresponding (.)^{1/(2q)}
  bool divergent = false;         // last refinement still grows by >= 5%
};

/// Grid-refinement probe of the L^{2q} integrability frontier: the integral
/// of |b|^{2q} is recomputed on doubled grids; sustained growth marks the
/// divergent regime 2 q eta <= -N.
inline IntegrabilityProbe l2q_divergence_probe(const PotentialSpec& spec, double q,
                                               std::size_t base_bins, std::size_t levels) {
  if (levels < 2) throw std::invalid_argument("l2q_divergence_probe: need >= 2 levels");
  IntegrabilityProbe probe;
  for (std::size_t lvl = 0; lvl < levels; ++lvl) {
    const std::size_t bins = base_bins << lvl;
    const ValueGrid grid = ValueGrid::cube(spec.dim, bins, -spec.cutoff, spec.cutoff);
    const SampledPotential table = sample_potential(spec, grid);
    const double norm = l2q_norm(table, q);
    probe.norms.push_back(norm);
    probe.integrals.push_back(std::pow(norm, 2.0 * q));
  }
  const std::size_t last = probe.integrals.size() - 1;
  probe.divergent = probe.integrals[last] >= 1.05 * probe.integrals[last - 1];
  return probe;
}

}  // namespace regulab
