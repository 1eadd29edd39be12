#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "regulab/common.hpp"
#include "regulab/grid.hpp"

namespace regulab {

// ---------------------------------------------------------------------------
// Value-space helpers: the integrator works over scalars or nodal fields.

inline double vs_sub(double a, double b) { return a - b; }
inline void vs_add_inplace(double& a, double b) { a += b; }

inline std::vector<double> vs_sub(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vs_sub: size mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}
inline void vs_add_inplace(std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vs_add_inplace: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

/// Fixed-order pairwise reduction of germ terms (deterministic and stable).
template <typename V>
V vs_pairwise(const std::vector<V>& terms, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return terms[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  V left = vs_pairwise(terms, lo, mid);
  const V right = vs_pairwise(terms, mid, hi);
  vs_add_inplace(left, right);
  return left;
}

inline double abs_norm(double x) { return std::abs(x); }
inline std::function<double(const std::vector<double>&)> sup_norm() {
  return [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
}
inline std::function<double(const std::vector<double>&)> l2_norm(double dx) {
  return [dx](const std::vector<double>& v) {
    std::vector<double> sqs(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sqs[i] = v[i] * v[i];
    return std::sqrt(pairwise_sum(sqs) * dx);
  };
}
inline std::function<double(const std::vector<double>&)> l1_norm(double dx) {
  return [dx](const std::vector<double>& v) {
    std::vector<double> abss(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) abss[i] = std::abs(v[i]);
    return pairwise_sum(abss) * dx;
  };
}

// ---------------------------------------------------------------------------

/// Two-parameter germ A_{s,t} evaluated on time-grid node indices, together
/// with the norm of its value space.  A_{i,i} must vanish.
template <typename V>
struct Germ {
  std::function<V(std::size_t, std::size_t)> eval;
  std::function<double(const V&)> norm;
  TimeGrid grid;
};

/// delta A_{s,u,t} = A_{s,t} - A_{s,u} - A_{u,t}; zero iff the germ is additive.
template <typename V>
V germ_delta(const Germ<V>& germ, std::size_t s, std::size_t u, std::size_t t) {
  if (!(s <= u && u <= t)) throw std::invalid_argument("germ_delta: need s <= u <= t");
  return vs_sub(vs_sub(germ.eval(s, t), germ.eval(s, u)), germ.eval(u, t));
}

template <typename V>
struct SewingResult {
  V value;                              // I^{n*}, the sewn integral over [s,t]
  std::size_t level = 0;                // first level meeting the tolerance
  bool converged = false;
  std::vector<double> level_increments; // ||I^n - I^{n+1}|| for n = 0,1,...
};

namespace detail {

/// Riemann sum of the germ over the level-n dyadic partition of [i0, i1].
template <typename V>
V dyadic_level_sum(const Germ<V>& germ, std::size_t i0, std::size_t i1, std::size_t n) {
  const std::size_t cells = std::size_t{1} << n;
  const std::size_t span = (i1 - i0) / cells;
  std::vector<V> terms;
  terms.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k)
    terms.push_back(germ.eval(i0 + k * span, i0 + (k + 1) * span));
  return vs_pairwise(terms, 0, terms.size());
}

}  // namespace detail

/// Dyadic sewing: refine the Riemann sums I^n of the germ over [i0, i1] until
/// consecutive levels differ by at most tol (or n_max is reached, flagged as
/// non-converged).  The interval must span a multiple of 2^{n_max} grid cells
/// so every dyadic partition lands on grid nodes.
template <typename V>
SewingResult<V> dyadic_sewing(const Germ<V>& germ, std::size_t i0, std::size_t i1,
                              std::size_t n_max, double tol) {
  if (i1 <= i0) throw std::invalid_argument("dyadic_sewing: empty interval");
  if (i1 > germ.grid.steps) throw std::invalid_argument("dyadic_sewing: interval beyond grid");
  if ((i1 - i0) % (std::size_t{1} << n_max) != 0)
    throw std::invalid_argument("dyadic_sewing: interval must span a multiple of 2^n_max cells");
  if (!(tol >= 0.0)) throw std::invalid_argument("dyadic_sewing: tol must be >= 0");

  SewingResult<V> result;
  V current = germ.eval(i0, i1);
  for (std::size_t n = 1; n <= n_max; ++n) {
    V next = detail::dyadic_level_sum(germ, i0, i1, n);
    const double d = germ.norm(vs_sub(current, next));
    result.level_increments.push_back(d);
    current = std::move(next);
    if (d <= tol) {
      result.value = std::move(current);
      result.level = n;
      result.converged = true;
      return result;
    }
  }
  result.value = std::move(current);
  result.level = n_max;
  result.converged = false;
  return result;
}

/// beta-Hoelder norm of delta A over the dyadic midpoint triples of [i0, i1]:
/// sup |delta A_{s,u,t}| / (t-s)^beta, times measured on the germ's grid.
template <typename V>
double delta_holder_norm(const Germ<V>& germ, std::size_t i0, std::size_t i1, double beta,
                         std::size_t levels) {
  if (!(beta > 1.0)) throw std::invalid_argument("delta_holder_norm: beta must exceed 1");
  double sup = 0.0;
  for (std::size_t n = 0; n < levels; ++n) {
    const std::size_t cells = std::size_t{1} << n;
    if ((i1 - i0) % (2 * cells) != 0) break;  // midpoints must stay on the grid
    const std::size_t span = (i1 - i0) / cells;
    for (std::size_t k = 0; k < cells; ++k) {
      const std::size_t s = i0 + k * span, t = s + span, u = s + span / 2;
      const double len = germ.grid.t(t) - germ.grid.t(s);
      sup = std::max(sup, germ.norm(germ_delta(germ, s, u, t)) / std::pow(len, beta));
    }
  }
  return sup;
}

/// Convergence-rate certificate for a declared beta > 1: per-level increments
/// must decay like 2^{n(1-beta)} and obey the proof bound
/// ||I^n - I^{n+1}|| <= ||delta A||_beta (t-s)^beta 2^{n(1-beta)}; the sewn
/// remainder ||IA - A|| stays within the beta-only constant 1/(1 - 2^{1-beta}).
struct RateCertificate {
  double delta_norm = 0.0;
  std::vector<double> level_increments;
  std::vector<bool> level_bound_ok;
  double slope = 0.0;            // fitted d log(increment) / d level, in nats
  bool degenerate = false;       // increments at machine noise: trivially pass
  bool pass = false;
  double remainder_norm = 0.0;   // ||I^{final} - A_{s,t}||
  double empirical_constant = 0.0;
  double theory_constant = 0.0;  // 1/(1 - 2^{1-beta})
};

template <typename V>
RateCertificate sewing_rate_certificate(const Germ<V>& germ, std::size_t i0, std::size_t i1,
                                        double beta, std::size_t n_max) {
  if (!(beta > 1.0)) throw std::invalid_argument("sewing_rate_certificate: beta must exceed 1");
  if (n_max < 4) throw std::invalid_argument("sewing_rate_certificate: need >= 4 levels");

  RateCertificate cert;
  cert.theory_constant = 1.0 / (1.0 - std::pow(2.0, 1.0 - beta));
  cert.delta_norm = delta_holder_norm(germ, i0, i1, beta, n_max);

  const SewingResult<V> sewn = dyadic_sewing(germ, i0, i1, n_max, 0.0);
  cert.level_increments = sewn.level_increments;
  const double len = germ.grid.t(i1) - germ.grid.t(i0);
  for (std::size_t n = 0; n < cert.level_increments.size(); ++n) {
    const double bound =
        cert.delta_norm * std::pow(len, beta) * std::pow(2.0, static_cast<double>(n) * (1.0 - beta));
    cert.level_bound_ok.push_back(cert.level_increments[n] <= bound * (1.0 + 1e-9) + 1e-15);
  }
  cert.remainder_norm = germ.norm(vs_sub(sewn.value, germ.eval(i0, i1)));
  if (cert.delta_norm > 0.0)
    cert.empirical_constant = cert.remainder_norm / (cert.delta_norm * std::pow(len, beta));

  double max_inc = 0.0;
  for (double d : cert.level_increments) max_inc = std::max(max_inc, d);
  if (max_inc < 1e-14) {
    cert.degenerate = true;
    cert.pass = true;
    return cert;
  }
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < cert.level_increments.size(); ++n)
    if (cert.level_increments[n] > 1e-15) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(cert.level_increments[n]));
    }
  if (xs.size() < 2) {
    cert.degenerate = true;
    cert.pass = true;
    return cert;
  }
  cert.slope = fit_line(xs, ys).slope;
  cert.pass = cert.slope <= (1.0 - beta) * std::numbers::ln2 + 0.15 * std::numbers::ln2;
  return cert;
}

/// Convergence of sewings along a germ sequence: verifies the uniform
/// delta-bound sup_n ||delta A_n||_beta <= R (contract error naming the
/// offending member otherwise), measures a_n = ||A_n - A||_alpha over dyadic
/// pairs, and returns the max sewing distance per member over dyadic windows.
struct GermSequenceReport {
  std::vector<double> germ_distances;    // a_n in the alpha-Hoelder scale
  std::vector<double> sewing_distances;  // max dyadic-window sewing distance
};

template <typename V>
GermSequenceReport germ_sequence_convergence(const std::vector<Germ<V>>& sequence,
                                             const Germ<V>& limit, double alpha, double beta,
                                             double uniform_bound, std::size_t i0, std::size_t i1,
                                             std::size_t n_max, double tol) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("germ_sequence_convergence: alpha in (0,1]");
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    const double dn = delta_holder_norm(sequence[n], i0, i1, beta, n_max);
    if (dn > uniform_bound)
      throw std::invalid_argument("germ_sequence_convergence: uniform bound violated at n=" +
                                  std::to_string(n) + " (norm " + std::to_string(dn) + ")");
  }

  GermSequenceReport report;
  const std::size_t window_levels = std::min<std::size_t>(n_max, 3);
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    // alpha-Hoelder distance over the dyadic pair family
    double a = 0.0;
    for (std::size_t lvl = 0; lvl <= window_levels; ++lvl) {
      const std::size_t cells = std::size_t{1} << lvl;
      if ((i1 - i0) % cells != 0) break;
      const std::size_t span = (i1 - i0) / cells;
      for (std::size_t k = 0; k < cells; ++k) {
        const std::size_t s = i0 + k * span, t = s + span;
        const double len = limit.grid.t(t) - limit.grid.t(s);
        const double diff = limit.norm(vs_sub(sequence[n].eval(s, t), limit.eval(s, t)));
        a = std::max(a, diff / std::pow(len, alpha));
      }
    }
    report.germ_distances.push_back(a);

    double d = 0.0;
    for (std::size_t lvl = 0; lvl <= window_levels; ++lvl) {
      const std::size_t cells = std::size_t{1} << lvl;
      if ((i1 - i0) % (cells << n_max) != 0) break;
      const std::size_t span = (i1 - i0) / cells;
      for (std::size_t k = 0; k < cells; ++k) {
        const std::size_t s = i0 + k * span, t = s + span;
        const V sn = dyadic_sewing(sequence[n], s, t, n_max, tol).value;
        const V sl = dyadic_sewing(limit, s, t, n_max, tol).value;
        d = std::max(d, limit.norm(vs_sub(sn, sl)));
      }
    }
    report.sewing_distances.push_back(d);
  }
  return report;
}

}  // namespace regulab
