#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "regulab/averaging.hpp"
#include "regulab/common.hpp"
#include "regulab/occupation.hpp"
#include "regulab/plaplace.hpp"
#include "regulab/sewing.hpp"

namespace regulab {

/// Outcome of one a priori estimate with explicit constants.  The margin is
/// RHS - LHS; pass leaves a 5% slack on the right side for discretization.
struct EstimateCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
};

namespace detail {

inline EstimateCheck make_estimate_check(double lhs, double rhs) {
  EstimateCheck check;
  check.lhs = lhs;
  check.rhs = rhs;
  check.margin = rhs - lhs;
  check.pass = std::isfinite(lhs) && std::isfinite(rhs) && check.margin >= -0.05 * rhs;
  return check;
}

inline void require_report(const EnergyReport& rep) {
  const std::size_t n = rep.times.size();
  if (n < 2 || rep.l2.size() != n || rep.grad_lp_p.size() != n || rep.cum_dt_sq.size() != n ||
      rep.cum_div_s_sq.size() != n || rep.cum_drift_sq.size() != n)
    throw std::invalid_argument("diagnostics: malformed energy report");
}

/// Left-Riemann time integral of a node series over the report's grid.
inline double time_integral(const EnergyReport& rep, const std::vector<double>& series) {
  const double dt = rep.times[1] - rep.times[0];
  std::vector<double> terms(series.begin(), series.end() - 1);
  return pairwise_sum(terms) * dt;
}

}  // namespace detail

/// Strong a priori estimate:
///   sup_t (1/p)||grad u_t||_p^p + int ||dt u||^2 + int ||div S||^2
///     <= (3/p) ||grad u_0||_p^p + 3 int int |b(u-w)|^2.
inline EstimateCheck check_strong_estimate(const EnergyReport& rep, double p) {
  detail::require_report(rep);
  double sup_grad_p = 0.0;
  for (double v : rep.grad_lp_p) sup_grad_p = std::max(sup_grad_p, v);
  const double lhs = sup_grad_p / p + rep.cum_dt_sq.back() + rep.cum_div_s_sq.back();
  const double rhs = 3.0 / p * rep.grad_lp_p.front() + 3.0 * rep.cum_drift_sq.back();
  return detail::make_estimate_check(lhs, rhs);
}

/// Weak a priori estimate:
///   sup_t (1/4)||u_t||^2 + int ||grad u_t||_p^p <= ||u_0||^2 + 2T int int |b|^2.
inline EstimateCheck check_weak_estimate(const EnergyReport& rep) {
  detail::require_report(rep);
  const double horizon = rep.times.back();
  double sup_l2 = 0.0;
  for (double v : rep.l2) sup_l2 = std::max(sup_l2, v);
  const double lhs = 0.25 * sq(sup_l2) + detail::time_integral(rep, rep.grad_lp_p);
  const double rhs = sq(rep.l2.front()) + 2.0 * horizon * rep.cum_drift_sq.back();
  return detail::make_estimate_check(lhs, rhs);
}

/// Square 1/2-Hoelder-in-time bound:
///   sup_t ||u_t||^2 + [u]_{1/2}^2
///     <= 4||u_0||^2 + (3/p)||grad u_0||_p^p + (3+8T) int int |b|^2.
inline EstimateCheck check_holder_bound(const EnergyReport& rep, double p) {
  detail::require_report(rep);
  const double horizon = rep.times.back();
  double sup_l2 = 0.0;
  for (double v : rep.l2) sup_l2 = std::max(sup_l2, v);
  const double lhs = sq(sup_l2) + sq(rep.holder_half);
  const double rhs = 4.0 * sq(rep.l2.front()) + 3.0 / p * rep.grad_lp_p.front() +
                     (3.0 + 8.0 * horizon) * rep.cum_drift_sq.back();
  return detail::make_estimate_check(lhs, rhs);
}

/// Solution interval of the quadratic inequality a^2 <= K + C a.
struct AlgebraicInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double a) const { return a >= lo && a <= hi; }
};

/// Completing the square: any a with a^2 <= K + C a lies in
/// [C/2 - sqrt(K + C^2/4), C/2 + sqrt(K + C^2/4)].
inline AlgebraicInterval algebraic_bound(double K, double C) {
  const double disc = K + 0.25 * C * C;
  if (disc < 0.0)
    throw std::invalid_argument(
        "algebraic_bound: K < -C^2/4 leaves the inequality without real solutions");
  const double root = std::sqrt(disc);
  return {0.5 * C - root, 0.5 * C + root};
}

/// Verdict of the uniform-in-mollification bound over a ladder of runs that
/// share the path and the initial field while the smoothing width halves.
struct SweepVerdict {
  std::vector<double> lhs;      // per-level sup ||grad u||_p^p + C^{0,1/2}L^2 norm^2
  std::vector<double> control;  // per-level accumulated int int |b_eps(u-w)|^2
  std::vector<double> growth;   // control growth factor per halving
  double rhs = 0.0;             // level-free majorant
  double constant = 0.0;        // max lhs / rhs, the single uniform constant
  double lhs_ratio = 0.0;       // max lhs / min lhs
  bool finite = true;
  bool pass = false;  // finite and lhs_ratio <= 5
};

/// The per-level left side must stay below one constant times the level-free
/// right side ||u_0||^2 + ||grad u_0||_p^p + ||b||_{L^{2q}}^4 ||L||^2, where
/// the potential and local-time norms are measured by the caller with the
/// budget's exponent choices.  The control series feeds the divergence
/// signature: its per-halving growth factors are reported, not asserted.
inline SweepVerdict uniform_sweep_check(const std::vector<EnergyReport>& runs,
                                        const RegularityBudget& budget, double potential_norm,
                                        double local_time_norm) {
  if (runs.size() < 4)
    throw std::invalid_argument("uniform_sweep_check: need at least 4 mollification levels");
  if (!std::isfinite(potential_norm) || !(potential_norm > 0.0) ||
      !std::isfinite(local_time_norm) || !(local_time_norm > 0.0))
    throw std::invalid_argument(
        "uniform_sweep_check: potential and local-time norms must be supplied finite and positive");
  if (!budget.exponents_ok())
    throw std::invalid_argument("uniform_sweep_check: budget exponents need q >= r >= 1");
  for (const EnergyReport& rep : runs) detail::require_report(rep);
  const double l2_0 = runs.front().l2.front();
  const double grad_0 = runs.front().grad_lp_p.front();
  for (const EnergyReport& rep : runs) {
    if (std::abs(rep.l2.front() - l2_0) > 1e-9 * (1.0 + l2_0) ||
        std::abs(rep.grad_lp_p.front() - grad_0) > 1e-9 * (1.0 + grad_0))
      throw std::invalid_argument("uniform_sweep_check: runs must share the initial field");
  }

  SweepVerdict verdict;
  verdict.rhs = sq(l2_0) + grad_0 + std::pow(potential_norm, 4.0) * sq(local_time_norm);
  for (const EnergyReport& rep : runs) {
    double sup_grad_p = 0.0, sup_l2 = 0.0;
    for (double v : rep.grad_lp_p) sup_grad_p = std::max(sup_grad_p, v);
    for (double v : rep.l2) sup_l2 = std::max(sup_l2, v);
    verdict.lhs.push_back(sup_grad_p + sq(sup_l2) + sq(rep.holder_half));
    verdict.control.push_back(rep.cum_drift_sq.back());
  }
  for (std::size_t i = 0; i + 1 < verdict.control.size(); ++i) {
    const double prev = verdict.control[i], next = verdict.control[i + 1];
    verdict.growth.push_back(prev > 0.0 ? next / prev : (next > 0.0 ? inf : 1.0));
  }
  double lhs_min = inf, lhs_max = 0.0;
  for (double v : verdict.lhs) {
    verdict.finite = verdict.finite && std::isfinite(v);
    lhs_min = std::min(lhs_min, v);
    lhs_max = std::max(lhs_max, v);
  }
  verdict.finite = verdict.finite && std::isfinite(verdict.rhs);
  verdict.constant = verdict.rhs > 0.0 ? lhs_max / verdict.rhs : inf;
  verdict.lhs_ratio = lhs_min > 0.0 ? lhs_max / lhs_min : (lhs_max > 0.0 ? inf : 1.0);
  verdict.pass = verdict.finite && verdict.lhs_ratio <= 5.0 && verdict.rhs > 0.0;
  return verdict;
}

/// Two independent computations of the accumulated control quantity
/// int_0^T int_Omega |b(u_t - w_t)|^2 dx dt.
struct SewingIdentityCheck {
  double sewn = 0.0;         // sewing of the window germs over [0, T]
  double accumulated = 0.0;  // per-step quadrature along the trajectory
  double residual = 0.0;     // relative gap
  bool pass = false;         // residual <= 0.05
};

/// Builds the scalar germ A_{s,t} = sum_j (|b|^2 * L_{s,t})(u_s(x_j)) dx over
/// the trajectory's snapshot nodes, sews it dyadically over [0, T], and
/// compares against the directly accumulated control quantity.  The density
/// grid must share the potential grid's spacing so the window convolutions
/// are exact discrete convolutions.
inline SewingIdentityCheck sewing_identity_check(const StateTrajectory& traj,
                                                 const SamplePath& path, const SampledPotential& b,
                                                 const ValueGrid& density_grid) {
  if (traj.config.mode != RhsMode::classical)
    throw std::invalid_argument("sewing_identity_check: needs a classical-mode trajectory");
  if (path.grid.steps != traj.config.time.steps)
    throw std::invalid_argument("sewing_identity_check: path grid must match the trajectory");
  if (traj.snapshots.size() < 2 || traj.snapshots.size() != traj.snapshot_steps.size())
    throw std::invalid_argument("sewing_identity_check: trajectory lacks snapshots");
  if (traj.drift_sq.size() != traj.config.time.steps)
    throw std::invalid_argument("sewing_identity_check: trajectory lacks per-step drift norms");

  // scalar square table |b|^2 on the potential's own grid
  SampledPotential b_sq;
  b_sq.grid = b.grid;
  b_sq.dim = 1;
  b_sq.epsilon = b.epsilon;
  b_sq.values.assign(b.grid.total(), 0.0);
  for (std::size_t c = 0; c < b.dim; ++c) {
    const std::span<const double> comp = b.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) b_sq.values[i] += sq(comp[i]);
  }

  const LocalTimeDensity family = local_time_family(path, density_grid, traj.snapshot_steps, 0.0);
  const std::size_t stride = traj.config.time.steps / traj.config.snapshot_count;
  const double dx = traj.config.space.dx();
  const std::size_t n_comp = traj.config.state_dim;

  Germ<double> germ;
  germ.grid = traj.config.time;
  germ.norm = abs_norm;
  germ.eval = [&, stride, dx, n_comp](std::size_t i, std::size_t j) -> double {
    if (i % stride != 0 || j % stride != 0)
      throw std::invalid_argument("sewing_identity_check: germ node off the snapshot grid");
    const std::size_t si = i / stride, sj = j / stride;
    if (si == sj) return 0.0;
    const DriftTable window = convolve_local_time(b_sq, family, si, sj);
    const std::vector<double>& u = traj.snapshots[si];
    std::vector<double> terms(traj.config.space.interior);
    for (std::size_t node = 0; node < terms.size(); ++node)
      terms[node] = window.table.eval_component(
          0, std::span<const double>(u.data() + node * n_comp, n_comp));
    return pairwise_sum(terms) * dx;
  };

  const std::size_t n_max =
      static_cast<std::size_t>(std::round(std::log2(static_cast<double>(traj.config.snapshot_count))));
  const SewingResult<double> sewn =
      dyadic_sewing(germ, 0, traj.config.time.steps, n_max, 0.0);

  SewingIdentityCheck check;
  check.sewn = sewn.value;
  check.accumulated = pairwise_sum(traj.drift_sq) * traj.config.time.dt();
  if (std::abs(check.accumulated) > 0.0)
    check.residual = std::abs(check.sewn - check.accumulated) / std::abs(check.accumulated);
  else
    check.residual = check.sewn == 0.0 ? 0.0 : inf;
  check.pass = std::isfinite(check.residual) && check.residual <= 0.05;
  return check;
}

}  // namespace regulab
