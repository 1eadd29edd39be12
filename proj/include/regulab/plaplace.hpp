#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regulab/averaging.hpp"
#include "regulab/common.hpp"
#include "regulab/fbm.hpp"
#include "regulab/grid.hpp"
#include "regulab/occupation.hpp"
#include "regulab/potential.hpp"

namespace regulab {

/// How the right-hand side drift of the evolution is supplied: pointwise
/// evaluation of the potential along the path (classical), or one averaged
/// drift table per macro window with the state frozen at its left endpoint
/// (robustified).
enum class RhsMode { classical, robustified };

/// Parameters of the semi-implicit solver on (0,1) with zero Dirichlet data.
struct SolverConfig {
  double p = 2.0;
  std::size_t state_dim = 1;  // components N of the state field
  SpaceGrid1D space{64};
  TimeGrid time{1.0, 1024};
  double delta_reg = 1e-4;  // gradient regularization in the diffusivity
  RhsMode mode = RhsMode::classical;
  std::size_t picard_max = 4;    // lagged-diffusivity refreezes per step
  double picard_tol = 1e-10;     // relative change declaring a step converged
  std::size_t macro_steps = 16;  // robustified drift windows over [0, T]
  std::size_t snapshot_count = 16;

  void validate() const {
    if (!(p > 1.0)) throw std::invalid_argument("SolverConfig: p must exceed 1");
    if (!(delta_reg > 0.0) || delta_reg > 1e-2)
      throw std::invalid_argument("SolverConfig: delta_reg must lie in (0, 1e-2]");
    if (state_dim == 0 || state_dim > 3)
      throw std::invalid_argument("SolverConfig: state_dim must be 1..3");
    if (space.interior < 8)
      throw std::invalid_argument("SolverConfig: need at least 8 interior nodes");
    if (picard_max == 0) throw std::invalid_argument("SolverConfig: picard_max must be >= 1");
    if (!(picard_tol > 0.0)) throw std::invalid_argument("SolverConfig: picard_tol must be > 0");
    if (snapshot_count == 0 || !is_power_of_two(snapshot_count) ||
        snapshot_count > time.steps)
      throw std::invalid_argument(
          "SolverConfig: snapshot_count must be a power of two <= time steps");
    if (macro_steps == 0 || !is_power_of_two(macro_steps) || macro_steps > time.steps)
      throw std::invalid_argument(
          "SolverConfig: macro_steps must be a power of two <= time steps");
  }
};

/// Regularized stress S(xi) = (|xi|^2 + delta^2)^{(p-2)/2} xi; the exact
/// p-Laplace stress when delta = 0 (only allowed for p >= 2).
inline std::vector<double> stress(std::span<const double> xi, double p, double delta_reg) {
  if (delta_reg < 0.0) throw std::invalid_argument("stress: delta_reg must be >= 0");
  if (p < 2.0 && delta_reg == 0.0)
    throw std::invalid_argument("stress: p < 2 needs a positive delta_reg");
  double n2 = sq(delta_reg);
  for (double x : xi) n2 += x * x;
  const double factor = n2 == 0.0 ? 0.0 : std::pow(n2, 0.5 * (p - 2.0));
  std::vector<double> out(xi.size());
  for (std::size_t c = 0; c < xi.size(); ++c) out[c] = factor * xi[c];
  return out;
}

inline double stress(double xi, double p, double delta_reg) {
  const std::vector<double> v = stress(std::span<const double>(&xi, 1), p, delta_reg);
  return v[0];
}

namespace detail {

/// Frozen diffusivity (|D+ u|^2 + delta^2)^{(p-2)/2} on the J+1 edges of the
/// interior field (node-major, state_dim components, implicit boundary
/// zeros).
inline std::vector<double> edge_coefficients(std::span<const double> state,
                                             const SpaceGrid1D& grid, std::size_t state_dim,
                                             double p, double delta_reg) {
  const std::size_t nodes = grid.interior;
  const double dx = grid.dx();
  std::vector<double> a(nodes + 1);
  for (std::size_t e = 0; e <= nodes; ++e) {
    double n2 = sq(delta_reg);
    for (std::size_t c = 0; c < state_dim; ++c) {
      const double up = e < nodes ? state[e * state_dim + c] : 0.0;
      const double dn = e > 0 ? state[(e - 1) * state_dim + c] : 0.0;
      n2 += sq((up - dn) / dx);
    }
    a[e] = std::pow(n2, 0.5 * (p - 2.0));
  }
  return a;
}

/// Solves the symmetric positive tridiagonal system in place (Thomas
/// elimination).  diag/rhs are overwritten; sub holds the off-diagonal
/// entries sub[i] coupling rows i and i+1.
inline void thomas_solve(std::vector<double>& diag, std::span<const double> sub,
                         std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (!(diag[i - 1] > 0.0))
      throw numeric_abort("plaplace", "tridiagonal pivot lost positivity at row " +
                                          std::to_string(i - 1));
    const double m = sub[i - 1] / diag[i - 1];
    diag[i] -= m * sub[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (!(diag[n - 1] > 0.0))
    throw numeric_abort("plaplace", "tridiagonal pivot lost positivity at the last row");
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sub[i] * rhs[i + 1]) / diag[i];
}

inline double l2_sq(std::span<const double> v, double dx) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s * dx;
}

}  // namespace detail

/// Divergence of the stress, [S(D+ u)_j - S(D+ u)_{j-1}] / dx, on interior
/// nodes with implicit boundary zeros; node-major layout like the state.
inline std::vector<double> discrete_div_S(std::span<const double> state,
                                          const SpaceGrid1D& grid, std::size_t state_dim,
                                          double p, double delta_reg) {
  const std::size_t nodes = grid.interior;
  if (state.size() != nodes * state_dim)
    throw std::invalid_argument("discrete_div_S: state/grid size mismatch");
  const double dx = grid.dx();
  std::vector<double> edge_stress((nodes + 1) * state_dim);
  std::vector<double> xi(state_dim);
  for (std::size_t e = 0; e <= nodes; ++e) {
    for (std::size_t c = 0; c < state_dim; ++c) {
      const double up = e < nodes ? state[e * state_dim + c] : 0.0;
      const double dn = e > 0 ? state[(e - 1) * state_dim + c] : 0.0;
      xi[c] = (up - dn) / dx;
    }
    const std::vector<double> s = stress(xi, p, delta_reg);
    for (std::size_t c = 0; c < state_dim; ++c) edge_stress[e * state_dim + c] = s[c];
  }
  std::vector<double> div(nodes * state_dim);
  for (std::size_t j = 0; j < nodes; ++j)
    for (std::size_t c = 0; c < state_dim; ++c)
      div[j * state_dim + c] =
          (edge_stress[(j + 1) * state_dim + c] - edge_stress[j * state_dim + c]) / dx;
  return div;
}

/// Dirichlet energy (1/p) sum_edges |D+ u|^p dx of an interior field.
inline double energy(std::span<const double> state, const SpaceGrid1D& grid,
                     std::size_t state_dim, double p) {
  const std::size_t nodes = grid.interior;
  if (state.size() != nodes * state_dim)
    throw std::invalid_argument("energy: state/grid size mismatch");
  const double dx = grid.dx();
  std::vector<double> terms(nodes + 1);
  for (std::size_t e = 0; e <= nodes; ++e) {
    double n2 = 0.0;
    for (std::size_t c = 0; c < state_dim; ++c) {
      const double up = e < nodes ? state[e * state_dim + c] : 0.0;
      const double dn = e > 0 ? state[(e - 1) * state_dim + c] : 0.0;
      n2 += sq((up - dn) / dx);
    }
    terms[e] = std::pow(n2, 0.5 * p);
  }
  return pairwise_sum(terms) * dx / p;
}

/// One semi-implicit update with lagged diffusivity and optional Picard
/// refreezes: solve (I - dt A_{frozen}) u_next = u + dt drift, refreeze the
/// coefficients at the new iterate, repeat to tolerance or the cap.
///
/// For p > 2 the refreeze is under-relaxed: the coefficient field moves to a
/// geometric blend of its previous value and the field evaluated at the new
/// iterate (weight 2/p on the new field).  The undamped update overshoots for
/// degenerate growth and settles into a two-cycle that never converges; the
/// blend has the same fixed point and damps the cycle.  For p <= 2 the weight
/// is 1 and the classical undamped refreeze is recovered exactly.
struct StepOutcome {
  std::vector<double> state;
  bool picard_converged = true;
  std::size_t picard_iterations = 1;
};

inline StepOutcome solver_step(std::span<const double> state, const SolverConfig& cfg,
                               std::span<const double> drift) {
  const std::size_t nodes = cfg.space.interior;
  const std::size_t n_comp = cfg.state_dim;
  if (state.size() != nodes * n_comp || drift.size() != nodes * n_comp)
    throw std::invalid_argument("solver_step: state/drift size mismatch");
  const double dx = cfg.space.dx();
  const double dt = cfg.time.dt();
  const double r = dt / (dx * dx);

  StepOutcome out;
  const double relax = std::min(1.0, 2.0 / cfg.p);
  std::vector<double> frozen(state.begin(), state.end());
  std::vector<double> a;
  std::vector<double> diag(nodes), sub(nodes - 1), rhs(nodes), next(nodes * n_comp);
  for (std::size_t it = 0; it < cfg.picard_max; ++it) {
    const std::vector<double> refreshed =
        detail::edge_coefficients(frozen, cfg.space, n_comp, cfg.p, cfg.delta_reg);
    if (it == 0 || relax >= 1.0) {
      a = refreshed;
    } else {
      for (std::size_t e = 0; e < a.size(); ++e)
        a[e] = std::pow(a[e], 1.0 - relax) * std::pow(refreshed[e], relax);
    }
    for (std::size_t c = 0; c < n_comp; ++c) {
      for (std::size_t j = 0; j < nodes; ++j) {
        diag[j] = 1.0 + r * (a[j] + a[j + 1]);
        rhs[j] = state[j * n_comp + c] + dt * drift[j * n_comp + c];
      }
      for (std::size_t j = 0; j + 1 < nodes; ++j) sub[j] = -r * a[j + 1];
      detail::thomas_solve(diag, sub, rhs);
      for (std::size_t j = 0; j < nodes; ++j) next[j * n_comp + c] = rhs[j];
    }
    out.picard_iterations = it + 1;
    if (cfg.picard_max == 1) break;
    double change = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      change += sq(next[i] - frozen[i]);
      scale += sq(next[i]);
    }
    // the first pass freezes at u_k, so its "change" is the whole update;
    // convergence compares consecutive refreezes only
    if (it > 0 && change <= sq(cfg.picard_tol) * std::max(scale, 1e-300)) {
      out.state = next;
      return out;
    }
    frozen = next;
  }
  out.state = next;
  out.picard_converged = cfg.picard_max == 1;
  return out;
}

/// Trajectory records: dyadic snapshots of the full interior field, per-step
/// squared norms feeding the energy accounting, macro-window drift fields in
/// robustified mode, and the accumulated drift over [0, T].
struct StateTrajectory {
  SolverConfig config;
  std::vector<double> initial;
  std::vector<double> final_state;
  std::vector<std::size_t> snapshot_steps;
  std::vector<std::vector<double>> snapshots;
  std::vector<double> dt_u_sq;    // ||backward difference quotient||^2 per step
  std::vector<double> div_s_sq;   // ||div S(grad u_{k+1})||^2 per step
  std::vector<double> drift_sq;   // ||applied drift rate||^2 per step
  std::vector<double> l2_series;  // ||u_k|| at every node 0..steps
  std::vector<double> grad_lp_p_series;  // ||grad u_k||_p^p at every node
  std::vector<std::vector<double>> macro_states;  // left endpoints, robustified
  std::vector<std::vector<double>> macro_drift;   // applied germ per macro window
  std::vector<double> accumulated_drift;          // sum of dt * rate over [0, T]
  std::size_t picard_flagged = 0;
};

/// Norm time series consumed by the estimate checks.  The 1/2-Hoelder
/// seminorm of t -> u_t in L^2 is taken over the recorded snapshots.
struct EnergyReport {
  std::vector<double> times;
  std::vector<double> l2;
  std::vector<double> grad_lp_p;
  std::vector<double> cum_dt_sq;
  std::vector<double> cum_div_s_sq;
  std::vector<double> cum_drift_sq;
  double holder_half = 0.0;
  double sup_l2 = 0.0;
  double sup_grad_lp = 0.0;
};

struct SolveOutput {
  StateTrajectory trajectory;
  EnergyReport report;
};

namespace detail {

/// Shared per-trajectory stepping context: drift assembly for either mode,
/// records, and the periodic stability audit.
class TrajectoryRunner {
 public:
  TrajectoryRunner(const SolverConfig& cfg, const SamplePath& path, const SampledPotential* b,
                   std::vector<double> initial)
      : cfg_(cfg), path_(path), b_(b), state_(std::move(initial)) {
    cfg_.validate();
    const std::size_t want = cfg_.space.interior * cfg_.state_dim;
    if (state_.size() != want)
      throw std::invalid_argument("solve: initial field has the wrong size");
    if (path_.dim != cfg_.state_dim)
      throw std::invalid_argument("solve: path dimension must match state_dim");
    if (path_.grid.steps != cfg_.time.steps ||
        std::abs(path_.grid.horizon - cfg_.time.horizon) > 1e-12 * cfg_.time.horizon)
      throw std::invalid_argument("solve: path grid must match the solver time grid");
    if (cfg_.mode == RhsMode::robustified && b_ != nullptr) build_macro_tables();

    traj_.config = cfg_;
    traj_.initial = state_;
    const std::size_t steps = cfg_.time.steps;
    traj_.dt_u_sq.reserve(steps);
    traj_.div_s_sq.reserve(steps);
    traj_.drift_sq.reserve(steps);
    traj_.l2_series.reserve(steps + 1);
    traj_.grad_lp_p_series.reserve(steps + 1);
    drift_.assign(state_.size(), 0.0);
    macro_rate_.assign(state_.size(), 0.0);
    accumulated_drift_.assign(state_.size(), 0.0);
    record_node(0);
  }

  /// Advances one micro step; false once the horizon is reached.
  bool advance() {
    if (step_index_ == cfg_.time.steps) return false;
    const std::size_t k = step_index_;
    const double dx = cfg_.space.dx();
    const double dt = cfg_.time.dt();
    fill_drift(k, drift_);
    StepOutcome step = solver_step(state_, cfg_, drift_);
    if (!step.picard_converged) ++traj_.picard_flagged;

    for (std::size_t i = 0; i < drift_.size(); ++i) accumulated_drift_[i] += dt * drift_[i];
    traj_.drift_sq.push_back(l2_sq(drift_, dx));
    std::vector<double> diff(state_.size());
    for (std::size_t i = 0; i < state_.size(); ++i) diff[i] = (step.state[i] - state_[i]) / dt;
    traj_.dt_u_sq.push_back(l2_sq(diff, dx));
    const std::vector<double> div =
        discrete_div_S(step.state, cfg_.space, cfg_.state_dim, cfg_.p, cfg_.delta_reg);
    traj_.div_s_sq.push_back(l2_sq(div, dx));

    state_ = std::move(step.state);
    ++step_index_;
    record_node(step_index_);
    if (step_index_ % 64 == 0) audit(step_index_);
    return true;
  }

  StateTrajectory run() {
    while (advance()) {
    }
    traj_.final_state = state_;
    traj_.accumulated_drift = accumulated_drift_;
    return std::move(traj_);
  }

  const std::vector<double>& state() const { return state_; }

 private:
  void build_macro_tables() {
    const std::size_t span = cfg_.time.steps / cfg_.macro_steps;
    std::vector<std::size_t> nodes(cfg_.macro_steps + 1);
    for (std::size_t m = 0; m <= cfg_.macro_steps; ++m) nodes[m] = m * span;

    const double h = b_->grid.h(0);
    double lo = inf, hi = -inf;
    for (std::size_t c = 0; c < path_.dim; ++c) {
      auto [mn, mx] = path_.component_range(c);
      lo = std::min(lo, mn);
      hi = std::max(hi, mx);
    }
    const double pad = 2.0 * h;
    lo -= pad;
    const std::size_t bins = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::ceil((hi + pad - lo) / h)));
    const ValueGrid lgrid = ValueGrid::cube(path_.dim, bins, lo, lo + static_cast<double>(bins) * h);
    const LocalTimeDensity fam = local_time_family(path_, lgrid, nodes, 0.0);
    macro_tables_.reserve(cfg_.macro_steps);
    for (std::size_t m = 0; m < cfg_.macro_steps; ++m)
      macro_tables_.push_back(convolve_local_time(*b_, fam, m, m + 1));
  }

  /// Assembles the nodal drift rate for micro step k.
  void fill_drift(std::size_t k, std::vector<double>& drift) {
    const std::size_t n_comp = cfg_.state_dim;
    const std::size_t nodes = cfg_.space.interior;
    if (b_ == nullptr) {
      std::fill(drift.begin(), drift.end(), 0.0);
      return;
    }
    if (cfg_.mode == RhsMode::classical) {
      const std::span<const double> w = path_.value(k);
      std::vector<double> arg(n_comp);
      for (std::size_t j = 0; j < nodes; ++j) {
        for (std::size_t c = 0; c < n_comp; ++c) arg[c] = state_[j * n_comp + c] - w[c];
        const std::vector<double> v = b_->eval(arg);
        for (std::size_t c = 0; c < n_comp; ++c) drift[j * n_comp + c] = v[c];
      }
      return;
    }
    // robustified: state frozen at the macro-left endpoint; the table value
    // spread evenly over the window realizes the partition's Riemann sum
    const std::size_t span = cfg_.time.steps / cfg_.macro_steps;
    const std::size_t m = k / span;
    if (k % span == 0) {
      const DriftTable& table = macro_tables_[m];
      const double window = table.time_hi - table.time_lo;
      traj_.macro_states.push_back(state_);
      std::vector<double> germ(state_.size());
      std::vector<double> arg(n_comp);
      for (std::size_t j = 0; j < nodes; ++j) {
        for (std::size_t c = 0; c < n_comp; ++c) arg[c] = state_[j * n_comp + c];
        const std::vector<double> v = table.eval(arg);
        for (std::size_t c = 0; c < n_comp; ++c) germ[j * n_comp + c] = v[c];
      }
      traj_.macro_drift.push_back(germ);
      for (std::size_t i = 0; i < germ.size(); ++i) macro_rate_[i] = germ[i] / window;
    }
    drift = macro_rate_;
  }

  void record_node(std::size_t k) {
    traj_.l2_series.push_back(std::sqrt(l2_sq(state_, cfg_.space.dx())));
    traj_.grad_lp_p_series.push_back(cfg_.p *
                                     energy(state_, cfg_.space, cfg_.state_dim, cfg_.p));
    const std::size_t stride = cfg_.time.steps / cfg_.snapshot_count;
    if (k % stride == 0) {
      traj_.snapshot_steps.push_back(k);
      traj_.snapshots.push_back(state_);
    }
    for (double v : state_)
      if (!std::isfinite(v))
        throw numeric_abort("plaplace",
                            "state became non-finite at step " + std::to_string(k));
  }

  // Growth is measured between consecutive audit checkpoints, so the first
  // comparison happens at the second audit.  The initial state is not a
  // checkpoint: runs forced up from small (or zero) data would otherwise
  // abort on their first audit no matter how tame the dynamics are.  The
  // baseline is floored at unit scale for the same reason: a sharp drift
  // table pushing a near-zero state around is legitimate dynamics, while a
  // genuine blow-up crosses every scale and trips within a window or two.
  void audit(std::size_t k) {
    const double now = std::sqrt(l2_sq(state_, cfg_.space.dx()));
    if (audit_l2_ >= 0.0 && now > 10.0 * std::max(audit_l2_, 0.1))
      throw numeric_abort("plaplace", "instability audit at step " + std::to_string(k) +
                                          ": ||u|| grew from " + std::to_string(audit_l2_) +
                                          " to " + std::to_string(now));
    audit_l2_ = now;
  }

  SolverConfig cfg_;
  const SamplePath& path_;
  const SampledPotential* b_;
  std::vector<double> state_;
  StateTrajectory traj_;
  std::vector<DriftTable> macro_tables_;
  std::vector<double> drift_;
  std::vector<double> macro_rate_;
  std::vector<double> accumulated_drift_;
  std::size_t step_index_ = 0;
  double audit_l2_ = -1.0;  // ||u|| at the last audit; negative until one ran
};

}  // namespace detail

/// Full solve: steps the field across the time grid, recording snapshots,
/// per-step norms, and (robustified) the macro drift germs; returns the
/// trajectory together with its energy accounting.  Pass b = nullptr for the
/// pure gradient flow.
inline SolveOutput solve(const SolverConfig& cfg, const SamplePath& path,
                         const SampledPotential* b, std::vector<double> initial) {
  detail::TrajectoryRunner runner(cfg, path, b, std::move(initial));
  SolveOutput out;
  out.trajectory = runner.run();

  const StateTrajectory& traj = out.trajectory;
  EnergyReport& rep = out.report;
  const std::size_t steps = cfg.time.steps;
  rep.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) rep.times[k] = cfg.time.t(k);
  rep.l2 = traj.l2_series;
  rep.grad_lp_p = traj.grad_lp_p_series;
  rep.cum_dt_sq.assign(steps + 1, 0.0);
  rep.cum_div_s_sq.assign(steps + 1, 0.0);
  rep.cum_drift_sq.assign(steps + 1, 0.0);
  const double dt = cfg.time.dt();
  for (std::size_t k = 0; k < steps; ++k) {
    rep.cum_dt_sq[k + 1] = rep.cum_dt_sq[k] + dt * traj.dt_u_sq[k];
    rep.cum_div_s_sq[k + 1] = rep.cum_div_s_sq[k] + dt * traj.div_s_sq[k];
    rep.cum_drift_sq[k + 1] = rep.cum_drift_sq[k] + dt * traj.drift_sq[k];
  }
  for (double v : rep.l2) rep.sup_l2 = std::max(rep.sup_l2, v);
  double grad_sup_p = 0.0;
  for (double v : rep.grad_lp_p) grad_sup_p = std::max(grad_sup_p, v);
  rep.sup_grad_lp = std::pow(grad_sup_p, 1.0 / cfg.p);

  const double dx = cfg.space.dx();
  for (std::size_t a = 0; a < traj.snapshots.size(); ++a)
    for (std::size_t b2 = a + 1; b2 < traj.snapshots.size(); ++b2) {
      const double gap = cfg.time.t(traj.snapshot_steps[b2]) - cfg.time.t(traj.snapshot_steps[a]);
      double d2 = 0.0;
      for (std::size_t i = 0; i < traj.snapshots[a].size(); ++i)
        d2 += sq(traj.snapshots[b2][i] - traj.snapshots[a][i]);
      rep.holder_half = std::max(rep.holder_half, std::sqrt(d2 * dx) / std::sqrt(gap));
    }
  return out;
}

/// Distance series between two trajectories driven by the same path and
/// potential, plus the recorded monotonicity audit of the potential table
/// (an assumption of the contraction property, reported rather than
/// enforced so non-monotone tables can still be probed).
struct ContractionSeries {
  std::vector<double> times;
  std::vector<double> distance;
  MonotonicityReport monotonicity;
};

inline ContractionSeries contraction_experiment(const SolverConfig& cfg, const SamplePath& path,
                                                const SampledPotential* b,
                                                std::vector<double> u0, std::vector<double> v0) {
  detail::TrajectoryRunner ru(cfg, path, b, std::move(u0));
  detail::TrajectoryRunner rv(cfg, path, b, std::move(v0));

  ContractionSeries series;
  if (b != nullptr) {
    series.monotonicity = monotonicity_check(*b, 10000, 1);
  } else {
    series.monotonicity.pass = true;  // zero drift is trivially monotone
  }

  const std::size_t steps = cfg.time.steps;
  const double dx = cfg.space.dx();
  series.times.resize(steps + 1);
  series.distance.resize(steps + 1);
  const auto record = [&](std::size_t k) {
    series.times[k] = cfg.time.t(k);
    const std::vector<double>& a = ru.state();
    const std::vector<double>& b2 = rv.state();
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += sq(a[i] - b2[i]);
    series.distance[k] = std::sqrt(d2 * dx);
  };
  record(0);
  for (std::size_t k = 0; k < steps; ++k) {
    ru.advance();
    rv.advance();
    record(k + 1);
  }
  return series;
}

}  // namespace regulab
