#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "regulab/averaging.hpp"
#include "regulab/config.hpp"
#include "regulab/csvio.hpp"
#include "regulab/diagnostics.hpp"
#include "regulab/fbm.hpp"
#include "regulab/manifest.hpp"
#include "regulab/occupation.hpp"
#include "regulab/plaplace.hpp"
#include "regulab/potential.hpp"
#include "regulab/svg.hpp"

namespace regulab {

// ---------------------------------------------------------------- builders

inline SamplePath build_path(const PathConfig& pc) {
  const TimeGrid grid{pc.T, pc.steps};
  if (pc.kind == "zero") return make_zero_path(grid, pc.dim);
  if (pc.kind == "linear") return make_linear_path(grid, pc.dim, pc.slope);
  return generate_fbm(grid, pc.dim, pc.hurst, pc.seed);
}

namespace detail_pipe {

/// Samples the analytic (non-mollified) potential kinds on a fixed grid.
inline SampledPotential sample_analytic(const PotentialConfig& bc, std::size_t dim,
                                        const ValueGrid& grid) {
  if (bc.kind == "linear") {
    const double slope = bc.slope;
    return SampledPotential::from_function(grid, dim, [slope](std::span<const double> z) {
      std::vector<double> out(z.size());
      for (std::size_t c = 0; c < z.size(); ++c) out[c] = slope * z[c];
      return out;
    });
  }
  // gaussian: b_c(z) = -amplitude z_c exp(-|z|^2 / width^2)
  const double amp = bc.amplitude, width = bc.width;
  return SampledPotential::from_function(grid, dim, [amp, width](std::span<const double> z) {
    double n2 = 0.0;
    for (double v : z) n2 += v * v;
    const double factor = -amp * std::exp(-n2 / (width * width));
    std::vector<double> out(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) out[c] = factor * z[c];
    return out;
  });
}

}  // namespace detail_pipe

/// Builds the configured potential table; eps_override (> 0) replaces the
/// configured mollification width for sweep rungs.  singular-potential tables refine
/// their bin count automatically so the mollifier stays resolved (the
/// mollification kernel needs h <= eps/4).
inline std::optional<SampledPotential> build_potential(const PotentialConfig& bc,
                                                       std::size_t dim,
                                                       double eps_override = -1.0) {
  if (bc.kind == "zero") return std::nullopt;
  if (bc.kind == "singular") {
    const double eps = eps_override > 0.0 ? eps_override : bc.eps;
    const double range = bc.hi - bc.lo;
    std::size_t bins = bc.bins;
    while (range / static_cast<double>(bins) > eps / 4.0) bins *= 2;
    return mollify_potential(PotentialSpec{bc.eta, bc.K, dim}, eps,
                             ValueGrid::cube(dim, bins, bc.lo, bc.hi));
  }
  return detail_pipe::sample_analytic(bc, dim, ValueGrid::cube(dim, bc.bins, bc.lo, bc.hi));
}

/// Variant of build_potential whose table uses the exact bin width `h`
/// (extending the box upward to a whole number of bins), so that value-space
/// convolutions against another grid of the same spacing are admissible.
inline SampledPotential build_potential_on_spacing(const PotentialConfig& bc, std::size_t dim,
                                                   double h) {
  if (bc.kind == "zero")
    throw config_error("potential spec: a zero potential has no drift table");
  if (!(h > 0.0)) throw std::invalid_argument("build_potential_on_spacing: h must be positive");
  std::size_t bins = static_cast<std::size_t>(std::ceil((bc.hi - bc.lo) / h - 1e-9));
  bins = std::max<std::size_t>(bins, 8);
  const ValueGrid grid =
      ValueGrid::cube(dim, bins, bc.lo, bc.lo + static_cast<double>(bins) * h);
  if (bc.kind == "singular") {
    if (grid.h(0) > bc.eps / 4.0 + 1e-15)
      throw config_error(
          "potential spec: the local-time grid spacing exceeds eps/4, too coarse to resolve "
          "this mollification width");
    return mollify_potential(PotentialSpec{bc.eta, bc.K, dim}, bc.eps, grid);
  }
  return detail_pipe::sample_analytic(bc, dim, grid);
}

inline std::vector<double> build_initial(const InitialConfig& ic, const SpaceGrid1D& space,
                                         std::size_t n_comp) {
  std::vector<double> u(space.interior * n_comp, 0.0);
  const auto add_mode = [&](int frequency, double amplitude) {
    for (std::size_t j = 0; j < space.interior; ++j) {
      const double v = amplitude * std::sin(frequency * std::numbers::pi * space.x(j));
      for (std::size_t c = 0; c < n_comp; ++c) u[j * n_comp + c] += v;
    }
  };
  if (ic.kind == "eigenmode") add_mode(ic.frequency, ic.amplitude);
  if (ic.kind == "modes")
    for (const auto& [f, a] : ic.modes) add_mode(f, a);
  return u;
}

/// Value grid covering every path component, with the given spacing `h`
/// (so drift convolutions against a potential table of that spacing stay
/// exact) and a two-cell margin.
inline ValueGrid path_covering_grid(const SamplePath& path, double h, std::size_t min_bins = 8) {
  double lo = inf, hi = -inf;
  for (std::size_t c = 0; c < path.dim; ++c) {
    const auto [mn, mx] = path.component_range(c);
    lo = std::min(lo, mn);
    hi = std::max(hi, mx);
  }
  lo -= 2.0 * h;
  hi += 2.0 * h;
  std::size_t bins = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  bins = std::max(bins, min_bins);
  return ValueGrid::cube(path.dim, bins, lo, lo + static_cast<double>(bins) * h);
}

/// Value grid covering the path with a fixed bin budget (for local-time
/// norms that never meet a potential table).
inline ValueGrid path_budget_grid(const SamplePath& path, std::size_t bins) {
  double lo = inf, hi = -inf;
  for (std::size_t c = 0; c < path.dim; ++c) {
    const auto [mn, mx] = path.component_range(c);
    lo = std::min(lo, mn);
    hi = std::max(hi, mx);
  }
  const double pad = std::max(0.05 * (hi - lo), 1e-3);
  return ValueGrid::cube(path.dim, bins, lo - pad, hi + pad);
}

// ------------------------------------------------------------- CSV tables

inline std::string render_path_csv(const SamplePath& path) {
  std::vector<std::string> header{"t"};
  for (std::size_t c = 1; c <= path.dim; ++c) header.push_back("w_" + std::to_string(c));
  std::vector<double> cells;
  cells.reserve((path.grid.steps + 1) * (path.dim + 1));
  for (std::size_t k = 0; k <= path.grid.steps; ++k) {
    cells.push_back(path.grid.t(k));
    for (std::size_t c = 0; c < path.dim; ++c) cells.push_back(path.value(k, c));
  }
  return render_csv(header, cells);
}

inline std::string render_trajectory_csv(const StateTrajectory& traj) {
  const SpaceGrid1D& space = traj.config.space;
  const std::size_t n_comp = traj.config.state_dim;
  std::vector<std::string> header{"k", "t", "j", "x"};
  for (std::size_t c = 1; c <= n_comp; ++c) header.push_back("u_" + std::to_string(c));
  std::vector<double> cells;
  for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
    const std::size_t k = traj.snapshot_steps[s];
    for (std::size_t j = 0; j < space.interior; ++j) {
      cells.push_back(static_cast<double>(k));
      cells.push_back(traj.config.time.t(k));
      cells.push_back(static_cast<double>(j));
      cells.push_back(space.x(j));
      for (std::size_t c = 0; c < n_comp; ++c)
        cells.push_back(traj.snapshots[s][j * n_comp + c]);
    }
  }
  return render_csv(header, cells);
}

inline std::string render_energy_csv(const EnergyReport& rep) {
  const std::vector<std::string> header{"t",         "l2",           "grad_lp_p",
                                        "cum_dt_sq", "cum_div_s_sq", "cum_drift_sq"};
  std::vector<double> cells;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    cells.push_back(rep.times[k]);
    cells.push_back(rep.l2[k]);
    cells.push_back(rep.grad_lp_p[k]);
    cells.push_back(rep.cum_dt_sq[k]);
    cells.push_back(rep.cum_div_s_sq[k]);
    cells.push_back(rep.cum_drift_sq[k]);
  }
  return render_csv(header, cells);
}

inline std::string render_local_time_csv(const LocalTimeDensity& fam) {
  std::vector<std::string> header{"t_idx"};
  for (std::size_t a = 1; a <= fam.grid.dim; ++a) header.push_back("i" + std::to_string(a));
  header.push_back("L");
  std::vector<double> cells;
  for (std::size_t i = 0; i < fam.count(); ++i) {
    const std::span<const double> slice = fam.slice(i);
    for (std::size_t cell = 0; cell < fam.grid.total(); ++cell) {
      cells.push_back(static_cast<double>(i));
      std::size_t rem = cell;
      for (std::size_t a = 0; a < fam.grid.dim; ++a) {
        std::size_t stride = 1;
        for (std::size_t b = a + 1; b < fam.grid.dim; ++b) stride *= fam.grid.bins;
        cells.push_back(static_cast<double>(rem / stride));
        rem %= stride;
      }
      cells.push_back(slice[cell]);
    }
  }
  return render_csv(header, cells);
}

inline std::string render_local_time_sidecar(const LocalTimeDensity& fam) {
  nlohmann::json doc;
  doc["bins"] = fam.grid.bins;
  doc["dim"] = fam.grid.dim;
  doc["lo"] = fam.grid.lo;
  doc["hi"] = fam.grid.hi;
  doc["sigma"] = fam.sigma;
  doc["T"] = fam.time.horizon;
  doc["steps"] = fam.time.steps;
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json times = nlohmann::json::array();
  nlohmann::json residuals = nlohmann::json::array();
  for (std::size_t i = 0; i < fam.count(); ++i) {
    nodes.push_back(fam.nodes[i]);
    times.push_back(fam.time_at(i));
    residuals.push_back(fam.mass(i) - fam.time_at(i));
  }
  doc["nodes"] = nodes;
  doc["times"] = times;
  doc["mass_residuals"] = residuals;
  return doc.dump(2) + "\n";
}

inline std::string render_drift_csv(const DriftTable& drift) {
  const ValueGrid& grid = drift.table.grid;
  std::vector<std::string> header;
  for (std::size_t a = 1; a <= grid.dim; ++a) header.push_back("z_" + std::to_string(a));
  for (std::size_t c = 1; c <= drift.table.dim; ++c) header.push_back("v_" + std::to_string(c));
  std::vector<double> cells;
  for (std::size_t cell = 0; cell < grid.total(); ++cell) {
    std::size_t rem = cell;
    for (std::size_t a = 0; a < grid.dim; ++a) {
      std::size_t stride = 1;
      for (std::size_t b = a + 1; b < grid.dim; ++b) stride *= grid.bins;
      const std::size_t idx = rem / stride;
      rem %= stride;
      cells.push_back(grid.lo[a] + (static_cast<double>(idx) + 0.5) * grid.h(a));
    }
    for (std::size_t c = 0; c < drift.table.dim; ++c)
      cells.push_back(drift.table.component(c)[cell]);
  }
  return render_csv(header, cells);
}

// ---------------------------------------------------------------- loaders

/// Reads a path written by render_path_csv back into a SamplePath.  The node
/// count must be a power of two plus one and the times uniform from zero.
inline SamplePath load_path_csv(const std::string& file) {
  const CsvTable table = read_csv(file);
  if (table.rows() < 3) throw config_error("path csv: need at least 3 rows (2 steps)");
  const std::size_t steps = table.rows() - 1;
  if (!is_power_of_two(steps))
    throw config_error("path csv: row count must be a power of two plus one");
  std::size_t dim = 0;
  while (dim < 3) {
    bool found = false;
    for (const std::string& name : table.header)
      if (name == "w_" + std::to_string(dim + 1)) found = true;
    if (!found) break;
    ++dim;
  }
  if (dim == 0) throw config_error("path csv: no w_1 column");
  const std::vector<double> t = table.values("t");
  const double horizon = t.back();
  if (!(horizon > 0.0)) throw config_error("path csv: final time must be positive");
  SamplePath path;
  path.grid = TimeGrid{horizon, steps};
  path.dim = dim;
  path.kind = "loaded";
  path.values.assign((steps + 1) * dim, 0.0);
  std::vector<std::vector<double>> cols;
  for (std::size_t c = 0; c < dim; ++c) cols.push_back(table.values("w_" + std::to_string(c + 1)));
  for (std::size_t k = 0; k <= steps; ++k) {
    if (std::abs(t[k] - path.grid.t(k)) > 1e-9 * std::max(1.0, horizon))
      throw config_error("path csv: time column is not a uniform grid from 0");
    for (std::size_t c = 0; c < dim; ++c) path.values[k * dim + c] = cols[c][k];
  }
  return path;
}

/// Time-node specification: "2^k" means the 2^k + 1 uniformly spaced dyadic
/// nodes {j * steps / 2^k}, a comma-separated list means those explicit node
/// indices.
inline std::vector<std::size_t> parse_times_spec(const std::string& spec, std::size_t steps) {
  std::vector<std::size_t> nodes;
  if (spec.rfind("2^", 0) == 0) {
    std::size_t pos = 0;
    unsigned long level = 0;
    try {
      level = std::stoul(spec.substr(2), &pos);
    } catch (const std::exception&) {
      throw config_error("times spec: cannot parse level in '" + spec + "'");
    }
    if (pos + 2 != spec.size()) throw config_error("times spec: trailing text in '" + spec + "'");
    const std::size_t count = std::size_t{1} << level;
    if (level >= 63 || count > steps)
      throw config_error("times spec: 2^" + std::to_string(level) + " exceeds the path steps");
    for (std::size_t j = 0; j <= count; ++j) nodes.push_back(j * steps / count);
    return nodes;
  }
  std::size_t begin = 0;
  while (begin <= spec.size()) {
    const std::size_t end = std::min(spec.find(',', begin), spec.size());
    const std::string token = spec.substr(begin, end - begin);
    std::size_t pos = 0;
    unsigned long idx = 0;
    try {
      idx = std::stoul(token, &pos);
    } catch (const std::exception&) {
      throw config_error("times spec: cannot parse node index '" + token + "'");
    }
    if (pos != token.size())
      throw config_error("times spec: cannot parse node index '" + token + "'");
    if (idx > steps) throw config_error("times spec: node index beyond the path end");
    if (!nodes.empty() && idx <= nodes.back())
      throw config_error("times spec: node indices must be strictly increasing");
    nodes.push_back(idx);
    begin = end + 1;
  }
  return nodes;
}

/// Rebuilds a local-time family from render_local_time_csv output plus its
/// JSON sidecar.
inline LocalTimeDensity load_local_time(const std::string& csv_file,
                                        const std::string& sidecar_file) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_file_bytes(sidecar_file));
  } catch (const nlohmann::json::exception& e) {
    throw config_error("local-time sidecar: " + std::string(e.what()));
  }
  LocalTimeDensity fam;
  try {
    const std::size_t dim = side.at("dim").get<std::size_t>();
    const std::size_t bins = side.at("bins").get<std::size_t>();
    fam.grid = ValueGrid(dim, bins, side.at("lo").get<std::vector<double>>(),
                         side.at("hi").get<std::vector<double>>());
    fam.time = TimeGrid{side.at("T").get<double>(), side.at("steps").get<std::size_t>()};
    fam.nodes = side.at("nodes").get<std::vector<std::size_t>>();
    fam.sigma = side.at("sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error("local-time sidecar: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw config_error("local-time sidecar: " + std::string(e.what()));
  }
  const CsvTable table = read_csv(csv_file);
  if (table.rows() != fam.nodes.size() * fam.grid.total())
    throw config_error("local-time csv: row count does not match the sidecar layout");
  const std::vector<double> values = table.values("L");
  const std::vector<double> t_idx = table.values("t_idx");
  fam.density.assign(values.begin(), values.end());
  for (std::size_t r = 0; r < table.rows(); ++r)
    if (t_idx[r] != static_cast<double>(r / fam.grid.total()))
      throw config_error("local-time csv: rows are out of order");
  return fam;
}

// --------------------------------------------------------- output staging

/// Staged output set: contents are accumulated in memory and written only
/// when the whole pipeline has succeeded, so a failed run leaves no partial
/// files.  The manifest is rendered from the staged bytes and written last.
class OutputBundle {
 public:
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void add_input(const std::string& label, const std::string& path) {
    manifest_.add_input(label, path);
  }
  void add_meta(const std::string& key, const nlohmann::json& value) {
    manifest_.add_meta(key, value);
  }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  /// Writes every staged file under `dir`, then manifest.json.
  void write_all(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& [name, content] : files_) {
      const fs::path target = fs::path(dir) / name;
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      write_text_file(target.string(), content);
      manifest_.add_output(name, content);
    }
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest_.render());
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
  Manifest manifest_;
};

// ------------------------------------------------------------ single runs

struct RunResult {
  SamplePath path;
  std::optional<SampledPotential> potential;
  SolveOutput output;
};

/// One classical/robustified solve described by the config, with optional
/// per-run overrides of the mollification width, Hurst index and seed
/// (sweep rungs).
inline RunResult run_single(const ExperimentConfig& cfg, double eps_override = -1.0,
                            double hurst_override = -1.0,
                            std::uint64_t seed_override = std::uint64_t(-1)) {
  PathConfig pc = cfg.path;
  if (hurst_override > 0.0) pc.hurst = hurst_override;
  if (seed_override != std::uint64_t(-1)) pc.seed = seed_override;
  RunResult r;
  r.path = build_path(pc);
  r.potential = build_potential(cfg.potential, cfg.path.dim, eps_override);
  const SolverConfig scfg = cfg.solver_config();
  r.output = solve(scfg, r.path, r.potential ? &*r.potential : nullptr,
                   build_initial(cfg.initial, scfg.space, scfg.state_dim));
  return r;
}

// ----------------------------------------------------------------- checks

struct CheckOutcome {
  std::string suite;
  bool pass = false;
  nlohmann::json details;
  // margins.csv rows: metric name -> (lhs, rhs, margin, pass)
  std::vector<std::tuple<std::string, double, double, double, bool>> margins;
};

inline nlohmann::json estimate_json(const EstimateCheck& e) {
  return {{"lhs", e.lhs}, {"rhs", e.rhs}, {"margin", e.margin}, {"pass", e.pass}};
}

inline CheckOutcome run_energy_check(const ExperimentConfig& cfg, const RunResult& run) {
  CheckOutcome out;
  out.suite = "energy";
  const EstimateCheck strong = check_strong_estimate(run.output.report, cfg.p);
  const EstimateCheck weak = check_weak_estimate(run.output.report);
  const EstimateCheck holder = check_holder_bound(run.output.report, cfg.p);
  out.pass = strong.pass && weak.pass && holder.pass;
  out.details = {{"strong", estimate_json(strong)},
                 {"weak", estimate_json(weak)},
                 {"holder", estimate_json(holder)}};
  out.margins = {{"strong", strong.lhs, strong.rhs, strong.margin, strong.pass},
                 {"weak", weak.lhs, weak.rhs, weak.margin, weak.pass},
                 {"holder", holder.lhs, holder.rhs, holder.margin, holder.pass}};
  return out;
}

inline CheckOutcome run_sewing_check(const RunResult& run) {
  CheckOutcome out;
  out.suite = "sewing";
  if (!run.potential)
    throw config_error("sewing check: requires a nonzero potential");
  const ValueGrid density_grid = path_covering_grid(run.path, run.potential->grid.h(0));
  const SewingIdentityCheck check =
      sewing_identity_check(run.output.trajectory, run.path, *run.potential, density_grid);
  out.pass = check.pass;
  out.details = {{"sewn", check.sewn},
                 {"accumulated", check.accumulated},
                 {"residual", check.residual}};
  out.margins = {{"sewing_residual", check.sewn, check.accumulated, check.residual, check.pass}};
  return out;
}

inline CheckOutcome run_contraction_check(const ExperimentConfig& cfg) {
  CheckOutcome out;
  out.suite = "contraction";
  if (!cfg.has_initial_second)
    throw config_error("contraction check: requires solver.initial_second");
  const SamplePath path = build_path(cfg.path);
  const std::optional<SampledPotential> b = build_potential(cfg.potential, cfg.path.dim);
  const SolverConfig scfg = cfg.solver_config();
  const ContractionSeries series =
      contraction_experiment(scfg, path, b ? &*b : nullptr,
                             build_initial(cfg.initial, scfg.space, scfg.state_dim),
                             build_initial(cfg.initial_second, scfg.space, scfg.state_dim));
  const double initial = series.distance.front();
  const double worst = *std::max_element(series.distance.begin(), series.distance.end());
  out.pass = worst <= initial * (1.0 + 1e-6);
  out.details = {{"initial_distance", initial},
                 {"max_distance", worst},
                 {"final_distance", series.distance.back()},
                 {"monotone_potential", series.monotonicity.pass},
                 {"monotonicity_violation", series.monotonicity.max_violation}};
  out.margins = {{"contraction_sup", worst, initial * (1.0 + 1e-6),
                  initial * (1.0 + 1e-6) - worst, out.pass}};
  return out;
}

/// How many worker threads a fan-out may use: REGULAB_THREADS caps it, the
/// hardware count is the default, and it is never zero.
inline std::size_t worker_threads(std::size_t tasks) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REGULAB_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || parsed == 0)
      throw config_error("REGULAB_THREADS: expected a positive integer");
    n = static_cast<std::size_t>(parsed);
  }
  return std::max<std::size_t>(1, std::min(n, tasks));
}

struct SweepRun {
  double eps = 0.0;
  double hurst = 0.0;
  std::uint64_t seed = 0;
  EnergyReport report;
};

/// Runs the full (eps x H x seed) cartesian ladder, eps fastest, in config
/// order.  Results are merged by index, so the outcome is identical for any
/// thread count.
inline std::vector<SweepRun> run_sweep_grid(const ExperimentConfig& cfg) {
  std::vector<SweepRun> runs;
  for (std::uint64_t seed : cfg.sweep.seeds)
    for (double hurst : cfg.sweep.hurst)
      for (double eps : cfg.sweep.eps) runs.push_back({eps, hurst, seed, {}});

  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= runs.size()) return;
      try {
        runs[i].report =
            run_single(cfg, runs[i].eps, runs[i].hurst, runs[i].seed).output.report;
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        cursor.store(runs.size());
        return;
      }
    }
  };
  const std::size_t n_threads = worker_threads(runs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return runs;
}

inline std::string render_sweep_csv(const std::vector<SweepRun>& runs) {
  const std::vector<std::string> header{"eps",    "H",           "seed",
                                        "sup_l2", "sup_grad_lp", "holder_half",
                                        "lhs",    "control"};
  std::vector<double> cells;
  for (const SweepRun& r : runs) {
    const EnergyReport& rep = r.report;
    const double lhs = rep.sup_grad_lp + sq(rep.sup_l2) + sq(rep.holder_half);
    cells.insert(cells.end(),
                 {r.eps, r.hurst, static_cast<double>(r.seed), rep.sup_l2, rep.sup_grad_lp,
                  rep.holder_half, lhs, rep.cum_drift_sq.back()});
  }
  return render_csv(header, cells);
}

/// Applies the uniform-in-eps verdict per (H, seed) group.  The potential
/// norm entering the level-free right side is measured on the coarsest rung
/// of the ladder; the local-time norm comes from the group's path.
inline CheckOutcome run_sweep_check(const ExperimentConfig& cfg,
                                    const std::vector<SweepRun>& runs) {
  CheckOutcome out;
  out.suite = "sweep";
  out.pass = true;
  nlohmann::json groups = nlohmann::json::array();
  const std::size_t ladder = cfg.sweep.eps.size();

  const double eps_coarse = *std::max_element(cfg.sweep.eps.begin(), cfg.sweep.eps.end());
  const std::optional<SampledPotential> b_ref =
      build_potential(cfg.potential, cfg.path.dim, eps_coarse);
  if (!b_ref) throw config_error("sweep check: requires a nonzero potential");
  const double potential_norm = lp_norm(b_ref->component(0), b_ref->grid, 2.0);

  for (std::size_t g = 0; g * ladder < runs.size(); ++g) {
    const SweepRun& head = runs[g * ladder];
    PathConfig pc = cfg.path;
    pc.hurst = head.hurst;
    pc.seed = head.seed;
    const SamplePath path = build_path(pc);
    const ValueGrid lt_grid = path_budget_grid(path, cfg.check_params.local_time_bins);
    const std::size_t segs = std::min<std::size_t>(16, path.grid.steps);
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k <= segs; ++k) nodes.push_back(k * path.grid.steps / segs);
    const LocalTimeDensity fam =
        local_time_family(path, lt_grid, nodes, cfg.check_params.local_time_sigma);
    const double lt_norm =
        local_time_holder_norm(fam, cfg.check_params.rho, cfg.check_params.gamma);

    RegularityBudget budget = cfg.check_params.budget;
    budget.hurst = pc.kind == "fbm" ? head.hurst : budget.hurst;

    std::vector<EnergyReport> ladder_reports;
    for (std::size_t i = 0; i < ladder; ++i) ladder_reports.push_back(runs[g * ladder + i].report);
    const SweepVerdict verdict =
        uniform_sweep_check(ladder_reports, budget, potential_norm, lt_norm);
    out.pass = out.pass && verdict.pass;
    nlohmann::json group = {{"H", head.hurst},
                            {"seed", head.seed},
                            {"lhs", verdict.lhs},
                            {"control", verdict.control},
                            {"growth", verdict.growth},
                            {"rhs", verdict.rhs},
                            {"constant", verdict.constant},
                            {"lhs_ratio", verdict.lhs_ratio},
                            {"finite", verdict.finite},
                            {"pass", verdict.pass}};
    groups.push_back(group);
    const std::string tag =
        "sweep_H" + detail_svg::fmt(head.hurst, "%.6g") + "_s" + std::to_string(head.seed);
    out.margins.push_back({tag + "_lhs_ratio", verdict.lhs_ratio, 5.0, 5.0 - verdict.lhs_ratio,
                           verdict.pass});
  }
  out.details = {{"groups", groups}};
  return out;
}

// ------------------------------------------------------------ full runs

struct PipelineResult {
  bool checks_pass = true;
  nlohmann::json report;
  OutputBundle bundle;
};

inline std::string render_margins_csv(const std::vector<CheckOutcome>& outcomes) {
  std::string csv = "suite, metric, lhs, rhs, margin, pass\n";
  for (const CheckOutcome& oc : outcomes)
    for (const auto& [metric, lhs, rhs, margin, pass] : oc.margins)
      csv += oc.suite + ", " + metric + ", " + format_full(lhs) + ", " + format_full(rhs) +
             ", " + format_full(margin) + ", " + (pass ? "1" : "0") + "\n";
  return csv;
}

inline nlohmann::json seeds_json(const ExperimentConfig& cfg) {
  nlohmann::json seeds = {{"run", cfg.seed}, {"path", cfg.path.seed}};
  if (!cfg.sweep.seeds.empty()) seeds["sweep"] = cfg.sweep.seeds;
  return seeds;
}

/// The `check` pipeline: runs every requested suite, stages report.json and
/// margins.csv (plus the solve artifacts the suites are based on).
inline PipelineResult run_check_pipeline(const ExperimentConfig& cfg) {
  PipelineResult result;
  std::vector<CheckOutcome> outcomes;

  std::optional<RunResult> base_run;
  const auto ensure_base = [&]() -> const RunResult& {
    if (!base_run) base_run = run_single(cfg);
    return *base_run;
  };

  std::vector<SweepRun> sweep_runs;
  for (const std::string& suite : cfg.checks) {
    if (suite == "energy") outcomes.push_back(run_energy_check(cfg, ensure_base()));
    if (suite == "sewing") outcomes.push_back(run_sewing_check(ensure_base()));
    if (suite == "contraction") outcomes.push_back(run_contraction_check(cfg));
    if (suite == "sweep") {
      sweep_runs = run_sweep_grid(cfg);
      outcomes.push_back(run_sweep_check(cfg, sweep_runs));
    }
  }
  // a run with no checks still executes and records the solve stage
  if (cfg.checks.empty()) ensure_base();

  nlohmann::json checks = nlohmann::json::array();
  for (const CheckOutcome& oc : outcomes) {
    result.checks_pass = result.checks_pass && oc.pass;
    checks.push_back({{"suite", oc.suite}, {"pass", oc.pass}, {"details", oc.details}});
  }
  result.report = {{"checks", checks}, {"pass", result.checks_pass}};

  if (base_run) {
    result.bundle.add("path.csv", render_path_csv(base_run->path));
    result.bundle.add("energy.csv", render_energy_csv(base_run->output.report));
    result.bundle.add("trajectory.csv", render_trajectory_csv(base_run->output.trajectory));
  }
  if (!sweep_runs.empty()) result.bundle.add("sweep.csv", render_sweep_csv(sweep_runs));
  result.bundle.add("margins.csv", render_margins_csv(outcomes));
  result.bundle.add("report.json", result.report.dump(2) + "\n");
  result.bundle.add_meta("seeds", seeds_json(cfg));
  return result;
}

/// The `sweep` pipeline: the cartesian run grid plus per-group verdicts.
inline PipelineResult run_sweep_pipeline(const ExperimentConfig& cfg) {
  PipelineResult result;
  const std::vector<SweepRun> runs = run_sweep_grid(cfg);
  const CheckOutcome verdict = run_sweep_check(cfg, runs);
  result.checks_pass = verdict.pass;
  result.report = {{"checks", nlohmann::json::array({nlohmann::json{
                       {"suite", verdict.suite}, {"pass", verdict.pass},
                       {"details", verdict.details}}})},
                   {"pass", verdict.pass}};
  result.bundle.add("sweep.csv", render_sweep_csv(runs));
  result.bundle.add("margins.csv", render_margins_csv({verdict}));
  result.bundle.add("report.json", result.report.dump(2) + "\n");
  result.bundle.add_meta("seeds", seeds_json(cfg));
  return result;
}

}  // namespace regulab
