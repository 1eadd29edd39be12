#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "regulab/common.hpp"
#include "regulab/occupation.hpp"
#include "regulab/plaplace.hpp"

namespace regulab {

namespace detail_cfg {

inline void require_object(const nlohmann::json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw config_error(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) throw config_error(where + ": unknown key '" + item.key() + "'");
  }
}

inline double get_number(const nlohmann::json& j, const std::string& where, const char* key,
                         double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw config_error(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline double get_number_required(const nlohmann::json& j, const std::string& where,
                                  const char* key) {
  if (!j.contains(key)) throw config_error(where + "." + key + ": required");
  if (!j.at(key).is_number()) throw config_error(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline std::uint64_t get_unsigned(const nlohmann::json& j, const std::string& where,
                                  const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const nlohmann::json& v = j.at(key);
  // accept any integer representation as long as the value is non-negative
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw config_error(where + "." + key + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& where, const char* key,
                              const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw config_error(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail_cfg

/// Driving-path stage: which path to synthesize and on which time grid.
struct PathConfig {
  std::string kind = "fbm";  // fbm | zero | linear
  double hurst = 0.3;
  double T = 1.0;
  std::size_t steps = 1024;
  std::size_t dim = 1;
  std::uint64_t seed = 1;
  double slope = 1.0;  // linear paths only
};

/// Potential stage: the interaction field b, either analytic-mollified or a
/// closed-form table.
struct PotentialConfig {
  std::string kind = "zero";  // zero | singular | linear | gaussian
  double eta = -1.0;          // singular potential exponent
  double K = 1.0;             // singular potential truncation radius
  double eps = 0.05;          // singular potential mollification bandwidth
  double slope = -1.0;        // linear
  double amplitude = 1.0;     // gaussian
  double width = 1.0;         // gaussian
  std::size_t bins = 512;
  double lo = -2.0;
  double hi = 2.0;
};

/// Initial field: zero, a single eigenmode, or a sum of eigenmodes.
struct InitialConfig {
  std::string kind = "eigenmode";  // zero | eigenmode | modes
  double amplitude = 0.5;
  int frequency = 1;
  std::vector<std::pair<int, double>> modes;  // kind = modes: (frequency, amplitude)
};

/// Check-stage tuning shared by the energy/sewing/sweep/contraction suites.
struct CheckParams {
  double rho = 2.0;              // L^rho exponent of the local-time norm
  double gamma = 0.55;           // Hoelder exponent of the local-time norm
  std::size_t local_time_bins = 256;
  double local_time_sigma = 0.0;
  RegularityBudget budget;
};

/// Sweep axes: one run per (eps, H, seed) tuple, merged in declaration order.
struct SweepAxes {
  std::vector<double> eps;
  std::vector<double> hurst;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  PathConfig path;
  PotentialConfig potential;
  double p = 2.0;
  std::size_t space_nodes = 64;
  double delta = 1e-4;
  RhsMode mode = RhsMode::classical;
  std::size_t picard_max = 4;
  double picard_tol = 1e-10;
  std::size_t macro_steps = 16;
  std::size_t snapshots = 16;
  InitialConfig initial;
  InitialConfig initial_second;  // contraction suite's companion field
  bool has_initial_second = false;
  std::vector<std::string> checks;
  CheckParams check_params;
  SweepAxes sweep;

  /// The solver configuration implied by the path + solver blocks.
  SolverConfig solver_config() const {
    SolverConfig cfg;
    cfg.p = p;
    cfg.state_dim = path.dim;
    cfg.space = SpaceGrid1D{space_nodes};
    cfg.time = TimeGrid{path.T, path.steps};
    cfg.delta_reg = delta;
    cfg.mode = mode;
    cfg.picard_max = picard_max;
    cfg.picard_tol = picard_tol;
    cfg.macro_steps = macro_steps;
    cfg.snapshot_count = snapshots;
    return cfg;
  }
};

namespace detail_cfg {

inline PathConfig parse_path(const nlohmann::json& j, std::uint64_t run_seed) {
  require_object(j, "path", {"kind", "H", "T", "steps", "dim", "seed", "slope"});
  PathConfig p;
  p.kind = get_string(j, "path", "kind", "fbm");
  if (p.kind != "fbm" && p.kind != "zero" && p.kind != "linear")
    throw config_error("path.kind: expected one of fbm|zero|linear");
  p.hurst = get_number(j, "path", "H", 0.3);
  p.T = get_number(j, "path", "T", 1.0);
  const std::uint64_t steps = get_unsigned(j, "path", "steps", 1024);
  if (!is_power_of_two(steps)) throw config_error("path.steps: must be a power of two");
  p.steps = static_cast<std::size_t>(steps);
  p.dim = static_cast<std::size_t>(get_unsigned(j, "path", "dim", 1));
  p.seed = get_unsigned(j, "path", "seed", run_seed);
  p.slope = get_number(j, "path", "slope", 1.0);
  if (p.kind == "fbm" && !(p.hurst > 0.0 && p.hurst < 1.0))
    throw config_error("path.H: must lie in (0, 1)");
  if (!(p.T > 0.0)) throw config_error("path.T: must be positive");
  if (p.dim < 1 || p.dim > 3) throw config_error("path.dim: must be 1, 2 or 3");
  return p;
}

inline PotentialConfig parse_potential(const nlohmann::json& j) {
  require_object(j, "potential", {"kind", "eta", "K", "eps", "slope", "amplitude", "width",
                                  "bins", "lo", "hi"});
  PotentialConfig b;
  b.kind = get_string(j, "potential", "kind", "zero");
  if (b.kind != "zero" && b.kind != "singular" && b.kind != "linear" && b.kind != "gaussian")
    throw config_error("potential.kind: expected one of zero|singular|linear|gaussian");
  b.eta = get_number(j, "potential", "eta", -1.0);
  b.K = get_number(j, "potential", "K", 1.0);
  b.eps = get_number(j, "potential", "eps", 0.05);
  b.slope = get_number(j, "potential", "slope", -1.0);
  b.amplitude = get_number(j, "potential", "amplitude", 1.0);
  b.width = get_number(j, "potential", "width", 1.0);
  const bool wide_default = b.kind == "linear" || b.kind == "gaussian";
  b.bins = static_cast<std::size_t>(
      get_unsigned(j, "potential", "bins", wide_default ? 256 : 512));
  b.lo = get_number(j, "potential", "lo", wide_default ? -4.0 : -2.0);
  b.hi = get_number(j, "potential", "hi", wide_default ? 4.0 : 2.0);
  if (!(b.lo < b.hi)) throw config_error("potential.lo/hi: need lo < hi");
  if (b.bins < 8) throw config_error("potential.bins: need at least 8");
  if (b.kind == "singular") {
    if (!(b.eps > 0.0)) throw config_error("potential.eps: must be positive");
    if (!(b.eta > -2.0 && b.eta <= 1.0))
      throw config_error("potential.eta: must lie in (-2, 1]");
    if (!(b.K > 0.0)) throw config_error("potential.K: must be positive");
  }
  return b;
}

inline InitialConfig parse_initial(const nlohmann::json& j, const std::string& where) {
  require_object(j, where, {"kind", "amplitude", "frequency", "modes"});
  InitialConfig u;
  u.kind = get_string(j, where, "kind", "eigenmode");
  if (u.kind != "zero" && u.kind != "eigenmode" && u.kind != "modes")
    throw config_error(where + ".kind: expected one of zero|eigenmode|modes");
  u.amplitude = get_number(j, where, "amplitude", 0.5);
  const double freq = get_number(j, where, "frequency", 1.0);
  if (freq < 1.0 || freq != std::floor(freq))
    throw config_error(where + ".frequency: expected a positive integer");
  u.frequency = static_cast<int>(freq);
  if (u.kind == "modes") {
    if (!j.contains("modes") || !j.at("modes").is_array() || j.at("modes").empty())
      throw config_error(where + ".modes: expected a non-empty array of [frequency, amplitude]");
    for (const auto& m : j.at("modes")) {
      if (!m.is_array() || m.size() != 2 || !m.at(0).is_number() || !m.at(1).is_number())
        throw config_error(where + ".modes: each entry must be [frequency, amplitude]");
      const double f = m.at(0).get<double>();
      if (f < 1.0 || f != std::floor(f))
        throw config_error(where + ".modes: frequencies must be positive integers");
      u.modes.emplace_back(static_cast<int>(f), m.at(1).get<double>());
    }
  }
  return u;
}

inline CheckParams parse_check_params(const nlohmann::json& j, const PathConfig& path,
                                      const PotentialConfig& pot) {
  require_object(j, "check_params",
                 {"rho", "gamma", "local_time_bins", "local_time_sigma", "budget"});
  CheckParams cp;
  cp.rho = get_number(j, "check_params", "rho", 2.0);
  cp.gamma = get_number(j, "check_params", "gamma", 0.55);
  cp.local_time_bins =
      static_cast<std::size_t>(get_unsigned(j, "check_params", "local_time_bins", 256));
  cp.local_time_sigma = get_number(j, "check_params", "local_time_sigma", 0.0);
  cp.budget.hurst = path.kind == "fbm" ? path.hurst : 0.5;
  cp.budget.eta = pot.eta;
  cp.budget.dim = path.dim;
  if (j.contains("budget")) {
    const nlohmann::json& bj = j.at("budget");
    require_object(bj, "check_params.budget",
                   {"hurst", "lambda", "gamma", "r", "q", "eta", "dim"});
    cp.budget.hurst = get_number(bj, "check_params.budget", "hurst", cp.budget.hurst);
    cp.budget.lambda = get_number(bj, "check_params.budget", "lambda", cp.budget.lambda);
    cp.budget.gamma = get_number(bj, "check_params.budget", "gamma", cp.budget.gamma);
    cp.budget.r = get_number(bj, "check_params.budget", "r", cp.budget.r);
    cp.budget.q = get_number(bj, "check_params.budget", "q", cp.budget.q);
    cp.budget.eta = get_number(bj, "check_params.budget", "eta", cp.budget.eta);
    cp.budget.dim =
        static_cast<std::size_t>(get_unsigned(bj, "check_params.budget", "dim", cp.budget.dim));
  }
  if (!(cp.rho >= 1.0)) throw config_error("check_params.rho: must be >= 1");
  if (!(cp.gamma > 0.0 && cp.gamma < 1.0))
    throw config_error("check_params.gamma: must lie in (0, 1)");
  if (cp.local_time_bins < 8) throw config_error("check_params.local_time_bins: need >= 8");
  if (cp.local_time_sigma < 0.0)
    throw config_error("check_params.local_time_sigma: must be >= 0");
  return cp;
}

inline SweepAxes parse_sweep(const nlohmann::json& j, const PathConfig& path,
                             const PotentialConfig& pot, std::uint64_t run_seed) {
  require_object(j, "sweep", {"eps", "H", "seeds"});
  SweepAxes s;
  if (j.contains("eps")) {
    if (!j.at("eps").is_array()) throw config_error("sweep.eps: expected an array");
    for (const auto& v : j.at("eps")) {
      if (!v.is_number() || !(v.get<double>() > 0.0))
        throw config_error("sweep.eps: entries must be positive numbers");
      s.eps.push_back(v.get<double>());
    }
  } else {
    s.eps.push_back(pot.eps);
  }
  if (j.contains("H")) {
    if (!j.at("H").is_array()) throw config_error("sweep.H: expected an array");
    for (const auto& v : j.at("H")) {
      if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0))
        throw config_error("sweep.H: entries must lie in (0, 1)");
      s.hurst.push_back(v.get<double>());
    }
  } else {
    s.hurst.push_back(path.hurst);
  }
  if (j.contains("seeds")) {
    if (!j.at("seeds").is_array()) throw config_error("sweep.seeds: expected an array");
    for (const auto& v : j.at("seeds")) {
      if (!v.is_number_unsigned())
        throw config_error("sweep.seeds: entries must be non-negative integers");
      s.seeds.push_back(v.get<std::uint64_t>());
    }
  } else {
    s.seeds.push_back(run_seed);
  }
  if (s.eps.empty() || s.hurst.empty() || s.seeds.empty())
    throw config_error("sweep: axes must be non-empty");
  return s;
}

}  // namespace detail_cfg

/// Parses and validates an experiment configuration.  Every violation of the
/// documented schema throws config_error before any computation starts.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using namespace detail_cfg;
  require_object(j, "config", {"seed", "output_dir", "path", "potential", "solver", "checks",
                               "check_params", "sweep"});
  ExperimentConfig cfg;
  cfg.seed = get_unsigned(j, "config", "seed", 1);
  cfg.output_dir = get_string(j, "config", "output_dir", "out");
  if (j.contains("path"))
    cfg.path = parse_path(j.at("path"), cfg.seed);
  else
    cfg.path.seed = cfg.seed;
  if (j.contains("potential")) cfg.potential = parse_potential(j.at("potential"));

  if (j.contains("solver")) {
    const nlohmann::json& s = j.at("solver");
    require_object(s, "solver",
                   {"p", "J", "delta", "mode", "picard_max", "picard_tol", "macro_steps",
                    "snapshots", "initial", "initial_second"});
    cfg.p = get_number_required(s, "solver", "p");
    cfg.space_nodes = static_cast<std::size_t>(get_unsigned(s, "solver", "J", 64));
    cfg.delta = get_number(s, "solver", "delta", 1e-4);
    const std::string mode = get_string(s, "solver", "mode", "classical");
    if (mode == "classical")
      cfg.mode = RhsMode::classical;
    else if (mode == "robustified")
      cfg.mode = RhsMode::robustified;
    else
      throw config_error("solver.mode: expected classical|robustified");
    cfg.picard_max = static_cast<std::size_t>(get_unsigned(s, "solver", "picard_max", 4));
    cfg.picard_tol = get_number(s, "solver", "picard_tol", 1e-10);
    cfg.macro_steps = static_cast<std::size_t>(get_unsigned(s, "solver", "macro_steps", 16));
    cfg.snapshots = static_cast<std::size_t>(get_unsigned(s, "solver", "snapshots", 16));
    if (s.contains("initial")) cfg.initial = parse_initial(s.at("initial"), "solver.initial");
    if (s.contains("initial_second")) {
      cfg.initial_second = parse_initial(s.at("initial_second"), "solver.initial_second");
      cfg.has_initial_second = true;
    }
  }

  if (j.contains("checks")) {
    if (!j.at("checks").is_array()) throw config_error("checks: expected an array");
    for (const auto& c : j.at("checks")) {
      if (!c.is_string()) throw config_error("checks: entries must be strings");
      const std::string name = c.get<std::string>();
      if (name != "energy" && name != "sewing" && name != "sweep" && name != "contraction")
        throw config_error("checks: unknown suite '" + name + "'");
      cfg.checks.push_back(name);
    }
  }

  cfg.check_params = detail_cfg::parse_check_params(
      j.contains("check_params") ? j.at("check_params") : nlohmann::json::object(), cfg.path,
      cfg.potential);
  cfg.sweep = detail_cfg::parse_sweep(
      j.contains("sweep") ? j.at("sweep") : nlohmann::json::object(), cfg.path, cfg.potential,
      cfg.seed);

  for (const std::string& c : cfg.checks) {
    if (c == "sweep" && cfg.sweep.eps.size() < 4)
      throw config_error("checks: the sweep suite needs at least 4 sweep.eps entries");
    if (c == "contraction" && !cfg.has_initial_second)
      throw config_error("checks: the contraction suite needs solver.initial_second");
  }

  // cross-checks the solver itself would reject later; failing here keeps the
  // validation gate ahead of any compute or file output
  cfg.solver_config().validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

}  // namespace regulab
