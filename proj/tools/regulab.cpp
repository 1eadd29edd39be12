// regulab command-line harness: path synthesis, occupation densities,
// averaged drifts, degenerate-diffusion solves, estimate checks, sweeps and
// SVG plots.  Exit codes: 0 success, 1 a requested check failed, 2 bad
// input (flags, config schema, malformed files), 3 numerical abort.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regulab/pipeline.hpp"

namespace {

using namespace regulab;

namespace fs = std::filesystem;

/// The sidecar path convention: lt.csv ->  lt.json.
std::string sidecar_path(const std::string& csv) {
  return fs::path(csv).replace_extension(".json").string();
}

void write_creating_dirs(const std::string& file, const std::string& content) {
  const fs::path p(file);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_file(file, content);
}

struct FbmArgs {
  double hurst = 0.3;
  std::size_t dim = 1;
  std::size_t steps = 1024;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_fbm(const FbmArgs& a) {
  const SamplePath path = generate_fbm(TimeGrid{1.0, a.steps}, a.dim, a.hurst, a.seed);
  write_creating_dirs(a.out, render_path_csv(path));
  return 0;
}

struct LocaltimeArgs {
  std::string in;
  std::size_t bins = 256;
  double sigma = 0.0;
  std::string times = "2^4";
  std::string out;
};

int cmd_localtime(const LocaltimeArgs& a) {
  const SamplePath path = load_path_csv(a.in);
  const std::vector<std::size_t> nodes = parse_times_spec(a.times, path.grid.steps);
  const ValueGrid grid = path_budget_grid(path, a.bins);
  const LocalTimeDensity fam = local_time_family(path, grid, nodes, a.sigma);
  const std::string csv = render_local_time_csv(fam);
  const std::string side = render_local_time_sidecar(fam);
  write_creating_dirs(a.out, csv);
  write_creating_dirs(sidecar_path(a.out), side);
  return 0;
}

struct AverageArgs {
  std::string b_spec;
  std::string lt;
  std::string interval;
  std::string out;
};

PotentialConfig parse_potential_spec(const std::string& spec) {
  std::string text = spec;
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw config_error("potential spec: empty");
  if (text[first] != '{') text = read_file_bytes(spec);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("potential spec: " + std::string(e.what()));
  }
  return detail_cfg::parse_potential(j);
}

int cmd_average(const AverageArgs& a) {
  const LocalTimeDensity fam = load_local_time(a.lt, sidecar_path(a.lt));
  const PotentialConfig bc = parse_potential_spec(a.b_spec);
  const SampledPotential b = build_potential_on_spacing(bc, fam.grid.dim, fam.grid.h(0));

  const std::size_t comma = a.interval.find(',');
  if (comma == std::string::npos)
    throw config_error("interval: expected two comma-separated times");
  double s = 0.0, t = 0.0;
  try {
    s = std::stod(a.interval.substr(0, comma));
    t = std::stod(a.interval.substr(comma + 1));
  } catch (const std::exception&) {
    throw config_error("interval: cannot parse '" + a.interval + "'");
  }
  const double tol = 1e-9 * std::max(1.0, fam.time.horizon);
  std::optional<std::size_t> node_i, node_j;
  for (std::size_t i = 0; i < fam.count(); ++i) {
    if (std::abs(fam.time_at(i) - s) <= tol) node_i = i;
    if (std::abs(fam.time_at(i) - t) <= tol) node_j = i;
  }
  if (!node_i || !node_j)
    throw config_error("interval: endpoints must match recorded local-time nodes");
  if (*node_j < *node_i) throw config_error("interval: needs s <= t");

  const DriftTable drift = convolve_local_time(b, fam, *node_i, *node_j);
  write_creating_dirs(a.out, render_drift_csv(drift));
  return 0;
}

struct SolveArgs {
  std::string config;
  std::string out;
  std::string report;
};

int cmd_solve(const SolveArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const RunResult run = run_single(cfg);

  // stage everything before the first write so a failed run leaves nothing
  const std::string traj_csv = render_trajectory_csv(run.output.trajectory);
  const std::string energy_csv = render_energy_csv(run.output.report);
  const fs::path out_path(a.out), report_path(a.report);

  Manifest manifest;
  manifest.add_input("config", a.config);
  manifest.add_meta("seeds", seeds_json(cfg));
  manifest.add_output(out_path.filename().string(), traj_csv);
  manifest.add_output(report_path.filename().string(), energy_csv);

  write_creating_dirs(a.out, traj_csv);
  write_creating_dirs(a.report, energy_csv);
  const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  write_text_file((dir / "manifest.json").string(), manifest.render());
  return 0;
}

struct CheckArgs {
  std::string config;
  std::vector<std::string> suites;
  std::string outdir;
};

int run_and_write(const ExperimentConfig& cfg, const std::string& config_path,
                  const std::string& outdir_override, bool sweep_only) {
  PipelineResult result =
      sweep_only ? run_sweep_pipeline(cfg) : run_check_pipeline(cfg);
  result.bundle.add_input("config", config_path);
  const std::string outdir = outdir_override.empty() ? cfg.output_dir : outdir_override;
  result.bundle.write_all(outdir);
  for (const auto& check : result.report.at("checks"))
    std::printf("%s: %s\n", check.at("suite").get<std::string>().c_str(),
                check.at("pass").get<bool>() ? "PASS" : "FAIL");
  std::printf("report: %s\n", (fs::path(outdir) / "report.json").string().c_str());
  return result.checks_pass ? 0 : 1;
}

int cmd_check(const CheckArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.suites.empty()) {
    for (const std::string& suite : a.suites) {
      if (suite == "sweep" && cfg.sweep.eps.size() < 4)
        throw config_error("check: the sweep suite needs at least 4 sweep.eps levels");
      if (suite == "contraction" && !cfg.has_initial_second)
        throw config_error("check: the contraction suite needs solver.initial_second");
    }
    cfg.checks = a.suites;
  }
  return run_and_write(cfg, a.config, a.outdir, false);
}

struct SweepArgs {
  std::string config;
  std::string outdir;
};

int cmd_sweep(const SweepArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (cfg.sweep.eps.size() < 4)
    throw config_error("sweep: needs at least 4 sweep.eps levels");
  return run_and_write(cfg, a.config, a.outdir, true);
}

struct PlotArgs {
  std::string in;
  std::string x;
  std::vector<std::string> y;
  bool logx = false;
  bool logy = false;
  bool scatter = false;
  std::string title;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  const CsvTable table = read_csv(a.in);
  const std::vector<double> xs = table.values(a.x);
  std::vector<PlotSeries> series;
  for (const std::string& col : a.y) series.push_back({col, xs, table.values(col)});
  PlotSpec spec;
  spec.title = a.title;
  spec.xlabel = a.x;
  spec.ylabel = a.y.size() == 1 ? a.y.front() : "";
  spec.logx = a.logx;
  spec.logy = a.logy;
  spec.scatter = a.scatter;
  write_creating_dirs(a.out, render_plot(series, spec));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for noise-regularized degenerate diffusions"};
  app.require_subcommand(1);
  int rc = 0;

  FbmArgs fbm_args;
  CLI::App* fbm = app.add_subcommand("fbm", "synthesize a fractional Brownian path CSV");
  fbm->add_option("--H", fbm_args.hurst, "Hurst index in (0, 1)")->required();
  fbm->add_option("--N", fbm_args.dim, "path components (1-3)");
  fbm->add_option("--steps", fbm_args.steps, "time steps (power of two)")->required();
  fbm->add_option("--seed", fbm_args.seed, "RNG seed");
  fbm->add_option("--out", fbm_args.out, "output CSV path")->required();
  fbm->callback([&] { rc = cmd_fbm(fbm_args); });

  LocaltimeArgs lt_args;
  CLI::App* lt = app.add_subcommand("localtime", "occupation densities of a path CSV");
  lt->add_option("--in", lt_args.in, "path CSV (t, w_1..w_N)")->required();
  lt->add_option("--bins", lt_args.bins, "value bins per axis");
  lt->add_option("--sigma", lt_args.sigma, "Gaussian smoothing bandwidth (value units)");
  lt->add_option("--times", lt_args.times,
                 "time nodes: '2^k' for dyadic level k, or comma-separated step indices");
  lt->add_option("--out", lt_args.out, "output CSV path (JSON sidecar written alongside)")
      ->required();
  lt->callback([&] { rc = cmd_localtime(lt_args); });

  AverageArgs avg_args;
  CLI::App* avg = app.add_subcommand("average", "convolve a potential with local-time increments");
  avg->add_option("--b", avg_args.b_spec, "potential spec: inline JSON or a JSON file path")
      ->required();
  avg->add_option("--lt", avg_args.lt, "local-time CSV from `localtime`")->required();
  avg->add_option("--interval", avg_args.interval, "time window 's,t' over recorded nodes")
      ->required();
  avg->add_option("--out", avg_args.out, "output drift-table CSV")->required();
  avg->callback([&] { rc = cmd_average(avg_args); });

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "run one configured trajectory");
  solve->add_option("--config", solve_args.config, "experiment config JSON")->required();
  solve->add_option("--out", solve_args.out, "trajectory CSV (manifest.json written alongside)")
      ->required();
  solve->add_option("--report", solve_args.report, "energy-series CSV")->required();
  solve->callback([&] { rc = cmd_solve(solve_args); });

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "run the configured estimate checks");
  check->add_option("--config", check_args.config, "experiment config JSON")->required();
  check->add_option("--suite", check_args.suites,
                    "override the config's check list (repeatable)")
      ->check(CLI::IsMember({"energy", "sewing", "sweep", "contraction"}));
  check->add_option("--outdir", check_args.outdir, "output directory (default: config's)");
  check->callback([&] { rc = cmd_check(check_args); });

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "fan out the (eps, H, seed) run grid");
  sweep->add_option("--config", sweep_args.config, "experiment config JSON")->required();
  sweep->add_option("--outdir", sweep_args.outdir, "output directory (default: config's)");
  sweep->callback([&] { rc = cmd_sweep(sweep_args); });

  PlotArgs plot_args;
  CLI::App* plot = app.add_subcommand("plot", "render CSV columns to a deterministic SVG");
  plot->add_option("--in", plot_args.in, "input CSV")->required();
  plot->add_option("--x", plot_args.x, "x column name")->required();
  plot->add_option("--y", plot_args.y, "y column names (repeatable or comma-separated)")
      ->required()
      ->delimiter(',');
  plot->add_flag("--logx", plot_args.logx, "logarithmic x axis");
  plot->add_flag("--logy", plot_args.logy, "logarithmic y axis");
  plot->add_flag("--scatter", plot_args.scatter, "markers instead of lines");
  plot->add_option("--title", plot_args.title, "plot title");
  plot->add_option("--out", plot_args.out, "output SVG path")->required();
  plot->callback([&] { rc = cmd_plot(plot_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const numeric_abort& e) {
    std::fprintf(stderr, "numeric abort in %s\n", e.what());
    return 3;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
