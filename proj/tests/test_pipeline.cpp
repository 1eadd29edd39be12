#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "regulab/pipeline.hpp"

using namespace regulab;

namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp root, emptied on entry.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("regulab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) { return read_file_bytes(file.string()); }

/// Runs the packaged CLI binary; returns its exit code.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(REGULAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json minimal_config(const fs::path& outdir) {
  return {
      {"seed", 5},
      {"output_dir", outdir.string()},
      {"path", {{"kind", "fbm"}, {"H", 0.3}, {"T", 1.0}, {"steps", 256}, {"dim", 1}, {"seed", 5}}},
      {"potential",
       {{"kind", "gaussian"}, {"amplitude", 1.0}, {"width", 1.0}, {"lo", -4.0}, {"hi", 4.0},
        {"bins", 128}}},
      {"solver",
       {{"p", 2.0},
        {"J", 32},
        {"mode", "classical"},
        {"snapshots", 16},
        {"initial", {{"kind", "eigenmode"}, {"amplitude", 0.5}, {"frequency", 1}}}}},
      {"checks", nlohmann::json::array({"energy"})}};
}

}  // namespace

TEST_CASE("csv round-trips full-precision values", "[pipeline]") {
  const std::vector<std::string> header{"a", "b"};
  const std::vector<double> cells{0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567};
  const std::string text = render_csv(header, cells);

  const fs::path dir = scratch_dir("csv");
  write_text_file((dir / "t.csv").string(), text);
  const CsvTable table = read_csv((dir / "t.csv").string());

  REQUIRE(table.header == header);
  REQUIRE(table.rows() == 2);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(table.cells[i] == cells[i]);
}

TEST_CASE("csv column lookup by name", "[pipeline]") {
  CsvTable table;
  table.header = {"t", "v"};
  table.cells = {0.0, 1.0, 0.5, 2.0};
  CHECK(table.values("v") == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(table.column("missing"), config_error);
}

TEST_CASE("sha256 matches the published test vectors", "[pipeline]") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest render is stable and checksums its outputs", "[pipeline]") {
  Manifest m;
  m.add_output("b.csv", "x,y\n");
  m.add_output("a.csv", "abc");
  m.add_meta("seeds", {{"run", 7}});
  const std::string once = m.render();
  CHECK(once == m.render());

  const nlohmann::json doc = nlohmann::json::parse(once);
  CHECK(doc.at("files").at("a.csv").at("sha256") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(doc.at("files").at("b.csv").at("bytes") == 4);
  CHECK(doc.at("seeds").at("run") == 7);
  CHECK(doc.at("tool").at("name") == "regulab");
}

TEST_CASE("svg rendering is byte-stable", "[pipeline]") {
  const PlotSeries series{"energy", {0.0, 0.5, 1.0}, {1.0, 0.5, 0.25}};
  PlotSpec spec;
  spec.title = "decay";
  const std::string a = render_plot({series}, spec);
  const std::string b = render_plot({series}, spec);
  CHECK(a == b);
  CHECK(a.find("<svg") == 0);
  CHECK(a.find("<path d=") != std::string::npos);
}

TEST_CASE("svg with no points draws empty axes", "[pipeline]") {
  const std::string svg = render_plot({}, PlotSpec{});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<path d=") == std::string::npos);
  CHECK(svg.find("<line") != std::string::npos);  // axes and grid survive
}

TEST_CASE("svg contract errors", "[pipeline]") {
  CHECK_THROWS_AS(render_plot({PlotSeries{"", {0.0, 1.0}, {1.0}}}, PlotSpec{}),
                  std::invalid_argument);
  PlotSpec logspec;
  logspec.logy = true;
  CHECK_THROWS_AS(render_plot({PlotSeries{"", {0.0, 1.0}, {1.0, -1.0}}}, logspec), config_error);
}

TEST_CASE("config parsing fills defaults and validates", "[pipeline]") {
  const nlohmann::json j = minimal_config("out");
  const ExperimentConfig cfg = parse_config(j);
  CHECK(cfg.path.hurst == 0.3);
  CHECK(cfg.p == 2.0);
  CHECK(cfg.space_nodes == 32);
  CHECK(cfg.checks == std::vector<std::string>{"energy"});
  CHECK(cfg.check_params.budget.hurst == 0.3);  // inherited from the path
  CHECK(cfg.sweep.eps == std::vector<double>{0.05});

  SECTION("unknown keys are rejected") {
    nlohmann::json bad = j;
    bad["typo"] = 1;
    CHECK_THROWS_AS(parse_config(bad), config_error);
  }
  SECTION("wrong types are rejected") {
    nlohmann::json bad = j;
    bad["path"]["H"] = "high";
    CHECK_THROWS_AS(parse_config(bad), config_error);
  }
  SECTION("the solver block must declare p") {
    nlohmann::json bad = j;
    bad["solver"].erase("p");
    CHECK_THROWS_AS(parse_config(bad), config_error);
  }
  SECTION("a sweep check needs at least four mollification levels") {
    nlohmann::json bad = j;
    bad["checks"] = {"sweep"};
    bad["sweep"] = {{"eps", {0.1, 0.05}}};
    CHECK_THROWS_AS(parse_config(bad), config_error);
  }
  SECTION("a contraction check needs a second initial field") {
    nlohmann::json bad = j;
    bad["checks"] = {"contraction"};
    CHECK_THROWS_AS(parse_config(bad), config_error);
  }
}

TEST_CASE("times specs parse dyadic levels and explicit lists", "[pipeline]") {
  CHECK(parse_times_spec("2^3", 64) ==
        std::vector<std::size_t>{0, 8, 16, 24, 32, 40, 48, 56, 64});
  CHECK(parse_times_spec("0,5,9", 64) == std::vector<std::size_t>{0, 5, 9});
  CHECK_THROWS_AS(parse_times_spec("2^7", 64), config_error);
  CHECK_THROWS_AS(parse_times_spec("5,5", 64), config_error);
  CHECK_THROWS_AS(parse_times_spec("5,junk", 64), config_error);
}

TEST_CASE("path csv round-trips through the loader", "[pipeline]") {
  const SamplePath path = generate_fbm(TimeGrid{1.0, 128}, 2, 0.4, 9);
  const fs::path dir = scratch_dir("pathcsv");
  write_text_file((dir / "p.csv").string(), render_path_csv(path));

  const SamplePath back = load_path_csv((dir / "p.csv").string());
  REQUIRE(back.dim == 2);
  REQUIRE(back.grid.steps == 128);
  CHECK(back.kind == "loaded");
  for (std::size_t i = 0; i < path.values.size(); ++i) CHECK(back.values[i] == path.values[i]);
}

TEST_CASE("local-time family round-trips through csv plus sidecar", "[pipeline]") {
  const SamplePath path = generate_fbm(TimeGrid{1.0, 256}, 1, 0.3, 4);
  const ValueGrid grid = path_budget_grid(path, 64);
  const LocalTimeDensity fam = local_time_family(path, grid, {0, 64, 128, 192, 256}, 0.0);

  const fs::path dir = scratch_dir("ltcsv");
  write_text_file((dir / "lt.csv").string(), render_local_time_csv(fam));
  write_text_file((dir / "lt.json").string(), render_local_time_sidecar(fam));

  const LocalTimeDensity back =
      load_local_time((dir / "lt.csv").string(), (dir / "lt.json").string());
  REQUIRE(back.count() == fam.count());
  CHECK(back.grid.bins == fam.grid.bins);
  CHECK(back.time.horizon == fam.time.horizon);
  for (std::size_t i = 0; i < fam.density.size(); ++i) CHECK(back.density[i] == fam.density[i]);
}

TEST_CASE("potential tables lock to a requested spacing", "[pipeline]") {
  PotentialConfig bc;
  bc.kind = "gaussian";
  bc.lo = -3.0;
  bc.hi = 3.0;
  const double h = 0.037;
  const SampledPotential b = build_potential_on_spacing(bc, 1, h);
  CHECK(std::abs(b.grid.h(0) - h) <= 1e-12 * h);
  CHECK(b.grid.lo[0] == bc.lo);
  CHECK(b.grid.hi[0] >= bc.hi - 1e-12);

  PotentialConfig ex;
  ex.kind = "singular";
  ex.eps = 0.05;
  CHECK_THROWS_AS(build_potential_on_spacing(ex, 1, 0.1), config_error);
}

TEST_CASE("a zero-drift run stays monotone through the full pipeline", "[pipeline]") {
  ExperimentConfig cfg;
  cfg.output_dir = "unused";
  cfg.path = PathConfig{};
  cfg.path.kind = "zero";
  cfg.path.steps = 256;
  cfg.potential.kind = "zero";
  cfg.p = 2.0;
  cfg.space_nodes = 32;
  cfg.initial.kind = "eigenmode";
  cfg.checks = {};

  const PipelineResult result = run_check_pipeline(cfg);
  CHECK(result.checks_pass);
  CHECK(result.report.at("pass") == true);

  bool saw_energy = false;
  for (const auto& [name, content] : result.bundle.files())
    if (name == "energy.csv") {
      saw_energy = true;
      CHECK(content.rfind("t, l2,", 0) == 0);
    }
  CHECK(saw_energy);
}

TEST_CASE("output bundles write a manifest whose checksums match", "[pipeline]") {
  const fs::path dir = scratch_dir("bundle");
  OutputBundle bundle;
  bundle.add("one.csv", "a\n1\n");
  bundle.add("sub/two.csv", "b\n2\n");
  bundle.write_all(dir.string());

  REQUIRE(fs::exists(dir / "one.csv"));
  REQUIRE(fs::exists(dir / "sub/two.csv"));
  const nlohmann::json manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("files").at("one.csv").at("sha256") == sha256_hex("a\n1\n"));
  CHECK(manifest.at("files").at("sub/two.csv").at("sha256") == sha256_hex("b\n2\n"));
}

TEST_CASE("cli chain: path to occupation density to averaged drift", "[pipeline]") {
  const fs::path dir = scratch_dir("cli_chain");
  const std::string path_csv = (dir / "path.csv").string();
  const std::string lt_csv = (dir / "lt.csv").string();

  REQUIRE(run_cli("fbm --H 0.3 --N 1 --steps 1024 --seed 3 --out " + path_csv) == 0);
  REQUIRE(run_cli("localtime --in " + path_csv + " --bins 64 --sigma 0 --times 2^3 --out " +
                  lt_csv) == 0);
  REQUIRE(run_cli("average --b '{\"kind\":\"gaussian\"}' --lt " + lt_csv +
                  " --interval 0,1 --out " + (dir / "drift.csv").string()) == 0);

  const CsvTable drift = read_csv((dir / "drift.csv").string());
  CHECK(drift.header.front() == "z_1");
  CHECK(drift.rows() >= 8);

  SECTION("an interval off the recorded nodes is rejected") {
    CHECK(run_cli("average --b '{\"kind\":\"gaussian\"}' --lt " + lt_csv +
                  " --interval 0,0.3 --out " + (dir / "bad.csv").string()) == 2);
  }
}

TEST_CASE("cli solve reruns are byte-identical", "[pipeline]") {
  const fs::path dir = scratch_dir("cli_solve");
  std::ofstream((dir / "cfg.json").string()) << minimal_config(dir / "ignored").dump(2);
  const std::string cfg = (dir / "cfg.json").string();

  REQUIRE(run_cli("solve --config " + cfg + " --out " + (dir / "a/traj.csv").string() +
                  " --report " + (dir / "a/energy.csv").string()) == 0);
  REQUIRE(run_cli("solve --config " + cfg + " --out " + (dir / "b/traj.csv").string() +
                  " --report " + (dir / "b/energy.csv").string()) == 0);

  CHECK(slurp(dir / "a/traj.csv") == slurp(dir / "b/traj.csv"));
  CHECK(slurp(dir / "a/energy.csv") == slurp(dir / "b/energy.csv"));
  CHECK(slurp(dir / "a/manifest.json") == slurp(dir / "b/manifest.json"));
}

TEST_CASE("cli check passes on the smoke config and writes a report", "[pipeline]") {
  const fs::path dir = scratch_dir("cli_check");
  const fs::path outdir = dir / "out";
  std::ofstream((dir / "cfg.json").string()) << minimal_config(outdir).dump(2);

  REQUIRE(run_cli("check --config " + (dir / "cfg.json").string()) == 0);
  const nlohmann::json report = nlohmann::json::parse(slurp(outdir / "report.json"));
  CHECK(report.at("pass") == true);
  CHECK(fs::exists(outdir / "margins.csv"));
  CHECK(fs::exists(outdir / "manifest.json"));
}

TEST_CASE("cli rejects bad inputs without partial outputs", "[pipeline]") {
  const fs::path dir = scratch_dir("cli_bad");

  SECTION("corrupted config exits 2 and leaves nothing") {
    write_text_file((dir / "broken.json").string(), "{\"seed\": ");
    CHECK(run_cli("check --config " + (dir / "broken.json").string() + " --outdir " +
                  (dir / "out").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out"));
  }
  SECTION("schema violations exit 2") {
    nlohmann::json bad = minimal_config(dir / "out");
    bad["solver"]["J"] = -4;
    std::ofstream((dir / "bad.json").string()) << bad.dump();
    CHECK(run_cli("check --config " + (dir / "bad.json").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out"));
  }
  SECTION("plot with a missing column exits 2") {
    write_text_file((dir / "d.csv").string(), "t, v\n0, 1\n");
    CHECK(run_cli("plot --in " + (dir / "d.csv").string() + " --x t --y absent --out " +
                  (dir / "p.svg").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "p.svg"));
  }
  SECTION("a bad times spec exits 2") {
    CHECK(run_cli("fbm --H 0.3 --steps 64 --seed 1 --out " + (dir / "w.csv").string()) == 0);
    CHECK(run_cli("localtime --in " + (dir / "w.csv").string() + " --times 2^9 --out " +
                  (dir / "lt.csv").string()) == 2);
  }
}

TEST_CASE("cli plot renders deterministic svg from csv columns", "[pipeline]") {
  const fs::path dir = scratch_dir("cli_plot");
  write_text_file((dir / "d.csv").string(), "t, a, b\n0, 1, 2\n1, 2, 4\n2, 4, 8\n");

  REQUIRE(run_cli("plot --in " + (dir / "d.csv").string() + " --x t --y a,b --logy --out " +
                  (dir / "p1.svg").string()) == 0);
  REQUIRE(run_cli("plot --in " + (dir / "d.csv").string() + " --x t --y a,b --logy --out " +
                  (dir / "p2.svg").string()) == 0);
  CHECK(slurp(dir / "p1.svg") == slurp(dir / "p2.svg"));
  CHECK(slurp(dir / "p1.svg").find("<path d=") != std::string::npos);
}
