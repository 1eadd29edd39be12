#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "regulab/averaging.hpp"
#include "regulab/fbm.hpp"
#include "regulab/occupation.hpp"
#include "regulab/potential.hpp"

using namespace regulab;

namespace {

ValueGrid covering_grid(const SamplePath& path, std::size_t bins, double pad) {
  std::vector<double> lo(path.dim), hi(path.dim);
  for (std::size_t c = 0; c < path.dim; ++c) {
    auto [mn, mx] = path.component_range(c);
    lo[c] = mn - pad;
    hi[c] = mx + pad;
  }
  const double lo_all = *std::min_element(lo.begin(), lo.end());
  const double hi_all = *std::max_element(hi.begin(), hi.end());
  return ValueGrid::cube(path.dim, bins, lo_all, hi_all);
}

/// Potential box with the same spacing as `match`: a centered cube of the
/// same width and bin count, so the convolution precondition holds exactly.
ValueGrid centered_twin(const ValueGrid& match) {
  const double half = 0.5 * (match.hi[0] - match.lo[0]);
  return ValueGrid::cube(match.dim, match.bins, -half, half);
}

SampledPotential gaussian_table(const ValueGrid& grid, double width) {
  return SampledPotential::from_function(
      grid, grid.dim, [width, &grid](std::span<const double> z) {
        double n2 = 0.0;
        for (double x : z) n2 += x * x;
        return std::vector<double>(grid.dim, std::exp(-n2 / (2.0 * width * width)));
      });
}

/// Mass-one single-bin spike at the middle cell of a fresh cube whose
/// spacing matches `like` (bins cells wide, centered at zero).
SampledPotential spike_table(const ValueGrid& like, std::size_t bins) {
  const double h = like.h(0);
  const double half = 0.5 * static_cast<double>(bins) * h;
  const ValueGrid grid = ValueGrid::cube(like.dim, bins, -half, half);
  SampledPotential spike;
  spike.grid = grid;
  spike.dim = like.dim;
  spike.values.assign(like.dim * grid.total(), 0.0);
  std::size_t flat = 0;
  for (std::size_t a = 0; a < grid.dim; ++a) flat = flat * grid.bins + grid.bins / 2;
  for (std::size_t c = 0; c < like.dim; ++c)
    spike.values[c * grid.total() + flat] = 1.0 / grid.cell_volume();
  return spike;
}

}  // namespace

TEST_CASE("zero density convolves to the zero drift table", "[averaging]") {
  const ValueGrid lgrid = ValueGrid::cube(1, 32, -1.0, 1.0);
  const ValueGrid bgrid = centered_twin(lgrid);
  const SampledPotential b = gaussian_table(bgrid, 0.3);
  const std::vector<double> density(lgrid.total(), 0.0);

  const DriftTable drift = convolve_local_time(b, lgrid, density, 0.25, 0.75);
  CHECK(drift.time_lo == 0.25);
  CHECK(drift.time_hi == 0.75);
  CHECK(drift.grid().bins == 63);
  CHECK(drift.sup_bound == 0.0);
  for (double v : drift.table.values) CHECK(v == 0.0);
}

TEST_CASE("a unit spike reproduces the shifted local time", "[averaging]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 42);
  const ValueGrid lgrid = covering_grid(path, 32, 0.25);
  const LocalTimeDensity fam =
      local_time_family(path, lgrid, std::vector<std::size_t>{0, tg.steps}, 0.0);

  const SampledPotential spike = spike_table(lgrid, 16);
  const DriftTable drift = convolve_local_time(spike, fam, 0, 1);

  const std::span<const double> L = fam.slice(1);
  const std::size_t shift = spike.grid.bins / 2;
  REQUIRE(drift.grid().total() == spike.grid.bins + lgrid.bins - 1);
  for (std::size_t k = 0; k < drift.grid().total(); ++k) {
    const double expected =
        (k >= shift && k - shift < lgrid.bins) ? L[k - shift] : 0.0;
    CHECK(drift.table.values[k] == Catch::Approx(expected).margin(1e-12));
  }
  // the spike center is the out-grid offset: drift(u) ~ L(u - z_spike)
  const double z_spike = spike.grid.center(0, shift);
  const std::size_t probe = shift + lgrid.bins / 2;
  CHECK(drift.grid().center(0, probe) ==
        Catch::Approx(z_spike + lgrid.center(0, lgrid.bins / 2)).margin(1e-12));
}

TEST_CASE("fft convolution matches direct quadrature on a rough path", "[averaging]") {
  const TimeGrid tg{1.0, 1 << 16};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 7);
  const ValueGrid lgrid = covering_grid(path, 512, 0.25);
  const LocalTimeDensity fam =
      local_time_family(path, lgrid, std::vector<std::size_t>{0, tg.steps}, 0.0);
  const SampledPotential b = gaussian_table(centered_twin(lgrid), 0.25);
  const DriftTable drift = convolve_local_time(b, fam, 0, 1);

  const auto bfn = [](std::span<const double> z) {
    return std::vector<double>{std::exp(-z[0] * z[0] / (2.0 * 0.25 * 0.25))};
  };
  double sup_err = 0.0, sup_ref = 0.0;
  for (std::size_t k = 0; k < drift.grid().total(); k += 8) {
    const double u = drift.grid().center(0, k);
    const std::vector<double> point{u};
    const double direct = averaging_direct(bfn, path, 0, tg.steps, point)[0];
    sup_err = std::max(sup_err, std::abs(drift.table.values[k] - direct));
    sup_ref = std::max(sup_ref, std::abs(direct));
  }
  CHECK(sup_ref > 0.1);
  CHECK(sup_err <= 0.02 * sup_ref);
}

TEST_CASE("constant integrand averages to its value times the window", "[averaging]") {
  const TimeGrid tg{1.0, 256};
  const SamplePath path = generate_fbm(tg, 2, 0.5, 3);
  const auto bfn = [](std::span<const double>) { return std::vector<double>{3.5, -1.25}; };
  const std::vector<double> u{0.2, -0.4};
  const std::vector<double> avg = averaging_direct(bfn, path, 64, 192, u);
  const double len = tg.t(192) - tg.t(64);
  CHECK(avg[0] == Catch::Approx(3.5 * len).margin(1e-12));
  CHECK(avg[1] == Catch::Approx(-1.25 * len).margin(1e-12));
}

TEST_CASE("identity integrand over the frozen path recovers u (t - s)", "[averaging]") {
  const TimeGrid tg{1.0, 512};
  const SamplePath path = make_zero_path(tg, 2);
  const auto bfn = [](std::span<const double> z) {
    return std::vector<double>(z.begin(), z.end());
  };
  const std::vector<double> u{0.7, -0.3};
  const std::vector<double> avg = averaging_direct(bfn, path, 0, 512, u);
  CHECK(avg[0] == Catch::Approx(0.7).margin(1e-12));
  CHECK(avg[1] == Catch::Approx(-0.3).margin(1e-12));
}

TEST_CASE("gaussian averaged along a linear path matches the error-function form",
          "[averaging]") {
  const TimeGrid tg{1.0, 1 << 16};
  const SamplePath path = make_linear_path(tg, 1, 1.0);
  const auto bfn = [](std::span<const double> z) {
    return std::vector<double>{std::exp(-z[0] * z[0] / (2.0 * 0.3 * 0.3))};
  };
  const std::size_t k0 = tg.steps / 4, k1 = 3 * tg.steps / 4;  // s = 0.25, t = 0.75
  // sigma sqrt(pi/2) [erf((u-s)/(sigma sqrt 2)) - erf((u-t)/(sigma sqrt 2))]
  const std::vector<std::pair<double, double>> oracle{
      {0.0, 0.14747901534065823},
      {0.4, 0.42847548481922120},
      {1.1, 0.089764292460481479},
  };
  for (const auto& [u, expected] : oracle) {
    const std::vector<double> point{u};
    const double avg = averaging_direct(bfn, path, k0, k1, point)[0];
    CHECK(avg == Catch::Approx(expected).margin(1e-4));
  }
}

TEST_CASE("young bound accepts the zero function", "[averaging]") {
  const ValueGrid grid = ValueGrid::cube(1, 16, -1.0, 1.0);
  const std::vector<double> f(grid.total(), 0.0);
  std::vector<double> g(grid.total());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = std::exp(-sq(grid.center(0, i)));
  const YoungBoundCheck check = young_bound_check(grid, f, grid, g, 2.0);
  CHECK(check.lhs == 0.0);
  CHECK(check.rhs == 0.0);
  CHECK(check.pass);
}

TEST_CASE("young bound on a gaussian pair stays below one", "[averaging]") {
  const ValueGrid grid = ValueGrid::cube(1, 256, -6.0, 6.0);
  std::vector<double> f(grid.total()), g(grid.total());
  for (std::size_t i = 0; i < grid.total(); ++i) {
    const double x = grid.center(0, i);
    f[i] = std::exp(-0.5 * x * x);
    g[i] = std::exp(-0.5 * x * x);
  }
  const YoungBoundCheck check = young_bound_check(grid, f, grid, g, 2.0);
  CHECK(check.pass);
  CHECK(check.lhs < check.rhs);
  // f * g is the width-sqrt(2) gaussian: sup = sqrt(pi), attained at zero
  CHECK(check.lhs > 0.5);
}

TEST_CASE("young bound holds across random band-limited pairs", "[averaging]") {
  const ValueGrid grid = ValueGrid::cube(1, 128, -1.0, 1.0);
  const std::vector<double> rhos{1.0, 1.5, 2.0, 3.0, inf};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);

  const auto random_field = [&]() {
    std::vector<double> coeff(5), phase(5);
    for (std::size_t m = 0; m < 5; ++m) {
      coeff[m] = amp(rng);
      phase[m] = std::numbers::pi * amp(rng);
    }
    std::vector<double> v(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
      const double x = grid.center(0, i);
      const double envelope = sq(std::sin(0.5 * std::numbers::pi * (x + 1.0)));
      double s = 0.0;
      for (std::size_t m = 0; m < 5; ++m)
        s += coeff[m] *
             std::sin(std::numbers::pi * static_cast<double>(m + 1) * x + phase[m]);
      v[i] = envelope * s;
    }
    return v;
  };

  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> f = random_field();
    const std::vector<double> g = random_field();
    const double rho = rhos[static_cast<std::size_t>(trial) % rhos.size()];
    const YoungBoundCheck check = young_bound_check(grid, f, grid, g, rho);
    INFO("trial " << trial << " rho " << rho << " lhs " << check.lhs << " rhs " << check.rhs);
    CHECK(check.pass);
  }
}

TEST_CASE("drift tables are bilinear in potential and density", "[averaging]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath path = generate_fbm(tg, 1, 0.4, 11);
  const ValueGrid lgrid = covering_grid(path, 64, 0.25);
  const LocalTimeDensity fam = local_time_family(
      path, lgrid, std::vector<std::size_t>{0, tg.steps / 2, tg.steps}, 0.0);
  const ValueGrid bgrid = centered_twin(lgrid);

  const SampledPotential b1 = gaussian_table(bgrid, 0.3);
  const SampledPotential b2 = SampledPotential::from_function(
      bgrid, 1, [](std::span<const double> z) {
        return std::vector<double>{std::sin(2.0 * z[0])};
      });
  SampledPotential combo = b1;
  for (std::size_t i = 0; i < combo.values.size(); ++i)
    combo.values[i] = 0.75 * b1.values[i] - 1.5 * b2.values[i];

  const DriftTable d1 = convolve_local_time(b1, fam, 0, 2);
  const DriftTable d2 = convolve_local_time(b2, fam, 0, 2);
  const DriftTable dc = convolve_local_time(combo, fam, 0, 2);
  for (std::size_t k = 0; k < dc.grid().total(); ++k)
    CHECK(dc.table.values[k] ==
          Catch::Approx(0.75 * d1.table.values[k] - 1.5 * d2.table.values[k]).margin(1e-12));
}

TEST_CASE("drift tables add across adjoining windows", "[averaging]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath path = generate_fbm(tg, 1, 0.4, 13);
  const ValueGrid lgrid = covering_grid(path, 64, 0.25);
  const LocalTimeDensity fam = local_time_family(
      path, lgrid, std::vector<std::size_t>{0, tg.steps / 2, tg.steps}, 0.0);
  const SampledPotential b = gaussian_table(centered_twin(lgrid), 0.3);

  const DriftTable whole = convolve_local_time(b, fam, 0, 2);
  const DriftTable first = convolve_local_time(b, fam, 0, 1);
  const DriftTable second = convolve_local_time(b, fam, 1, 2);
  CHECK(whole.time_lo == first.time_lo);
  CHECK(whole.time_hi == second.time_hi);
  for (std::size_t k = 0; k < whole.grid().total(); ++k)
    CHECK(whole.table.values[k] ==
          Catch::Approx(first.table.values[k] + second.table.values[k]).margin(1e-12));
}

TEST_CASE("incompatible grids are rejected", "[averaging]") {
  const ValueGrid lgrid = ValueGrid::cube(1, 32, -1.0, 1.0);
  const std::vector<double> density(lgrid.total(), 0.0);

  const ValueGrid coarse = ValueGrid::cube(1, 16, -1.0, 1.0);  // spacing differs
  const SampledPotential b_coarse = gaussian_table(coarse, 0.3);
  CHECK_THROWS_AS(convolve_local_time(b_coarse, lgrid, density, 0.0, 1.0),
                  std::invalid_argument);

  const ValueGrid planar = ValueGrid::cube(2, 32, -1.0, 1.0);  // dimension differs
  const SampledPotential b_planar = gaussian_table(planar, 0.3);
  CHECK_THROWS_AS(convolve_local_time(b_planar, lgrid, density, 0.0, 1.0),
                  std::invalid_argument);

  const SampledPotential b = gaussian_table(centered_twin(lgrid), 0.3);
  CHECK_THROWS_AS(convolve_local_time(b, lgrid, density, 1.0, 0.5), std::invalid_argument);

  std::vector<double> f(lgrid.total(), 0.0);
  CHECK_THROWS_AS(young_bound_check(lgrid, f, lgrid, f, 0.5), std::invalid_argument);
}

TEST_CASE("non-finite potentials abort the drift build", "[averaging]") {
  const ValueGrid lgrid = ValueGrid::cube(1, 32, -1.0, 1.0);
  std::vector<double> density(lgrid.total(), 0.0);
  density[16] = 1.0;
  SampledPotential b = gaussian_table(centered_twin(lgrid), 0.3);
  b.values[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(convolve_local_time(b, lgrid, density, 0.0, 1.0), numeric_abort);
}

TEST_CASE("singular analytic potentials are rejected by direct quadrature", "[averaging]") {
  const TimeGrid tg{1.0, 256};
  const SamplePath path = generate_fbm(tg, 1, 0.5, 5);
  const std::vector<double> u{0.3};
  const PotentialSpec singular{-0.5, 1.0, 1};
  CHECK_THROWS_AS(averaging_direct(singular, path, 0, tg.steps, u), std::invalid_argument);

  const PotentialSpec mild{0.5, 1.0, 1};
  const std::vector<double> via_spec = averaging_direct(mild, path, 0, tg.steps, u);
  const std::vector<double> via_fn = averaging_direct(
      [&mild](std::span<const double> z) { return eval_potential(mild, z); }, path, 0,
      tg.steps, u);
  CHECK(via_spec[0] == via_fn[0]);
}

TEST_CASE("drift lookups interpolate multilinearly and record their bound", "[averaging]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath path = generate_fbm(tg, 1, 0.4, 17);
  const ValueGrid lgrid = covering_grid(path, 64, 0.25);
  const LocalTimeDensity fam =
      local_time_family(path, lgrid, std::vector<std::size_t>{0, tg.steps}, 0.0);
  const SampledPotential b = gaussian_table(centered_twin(lgrid), 0.3);
  const DriftTable drift = convolve_local_time(b, fam, 0, 1);

  const ValueGrid& og = drift.grid();
  double sup = 0.0;
  for (double v : drift.table.values) sup = std::max(sup, std::abs(v));
  CHECK(sup <= drift.sup_bound * (1.0 + 1e-12));
  CHECK(drift.time_lo == 0.0);
  CHECK(drift.time_hi == 1.0);

  const std::size_t mid = og.total() / 2;
  const std::vector<double> at_node{og.center(0, mid)};
  CHECK(drift.eval(at_node)[0] == Catch::Approx(drift.table.values[mid]).margin(1e-14));

  const std::vector<double> between{0.5 * (og.center(0, mid) + og.center(0, mid + 1))};
  CHECK(drift.eval(between)[0] ==
        Catch::Approx(0.5 * (drift.table.values[mid] + drift.table.values[mid + 1]))
            .margin(1e-14));

  const std::vector<double> outside{og.hi[0] + 1.0};
  CHECK(drift.eval(outside)[0] == 0.0);
}

TEST_CASE("a grid-scale spike keeps the averaged gradient bounded", "[averaging]") {
  const TimeGrid tg{1.0, 1 << 14};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 23);

  double grad_spike_coarse = 0.0, grad_drift_coarse = 0.0;
  const double sigma = 2.0 * (covering_grid(path, 128, 0.25).h(0));

  for (const std::size_t bins : {128, 256}) {
    const ValueGrid lgrid = covering_grid(path, bins, 0.25);
    const LocalTimeDensity fam =
        local_time_family(path, lgrid, std::vector<std::size_t>{0, tg.steps}, sigma);
    const SampledPotential spike = spike_table(lgrid, 16);

    // the potential's own gradient diverges as the grid refines ...
    const std::vector<double> gb = grid_gradient_magnitude(spike.component(0), spike.grid);
    const double grad_spike = *std::max_element(gb.begin(), gb.end());

    // ... but the averaged drift's gradient stays pinned to the density's
    const DriftTable drift = convolve_local_time(spike, fam, 0, 1);
    const std::vector<double> gd =
        grid_gradient_magnitude(drift.table.component(0), drift.grid());
    const double grad_drift = *std::max_element(gd.begin(), gd.end());

    const YoungBoundCheck young =
        young_bound_check(spike.grid, spike.component(0), lgrid, fam.slice(1), 1.0);
    CHECK(young.pass);

    if (bins == 128) {
      grad_spike_coarse = grad_spike;
      grad_drift_coarse = grad_drift;
    } else {
      CHECK(grad_spike >= 3.5 * grad_spike_coarse);
      CHECK(grad_drift <= 2.0 * grad_drift_coarse);
      CHECK(grad_drift_coarse <= 2.0 * grad_drift);
    }
  }
}
