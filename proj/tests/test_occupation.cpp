#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "regulab/fbm.hpp"
#include "regulab/occupation.hpp"

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

std::vector<std::size_t> uniform_nodes(std::size_t steps, std::size_t count) {
  std::vector<std::size_t> nodes(count + 1);
  for (std::size_t i = 0; i <= count; ++i) nodes[i] = i * (steps / count);
  return nodes;
}

}  // namespace

TEST_CASE("constant path concentrates in one bin", "[occupation]") {
  const TimeGrid tg{1.0, 256};
  const SamplePath path = make_zero_path(tg, 1);
  const ValueGrid grid = ValueGrid::cube(1, 8, -1.0, 1.0);
  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);
  const double h = grid.h(0);
  for (std::size_t b = 0; b < L.size(); ++b) {
    if (b == 4)
      CHECK(L[b] == Catch::Approx(1.0 / h).margin(1e-12));
    else
      CHECK(L[b] == 0.0);
  }
}

TEST_CASE("linear unit-speed path has unit density", "[occupation]") {
  const TimeGrid tg{1.0, 4096};
  SamplePath path = make_linear_path(tg, 1, 1.0);
  const ValueGrid grid = ValueGrid::cube(1, 48, -0.1, 1.1);
  const double h = grid.h(0);
  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);
  for (std::size_t b = 0; b < L.size(); ++b) {
    const double lo_edge = grid.lo[0] + static_cast<double>(b) * h;
    const double hi_edge = lo_edge + h;
    if (lo_edge >= 0.0 && hi_edge <= 1.0)
      CHECK(std::abs(L[b] - 1.0) <= 2.0 * h);
    else if (hi_edge <= 0.0 || lo_edge >= 1.0)
      CHECK(L[b] == 0.0);
  }
}

TEST_CASE("mass identity and monotonicity", "[occupation]") {
  const TimeGrid tg{1.0, 4096};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 99);
  const ValueGrid grid = covering_grid(path, 128, 0.25);
  const auto nodes = uniform_nodes(tg.steps, 16);
  const LocalTimeDensity fam =
      local_time_family(path, grid, {nodes.begin() + 1, nodes.end()}, 0.0);

  for (std::size_t i = 0; i < fam.count(); ++i)
    CHECK(std::abs(fam.mass(i) - fam.time_at(i)) <= 1e-9);

  for (std::size_t i = 0; i + 1 < fam.count(); ++i) {
    auto a = fam.slice(i), b = fam.slice(i + 1);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] >= a[k]);
  }
}

TEST_CASE("compact support of the histogram", "[occupation]") {
  const TimeGrid tg{1.0, 2048};
  const SamplePath path = generate_fbm(tg, 1, 0.2, 7);
  const ValueGrid grid = covering_grid(path, 256, 0.5);
  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);
  auto [mn, mx] = path.component_range(0);
  const double h = grid.h(0);
  for (std::size_t b = 0; b < L.size(); ++b) {
    const double lo_edge = grid.lo[0] + static_cast<double>(b) * h;
    if (lo_edge + h < mn || lo_edge > mx) CHECK(L[b] == 0.0);
  }
}

TEST_CASE("smoothing preserves mass and monotonicity", "[occupation]") {
  const TimeGrid tg{1.0, 2048};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 11);
  const ValueGrid grid = covering_grid(path, 256, 0.5);
  const double sigma = 2.0 * grid.h(0);
  const auto nodes = uniform_nodes(tg.steps, 8);
  const LocalTimeDensity raw =
      local_time_family(path, grid, {nodes.begin() + 1, nodes.end()}, 0.0);
  const LocalTimeDensity smooth =
      local_time_family(path, grid, {nodes.begin() + 1, nodes.end()}, sigma);

  for (std::size_t i = 0; i < smooth.count(); ++i) {
    CHECK(std::abs(smooth.mass(i) - smooth.time_at(i)) <= 1e-6);
    auto a = smooth.slice(i);
    if (i + 1 < smooth.count()) {
      auto b = smooth.slice(i + 1);
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] >= a[k] - 1e-15);
    }
  }
  // sigma=0 must reproduce the raw histogram bit-for-bit
  const LocalTimeDensity again =
      local_time_family(path, grid, {nodes.begin() + 1, nodes.end()}, 0.0);
  CHECK(again.density == raw.density);
  CHECK(raw.density != smooth.density);
}

TEST_CASE("occupation integral closed forms", "[occupation]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath lin = make_linear_path(tg, 1, 1.0);

  const double one = occupation_integral([](std::span<const double>) { return 1.0; }, lin, 512);
  CHECK(one == Catch::Approx(512.0 * tg.dt()).margin(1e-14));

  const double idz = occupation_integral([](std::span<const double> z) { return z[0]; }, lin,
                                         tg.steps);
  CHECK(idz == Catch::Approx(0.49951171875).margin(1e-14));  // (1 - dt)/2
  CHECK(std::abs(idz - 0.5) <= tg.dt());
}

TEST_CASE("occupation-times formula pairs integral with density", "[occupation]") {
  const TimeGrid tg{1.0, 16384};
  const SamplePath path = generate_fbm(tg, 1, 0.3, 1234);
  const ValueGrid grid = covering_grid(path, 512, 0.25);
  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> center(-0.5, 0.5), width(0.3, 0.6), amp(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double c = center(rng), w = width(rng), a = amp(rng);
    auto f = [=](double z) { return a * std::exp(-0.5 * sq((z - c) / w)); };
    const double direct = occupation_integral(
        [&](std::span<const double> z) { return f(z[0]); }, path, tg.steps);
    std::vector<double> fg(grid.total());
    for (std::size_t b = 0; b < fg.size(); ++b) fg[b] = f(grid.center(0, b));
    const double paired = occupation_pairing(fg, L, grid);
    CHECK(std::abs(direct - paired) <= 0.02 * std::abs(direct));
  }
}

TEST_CASE("sobolev norm of hat and Gaussian", "[occupation]") {
  {
    const ValueGrid grid = ValueGrid::cube(1, 256, -1.0, 1.0);
    std::vector<double> hat(grid.total());
    for (std::size_t b = 0; b < hat.size(); ++b)
      hat[b] = std::max(0.0, 1.0 - std::abs(grid.center(0, b)));
    CHECK(std::abs(sobolev_norm(hat, grid, 1.0) - 3.0) <= 4.0 * grid.h(0));
  }
  {
    const ValueGrid grid = ValueGrid::cube(1, 1024, -1.5, 1.5);
    const double s = 0.2;
    std::vector<double> g(grid.total());
    for (std::size_t b = 0; b < g.size(); ++b) {
      const double z = grid.center(0, b);
      g[b] = std::exp(-0.5 * sq(z / s)) / (s * std::sqrt(2.0 * std::numbers::pi));
    }
    const double w12 = sobolev_norm(g, grid, 2.0);
    CHECK(w12 == Catch::Approx(5.3865532072720298).epsilon(0.01));  // ||g||_2 + ||g'||_2
    const double wsup = sobolev_norm(g, grid, inf);
    CHECK(wsup == Catch::Approx(8.0439795149857471).epsilon(0.01));  // sup|g| + sup|g'|
  }
}

TEST_CASE("time regularity of a Lipschitz family", "[occupation]") {
  const TimeGrid tg{1.0, 1024};
  const SamplePath lin = make_linear_path(tg, 1, 1.0);
  const ValueGrid grid = ValueGrid::cube(1, 8, -0.5, 1.5);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i <= 8; ++i) nodes.push_back(i * 32);
  const LocalTimeDensity fam = local_time_family(lin, grid, nodes, 0.0);

  const TimeRegularityEstimate est = estimate_time_regularity(fam, 1.0);
  CHECK_FALSE(est.degenerate);
  CHECK(std::abs(est.gamma - 1.0) <= 0.05);

  // Lipschitz constant in W^{1,1}: mass part 1 plus gradient part 1/h.
  const double holder = local_time_holder_norm(fam, 1.0, 1.0);
  CHECK(holder == Catch::Approx(1.0 + 1.0 / grid.h(0)).epsilon(0.02));
}

TEST_CASE("degenerate time-regularity fit is flagged", "[occupation]") {
  LocalTimeDensity fam;
  fam.grid = ValueGrid::cube(1, 8, 0.0, 1.0);
  fam.time = TimeGrid{1.0, 64};
  for (std::size_t i = 0; i <= 16; ++i) fam.nodes.push_back(4 * i);
  fam.density.assign(fam.nodes.size() * fam.grid.total(), 0.25);  // constant in time
  const TimeRegularityEstimate est = estimate_time_regularity(fam, 2.0);
  CHECK(est.degenerate);
  CHECK(est.gamma == 1.0);
}

TEST_CASE("occupation input validation", "[occupation]") {
  const TimeGrid tg{1.0, 64};
  const SamplePath path = make_linear_path(tg, 1, 1.0);
  const ValueGrid tiny = ValueGrid::cube(1, 8, 0.2, 0.4);  // path exits this box

  try {
    occupation_histogram(path, tg.steps, tiny);
    FAIL("expected bounds error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("time index") != std::string::npos);
  }

  const ValueGrid grid = ValueGrid::cube(1, 8, -0.5, 1.5);
  CHECK_THROWS_AS(local_time_family(path, grid, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(local_time_family(path, grid, {4, 4}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(local_time_family(path, grid, {4, 2}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(local_time_family(path, grid, {tg.steps + 1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(local_time_family(path, grid, {4}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(local_time_family(path, ValueGrid::cube(2, 8, -1.0, 2.0), {4}, 0.0),
                  std::invalid_argument);

  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);
  CHECK_THROWS_AS(sobolev_norm(L, grid, 0.5), std::invalid_argument);

  const LocalTimeDensity fam = local_time_family(path, grid, {8, 16, 24, 32}, 0.0);
  CHECK_THROWS_AS(estimate_time_regularity(fam, 2.0), std::invalid_argument);
  const LocalTimeDensity uneven = local_time_family(
      path, grid, {1, 2, 4, 8, 16, 24, 32, 40, 48, 56}, 0.0);
  CHECK_THROWS_AS(estimate_time_regularity(uneven, 2.0), std::invalid_argument);
}

TEST_CASE("two-dimensional histogram mass and pairing", "[occupation]") {
  const TimeGrid tg{1.0, 4096};
  const SamplePath path = generate_fbm(tg, 2, 0.4, 21);
  const ValueGrid grid = covering_grid(path, 64, 0.25);
  const std::vector<double> L = occupation_histogram(path, tg.steps, grid);

  std::vector<double> terms(L);
  const double mass = pairwise_sum(terms) * grid.cell_volume();
  CHECK(std::abs(mass - 1.0) <= 1e-9);

  auto f = [](double x, double y) { return std::exp(-0.5 * (sq(x / 0.4) + sq(y / 0.4))); };
  const double direct = occupation_integral(
      [&](std::span<const double> z) { return f(z[0], z[1]); }, path, tg.steps);
  std::vector<double> fg(grid.total());
  for (std::size_t b = 0; b < fg.size(); ++b) {
    const auto idx = grid.unflatten(b);
    fg[b] = f(grid.center(0, idx[0]), grid.center(1, idx[1]));
  }
  CHECK(std::abs(direct - occupation_pairing(fg, L, grid)) <= 0.03 * std::abs(direct));
}

TEST_CASE("regularity budget predicates", "[occupation]") {
  CHECK(RegularityBudget::hurst_threshold(-1.0, 3) == Catch::Approx(1.0 / 6.0));
  CHECK(RegularityBudget::hurst_threshold(-1.0, 1) == Catch::Approx(1.0 / 6.0));
  CHECK(RegularityBudget::hurst_threshold(0.5, 1) == Catch::Approx(1.0));
  CHECK(RegularityBudget::hurst_threshold(-2.0, 1) == Catch::Approx(0.1));

  RegularityBudget b;
  b.hurst = 0.1;
  b.dim = 1;
  b.lambda = 1.0;
  CHECK(b.lambda_space_max() == Catch::Approx(4.5));
  CHECK(b.gamma_max() == Catch::Approx(0.85));
  CHECK(b.space_ok());
  b.gamma = 0.75;
  CHECK(b.time_ok());
  b.gamma = 0.9;
  CHECK_FALSE(b.time_ok());

  b.eta = -0.25;
  b.lambda = 1.2;
  CHECK(b.sobolev_ok());  // window (1, 1.5) at eta=-1/4
  b.lambda = 1.0;
  CHECK_FALSE(b.sobolev_ok());
  b.eta = -1.0;
  b.lambda = 1.4;
  CHECK_FALSE(b.sobolev_ok());  // window empty at eta=-1

  b.r = 1.0;
  b.q = 1.0;
  CHECK(b.exponents_ok());
  CHECK(b.r_conjugate() == inf);
  CHECK(b.q_conjugate() == inf);
  b.r = 2.0;
  b.q = 1.5;
  CHECK_FALSE(b.exponents_ok());
  CHECK(b.r_conjugate() == Catch::Approx(2.0));
  b.r = 4.0 / 3.0;
  CHECK(b.r_conjugate() == Catch::Approx(4.0));

  RegularityBudget good{0.1, 1.2, 0.7, 1.0, 1.0, -0.25, 1};
  CHECK(good.admissible());
  RegularityBudget bad = good;
  bad.gamma = 0.84;  // above gamma_max = 1 - 1.7*0.1 = 0.83
  CHECK_FALSE(bad.admissible());
}
