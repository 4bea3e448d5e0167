#include <doctest.h>

#include <sstream>

#include "packdim/error.hpp"
#include "support.hpp"

using namespace packdim;

TEST_CASE("kernel value by hand") {
  const KernelParams p(1.0, 2.0, 0.5);
  // min{1, 0.5, 0.25^1.5 / 0.25}
  CHECK(kernel_value(p, 0.5, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kernel_value_min3(p, 0.5, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kernel_value(p, 0.1, 0.25) == 1.0);
  CHECK(kernel_value(p, 0.25, 0.25) == 1.0);
  CHECK(kernel_value(p, 0.0, 0.25) == 1.0);
  CHECK(kernel_value_min3(p, 0.0, 0.25) == 1.0);
  // third regime: d >= r^theta = 0.5
  CHECK(kernel_value(p, 0.8, 0.25) == doctest::Approx(std::pow(0.25, 1.5) / 0.64).epsilon(1e-14));
  CHECK_THROWS_AS(KernelParams(2.0, 1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(KernelParams(0.5, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(KernelParams(0.5, 1.0, 1.5), ParameterError);
}

TEST_CASE("piecewise form equals min of three terms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double s = 3.0 * u(rng);
    const double t = s * u(rng);
    const double theta = std::max(1e-3, u(rng));
    const double r = std::max(1e-9, u(rng));
    const double d = 1.8 * u(rng);
    const KernelParams p(t, s, theta);
    worst = std::max(worst, std::abs(kernel_value(p, d, r) - kernel_value_min3(p, d, r)));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("kernel is bounded and monotone") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double s = 3.0 * u(rng);
    const KernelParams p(s * u(rng), s, std::max(1e-3, u(rng)));
    const double r1 = std::max(1e-9, u(rng));
    const double r2 = std::min(1.0, r1 * (1.0 + u(rng)));
    const double d1 = 1.5 * u(rng);
    const double d2 = d1 + u(rng);
    const double k = kernel_value(p, d1, r1);
    CHECK((k >= 0.0 && k <= 1.0));
    CHECK(kernel_value(p, d1, r2) >= k - 1e-15);
    CHECK(kernel_value(p, d2, r1) <= k + 1e-15);
  }
}

TEST_CASE("classic potential by hand") {
  const auto one = make_dirac({0.5});
  const std::vector<double> x = {0.0};
  CHECK(classic_potential(one, x, 1.0, 0.25) == doctest::Approx(0.5));

  const auto mu = testing::random_measure(2, 30, 4);
  const std::vector<double> y = {0.3, 0.3};
  CHECK(classic_potential(mu, y, 1.7, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  const auto two = PointMeasure(1, {0.1, 0.9}, {0.5, 0.5});
  CHECK(classic_potential(two, x, 1.0, 0.2) == doctest::Approx(0.5 + 0.5 * 0.2 / 0.9).epsilon(1e-14));
}

TEST_CASE("radial profile matches brute force ball masses") {
  const auto mu = testing::random_measure(3, 300, 21);
  const std::vector<double> x = {0.4, 0.6, 0.5};
  const RadialProfile prof(mu, x);
  for (double r : {0.0, 0.01, 0.1, 0.3, 0.7, 2.0}) {
    CHECK(prof.ball_mass(r) == doctest::Approx(testing::brute_ball(mu, x, r)).epsilon(1e-12));
  }
  // the closed ball includes atoms exactly at distance r
  const auto two = PointMeasure(1, {0.25, 0.75}, {0.5, 0.5});
  const std::vector<double> o = {0.5};
  CHECK(RadialProfile(two, o).ball_mass(0.25) == 1.0);
}

TEST_CASE("potential table equals the brute-force double loop") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const auto mu = testing::random_measure(n, 200, 100 + trial);
    const auto refs = sample_references(mu, 20, trial);
    const double s = n * u(rng) + 0.1;
    const KernelParams p(s * u(rng), s, 0.05 + 0.95 * u(rng));
    const ScaleGrid grid(0.9, 0.8, 30);
    const auto table = potential_table(mu, refs, p, grid);
    REQUIRE(table.rows() == refs.size());
    REQUIRE(table.cols() == 30);
    for (std::size_t i = 0; i < table.rows(); ++i) {
      for (std::size_t j = 0; j < table.cols(); ++j) {
        const double want = testing::brute_potential(mu, refs.point(i), p.t, p.s, p.theta, grid[j]);
        worst = std::max(worst, std::abs(table.at(i, j) - want) / want);
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("full-mass radius gives 1") {
  const auto mu = testing::random_measure(2, 100, 8);
  const auto refs = sample_references(mu, 10, 1);
  const auto table = potential_table(mu, refs, KernelParams(0.5, 1.5, 0.5), ScaleGrid(1.0, 0.5, 5));
  // r = 1 reaches every atom of the unit square only within sqrt(2); check r >= diameter instead
  const auto wide = potential_table(mu, refs, KernelParams(0.5, 1.5, 0.5), ScaleGrid(1.0, 0.5, 2));
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double far = RadialProfile(mu, refs.point(i)).distances().back();
    if (far <= 1.0) CHECK(wide.at(i, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table.at(i, 0) <= 1.0 + 1e-12);
  }
}

TEST_CASE("theta = 1 and s = m reduces to the classic potential") {
  const auto mu = testing::random_measure(2, 150, 41);
  const auto refs = sample_references(mu, 15, 2);
  const ScaleGrid grid(0.5, 0.7, 20);
  for (double t : {0.3, 1.0, 2.0}) {
    const auto a = potential_table(mu, refs, KernelParams(t, 2.0, 1.0), grid);
    const auto b = potential_table(mu, refs, KernelParams::classic(2.0), grid);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      CHECK(a.at(i, 3) == doctest::Approx(classic_potential(mu, refs.point(i), 2.0, grid[3])).epsilon(1e-12));
    }
  }
}

TEST_CASE("chain inequality between kernels") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto mu = testing::random_measure(3, 120, 52);
  std::size_t violations = 0;
  for (int i = 0; i < 4000; ++i) {
    const double m = 1.0 + static_cast<double>(rng() % 2);
    const double t = m * u(rng);
    const double theta = std::max(1e-3, u(rng));
    const double r = std::max(1e-6, u(rng));
    const std::vector<double> x = {u(rng), u(rng), u(rng)};
    const double fm = classic_potential(mu, x, m, r);
    const double ftm = testing::brute_potential(mu, x, t, m, theta, r);
    const double ftn = testing::brute_potential(mu, x, t, 3.0, theta, r);
    if (fm > ftm + 1e-12 || ftm > ftn + std::pow(r, t * (1.0 - theta)) + 1e-12) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("scale grid and references") {
  const auto g = ScaleGrid::from_window(0x1p-10, 0x1p-2, 0.5);
  CHECK(g.size() == 9);
  CHECK(g[0] == 0x1p-2);
  CHECK(g[8] == doctest::Approx(0x1p-10));
  CHECK_THROWS_AS(ScaleGrid::from_window(0.5, 0.1, 0.5), ParameterError);

  const auto mu = testing::random_measure(1, 50, 3);
  const auto all = sample_references(mu, 0, 1);
  CHECK(all.size() == 50);
  const auto some = sample_references(mu, 64, 7);
  CHECK(some.size() == 64);
  CHECK(sample_references(mu, 64, 7).coords == some.coords);
  for (double w : some.weights) CHECK(w == doctest::Approx(1.0 / 64));

  const auto refs = make_references(1, {0.5});
  std::ostringstream os;
  write_potential_table(potential_table(mu, refs, KernelParams::classic(1.0), g), os);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK_THROWS_AS(potential_table(mu, make_references(1, {}), KernelParams::classic(1.0), g), ParameterError);
}
