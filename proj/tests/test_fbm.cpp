#include <doctest.h>

#include "packdim/error.hpp"
#include "packdim/fbm.hpp"
#include "support.hpp"

using namespace packdim;

TEST_CASE("field shape, origin and embedding accuracy") {
  const auto f = sample_fbm(0.5, 256, 3, 7);
  CHECK(f.samples.size() == 257 * 3);
  for (std::size_t c = 0; c < 3; ++c) CHECK(f.at(0, c) == 0.0);
  CHECK(f.embedding_error <= 1e-8);
  CHECK(sample_fbm(0.5, 256, 3, 7) == f);
  CHECK_FALSE(sample_fbm(0.5, 256, 3, 8) == f);
  CHECK_THROWS_AS(sample_fbm(1.0, 256, 2, 1), ParameterError);
  CHECK_THROWS_AS(sample_fbm(0.5, 300, 2, 1), ParameterError);
  CHECK_THROWS_AS(sample_fbm(0.5, 128, 2, 1), ParameterError);
}

TEST_CASE("fractional Gaussian noise autocovariance") {
  CHECK(fgn_autocovariance(0.5, 0) == doctest::Approx(1.0));
  CHECK(fgn_autocovariance(0.5, 3) == doctest::Approx(0.0).epsilon(1e-15));
  // 0.5 ((k+1)^{2a} - 2 k^{2a} + (k-1)^{2a})
  const double a = 0.8;
  CHECK(fgn_autocovariance(a, 2) ==
        doctest::Approx(0.5 * (std::pow(3.0, 2 * a) - 2 * std::pow(2.0, 2 * a) + 1.0)).epsilon(1e-14));
}

TEST_CASE("Brownian ensemble has unit variance at time 1") {
  const auto sc = increment_scaling(0.5, 256, 2, 500, 3);
  CHECK(std::abs(sc.var_at_one - 1.0) <= 0.15);
  CHECK(std::abs(sc.exponent - 1.0) <= 0.1);
}

TEST_CASE("increment variance follows h^{2 alpha}") {
  const auto sc = increment_scaling(0.8, 256, 2, 500, 4);
  // lags are 2^-1, 2^-2, ...
  for (int k : {4, 6}) {
    const double h = std::exp2(-k);
    CHECK(sc.lags[k - 1] == h);
    CHECK(std::abs(sc.variances[k - 1] / std::pow(h, 1.6) - 1.0) <= 0.2);
  }
  CHECK(std::abs(sc.exponent - 1.6) <= 0.1);
}

TEST_CASE("ensemble covariance matches the fBm covariance") {
  const double alpha = 0.3;
  const std::size_t grid = 256;
  const std::size_t i = 64;
  const std::size_t j = 192;
  const double s = 0.25;
  const double t = 0.75;
  double acc = 0.0;
  const int fields = 1500;
  for (int f = 0; f < fields; ++f) {
    const auto x = sample_fbm(alpha, grid, 2, 1000 + f);
    acc += 0.5 * (x.at(i, 0) * x.at(j, 0) + x.at(i, 1) * x.at(j, 1));
  }
  const double want = 0.5 * (std::pow(s, 2 * alpha) + std::pow(t, 2 * alpha) - std::pow(t - s, 2 * alpha));
  CHECK(std::abs(acc / fields - want) <= 0.05);
}

TEST_CASE("image measures") {
  const auto field = sample_fbm(0.5, 1024, 2, 5);
  const auto point = image_measure(make_dirac({0.5}), field);
  CHECK(point.measure.size() == 1);
  CHECK(point.measure.weight(0) == 1.0);

  // two atoms snapping to the same grid time merge
  const auto twin = image_measure(PointMeasure(1, {0.50001, 0.50002}, {0.5, 0.5}), field);
  CHECK(twin.measure.size() == 1);
  CHECK(twin.measure.weight(0) == doctest::Approx(1.0));

  const auto mu = testing::cantor(10);
  const auto big = sample_fbm(0.5, grid_for(mu), 2, 6);
  const auto img = image_measure(mu, big);
  CHECK(img.measure.size() == 1024);
  CHECK(img.measure.ambient_dim() == 2);
  double total = 0.0;
  for (double w : img.measure.weights()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(img.max_snap <= 0.5 / static_cast<double>(big.grid) + 1e-15);
  CHECK_THROWS_AS(image_measure(testing::product_cantor(2), big), ParameterError);
}

TEST_CASE("grid selection resolves the atom gaps") {
  const auto mu = testing::cantor(10);
  const auto g = grid_for(mu);
  const double gap = 2.0 * std::pow(3.0, -10);  // 0 and 2/3^10
  CHECK(0.5 / static_cast<double>(g) < gap / 10.0);
  CHECK(0.5 / static_cast<double>(g / 2) >= gap / 10.0);
  CHECK(grid_for(make_dirac({0.5})) == 256);
}

TEST_CASE("single atom experiment") {
  FbmConfig cfg;
  cfg.trials = 5;
  const auto r = fbm_experiment(make_dirac({0.5}), cfg);
  for (const auto& row : r.rows) CHECK(row.dim_p == 0.0);
  CHECK(r.median == 0.0);
  for (const auto& v : r.verdicts) CHECK_MESSAGE(v.pass, v.id);
  cfg.trials = 3;
  CHECK_THROWS_AS(fbm_experiment(make_dirac({0.5}), cfg), ParameterError);
}

TEST_CASE("field files round trip") {
  const auto f = sample_fbm(0.7, 256, 2, 9);
  const auto path = std::filesystem::temp_directory_path() / "packdim_unit_field.txt";
  save_field(f, path);
  const auto back = load_field(path);
  CHECK(back.alpha == f.alpha);
  CHECK(back.grid == f.grid);
  CHECK(back.channels == f.channels);
  CHECK(back.seed == f.seed);
  CHECK(back.samples == f.samples);
}
