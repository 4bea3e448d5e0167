#include <doctest.h>

#include "packdim/error.hpp"
#include "packdim/projection.hpp"
#include "support.hpp"

using namespace packdim;

TEST_CASE("frames are orthonormal and deterministic") {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t m = 1; m <= n; ++m) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CHECK(sample_grassmann(n, m, seed).orthonormality_error() <= 1e-12);
      }
    }
  }
  CHECK(sample_grassmann(3, 2, 77).basis() == sample_grassmann(3, 2, 77).basis());
  CHECK(sample_grassmann(3, 2, 77).digest() == sample_grassmann(3, 2, 77).digest());
  CHECK(sample_grassmann(3, 2, 77).digest() != sample_grassmann(3, 2, 78).digest());
  CHECK_THROWS_AS(sample_grassmann(2, 3, 1), ParameterError);
  CHECK_THROWS_AS(Frame(Eigen::MatrixXd::Ones(2, 1)), ParameterError);
}

TEST_CASE("line directions are uniform on the circle") {
  const int count = 10000;
  std::vector<double> u;
  for (int i = 0; i < count; ++i) {
    const auto f = sample_grassmann(2, 1, derive_seed(9, i));
    u.push_back((std::atan2(f.basis()(1, 0), f.basis()(0, 0)) + M_PI) / (2.0 * M_PI));
  }
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (int i = 0; i < count; ++i) {
    ks = std::max({ks, std::abs(u[i] - static_cast<double>(i) / count), std::abs(u[i] - (i + 1.0) / count)});
  }
  // 1% critical value of the one-sample Kolmogorov-Smirnov statistic
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("full frames preserve distances") {
  const auto mu = testing::random_measure(3, 60, 5);
  const auto f = sample_grassmann(3, 3, 4);
  const auto rows = project_coordinates(mu, f);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const std::span<const double> a(rows.data() + 3 * i, 3);
      const std::span<const double> b(rows.data() + 3 * j, 3);
      CHECK(testing::distance(a, b) == doctest::Approx(testing::distance(mu.atom(i), mu.atom(j))).epsilon(1e-10));
    }
  }
}

TEST_CASE("axis projection by hand") {
  const PointMeasure mu(2, {0.2, 0.9, 0.4, 0.1}, {0.3, 0.7});
  const auto rows = project_coordinates(mu, axis_frame(2, {0}));
  CHECK(rows == std::vector<double>{0.2, 0.4});
  const auto p = project_measure(mu, axis_frame(2, {0}));
  CHECK(p.measure.ambient_dim() == 1);
  CHECK(p.measure.weight(0) == 0.3);
  CHECK(p.measure.weight(1) == 0.7);
  CHECK(p.map.offset[0] == 0.2);
  CHECK(p.map.scale == doctest::Approx(0.2));
  CHECK_THROWS_AS(project_coordinates(mu, axis_frame(3, {0})), ParameterError);
}

TEST_CASE("projection is 1-Lipschitz and keeps mass") {
  const auto mu = testing::product_cantor(6);
  const auto f = sample_grassmann(2, 1, 3);
  const auto rows = project_coordinates(mu, f);
  double worst = 0.0;
  double widest = 0.0;
  double widest_projected = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = testing::distance(mu.atom(i), mu.atom(j));
      const double pd = std::abs(rows[i] - rows[j]);
      worst = std::max(worst, pd - d);
      widest = std::max(widest, d);
      widest_projected = std::max(widest_projected, pd);
    }
  }
  CHECK(worst <= 1e-12);
  CHECK(widest_projected <= widest);
  const auto p = project_measure(mu, f);
  double total = 0.0;
  for (double w : p.measure.weights()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimates do not depend on the recorded similarity") {
  // shrink the measure by 1/2 and the window with it
  const auto mu = testing::cantor(11);
  std::vector<double> half(mu.coords().begin(), mu.coords().end());
  for (auto& x : half) x *= 0.5;
  const PointMeasure small(1, half, std::vector<double>(mu.weights().begin(), mu.weights().end()));
  auto cfg = testing::cantor_window();
  auto scaled = cfg;
  scaled.r_lo *= 0.5;
  scaled.r_hi *= 0.5;
  CHECK(dim_P_ball(small, scaled).value == doctest::Approx(dim_P_ball(mu, cfg).value).epsilon(1e-9));
  CHECK(dim_H_ball(small, scaled).value == doctest::Approx(dim_H_ball(mu, cfg).value).epsilon(1e-9));
}

TEST_CASE("single atom projects to a single atom") {
  ProjectionConfig cfg;
  cfg.frames = 5;
  cfg.assouad_pairs = {{0, 2}};
  const auto r = projection_experiment(make_dirac({0.3, 0.6}), cfg);
  for (const auto& row : r.rows) CHECK(row.dim_p == 0.0);
  CHECK(r.median == 0.0);
  CHECK(r.packing_profile.value == 0.0);
  for (const auto& v : r.verdicts) CHECK_MESSAGE(v.pass, v.id);
  CHECK_THROWS_AS(projection_experiment(make_dirac({0.3, 0.6}), [] {
                    ProjectionConfig c;
                    c.m = 3;
                    return c;
                  }()),
                  ParameterError);
}

TEST_CASE("frame estimates stay below the profile and the profile chain holds") {
  const auto mu = testing::product_cantor(6);
  ProjectionConfig cfg;
  cfg.frames = 6;
  cfg.measure_cfg = testing::window(-10, -2, 5);
  cfg.projected_cfg = testing::projected_window();
  cfg.critical = false;
  const auto r = projection_experiment(mu, cfg);
  for (const auto& row : r.rows) CHECK(row.dim_p <= r.packing_profile.value + 0.1);

  // dim^1_{P,theta} of a shadow <= dim^1_{P,theta} mu <= dim^2_{P,theta} mu
  const auto shadow = project_measure(mu, sample_grassmann(2, 1, derive_seed(1, 0))).measure;
  for (double theta : {1.0, 0.5}) {
    const double a = profile_dim(shadow, 1.0, theta, testing::projected_window()).value;
    const double b = profile_dim(mu, 1.0, theta, cfg.measure_cfg).value;
    const double c = profile_dim(mu, 2.0, theta, cfg.measure_cfg).value;
    CHECK(a <= b + 0.1);
    CHECK(b <= c + 0.1);
  }
}

TEST_CASE("seeds and medians") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), ParameterError);
}
