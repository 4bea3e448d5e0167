#include <doctest.h>

#include <set>

#include "packdim/envelope.hpp"
#include "packdim/error.hpp"
#include "support.hpp"

using namespace packdim;

namespace {

bool triadic_cantor_digits(std::uint64_t index, int level) {
  for (int i = 0; i < level; ++i, index /= 3) {
    if (index % 3 == 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a point gives a single chain") {
  const auto e = build_envelope(make_dirac({0.0}), 1.0, 0.0, 2, 6);
  CHECK(e.tree->branching() == 1);
  for (int m = 0; m <= 6; ++m) {
    REQUIRE(e.tree->count(m) == 1);
    CHECK(e.tree->cube(m, 0)[0] == 0);
    CHECK(e.measure.cube_mass(m) == 1.0);
  }
  CHECK(e.padded == 0);
  CHECK(e.achieved_exponent() == 0.0);
  const auto reg = verify_regularity(e.measure, std::exp2(-5), 0.5, 50, 1);
  CHECK(reg.exponent == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("triadic Cantor envelope needs no padding") {
  const auto mu = testing::cantor(8);
  const auto e = build_envelope(mu, 1.0, testing::kCantorDim, 3, 8);
  CHECK(e.tree->branching() == 2);
  CHECK(e.padded == 0);
  for (int m = 0; m <= 8; ++m) {
    CHECK(e.tree->count(m) == (std::size_t{1} << m));
    std::set<std::uint64_t> occupied;
    for (std::size_t i = 0; i < mu.size(); ++i) occupied.insert(cube_coordinate(mu.atom(i)[0], 3, m));
    std::set<std::uint64_t> selected(e.tree->level(m).begin(), e.tree->level(m).end());
    CHECK(selected == occupied);
    for (auto c : selected) CHECK(triadic_cantor_digits(c, m));
  }
  CHECK(tree_defect(*e.tree).empty());
  CHECK(envelope_contains(*e.tree, mu));
  const auto reg = verify_regularity(e.measure, std::pow(3.0, -6), 1.0 / 3.0, 200, 1);
  CHECK(reg.expected == doctest::Approx(testing::kCantorDim));
  CHECK(reg.exponent == doctest::Approx(testing::kCantorDim).epsilon(0.05 / testing::kCantorDim));
}

TEST_CASE("full grid saturates every cube") {
  const auto grid = make_grid_measure(1, 64);
  const auto e = build_envelope(grid, 1.0, 1.0, 2, 6);
  CHECK(e.tree->branching() == 2);
  for (int m = 0; m <= 6; ++m) CHECK(e.tree->count(m) == (std::size_t{1} << m));
  const auto reg = verify_regularity(e.measure, std::exp2(-5), 0.5, 100, 2);
  CHECK(std::abs(reg.exponent - 1.0) <= 0.05);
  const auto atoms = e.measure.atoms();
  CHECK(atoms.size() == 64);
  for (double w : atoms.weights()) CHECK(w == doctest::Approx(1.0 / 64));
}

TEST_CASE("padding keeps exact branching and containment") {
  const auto mu = testing::random_measure(2, 5, 17);
  const auto e = build_envelope(mu, 1.0, 1.5, 3, 5);
  const auto m_branch = e.tree->branching();
  CHECK(m_branch == 6);  // ceil(3^1.5)
  CHECK(e.padded > 0);
  CHECK(tree_defect(*e.tree).empty());
  CHECK(envelope_contains(*e.tree, mu));
  for (int m = 0; m <= 5; ++m) {
    CHECK(e.tree->count(m) == static_cast<std::size_t>(std::pow(6.0, m)));
    // masses at each level sum to one; a parent's mass equals its children's
    CHECK(e.measure.cube_mass(m) * static_cast<double>(e.tree->count(m)) == doctest::Approx(1.0).epsilon(1e-12));
    if (m < 5) {
      CHECK(e.measure.cube_mass(m) == doctest::Approx(6.0 * e.measure.cube_mass(m + 1)).epsilon(1e-12));
    }
  }
  const auto reg = verify_regularity(e.measure, std::pow(3.0, -4), 1.0 / 3.0, 100, 3);
  CHECK(std::abs(reg.exponent - e.achieved_exponent()) <= 0.1);
  // same input, same tree
  CHECK(*build_envelope(mu, 1.0, 1.5, 3, 5).tree == *e.tree);
}

TEST_CASE("containment fails for a damaged tree or an outside point") {
  const auto mu = testing::cantor(6);
  const auto e = build_envelope(mu, 1.0, testing::kCantorDim, 3, 6);
  const auto damaged = e.tree->without_cube(4, 3);
  CHECK_FALSE(envelope_contains(damaged, mu));
  CHECK_FALSE(tree_defect(damaged).empty());

  std::vector<double> coords(mu.coords().begin(), mu.coords().end());
  std::vector<double> weights(mu.weights().begin(), mu.weights().end());
  coords.push_back(0.5);  // middle third
  weights.push_back(weights.front());
  CHECK_FALSE(envelope_contains(*e.tree, normalize(1, coords, weights)));
}

TEST_CASE("infeasible envelopes are rejected") {
  const auto mu = testing::cantor(6);
  // M = ceil(4 * 2^1) = 8 > 2^1, and no base helps when t = n
  CHECK_THROWS_WITH_AS(build_envelope(mu, 4.0, 1.0, 2, 4), doctest::Contains("no base"), ParameterError);
  CHECK(minimal_base(4.0, 1.0, 1) == 0);
  // ceil(1.5 b^1.9) <= b^2 first holds at b = 58
  CHECK(minimal_base(1.5, 1.9, 2) == 58);
  CHECK_THROWS_WITH_AS(build_envelope(testing::product_cantor(3), 1.5, 1.9, 2, 3), doctest::Contains("58"),
                       ParameterError);
  CHECK(minimal_base(1.0, 0.5, 1) == 2);
  // the Cantor set needs 2 children per triadic cube, C = 0.5 gives M = 1
  CHECK_THROWS_WITH_AS(build_envelope(mu, 0.5, testing::kCantorDim, 3, 4), doctest::Contains("covering constant"),
                       ParameterError);
}

TEST_CASE("tree files round trip") {
  const auto e = build_envelope(testing::random_measure(2, 7, 4), 1.0, 1.5, 3, 4);
  const auto path = std::filesystem::temp_directory_path() / "packdim_unit_tree.txt";
  save_tree(*e.tree, path);
  CHECK(load_tree(path) == *e.tree);
}

TEST_CASE("growth lemma on regular measures") {
  GrowthParams p;
  p.epsilon = 0.1;
  p.a = 0.5;

  p.s = 1.0;
  const auto dirac = growth_check(make_dirac({0.3}), p);
  CHECK(dirac.violations == 0);
  CHECK(dirac.triples == 10000);

  const auto grid = growth_check(make_grid_measure(1, 4096), p);
  CHECK(grid.violation_fraction() <= 0.05);

  const auto c = testing::cantor(11);
  p.s = assouad_dim(c, make_level_pairs(4, 10, 2)).value;
  CHECK(growth_check(c, p).violation_fraction() <= 0.05);

  // negative control: s below the dimension of the set
  p.s = 0.4;
  CHECK(growth_check(c, p).violations > 0);
}
