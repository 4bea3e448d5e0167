#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "packdim/estimators.hpp"
#include "packdim/measure.hpp"

namespace packdim {

/// Nested family of selected b-adic cubes. Level m cubes have side b^{-m} and
/// are identified by integer coordinates in [0, b^m)^n; each level is stored
/// as a lexicographically sorted flat array of n-tuples.
class DyadicTree {
 public:
  DyadicTree(std::size_t ambient_dim, std::uint64_t base, int depth, std::uint64_t branching,
             std::vector<std::vector<std::uint64_t>> levels);

  std::size_t ambient_dim() const { return dim_; }
  std::uint64_t base() const { return base_; }
  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  std::uint64_t branching() const { return branching_; }

  std::size_t count(int level) const { return levels_[level].size() / dim_; }
  std::span<const std::uint64_t> cube(int level, std::size_t i) const {
    return {levels_[level].data() + i * dim_, dim_};
  }
  const std::vector<std::uint64_t>& level(int m) const { return levels_[m]; }
  bool contains_cube(int level, std::span<const std::uint64_t> index) const;

  /// Copy with one cube (and nothing else) removed from a level.
  DyadicTree without_cube(int level, std::size_t i) const;

  friend bool operator==(const DyadicTree&, const DyadicTree&) = default;

 private:
  std::size_t dim_;
  std::uint64_t base_;
  std::uint64_t branching_;
  std::vector<std::vector<std::uint64_t>> levels_;
};

/// Uniform branching measure on a tree: every selected level-m cube has mass M^{-m}.
class EnvelopeMeasure {
 public:
  explicit EnvelopeMeasure(std::shared_ptr<const DyadicTree> tree);

  const DyadicTree& tree() const { return *tree_; }
  double cube_mass(int level) const;
  /// Atoms at the centres of the finest selected cubes.
  PointMeasure atoms() const;

 private:
  std::shared_ptr<const DyadicTree> tree_;
};

struct Envelope {
  std::shared_ptr<const DyadicTree> tree;
  EnvelopeMeasure measure;
  std::size_t padded = 0;  // selected cubes containing no point of E
  double achieved_exponent() const;  // log M / log b
};

/// Integer cube coordinate of x at a level: floor(x b^level), snapped up when
/// within 1e-9 of the next cell and clamped to the last cell.
std::uint64_t cube_coordinate(double x, std::uint64_t base, int level);

/// Envelope of the atoms of E with M = ceil(C b^t) children per selected cube.
/// Occupied children are always kept; padding takes unoccupied children
/// closest (squared index distance) to an occupied sibling, ties broken
/// lexicographically.
Envelope build_envelope(const PointMeasure& points, double constant, double t, std::uint64_t base, int depth,
                        std::size_t cube_cap = std::size_t{1} << 22);

/// Smallest integer b >= 2 with ceil(C b^t) <= b^n, or 0 when none exists below 2^20.
std::uint64_t minimal_base(double constant, double t, std::size_t ambient_dim);

bool envelope_contains(const DyadicTree& tree, const PointMeasure& points);

/// Full traversal: single root, every cube a child of a selected parent, every
/// non-leaf cube with exactly M selected children. Empty string when all hold.
std::string tree_defect(const DyadicTree& tree);

struct RegularityReport {
  double expected = 0.0;      // log M / log b
  double exponent = 0.0;      // pooled least-squares slope
  double log_spread = 0.0;    // max - min of log(mu(B)/r^exponent)
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::size_t samples = 0;
  std::size_t radii = 0;
};

/// Ball masses by summation of finest-cube masses (cube centres within r of
/// x) for `samples` random finest cubes, on a geometric radius grid over
/// [r_lo, r_hi] with ratio b^{-1/4}.
RegularityReport verify_regularity(const EnvelopeMeasure& measure, double r_lo, double r_hi, std::size_t samples,
                                   std::uint64_t seed);

struct GrowthParams {
  double s = 0.0;
  double epsilon = 0.1;
  double a = 0.5;
  double rho_lo = 0x1p-12;
  double rho_hi = 0x1p-4;
  std::size_t centres = 100;
  std::size_t pairs_per_centre = 100;
  std::uint64_t seed = 1;
};

struct GrowthReport {
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max of lhs / rhs
  double violation_fraction() const {
    return triples == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(triples);
  }
};

/// Counts triples (x, rho, r) with mu(B(x,r)) > (4r/rho)^{s(1+eps)} mu(B(x,rho)),
/// x drawn from mu, rho log-uniform in [rho_lo, rho_hi], r log-uniform in [rho^a, 1].
GrowthReport growth_check(const PointMeasure& mu, const GrowthParams& params, const Exec& exec = {});

/// Text form: header `n=<> b=<> depth=<> M=<>`, then per level a line
/// `level <m> <count>` followed by one line of n integers per cube.
void save_tree(const DyadicTree& tree, const std::filesystem::path& path);
DyadicTree load_tree(const std::filesystem::path& path);

}  // namespace packdim
