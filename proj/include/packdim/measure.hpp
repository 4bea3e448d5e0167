#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace packdim {

/// Default cap on the number of atoms a generator may produce.
inline constexpr std::size_t kDefaultAtomCap = std::size_t{1} << 20;

/// Weighted atomic probability measure on the unit cube [0,1]^n.
///
/// Atoms are stored row-major in a flat array (atom i occupies
/// coords()[i*n .. i*n+n)). Construction validates the invariants: every
/// coordinate in [0,1], every weight strictly positive, weights summing to 1
/// within 1e-9. Instances are immutable.
class PointMeasure {
 public:
  PointMeasure(std::size_t ambient_dim, std::vector<double> coords, std::vector<double> weights,
               std::map<std::string, double> meta = {});

  std::size_t ambient_dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }

  std::span<const double> atom(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const { return coords_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Generator metadata such as "similarity_dim", "target_h", "target_p".
  const std::map<std::string, double>& meta() const { return meta_; }
  PointMeasure with_meta(std::map<std::string, double> meta) const;

  friend bool operator==(const PointMeasure&, const PointMeasure&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  std::map<std::string, double> meta_;
};

/// Merges atoms whose coordinates agree after rounding to 1e-12 (weights are
/// summed, first occurrence keeps its position) and rescales weights to sum 1.
/// Accepts unnormalized positive weights.
PointMeasure normalize(std::size_t ambient_dim, std::vector<double> coords,
                       std::vector<double> weights, std::map<std::string, double> meta = {});
PointMeasure normalize(const PointMeasure& mu);

struct Similarity {
  double ratio;                     // in (0,1)
  std::vector<double> translation;  // in [0,1]^n
};

/// Iterated function system of similarities x -> ratio*x + translation with
/// branch probabilities.
class IfsSystem {
 public:
  IfsSystem(std::size_t ambient_dim, std::vector<Similarity> maps, std::vector<double> probabilities);

  /// k maps of common ratio with equal probabilities.
  static IfsSystem uniform(std::size_t ambient_dim, std::vector<Similarity> maps);
  /// Two-map middle-gap Cantor system on [0,1]: {(r, 0), (r, 1-r)}.
  static IfsSystem cantor(double ratio);

  std::size_t ambient_dim() const { return dim_; }
  const std::vector<Similarity>& maps() const { return maps_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  /// Solution s of sum_i r_i^s = 1 (0 for a single map).
  double similarity_dimension() const;

 private:
  std::size_t dim_;
  std::vector<Similarity> maps_;
  std::vector<double> probabilities_;
};

/// Images of the base point 0 under every length-`depth` composition of the
/// maps, weighted by the product of branch probabilities.
PointMeasure make_ifs_measure(const IfsSystem& system, int depth,
                              std::size_t atom_cap = kDefaultAtomCap);

/// Cartesian product measure on [0,1]^{n_a + n_b}.
PointMeasure make_product_measure(const PointMeasure& a, const PointMeasure& b,
                                  std::size_t atom_cap = kDefaultAtomCap);

/// Binary Moran measure on [0,1] whose sliding-window local exponents
/// alternate between `lower` (h) and `upper` (p). A level with exponent e > 0
/// keeps two children at the ends of its cell with contraction 2^{-1/e}; e = 0
/// levels keep one child with contraction 1/2. Blocks start at exponent p and
/// span 10*1.5^i octaves each. Requires 0 <= h <= p <= 1.
PointMeasure make_sparse_scale_measure(double lower, double upper, int depth, std::uint64_t seed,
                                       std::size_t atom_cap = kDefaultAtomCap);

/// Regular grid {(i_1/k, ..., i_n/k)} with equal weights (k^n atoms).
PointMeasure make_grid_measure(std::size_t ambient_dim, std::size_t per_axis,
                               std::size_t atom_cap = kDefaultAtomCap);

/// Single atom with weight 1.
PointMeasure make_dirac(std::vector<double> point);

/// Measure file: header `n=<int> N=<int>` then N lines `x_1 ... x_n w`.
/// Metadata goes to a JSON sidecar `<path>.meta.json` when non-empty.
void save_measure(const PointMeasure& mu, const std::filesystem::path& path);
PointMeasure load_measure(const std::filesystem::path& path);
std::filesystem::path meta_path(const std::filesystem::path& measure_path);

}  // namespace packdim
