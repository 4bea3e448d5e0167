#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "packdim/exec.hpp"
#include "packdim/measure.hpp"

namespace packdim {

/// Exponents of the three-term kernel min{1, (r/d)^t, r^{theta(s-t)+t} d^{-s}}.
/// Requires 0 <= t <= s and 0 < theta <= 1.
struct KernelParams {
  double t;
  double s;
  double theta;

  KernelParams(double t, double s, double theta);

  /// The classical kernel min{1, (r/d)^s}: t = s, theta = 1.
  static KernelParams classic(double s) { return {s, s, 1.0}; }
};

/// Geometric radii r_j = r_max * ratio^j, j = 0..count-1.
class ScaleGrid {
 public:
  ScaleGrid(double r_max, double ratio, std::size_t count);

  /// Largest grid with ratio `ratio` covering [r_lo, r_hi] from the top.
  static ScaleGrid from_window(double r_lo, double r_hi, double ratio);

  double r_max() const { return r_max_; }
  double ratio() const { return ratio_; }
  std::size_t size() const { return radii_.size(); }
  const std::vector<double>& radii() const { return radii_; }
  double operator[](std::size_t j) const { return radii_[j]; }

 private:
  double r_max_;
  double ratio_;
  std::vector<double> radii_;
};

/// Piecewise form: 1 for d <= r, (r/d)^t for r < d < r^theta, r^{theta(s-t)+t} d^{-s} otherwise.
double kernel_value(const KernelParams& params, double d, double r);

/// Literal min of the three terms (1 at d = 0).
double kernel_value_min3(const KernelParams& params, double d, double r);

/// sum_i w_i min{1, (r/|x-y_i|)^s}.
double classic_potential(const PointMeasure& mu, std::span<const double> x, double s, double r);

/// Distances from one reference point to every atom, sorted once, with the
/// running sums needed to evaluate ball masses and kernel potentials at many
/// radii in O(log N) per radius after an O(N) pass per exponent pair.
class RadialProfile {
 public:
  RadialProfile(const PointMeasure& mu, std::span<const double> x);

  std::size_t size() const { return dist_.size(); }
  std::span<const double> distances() const { return dist_; }

  /// mu(B(x, r)) for the closed ball.
  double ball_mass(double r) const;
  void ball_masses(std::span<const double> radii, std::span<double> out) const;

  /// F_{t,s,theta}(x, r_j) for every radius; out.size() == radii.size().
  void potentials(const KernelParams& params, std::span<const double> radii, std::span<double> out) const;

 private:
  std::vector<double> dist_;
  std::vector<double> weight_;
  std::vector<double> log_dist_;
  std::vector<double> cum_weight_;  // cum_weight_[k] = sum of the first k weights
};

/// Reference points drawn from mu.
struct References {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;  // sum to 1
  std::vector<std::size_t> atom_index;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// `count` atoms drawn i.i.d. from mu (equal weights). When count is 0 every
/// atom is used once with its own weight.
References sample_references(const PointMeasure& mu, std::size_t count, std::uint64_t seed);

/// Explicit points with equal weights.
References make_references(std::size_t dim, std::vector<double> coords);

struct PotentialTable {
  std::vector<double> radii;
  std::vector<std::size_t> ref_index;
  std::vector<double> values;  // row-major: refs x radii

  std::size_t rows() const { return ref_index.size(); }
  std::size_t cols() const { return radii.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * radii.size() + j]; }
};

PotentialTable potential_table(const PointMeasure& mu, const References& refs, const KernelParams& params,
                               const ScaleGrid& grid, const Exec& exec = {});

/// Delimited text: header row of radii, then one row per reference point.
void write_potential_table(const PotentialTable& table, std::ostream& out);

}  // namespace packdim
