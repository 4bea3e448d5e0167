#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "packdim/estimators.hpp"
#include "packdim/kernel.hpp"
#include "packdim/measure.hpp"

namespace testing {

using namespace packdim;

inline const double kCantorDim = std::log(2.0) / std::log(3.0);

// Estimator windows tuned per test measure. Each measure has its own usable
// scale range: the deepest radius sits a few octaves above the atom spacing.
inline EstimatorConfig window(double log2_lo, double log2_hi, double span) {
  EstimatorConfig e;
  e.r_lo = std::exp2(log2_lo);
  e.r_hi = std::exp2(log2_hi);
  e.slope_span = span;
  return e;
}
inline EstimatorConfig cantor_window() { return window(-15, -3, 8); }         // Cantor depth 11
inline EstimatorConfig product_window() { return window(-11, -2, 6); }        // Cantor x Cantor depth 7
inline EstimatorConfig product08_window() { return window(-12, -2, 6); }      // ratio 2^-2.5 depth 6, shadows too
inline EstimatorConfig grid2_window() { return window(-6, -2, 3); }           // 64 x 64 grid
inline EstimatorConfig projected_window() { return window(-14, -2, 4); }      // 1-D shadows of the products
inline EstimatorConfig image_window() { return window(-11, -2, 4); }          // fBm images in the plane

inline PointMeasure cantor(int depth = 11) { return make_ifs_measure(IfsSystem::cantor(1.0 / 3.0), depth); }
inline PointMeasure product_cantor(int depth = 7) {
  const auto c = cantor(depth);
  return make_product_measure(c, c);
}
// factor ratio 2^-2.5: each factor has dimension 0.4, the product 0.8
inline PointMeasure product08(int depth = 6) {
  const auto c = make_ifs_measure(IfsSystem::cantor(std::exp2(-2.5)), depth);
  return make_product_measure(c, c);
}

// Random measure with N atoms in [0,1]^n and positive random weights.
inline PointMeasure random_measure(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> coords(n * count);
  std::vector<double> weights(count);
  for (auto& c : coords) c = u(rng);
  for (auto& w : weights) w = 0.1 + u(rng);
  return normalize(n, std::move(coords), std::move(weights));
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Brute-force kernel potential straight from the three-term definition.
inline double brute_potential(const PointMeasure& mu, std::span<const double> x, double t, double s, double theta,
                              double r) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = distance(x, mu.atom(i));
    double k = 1.0;
    if (d > 0.0) {
      k = std::min({1.0, std::pow(r / d, t), std::pow(r, theta * (s - t) + t) * std::pow(d, -s)});
    }
    total += mu.weight(i) * k;
  }
  return total;
}

inline double brute_ball(const PointMeasure& mu, std::span<const double> x, double r) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (distance(x, mu.atom(i)) <= r) total += mu.weight(i);
  }
  return total;
}

}  // namespace testing
