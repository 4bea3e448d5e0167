#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "packdim/estimators.hpp"
#include "packdim/measure.hpp"
#include "packdim/projection.hpp"

namespace packdim {

/// Fractional Brownian field X: [0,1] -> R^d sampled at t = i/G, i = 0..G.
struct FbmField {
  double alpha = 0.5;
  std::size_t grid = 0;  // G
  std::size_t channels = 0;
  std::uint64_t seed = 0;
  std::vector<double> samples;  // (G+1) x d, row-major
  double embedding_error = 0.0;  // max |reconstructed - target| circulant row

  double at(std::size_t i, std::size_t c) const { return samples[i * channels + c]; }
  friend bool operator==(const FbmField&, const FbmField&) = default;
};

/// Fractional Gaussian noise autocovariance at integer lag k for unit spacing.
double fgn_autocovariance(double alpha, std::size_t k);

/// Exact circulant-embedding sample. Channels are filled in pairs from the
/// real and imaginary parts of one transform. Requires alpha in (0,1) and G a
/// power of two >= 256.
FbmField sample_fbm(double alpha, std::size_t grid, std::size_t channels, std::uint64_t seed);

struct ImageMeasure {
  PointMeasure measure;
  AffineMap map;
  double max_snap = 0.0;
};

/// Pushforward of a measure on [0,1] through the field, atoms snapped to the
/// nearest grid time.
ImageMeasure image_measure(const PointMeasure& mu, const FbmField& field);

/// Smallest power-of-two grid (>= 256) whose half spacing is below a tenth of
/// the smallest gap between distinct atoms.
std::size_t grid_for(const PointMeasure& mu, std::size_t cap = std::size_t{1} << 24);

struct IncrementScaling {
  std::vector<double> lags;
  std::vector<double> variances;  // per-channel mean of (X(t+h) - X(t))^2
  double exponent = 0.0;          // least-squares slope of log variance on log lag
  double var_at_one = 0.0;        // mean of X(1)^2
};

/// Ensemble statistics over `fields` independent fields, lags 2^-k for
/// k = 1..log2(G).
IncrementScaling increment_scaling(double alpha, std::size_t grid, std::size_t channels, std::size_t fields,
                                   std::uint64_t seed, const Exec& exec = {});

struct TrialRow {
  std::uint64_t seed = 0;
  double dim_p = 0.0;
  double max_snap = 0.0;
};

struct FbmConfig {
  double alpha = 0.5;
  std::size_t channels = 2;
  std::size_t trials = 8;
  std::size_t grid = 0;  // 0 = grid_for(mu)
  std::uint64_t seed = 1;
  EstimatorConfig measure_cfg;  // estimates on mu
  EstimatorConfig image_cfg;    // estimates on mu_X
  LevelPairs assouad_pairs;     // empty = skip the Assouad comparison
  std::vector<double> thetas;
  bool critical = true;
};

struct FbmReport {
  double alpha = 0.0;
  std::size_t channels = 0;
  std::size_t grid = 0;
  std::vector<TrialRow> rows;
  double median = 0.0;
  double spread = 0.0;
  DimensionEstimate profile;  // dim_P^{alpha d} mu
  DimensionEstimate dim_p;
  std::optional<DimensionEstimate> assouad;
  std::optional<CriticalPoint> critical;
  std::vector<Verdict> verdicts;
};

/// Trial i uses the field seed derive_seed(cfg.seed, i).
FbmReport fbm_experiment(const PointMeasure& mu, const FbmConfig& cfg);

/// Header `alpha=<> G=<> d=<> seed=<>`, then G+1 lines of d values.
void save_field(const FbmField& field, const std::filesystem::path& path);
FbmField load_field(const std::filesystem::path& path);

}  // namespace packdim
