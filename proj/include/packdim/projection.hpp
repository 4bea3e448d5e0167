#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "packdim/estimators.hpp"
#include "packdim/measure.hpp"

namespace packdim {

/// n x m matrix with orthonormal columns spanning V in G(n, m).
class Frame {
 public:
  explicit Frame(Eigen::MatrixXd basis);

  std::size_t n() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  /// Largest |G - I| entry of the Gram matrix.
  double orthonormality_error() const;
  /// FNV-1a digest of the shortest-round-trip text of the entries.
  std::string digest() const;

 private:
  Eigen::MatrixXd basis_;
};

/// Orthonormalized n x m standard Gaussian array (Householder QR with column
/// signs fixed so the R diagonal is positive).
Frame sample_grassmann(std::size_t n, std::size_t m, std::uint64_t seed);

/// Frame whose columns are the listed coordinate axes.
Frame axis_frame(std::size_t n, std::vector<std::size_t> axes);

/// Inner products of every atom with the frame columns, row-major N x m.
std::vector<double> project_coordinates(const PointMeasure& mu, const Frame& frame);

struct AffineMap {
  std::vector<double> offset;  // subtracted per axis
  double scale = 1.0;          // common divisor
};

struct ProjectedMeasure {
  PointMeasure measure;
  AffineMap map;  // z' = (z - offset) / scale
};

/// Pushforward onto V in frame coordinates, mapped into [0,1]^m by one common
/// scale (so the normalization is a similarity). Weights are unchanged; atoms
/// that coincide are merged.
ProjectedMeasure project_measure(const PointMeasure& mu, const Frame& frame);

/// Affine normalization of arbitrary rows into [0,1]^dim by one common scale.
ProjectedMeasure normalize_rows(std::size_t dim, const std::vector<double>& rows, std::vector<double> weights);

struct Verdict {
  std::string id;
  std::string statement;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct FrameRow {
  std::uint64_t seed = 0;
  std::string frame_digest;
  double dim_p = 0.0;
};

struct ProjectionConfig {
  std::size_t m = 1;
  std::size_t frames = 20;
  std::uint64_t seed = 1;
  EstimatorConfig measure_cfg;    // estimates on mu
  EstimatorConfig projected_cfg;  // estimates on mu_V
  LevelPairs assouad_pairs;       // empty = skip the Assouad comparison
  std::vector<double> thetas;     // for the critical point, empty = defaults
  bool critical = true;
};

struct ProjectionReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<FrameRow> rows;
  double median = 0.0;
  double spread = 0.0;  // max - min over frames
  DimensionEstimate packing_profile;
  DimensionEstimate dim_p;
  DimensionEstimate dim_h;
  std::optional<DimensionEstimate> assouad;
  std::optional<CriticalPoint> critical;
  double fm_bound = 0.0;
  std::vector<Verdict> verdicts;
};

/// Frame i is sampled with derive_seed(cfg.seed, i).
ProjectionReport projection_experiment(const PointMeasure& mu, const ProjectionConfig& cfg);

/// Deterministic per-item seed derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

double median(std::vector<double> values);

}  // namespace packdim
