#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "packdim/exec.hpp"
#include "packdim/kernel.hpp"
#include "packdim/measure.hpp"

namespace packdim {

/// Finite-scale surrogates for r -> 0 and "for mu-a.e. x".
///
/// Radii run geometrically over [r_lo, r_hi] with step `ratio`. Local
/// exponents are least-squares slopes of log(mass) against log(r) over sliding
/// sub-windows `slope_span` octaves wide; the upper exponent is the largest
/// such slope and the lower exponent the smallest. "mu-a.e." becomes the
/// weighted `quantile` over reference atoms drawn from mu.
struct EstimatorConfig {
  double r_lo = 0x1p-12;
  double r_hi = 0x1p-3;
  double ratio = 0.8408964152537145;  // 2^{-1/4}
  double quantile = 0.05;
  double t_step = 0.02;
  double slack = 0.05;  // tau
  double slope_span = 8.0;
  std::size_t ref_samples = 256;  // 0 = every atom with its own weight
  std::uint64_t seed = 1;
  Exec exec{};

  void validate() const;
  ScaleGrid grid() const { return ScaleGrid::from_window(r_lo, r_hi, ratio); }
  /// Number of grid steps spanned by one slope sub-window (at least 1).
  std::size_t span_steps() const;
};

struct DimensionEstimate {
  double value = 0.0;
  double half_width = 0.0;
  std::string method;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double quantile = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  bool saturated = false;
};

enum class ExponentMode { lower, upper };

struct ExponentBand {
  double lower;
  double upper;
};

/// Min and max least-squares slope of log_value against log_radius over every
/// run of span_steps+1 consecutive grid points. Non-finite log values are
/// skipped; nullopt when no run has two finite points.
std::optional<ExponentBand> sliding_slopes(std::span<const double> log_radius, std::span<const double> log_value,
                                           std::size_t span_steps);

/// Weighted lower q-quantile: smallest v with cumulative weight >= q.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);

/// Per-reference lower or upper local ball exponent. Balls with mass below
/// 1e-15 are skipped; an exponent with no usable scales is nullopt.
std::vector<std::optional<double>> local_ball_exponents(const PointMeasure& mu, const References& refs,
                                                        const ScaleGrid& grid, ExponentMode mode,
                                                        const EstimatorConfig& cfg);

DimensionEstimate dim_P_ball(const PointMeasure& mu, const EstimatorConfig& cfg);
DimensionEstimate dim_H_ball(const PointMeasure& mu, const EstimatorConfig& cfg);

/// Upper kernel exponent e_t(x): the largest sliding slope of log F_{t,s,theta}(x, r).
/// The criterion liminf r^{-t} F = 0 is scored as e_t(x) >= t.
std::vector<double> kernel_exponents(const PointMeasure& mu, const References& refs, const KernelParams& params,
                                     const ScaleGrid& grid, const EstimatorConfig& cfg);

/// Scan of g(t) = q-quantile of (e_t(x) - t) over t = 0, dt, ..., s.
struct ProfileScan {
  std::vector<double> t;
  std::vector<double> g;
};

/// dim^s_{P,theta} mu: the largest t with g(t) >= -tau, linearly interpolated
/// between scan points; s itself (saturated) when g(s) >= -tau; 0 when none
/// and for a single atom.
DimensionEstimate profile_dim(const PointMeasure& mu, double s, double theta, const EstimatorConfig& cfg,
                              ProfileScan* scan = nullptr);

/// dim^m_P mu = dim^m_{P,1} mu.
DimensionEstimate packing_profile(const PointMeasure& mu, double m, const EstimatorConfig& cfg);

struct CriticalPoint {
  std::vector<double> theta;
  std::vector<DimensionEstimate> per_theta;
  DimensionEstimate value;  // smallest-theta estimate
  double fit_intercept = 0.0;  // linear fit of the per-theta values in theta, evaluated at 0
  double fit_slope = 0.0;
  double worst_increase = 0.0;  // largest rise of the sequence as theta decreases
};

/// D(mu) estimated as dim^n_{P,theta} mu at the smallest theta of a decreasing list.
CriticalPoint critical_point(const PointMeasure& mu, std::vector<double> thetas, const EstimatorConfig& cfg);

std::vector<double> default_thetas();

/// Coarse/fine dyadic level pairs (j, k) with k > j.
using LevelPairs = std::vector<std::pair<int, int>>;

/// Pairs j in [0, coarse_max], k in [j + min_gap, fine_max].
LevelPairs make_level_pairs(int coarse_max, int fine_max, int min_gap = 2);

/// Largest number of occupied level-k dyadic cubes inside one occupied level-j cube.
std::size_t max_subcube_count(const PointMeasure& mu, int coarse, int fine);

/// Finest dyadic level at which some cube still holds two distinct atoms, plus one.
int resolution_level(const PointMeasure& mu, int max_level = 40);

/// Assouad dimension of supp mu by dyadic counting: for each coarse level j, the
/// least-squares slope of log2 M(j,k) in k (the plain ratio when j has a single
/// k); the estimate is the largest slope.
DimensionEstimate assouad_dim(const PointMeasure& mu, const LevelPairs& pairs);

/// Closed-form lower bound for typical projections given packing dim p and Hausdorff dim h.
double falconer_mattila_bound(double p, double h, int n, int m);

/// A - (A - p)/theta; can be negative.
double assouad_profile_bound(double assouad, double packing, double theta);

enum class ExceptionalTarget { full, preserve };

/// m(n-m) - (m - value), with value = D(mu) for `full` and dim_A E for `preserve`.
double exceptional_dim_bound(int n, int m, double value, ExceptionalTarget target);

struct ProfileCurve {
  double theta = 1.0;
  std::vector<double> s;
  std::vector<DimensionEstimate> f;
  double max_slope = 0.0;
  /// Largest f(t)/(1+(1/s-1/t)f(t)) - f(s) over grid pairs t < s.
  double self_improving_excess = 0.0;
  /// Same expression over pairs with the profile indices swapped (s < t).
  double swapped_excess = 0.0;
};

ProfileCurve profile_curve(const PointMeasure& mu, double theta, std::vector<double> s_grid,
                           const EstimatorConfig& cfg);

/// f(t)/(1 + (1/s - 1/t) f(t)).
double self_improving_lhs(double f_t, double t, double s);

struct WindowDecayParams {
  double a = 0.5;
  double theta = 0.5;
  double epsilon = 0.1;
  double p = 0.0;         // below dim_P mu
  double assouad = 0.0;   // dim_A of the support
  double constant = 1.0;  // c in mu(B(x, delta)) <= c delta^p
  std::size_t samples = 256;
};

struct WindowDecayReport {
  std::size_t refs = 0;
  std::size_t no_delta = 0;   // refs with no admissible delta in the window
  std::size_t violating = 0;  // refs with a bound violation
  std::size_t checks = 0;
  double exponent = 0.0;  // A(1+eps) - (A(1+eps) - p)/(a theta)
  double violation_fraction() const {
    return refs == 0 ? 0.0 : static_cast<double>(no_delta + violating) / static_cast<double>(refs);
  }
};

/// For each sampled reference: every window radius delta with
/// mu(B(x, delta)) <= c delta^p is admissible; for each admissible delta the
/// grid radii r in [delta^a, delta^{a theta}] must satisfy
/// mu(B(x, r)) <= c 4^{A(1+eps)} r^{exponent}.
WindowDecayReport window_decay_check(const PointMeasure& mu, const WindowDecayParams& params,
                                     const EstimatorConfig& cfg);

}  // namespace packdim
