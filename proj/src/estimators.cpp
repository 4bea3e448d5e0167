#include "packdim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "packdim/error.hpp"
#include "packdim/text.hpp"

namespace packdim {

namespace {

constexpr double kEmptyBall = 1e-15;
constexpr std::size_t kMinDefinedExponents = 10;

double safe_log(double v) { return v >= kEmptyBall ? std::log(v) : -std::numeric_limits<double>::infinity(); }

std::vector<double> log_radii(const ScaleGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = std::log(grid[j]);
  return out;
}

DimensionEstimate stamp(const EstimatorConfig& cfg, std::string method) {
  DimensionEstimate e;
  e.method = std::move(method);
  e.r_lo = cfg.r_lo;
  e.r_hi = cfg.r_hi;
  e.quantile = cfg.quantile;
  e.seed = cfg.seed;
  return e;
}

DimensionEstimate quantile_estimate(const std::vector<std::optional<double>>& exps, const References& refs,
                                    const EstimatorConfig& cfg, std::string method) {
  std::vector<double> values;
  std::vector<double> weights;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i]) {
      values.push_back(*exps[i]);
      weights.push_back(refs.weights[i]);
    }
  }
  if (values.size() < kMinDefinedExponents) {
    throw ComputationError(method + ": only " + std::to_string(values.size()) +
                           " defined local exponents, need at least 10");
  }
  DimensionEstimate e = stamp(cfg, std::move(method));
  e.value = std::max(0.0, weighted_quantile(values, weights, cfg.quantile));
  e.half_width = 0.5 * (weighted_quantile(values, weights, 0.75) - weighted_quantile(values, weights, 0.25));
  e.samples = values.size();
  return e;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (!(r_lo > 0.0 && r_lo < r_hi && r_hi <= 1.0)) throw ParameterError("estimator window needs 0 < r_lo < r_hi <= 1");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("grid ratio must lie in (0,1)");
  if (!(quantile > 0.0 && quantile <= 0.5)) throw ParameterError("quantile must lie in (0, 0.5]");
  if (!(t_step > 0.0)) throw ParameterError("t step must be positive");
  if (!(slack >= 0.0)) throw ParameterError("slack must be non-negative");
  if (!(slope_span > 0.0)) throw ParameterError("slope span must be positive");
}

std::size_t EstimatorConfig::span_steps() const {
  const double steps = slope_span * std::log(2.0) / -std::log(ratio);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(steps)));
}

std::optional<ExponentBand> sliding_slopes(std::span<const double> log_radius, std::span<const double> log_value,
                                           std::size_t span_steps) {
  const std::size_t count = log_radius.size();
  if (count < 2) return std::nullopt;
  const std::size_t width = std::min(span_steps, count - 1) + 1;
  std::optional<ExponentBand> band;
  for (std::size_t start = 0; start + width <= count; ++start) {
    double sx = 0.0;
    double sy = 0.0;
    std::size_t used = 0;
    for (std::size_t j = start; j < start + width; ++j) {
      if (!std::isfinite(log_value[j])) continue;
      sx += log_radius[j];
      sy += log_value[j];
      ++used;
    }
    if (used < 2) continue;
    const double mx = sx / static_cast<double>(used);
    const double my = sy / static_cast<double>(used);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t j = start; j < start + width; ++j) {
      if (!std::isfinite(log_value[j])) continue;
      const double dx = log_radius[j] - mx;
      sxx += dx * dx;
      sxy += dx * (log_value[j] - my);
    }
    if (sxx <= 0.0) continue;
    const double slope = sxy / sxx;
    if (!band) {
      band = ExponentBand{slope, slope};
    } else {
      band->lower = std::min(band->lower, slope);
      band->upper = std::max(band->upper, slope);
    }
  }
  return band;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  if (values.empty() || values.size() != weights.size()) throw ParameterError("weighted quantile needs matching data");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = q * total;
  double running = 0.0;
  for (auto i : order) {
    running += weights[i];
    if (running >= target * (1.0 - 1e-12)) return values[i];
  }
  return values[order.back()];
}

std::vector<std::optional<double>> local_ball_exponents(const PointMeasure& mu, const References& refs,
                                                        const ScaleGrid& grid, ExponentMode mode,
                                                        const EstimatorConfig& cfg) {
  const auto lr = log_radii(grid);
  const std::size_t span = cfg.span_steps();
  std::vector<std::optional<double>> out(refs.size());
  parallel_for(refs.size(), cfg.exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    std::vector<double> lm(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) lm[j] = safe_log(profile.ball_mass(grid[j]));
    if (auto band = sliding_slopes(lr, lm, span)) {
      out[i] = mode == ExponentMode::upper ? band->upper : band->lower;
    }
  });
  return out;
}

DimensionEstimate dim_P_ball(const PointMeasure& mu, const EstimatorConfig& cfg) {
  cfg.validate();
  const auto refs = sample_references(mu, cfg.ref_samples, cfg.seed);
  return quantile_estimate(local_ball_exponents(mu, refs, cfg.grid(), ExponentMode::upper, cfg), refs, cfg,
                           "dim_P_ball");
}

DimensionEstimate dim_H_ball(const PointMeasure& mu, const EstimatorConfig& cfg) {
  cfg.validate();
  const auto refs = sample_references(mu, cfg.ref_samples, cfg.seed);
  return quantile_estimate(local_ball_exponents(mu, refs, cfg.grid(), ExponentMode::lower, cfg), refs, cfg,
                           "dim_H_ball");
}

namespace {

// Upper kernel slope for each t in `ts`, for one reference point.
void kernel_slopes(const RadialProfile& profile, double s, double theta, std::span<const double> ts,
                   const ScaleGrid& grid, std::span<const double> lr, std::size_t span, std::span<double> out) {
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    profile.potentials(KernelParams(ts[k], s, theta), grid.radii(), values);
    for (double& v : values) v = safe_log(v);
    const auto band = sliding_slopes(lr, values, span);
    out[k] = band ? band->upper : 0.0;
  }
}

}  // namespace

std::vector<double> kernel_exponents(const PointMeasure& mu, const References& refs, const KernelParams& params,
                                     const ScaleGrid& grid, const EstimatorConfig& cfg) {
  const auto lr = log_radii(grid);
  const std::size_t span = cfg.span_steps();
  std::vector<double> out(refs.size());
  const double t = params.t;
  parallel_for(refs.size(), cfg.exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    kernel_slopes(profile, params.s, params.theta, std::span<const double>(&t, 1), grid, lr, span,
                  std::span<double>(&out[i], 1));
  });
  return out;
}

DimensionEstimate profile_dim(const PointMeasure& mu, double s, double theta, const EstimatorConfig& cfg,
                              ProfileScan* scan) {
  cfg.validate();
  if (!(s > 0.0)) throw ParameterError("profile index s must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0,1]");

  if (mu.size() == 1) {
    // A point mass has F = 1 at every scale; its profile is 0 for every s.
    DimensionEstimate e = stamp(cfg, "profile_dim(s=" + format_double(s) + ",theta=" + format_double(theta) + ")");
    if (scan) *scan = ProfileScan{};
    return e;
  }

  std::vector<double> ts;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.t_step;
    if (t >= s - 1e-12) break;
    ts.push_back(t);
  }
  ts.push_back(s);

  const auto refs = sample_references(mu, cfg.ref_samples, cfg.seed);
  const auto grid = cfg.grid();
  const auto lr = log_radii(grid);
  const std::size_t span = cfg.span_steps();
  std::vector<double> slopes(refs.size() * ts.size());
  parallel_for(refs.size(), cfg.exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    kernel_slopes(profile, s, theta, ts, grid, lr, span,
                  std::span<double>(slopes.data() + i * ts.size(), ts.size()));
  });

  std::vector<double> g(ts.size());
  std::vector<double> column(refs.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    for (std::size_t i = 0; i < refs.size(); ++i) column[i] = slopes[i * ts.size() + k] - ts[k];
    g[k] = weighted_quantile(column, refs.weights, cfg.quantile);
  }

  DimensionEstimate e = stamp(cfg, "profile_dim(s=" + format_double(s) + ",theta=" + format_double(theta) + ")");
  e.samples = refs.size();
  if (g.back() >= -cfg.slack) {
    e.value = s;
    e.saturated = true;
  } else {
    std::optional<std::size_t> last;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] >= -cfg.slack) last = k;
    }
    if (last) {
      const std::size_t k = *last;
      e.value = ts[k] + (ts[k + 1] - ts[k]) * (g[k] + cfg.slack) / (g[k] - g[k + 1]);
    }
  }
  e.half_width = cfg.t_step;
  if (scan) {
    scan->t = ts;
    scan->g = g;
  }
  return e;
}

DimensionEstimate packing_profile(const PointMeasure& mu, double m, const EstimatorConfig& cfg) {
  auto e = profile_dim(mu, m, 1.0, cfg);
  e.method = "packing_profile(m=" + format_double(m) + ")";
  return e;
}

std::vector<double> default_thetas() { return {1.0, 0.5, 0.25, 0.125, 0.0625}; }

CriticalPoint critical_point(const PointMeasure& mu, std::vector<double> thetas, const EstimatorConfig& cfg) {
  if (thetas.empty()) thetas = default_thetas();
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0 && thetas[i] <= 1.0)) throw ParameterError("theta values must lie in (0,1]");
    if (i > 0 && !(thetas[i] < thetas[i - 1])) throw ParameterError("theta list must be strictly decreasing");
  }
  const double n = static_cast<double>(mu.ambient_dim());
  CriticalPoint cp;
  cp.theta = thetas;
  for (double th : thetas) cp.per_theta.push_back(profile_dim(mu, n, th, cfg));
  cp.value = cp.per_theta.back();
  cp.value.method = "critical_point";
  for (std::size_t i = 1; i < cp.per_theta.size(); ++i) {
    cp.worst_increase = std::max(cp.worst_increase, cp.per_theta[i].value - cp.per_theta[i - 1].value);
  }
  if (thetas.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      mx += thetas[i];
      my += cp.per_theta[i].value;
    }
    mx /= static_cast<double>(thetas.size());
    my /= static_cast<double>(thetas.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      sxx += (thetas[i] - mx) * (thetas[i] - mx);
      sxy += (thetas[i] - mx) * (cp.per_theta[i].value - my);
    }
    cp.fit_slope = sxy / sxx;
    cp.fit_intercept = my - cp.fit_slope * mx;
  } else {
    cp.fit_intercept = cp.value.value;
  }
  return cp;
}

LevelPairs make_level_pairs(int coarse_max, int fine_max, int min_gap) {
  LevelPairs pairs;
  for (int j = 0; j <= coarse_max; ++j) {
    for (int k = j + std::max(1, min_gap); k <= fine_max; ++k) pairs.emplace_back(j, k);
  }
  return pairs;
}

namespace {

std::uint64_t cube_index(double x, int level) {
  const double cells = std::ldexp(1.0, level);
  const double v = x * cells;
  double f = std::floor(v);
  if (v - f > 1.0 - 1e-9) f += 1.0;
  return static_cast<std::uint64_t>(std::clamp(f, 0.0, cells - 1.0));
}

std::uint64_t cube_key(std::span<const double> x, int level, int shift) {
  std::uint64_t key = 0;
  for (double c : x) key = (key << (level - shift)) | (cube_index(c, level) >> shift);
  return key;
}

void check_key_width(std::size_t dim, int level) {
  if (static_cast<std::size_t>(level) * dim > 64 || level > 52) {
    throw ParameterError("dyadic level " + std::to_string(level) + " too fine for dimension " + std::to_string(dim));
  }
}

}  // namespace

std::size_t max_subcube_count(const PointMeasure& mu, int coarse, int fine) {
  if (!(coarse >= 0 && fine > coarse)) throw ParameterError("level pair needs 0 <= j < k");
  check_key_width(mu.ambient_dim(), fine);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cells(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cells[i] = {cube_key(mu.atom(i), fine, fine - coarse), cube_key(mu.atom(i), fine, 0)};
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::size_t best = 0;
  std::size_t run = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    run = (i > 0 && cells[i].first == cells[i - 1].first) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

int resolution_level(const PointMeasure& mu, int max_level) {
  const std::size_t n = mu.ambient_dim();
  const int limit = std::min(max_level, static_cast<int>(64 / n));
  for (int level = 0; level <= limit; ++level) {
    std::vector<std::uint64_t> keys(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) keys[i] = cube_key(mu.atom(i), level, 0);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) == keys.end()) return level;
  }
  return limit;
}

DimensionEstimate assouad_dim(const PointMeasure& mu, const LevelPairs& pairs) {
  if (pairs.empty()) throw ParameterError("assouad_dim needs at least one level pair");
  DimensionEstimate e;
  e.method = "assouad_dim";
  if (mu.size() == 1) {
    e.samples = pairs.size();
    return e;
  }
  const int resolution = resolution_level(mu);
  std::map<int, std::vector<std::pair<int, double>>> by_coarse;
  for (auto [j, k] : pairs) {
    if (!(j >= 0 && k > j)) throw ParameterError("level pair needs 0 <= j < k");
    if (k > resolution) {
      throw ComputationError("atom cloud resolves only " + std::to_string(resolution) +
                             " dyadic levels, level " + std::to_string(k) + " requested");
    }
    by_coarse[j].emplace_back(k, std::log2(static_cast<double>(max_subcube_count(mu, j, k))));
  }
  std::vector<double> slopes;
  for (const auto& [j, rows] : by_coarse) {
    if (rows.size() == 1) {
      slopes.push_back(rows.front().second / static_cast<double>(rows.front().first - j));
      continue;
    }
    double mx = 0.0;
    double my = 0.0;
    for (auto [k, y] : rows) {
      mx += k;
      my += y;
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (auto [k, y] : rows) {
      sxx += (k - mx) * (k - mx);
      sxy += (k - mx) * (y - my);
    }
    slopes.push_back(sxy / sxx);
  }
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  e.value = std::max(0.0, *hi);
  e.half_width = 0.5 * (*hi - *lo);
  e.samples = pairs.size();
  e.r_lo = std::ldexp(1.0, -std::max_element(pairs.begin(), pairs.end(),
                                             [](auto a, auto b) { return a.second < b.second; })
                               ->second);
  e.r_hi = std::ldexp(1.0, -std::min_element(pairs.begin(), pairs.end())->first);
  return e;
}

double falconer_mattila_bound(double p, double h, int n, int m) {
  if (!(m >= 1 && m <= n)) throw ParameterError("falconer_mattila_bound needs 1 <= m <= n");
  if (!(h >= 0.0 && h <= p && p <= n)) throw ParameterError("falconer_mattila_bound needs 0 <= h <= p <= n");
  if (h >= m) return static_cast<double>(m);
  const double inv_m = 1.0 / m;
  const double inv_n = 1.0 / n;
  return p * (1.0 - inv_n * h) / (1.0 + (inv_m - inv_n) * p - inv_m * h);
}

double assouad_profile_bound(double assouad, double packing, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0,1]");
  return assouad - (assouad - packing) / theta;
}

double exceptional_dim_bound(int n, int m, double value, ExceptionalTarget) {
  if (!(m >= 1 && m <= n)) throw ParameterError("exceptional_dim_bound needs 1 <= m <= n");
  return static_cast<double>(m * (n - m)) - (m - value);
}

double self_improving_lhs(double f_t, double t, double s) {
  return f_t / (1.0 + (1.0 / s - 1.0 / t) * f_t);
}

ProfileCurve profile_curve(const PointMeasure& mu, double theta, std::vector<double> s_grid,
                           const EstimatorConfig& cfg) {
  std::sort(s_grid.begin(), s_grid.end());
  for (double s : s_grid) {
    if (!(s > 0.0)) throw ParameterError("profile curve grid must be positive");
  }
  ProfileCurve curve;
  curve.theta = theta;
  curve.s = s_grid;
  for (double s : s_grid) curve.f.push_back(profile_dim(mu, s, theta, cfg));
  curve.self_improving_excess = -std::numeric_limits<double>::infinity();
  curve.swapped_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    if (i + 1 < s_grid.size()) {
      const double slope = std::abs(curve.f[i + 1].value - curve.f[i].value) / (s_grid[i + 1] - s_grid[i]);
      curve.max_slope = std::max(curve.max_slope, slope);
    }
    for (std::size_t k = i + 1; k < s_grid.size(); ++k) {
      // Pair (lower index i, higher index k).
      const double lo = s_grid[i];
      const double hi = s_grid[k];
      const double f_lo = curve.f[i].value;
      const double f_hi = curve.f[k].value;
      curve.self_improving_excess =
          std::max(curve.self_improving_excess, self_improving_lhs(f_lo, lo, hi) - f_hi);
      curve.swapped_excess = std::max(curve.swapped_excess, self_improving_lhs(f_hi, hi, lo) - f_lo);
    }
  }
  if (s_grid.size() < 2) {
    curve.self_improving_excess = 0.0;
    curve.swapped_excess = 0.0;
  }
  return curve;
}

WindowDecayReport window_decay_check(const PointMeasure& mu, const WindowDecayParams& params,
                                     const EstimatorConfig& cfg) {
  cfg.validate();
  if (!(params.a > 0.0 && params.a < 1.0 && params.theta > 0.0 && params.theta < 1.0)) {
    throw ParameterError("window decay check needs a, theta in (0,1)");
  }
  const double grown = params.assouad * (1.0 + params.epsilon);
  WindowDecayReport report;
  report.exponent = grown - (grown - params.p) / (params.a * params.theta);
  const double bound_constant = params.constant * std::pow(4.0, grown);
  const auto refs = sample_references(mu, params.samples, cfg.seed);
  const auto grid = cfg.grid();
  report.refs = refs.size();

  std::vector<int> no_delta(refs.size(), 0);
  std::vector<int> violating(refs.size(), 0);
  std::vector<std::size_t> checks(refs.size(), 0);
  parallel_for(refs.size(), cfg.exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    bool any_delta = false;
    for (double delta : grid.radii()) {
      if (profile.ball_mass(delta) > params.constant * std::pow(delta, params.p)) continue;
      any_delta = true;
      const double r_lo = std::pow(delta, params.a);
      const double r_hi = std::pow(delta, params.a * params.theta);
      for (double r = r_hi; r >= r_lo * (1.0 - 1e-12); r *= cfg.ratio) {
        ++checks[i];
        if (profile.ball_mass(r) > bound_constant * std::pow(r, report.exponent) * (1.0 + 1e-12)) {
          violating[i] = 1;
        }
      }
    }
    no_delta[i] = any_delta ? 0 : 1;
  });
  for (std::size_t i = 0; i < refs.size(); ++i) {
    report.no_delta += static_cast<std::size_t>(no_delta[i]);
    report.violating += static_cast<std::size_t>(violating[i]);
    report.checks += checks[i];
  }
  return report;
}

}  // namespace packdim
