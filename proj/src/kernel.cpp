#include "packdim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "packdim/error.hpp"
#include "packdim/text.hpp"

namespace packdim {

KernelParams::KernelParams(double t_, double s_, double theta_) : t(t_), s(s_), theta(theta_) {
  if (!(t >= 0.0 && t <= s)) throw ParameterError("kernel needs 0 <= t <= s");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("kernel needs 0 < theta <= 1");
}

ScaleGrid::ScaleGrid(double r_max, double ratio, std::size_t count) : r_max_(r_max), ratio_(ratio) {
  if (!(r_max > 0.0 && r_max <= 1.0)) throw ParameterError("scale grid needs r_max in (0,1]");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("scale grid needs ratio in (0,1)");
  if (count < 2) throw ParameterError("scale grid needs at least 2 radii");
  radii_.reserve(count);
  for (std::size_t j = 0; j < count; ++j) radii_.push_back(r_max * std::pow(ratio, static_cast<double>(j)));
}

ScaleGrid ScaleGrid::from_window(double r_lo, double r_hi, double ratio) {
  if (!(r_lo > 0.0 && r_lo < r_hi)) throw ParameterError("scale window needs 0 < r_lo < r_hi");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("scale grid needs ratio in (0,1)");
  const double steps = std::log(r_lo / r_hi) / std::log(ratio);
  const auto count = static_cast<std::size_t>(std::floor(steps + 1e-9)) + 1;
  return ScaleGrid(r_hi, ratio, count);
}

double kernel_value(const KernelParams& p, double d, double r) {
  if (d <= r) return 1.0;
  const double outer = std::pow(r, p.theta);
  if (d < outer) return std::pow(r / d, p.t);
  return std::pow(r, p.theta * (p.s - p.t) + p.t) * std::pow(d, -p.s);
}

double kernel_value_min3(const KernelParams& p, double d, double r) {
  if (d == 0.0) return 1.0;
  const double second = std::pow(r / d, p.t);
  const double third = std::pow(r, p.theta * (p.s - p.t) + p.t) * std::pow(d, -p.s);
  return std::min({1.0, second, third});
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

void check_point(const PointMeasure& mu, std::span<const double> x) {
  if (x.size() != mu.ambient_dim()) throw ParameterError("reference point has wrong dimension");
}

}  // namespace

double classic_potential(const PointMeasure& mu, std::span<const double> x, double s, double r) {
  check_point(mu, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = distance(x, mu.atom(i));
    sum += mu.weight(i) * (d <= r ? 1.0 : std::pow(r / d, s));
  }
  return sum;
}

RadialProfile::RadialProfile(const PointMeasure& mu, std::span<const double> x) {
  check_point(mu, x);
  const std::size_t n = mu.size();
  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {distance(x, mu.atom(i)), mu.weight(i)};
  std::sort(pairs.begin(), pairs.end());
  dist_.resize(n);
  weight_.resize(n);
  log_dist_.resize(n);
  cum_weight_.assign(n + 1, 0.0);
  long double running = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    dist_[i] = pairs[i].first;
    weight_[i] = pairs[i].second;
    log_dist_[i] = dist_[i] > 0.0 ? std::log(dist_[i]) : -INFINITY;
    running += weight_[i];
    cum_weight_[i + 1] = static_cast<double>(running);
  }
}

double RadialProfile::ball_mass(double r) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(dist_.begin(), dist_.end(), r) - dist_.begin());
  return cum_weight_[k];
}

void RadialProfile::ball_masses(std::span<const double> radii, std::span<double> out) const {
  for (std::size_t j = 0; j < radii.size(); ++j) out[j] = ball_mass(radii[j]);
}

void RadialProfile::potentials(const KernelParams& p, std::span<const double> radii, std::span<double> out) const {
  const std::size_t n = dist_.size();
  const auto first_positive =
      static_cast<std::size_t>(std::upper_bound(dist_.begin(), dist_.end(), 0.0) - dist_.begin());
  // Suffix sums run from the far end so each difference only involves terms
  // with d > r; long double keeps the subtraction well inside 1e-12.
  std::vector<long double> tail_t(n + 1, 0.0L);
  std::vector<long double> tail_s(n + 1, 0.0L);
  for (std::size_t k = n; k-- > first_positive;) {
    const double wt = p.t == 0.0 ? weight_[k] : weight_[k] * std::exp(-p.t * log_dist_[k]);
    const double ws = p.s == p.t ? wt : weight_[k] * std::exp(-p.s * log_dist_[k]);
    tail_t[k] = tail_t[k + 1] + wt;
    tail_s[k] = tail_s[k + 1] + ws;
  }
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const double r = radii[j];
    const auto inner =
        static_cast<std::size_t>(std::upper_bound(dist_.begin(), dist_.end(), r) - dist_.begin());
    const double outer_radius = p.theta == 1.0 ? r : std::pow(r, p.theta);
    auto outer = static_cast<std::size_t>(
        std::lower_bound(dist_.begin(), dist_.end(), outer_radius) - dist_.begin());
    outer = std::max(outer, inner);
    const long double near = cum_weight_[inner];
    const long double middle = (tail_t[inner] - tail_t[outer]) * std::pow(r, p.t);
    const long double far = tail_s[outer] * std::pow(r, p.theta * (p.s - p.t) + p.t);
    out[j] = std::min(1.0, static_cast<double>(near + middle + far));
  }
}

References sample_references(const PointMeasure& mu, std::size_t count, std::uint64_t seed) {
  References refs;
  refs.dim = mu.ambient_dim();
  if (count == 0) {
    refs.coords.assign(mu.coords().begin(), mu.coords().end());
    refs.weights.assign(mu.weights().begin(), mu.weights().end());
    refs.atom_index.resize(mu.size());
    std::iota(refs.atom_index.begin(), refs.atom_index.end(), 0);
    return refs;
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(mu.weights().begin(), mu.weights().end());
  refs.coords.reserve(count * refs.dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t a = pick(rng);
    refs.atom_index.push_back(a);
    auto x = mu.atom(a);
    refs.coords.insert(refs.coords.end(), x.begin(), x.end());
  }
  refs.weights.assign(count, 1.0 / static_cast<double>(count));
  return refs;
}

References make_references(std::size_t dim, std::vector<double> coords) {
  if (dim == 0 || coords.empty() || coords.size() % dim != 0) {
    throw ParameterError("reference coordinates do not match dimension");
  }
  References refs;
  refs.dim = dim;
  const std::size_t count = coords.size() / dim;
  refs.coords = std::move(coords);
  refs.weights.assign(count, 1.0 / static_cast<double>(count));
  refs.atom_index.assign(count, static_cast<std::size_t>(-1));
  return refs;
}

PotentialTable potential_table(const PointMeasure& mu, const References& refs, const KernelParams& params,
                               const ScaleGrid& grid, const Exec& exec) {
  if (refs.size() == 0) throw ParameterError("potential table needs at least one reference point");
  if (refs.dim != mu.ambient_dim()) throw ParameterError("reference dimension does not match measure");
  PotentialTable table;
  table.radii = grid.radii();
  table.ref_index.resize(refs.size());
  std::iota(table.ref_index.begin(), table.ref_index.end(), 0);
  table.values.assign(refs.size() * grid.size(), 0.0);
  parallel_for(refs.size(), exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    profile.potentials(params, table.radii,
                       std::span<double>(table.values.data() + i * grid.size(), grid.size()));
  });
  return table;
}

void write_potential_table(const PotentialTable& table, std::ostream& out) {
  out << "ref";
  for (double r : table.radii) out << ',' << format_double(r);
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.ref_index[i];
    for (std::size_t j = 0; j < table.cols(); ++j) out << ',' << format_double(table.at(i, j));
    out << '\n';
  }
}

}  // namespace packdim
